//! Sparse monomials and polynomials over a countably infinite variable set.
//!
//! Variables are identified by non-negative integers and written `x1`, `x2`,
//! ... in text form. Every polynomial involves only finitely many variables,
//! so each one lives in the coordinate subalgebra spanned by its support.
//! A [`VariableSet`] names such a subalgebra; the family of all finite
//! variable sets is directed under inclusion and restriction between them is
//! plain coordinate projection.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VarId = u32;

mod parse;

/// A monomial exponent vector in canonical sparse form: only non-zero
/// exponents are stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    entries: BTreeMap<VarId, u32>,
}

impl MultiIndex {
    /// The empty multi-index, i.e. the monomial `1`.
    pub fn one() -> Self {
        Self::default()
    }

    /// Single-variable monomial `x_var^exp`.
    pub fn single(var: VarId, exp: u32) -> Self {
        let mut entries = BTreeMap::new();
        if exp > 0 {
            entries.insert(var, exp);
        }
        Self { entries }
    }

    pub fn from_entries<I: IntoIterator<Item = (VarId, u32)>>(iter: I) -> Self {
        let mut entries = BTreeMap::new();
        for (var, exp) in iter {
            if exp > 0 {
                *entries.entry(var).or_insert(0) += exp;
            }
        }
        Self { entries }
    }

    pub fn degree(&self) -> u32 {
        self.entries.values().sum()
    }

    pub fn is_one(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn exponent(&self, var: VarId) -> u32 {
        self.entries.get(&var).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (VarId, u32)> + '_ {
        self.entries.iter().map(|(&v, &e)| (v, e))
    }

    /// Product of monomials: exponents add.
    pub fn mul(&self, other: &Self) -> Self {
        let mut entries = self.entries.clone();
        for (&var, &exp) in &other.entries {
            *entries.entry(var).or_insert(0) += exp;
        }
        Self { entries }
    }

    /// Multiply by a single variable.
    pub fn times_var(&self, var: VarId) -> Self {
        let mut entries = self.entries.clone();
        *entries.entry(var).or_insert(0) += 1;
        Self { entries }
    }

    pub fn support(&self) -> VariableSet {
        VariableSet::from_ids(self.entries.keys().copied())
    }

    pub fn is_supported_in(&self, set: &VariableSet) -> bool {
        self.entries.keys().all(|v| set.contains(*v))
    }

    /// Evaluate the monomial at a point, reading absent coordinates as an error.
    pub fn evaluate(&self, point: &BTreeMap<VarId, f64>) -> Result<f64> {
        let mut acc = 1.0;
        for (&var, &exp) in &self.entries {
            let x = point
                .get(&var)
                .copied()
                .ok_or(Error::MissingCoordinate { var })?;
            acc *= x.powi(exp as i32);
        }
        Ok(acc)
    }

    /// Evaluate with absent coordinates read as zero (the embedding of a
    /// finite-dimensional point into the full product space).
    pub fn evaluate_embedded(&self, point: &BTreeMap<VarId, f64>) -> f64 {
        let mut acc = 1.0;
        for (&var, &exp) in &self.entries {
            let x = point.get(&var).copied().unwrap_or(0.0);
            acc *= x.powi(exp as i32);
        }
        acc
    }
}

/// Graded order: lower total degree first; at equal degree the monomial with
/// the larger exponent on the smallest differing variable comes first. Sorting
/// ascending therefore yields `1, x1, x2, x1^2, x1*x2, x2^2, ...`, which is the
/// basis order used by every moment matrix in this crate.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let mut a = self.entries.iter();
        let mut b = other.entries.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((&va, &ea)), Some((&vb, &eb))) => {
                    if va != vb {
                        // the monomial holding power at the smaller variable
                        // comes first
                        return va.cmp(&vb);
                    }
                    if ea != eb {
                        return eb.cmp(&ea);
                    }
                }
            }
        }
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (&var, &exp) in &self.entries {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if exp == 1 {
                write!(f, "x{var}")?;
            } else {
                write!(f, "x{var}^{exp}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        varmap::serialize(&self.entries, s)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Self::from_entries(varmap::deserialize(d)?))
    }
}

/// JSON object keys are strings, so maps keyed by variable id are written as
/// `{"1": ...}`. These helpers keep that encoding stable regardless of how
/// serde buffers enum content.
pub mod varmap {
    use super::VarId;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<T: Serialize, S: Serializer>(
        map: &BTreeMap<VarId, T>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        serializer.collect_map(map.iter().map(|(k, v)| (k.to_string(), v)))
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<VarId, T>, D::Error> {
        let raw = BTreeMap::<String, T>::deserialize(deserializer)?;
        raw.into_iter()
            .map(|(k, v)| {
                k.parse::<VarId>()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("invalid variable id key {k:?}")))
            })
            .collect()
    }
}

/// A finite set of variable ids, standing for the coordinate subalgebra these
/// variables generate.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariableSet {
    ids: BTreeSet<VarId>,
}

impl VariableSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_ids<I: IntoIterator<Item = VarId>>(ids: I) -> Self {
        Self {
            ids: ids.into_iter().collect(),
        }
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.ids.contains(&var)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = VarId> + '_ {
        self.ids.iter().copied()
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.ids.is_subset(&other.ids)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            ids: self.ids.union(&other.ids).copied().collect(),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self {
            ids: self.ids.intersection(&other.ids).copied().collect(),
        }
    }

    pub fn insert(&mut self, var: VarId) {
        self.ids.insert(var);
    }
}

impl FromIterator<VarId> for VariableSet {
    fn from_iter<I: IntoIterator<Item = VarId>>(iter: I) -> Self {
        Self::from_ids(iter)
    }
}

impl fmt::Display for VariableSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, id) in self.ids.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for VariableSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A polynomial with real coefficients in canonical form: no stored
/// coefficient is zero. Terms are kept in the graded basis order.
#[derive(Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(MultiIndex::one(), c);
        }
        Self { terms }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(var: VarId) -> Self {
        Self::from_terms([(MultiIndex::single(var, 1), 1.0)])
    }

    pub fn monomial(index: MultiIndex, coeff: f64) -> Self {
        Self::from_terms([(index, coeff)])
    }

    pub fn from_terms<I: IntoIterator<Item = (MultiIndex, f64)>>(iter: I) -> Self {
        let mut terms: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (index, coeff) in iter {
            *terms.entry(index).or_insert(0.0) += coeff;
        }
        terms.retain(|_, c| *c != 0.0);
        Self { terms }
    }

    /// Parse the CLI text syntax, e.g. `3*x1^2*x7 - 0.5`.
    pub fn parse(input: &str) -> Result<Self> {
        parse::polynomial(input)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, index: &MultiIndex) -> f64 {
        self.terms.get(index).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    /// The smallest variable set whose coordinate subalgebra contains the
    /// polynomial. Cancelled terms do not contribute.
    pub fn support(&self) -> VariableSet {
        let mut ids = BTreeSet::new();
        for index in self.terms.keys() {
            ids.extend(index.entries().map(|(v, _)| v));
        }
        VariableSet { ids }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(
            self.terms()
                .map(|(m, c)| (m.clone(), c))
                .chain(other.terms().map(|(m, c)| (m.clone(), c))),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_terms(self.terms().map(|(m, c)| (m.clone(), c * factor)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                *terms.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        terms.retain(|_, c| *c != 0.0);
        Self { terms }
    }

    /// Point evaluation; errors when a supported variable has no coordinate.
    pub fn evaluate(&self, point: &BTreeMap<VarId, f64>) -> Result<f64> {
        let mut acc = 0.0;
        for (index, coeff) in self.terms() {
            acc += coeff * index.evaluate(point)?;
        }
        Ok(acc)
    }

    /// Point evaluation with absent coordinates read as zero.
    pub fn evaluate_embedded(&self, point: &BTreeMap<VarId, f64>) -> f64 {
        self.terms()
            .map(|(index, coeff)| coeff * index.evaluate_embedded(point))
            .sum()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (index, coeff)) in self.terms().enumerate() {
            let magnitude = coeff.abs();
            if k == 0 {
                if coeff < 0.0 {
                    write!(f, "-")?;
                }
            } else if coeff < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if index.is_one() {
                write!(f, "{magnitude}")?;
            } else if magnitude == 1.0 {
                write!(f, "{index}")?;
            } else {
                write!(f, "{magnitude}*{index}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Finitely many polynomial generators; the constant `1` is implicit. The
/// generators cut out the basic closed set of points where they are all
/// non-negative.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadraticModule {
    generators: Vec<Polynomial>,
}

impl QuadraticModule {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(generators: Vec<Polynomial>) -> Self {
        Self { generators }
    }

    pub fn generators(&self) -> &[Polynomial] {
        &self.generators
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Syntactic restriction to the coordinate subalgebra on `set`: keeps the
    /// generators supported inside `set`. This under-approximates the full
    /// intersection of the quadratic module with the subalgebra, so the
    /// resulting set of points is a superset of the true one.
    pub fn restrict(&self, set: &VariableSet) -> QuadraticModule {
        QuadraticModule {
            generators: self
                .generators
                .iter()
                .filter(|g| g.support().is_subset_of(set))
                .cloned()
                .collect(),
        }
    }

    /// Whether the point satisfies `g >= -tol` for every generator. Absent
    /// coordinates are read as zero.
    pub fn contains_point(&self, point: &BTreeMap<VarId, f64>, tol: f64) -> bool {
        self.generators
            .iter()
            .all(|g| g.evaluate_embedded(point) >= -tol)
    }

    /// Union of the generators' supports.
    pub fn support(&self) -> VariableSet {
        self.generators
            .iter()
            .fold(VariableSet::empty(), |acc, g| acc.union(&g.support()))
    }
}

/// All multi-indices supported in `set` with total degree at most `max_degree`,
/// in the graded basis order. The result has length C(|set| + n, n).
pub fn monomials_up_to(set: &VariableSet, max_degree: u32) -> Vec<MultiIndex> {
    let vars: Vec<VarId> = set.iter().collect();
    let mut out = Vec::new();
    let mut current: Vec<(VarId, u32)> = Vec::new();
    fn recurse(
        vars: &[VarId],
        pos: usize,
        remaining: u32,
        current: &mut Vec<(VarId, u32)>,
        out: &mut Vec<MultiIndex>,
    ) {
        if pos == vars.len() {
            out.push(MultiIndex::from_entries(current.iter().copied()));
            return;
        }
        for exp in 0..=remaining {
            if exp > 0 {
                current.push((vars[pos], exp));
            }
            recurse(vars, pos + 1, remaining - exp, current, out);
            if exp > 0 {
                current.pop();
            }
        }
    }
    recurse(&vars, 0, max_degree, &mut current, &mut out);
    out.sort();
    out
}
