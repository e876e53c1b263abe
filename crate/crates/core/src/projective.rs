//! Families of compatible marginals, cylinder sets over finite bases, and the
//! induced set function on the cylinder algebra.
//!
//! A family maps each materialized variable set to a marginal measure. Once
//! the pushforward-compatibility of all covering pairs has been checked the
//! family is sealed; only sealed families expose cylinder evaluation and
//! sampling. Evaluating a cylinder set picks the smallest materialized index
//! containing its base, and the dual-base audit measures how far two
//! different choices of base can disagree, which is the desk-scale surrogate
//! for well-definedness of the induced set function.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{MultiIndex, Polynomial, VarId, VariableSet};
use crate::error::{Error, Result};
use crate::extraction::{check_exactness, AtomicMeasure, ExactnessReport};
use crate::functional::Component;

/// Product-form closed marginal: one coordinate distribution per variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductMarginal {
    #[serde(with = "crate::algebra::varmap")]
    components: BTreeMap<VarId, Component>,
}

impl ProductMarginal {
    pub fn new(components: BTreeMap<VarId, Component>) -> Self {
        Self { components }
    }

    pub fn components(&self) -> &BTreeMap<VarId, Component> {
        &self.components
    }
}

/// A marginal measure of the family: finitely many atoms, or a closed-form
/// product distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Marginal {
    Atomic(AtomicMeasure),
    Product(ProductMarginal),
}

impl Marginal {
    pub fn variables(&self) -> VariableSet {
        match self {
            Marginal::Atomic(m) => m.variables().clone(),
            Marginal::Product(p) => p.components.keys().copied().collect(),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Marginal::Atomic(_))
    }

    pub fn as_atomic(&self) -> Option<&AtomicMeasure> {
        match self {
            Marginal::Atomic(m) => Some(m),
            Marginal::Product(_) => None,
        }
    }

    pub fn moment(&self, m: &MultiIndex) -> Result<f64> {
        match self {
            Marginal::Atomic(measure) => Ok(measure.moment(m)),
            Marginal::Product(p) => {
                let mut acc = 1.0;
                for (var, exp) in m.entries() {
                    let component = p.components.get(&var).ok_or_else(|| Error::OutOfScope {
                        index: m.to_string(),
                        scope: self.variables(),
                    })?;
                    acc *= component.moment(exp);
                }
                Ok(acc)
            }
        }
    }

    pub fn pushforward(&self, set: &VariableSet) -> Result<Marginal> {
        match self {
            Marginal::Atomic(measure) => Ok(Marginal::Atomic(measure.pushforward(set)?)),
            Marginal::Product(p) => {
                if !set.is_subset_of(&self.variables()) {
                    return Err(Error::NotASubset {
                        child: set.clone(),
                        parent: self.variables(),
                    });
                }
                Ok(Marginal::Product(ProductMarginal::new(
                    p.components
                        .iter()
                        .filter(|(v, _)| set.contains(**v))
                        .map(|(&v, &c)| (v, c))
                        .collect(),
                )))
            }
        }
    }

    /// Mass of the closed product box with per-variable radii.
    pub fn box_mass(&self, radii: &BTreeMap<VarId, f64>) -> Result<f64> {
        for var in self.variables().iter() {
            if !radii.contains_key(&var) {
                return Err(Error::ScheduleIncomplete { var });
            }
        }
        match self {
            Marginal::Atomic(measure) => Ok(measure
                .atoms()
                .iter()
                .filter(|a| {
                    a.point()
                        .iter()
                        .all(|(v, x)| x.abs() <= radii[v])
                })
                .map(|a| a.weight())
                .sum()),
            Marginal::Product(p) => Ok(p
                .components
                .iter()
                .map(|(v, c)| c.mass_within(radii[v]))
                .product()),
        }
    }

    /// Smallest radius `r` with `P(|X_var| > r) <= eps` on this marginal.
    pub fn tail_radius(&self, var: VarId, eps: f64) -> Result<f64> {
        if !self.variables().contains(var) {
            return Err(Error::BaseNotCovered {
                base: VariableSet::from_ids([var]),
            });
        }
        match self {
            Marginal::Atomic(measure) => {
                let mut values: Vec<(f64, f64)> = measure
                    .atoms()
                    .iter()
                    .map(|a| (a.coordinate(var).abs(), a.weight()))
                    .collect();
                values.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
                let mut outside = 0.0;
                for (radius, weight) in values {
                    if outside + weight > eps {
                        return Ok(radius);
                    }
                    outside += weight;
                }
                Ok(0.0)
            }
            Marginal::Product(p) => Ok(p.components[&var].tail_radius(eps)),
        }
    }

    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> BTreeMap<VarId, f64> {
        match self {
            Marginal::Atomic(measure) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for atom in measure.atoms() {
                    acc += atom.weight();
                    if u < acc {
                        return atom.point().clone();
                    }
                }
                measure
                    .atoms()
                    .last()
                    .map(|a| a.point().clone())
                    .unwrap_or_default()
            }
            Marginal::Product(p) => p
                .components
                .iter()
                .map(|(&v, c)| (v, c.sample(rng)))
                .collect(),
        }
    }

    /// Exact mass of a predicate; available for atomic marginals only.
    pub fn measure_of(&self, predicate: &Predicate) -> Result<f64> {
        match self {
            Marginal::Atomic(measure) => Ok(measure
                .atoms()
                .iter()
                .filter(|a| predicate.holds_at(a.point()))
                .map(|a| a.weight())
                .sum()),
            Marginal::Product(_) => Err(Error::UnsupportedMarginal(
                "cylinder evaluation over polynomial predicates needs an atomic marginal".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rel {
    Ge,
    Gt,
    Le,
    Lt,
}

impl Rel {
    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
            Rel::Le => lhs <= rhs,
            Rel::Lt => lhs < rhs,
        }
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rel::Ge => ">=",
            Rel::Gt => ">",
            Rel::Le => "<=",
            Rel::Lt => "<",
        })
    }
}

/// Finite boolean combination of polynomial inequalities `g ⋈ c`.
#[derive(Clone, Debug, PartialEq)]
pub enum Predicate {
    True,
    Constraint {
        poly: Polynomial,
        rel: Rel,
        bound: f64,
    },
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    pub fn constraint(poly: Polynomial, rel: Rel, bound: f64) -> Self {
        Predicate::Constraint { poly, rel, bound }
    }

    pub fn holds_at(&self, point: &BTreeMap<VarId, f64>) -> bool {
        match self {
            Predicate::True => true,
            Predicate::Constraint { poly, rel, bound } => {
                rel.holds(poly.evaluate_embedded(point), *bound)
            }
            Predicate::And(parts) => parts.iter().all(|p| p.holds_at(point)),
            Predicate::Or(parts) => parts.iter().any(|p| p.holds_at(point)),
            Predicate::Not(inner) => !inner.holds_at(point),
        }
    }

    pub fn support(&self) -> VariableSet {
        match self {
            Predicate::True => VariableSet::empty(),
            Predicate::Constraint { poly, .. } => poly.support(),
            Predicate::And(parts) | Predicate::Or(parts) => parts
                .iter()
                .fold(VariableSet::empty(), |acc, p| acc.union(&p.support())),
            Predicate::Not(inner) => inner.support(),
        }
    }
}

/// A cylinder set: a predicate over finitely many base variables, read as a
/// subset of the full product space through the projection onto the base.
#[derive(Clone, Debug)]
pub struct CylinderSet {
    base: VariableSet,
    predicate: Predicate,
}

impl CylinderSet {
    pub fn new(base: VariableSet, predicate: Predicate) -> Result<Self> {
        if !predicate.support().is_subset_of(&base) {
            return Err(Error::PredicateOutsideBase { base });
        }
        Ok(Self { base, predicate })
    }

    pub fn base(&self) -> &VariableSet {
        &self.base
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CylinderMeasureValue {
    pub value: f64,
    pub base_used: VariableSet,
}

/// An unsealed family of marginals indexed by variable sets. Exactness of the
/// covering pairs has not been verified yet, so evaluation and sampling are
/// not offered.
#[derive(Clone, Debug)]
pub struct ProjectiveFamily {
    measures: BTreeMap<VariableSet, Marginal>,
    comparison_degree: u32,
}

impl ProjectiveFamily {
    pub fn new(comparison_degree: u32) -> Self {
        Self {
            measures: BTreeMap::new(),
            comparison_degree,
        }
    }

    /// Inserts a marginal under its own variable set, replacing any previous one.
    pub fn insert(&mut self, marginal: Marginal) -> Option<Marginal> {
        self.measures.insert(marginal.variables(), marginal)
    }

    pub fn marginal(&self, set: &VariableSet) -> Option<&Marginal> {
        self.measures.get(set)
    }

    pub fn index_list(&self) -> impl Iterator<Item = &VariableSet> + '_ {
        self.measures.keys()
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn comparison_degree(&self) -> u32 {
        self.comparison_degree
    }

    /// All variables appearing in any index.
    pub fn all_variables(&self) -> VariableSet {
        self.measures
            .keys()
            .fold(VariableSet::empty(), |acc, f| acc.union(f))
    }

    /// The index list must be closed under pairwise union (directedness).
    pub fn verify_directed(&self) -> Result<()> {
        let keys: Vec<&VariableSet> = self.measures.keys().collect();
        for (k, a) in keys.iter().enumerate() {
            for b in keys.iter().skip(k + 1) {
                let u = a.union(b);
                if !self.measures.contains_key(&u) {
                    return Err(Error::NotDirected {
                        left: (*a).clone(),
                        right: (*b).clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Pairs `(F, F')` with `F` strictly contained in `F'` and no materialized
    /// index strictly between them.
    pub fn covering_pairs(&self) -> Vec<(VariableSet, VariableSet)> {
        let keys: Vec<&VariableSet> = self.measures.keys().collect();
        let mut pairs = Vec::new();
        for small in &keys {
            for large in &keys {
                if small == large || !small.is_subset_of(large) {
                    continue;
                }
                let covered = keys.iter().any(|mid| {
                    mid != small
                        && mid != large
                        && small.is_subset_of(mid)
                        && mid.is_subset_of(large)
                });
                if !covered {
                    pairs.push(((*small).clone(), (*large).clone()));
                }
            }
        }
        pairs
    }

    /// Verifies directedness and exactness on all covering pairs, then seals.
    pub fn seal(self, tol: f64) -> Result<SealedFamily> {
        self.verify_directed()?;
        let pairs = self.covering_pairs();
        let report = check_exactness(&self, &pairs, tol)?;
        if !report.is_exact() {
            let (small, large) = report
                .worst_pair
                .clone()
                .unwrap_or_else(|| (VariableSet::empty(), VariableSet::empty()));
            return Err(Error::ExactnessViolation {
                small,
                large,
                discrepancy: report.max_discrepancy,
                tolerance: tol,
            });
        }
        Ok(SealedFamily {
            family: self,
            exactness: report,
        })
    }
}

/// A family whose covering-pair exactness has been verified. Exposes cylinder
/// evaluation, the dual-base audit and sampling.
#[derive(Clone, Debug)]
pub struct SealedFamily {
    family: ProjectiveFamily,
    exactness: ExactnessReport,
}

impl SealedFamily {
    pub fn exactness(&self) -> &ExactnessReport {
        &self.exactness
    }

    pub fn marginal(&self, set: &VariableSet) -> Option<&Marginal> {
        self.family.marginal(set)
    }

    pub fn index_list(&self) -> impl Iterator<Item = &VariableSet> + '_ {
        self.family.index_list()
    }

    pub fn comparison_degree(&self) -> u32 {
        self.family.comparison_degree()
    }

    pub fn all_variables(&self) -> VariableSet {
        self.family.all_variables()
    }

    pub fn len(&self) -> usize {
        self.family.len()
    }

    pub fn is_empty(&self) -> bool {
        self.family.is_empty()
    }

    /// The smallest materialized index containing `base`, by cardinality then
    /// set order.
    fn smallest_covering(&self, base: &VariableSet) -> Result<&VariableSet> {
        self.family
            .measures
            .keys()
            .filter(|f| base.is_subset_of(f))
            .min_by_key(|f| (f.len(), (*f).clone()))
            .ok_or_else(|| Error::BaseNotCovered { base: base.clone() })
    }

    /// Mass of the cylinder set under the family's induced set function.
    pub fn measure_of(&self, cylinder: &CylinderSet) -> Result<CylinderMeasureValue> {
        let base = self.smallest_covering(cylinder.base())?.clone();
        let value = self.family.measures[&base].measure_of(cylinder.predicate())?;
        Ok(CylinderMeasureValue {
            value,
            base_used: base,
        })
    }

    /// Marginal on a single variable, computed from the smallest covering index.
    pub fn single_variable_marginal(&self, var: VarId) -> Result<Marginal> {
        let base = VariableSet::from_ids([var]);
        let index = self.smallest_covering(&base)?;
        self.family.measures[index].pushforward(&base)
    }

    /// Same evaluation forced onto an explicit materialized base.
    pub fn measure_of_on_base(&self, cylinder: &CylinderSet, base: &VariableSet) -> Result<f64> {
        if !cylinder.base().is_subset_of(base) {
            return Err(Error::NotASubset {
                child: cylinder.base().clone(),
                parent: base.clone(),
            });
        }
        let marginal = self
            .family
            .marginal(base)
            .ok_or_else(|| Error::BaseNotCovered { base: base.clone() })?;
        marginal.measure_of(cylinder.predicate())
    }

    /// Draws random predicates expressible on two different bases and returns
    /// the largest evaluation difference seen. Half-space constraints use
    /// small integer coefficients and integer thresholds with closed
    /// inequalities, so atom boundaries cannot flip between bases.
    pub fn well_definedness_audit(&self, trials: u32, seed: u64) -> Result<f64> {
        let indices: Vec<&VariableSet> = self.family.measures.keys().collect();
        if indices.len() < 2 || trials == 0 {
            return Ok(0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut max_discrepancy = 0.0f64;
        for _ in 0..trials {
            let i = rng.gen_range(0..indices.len());
            let mut j = rng.gen_range(0..indices.len() - 1);
            if j >= i {
                j += 1;
            }
            let shared = indices[i].intersection(indices[j]);
            if shared.is_empty() {
                continue;
            }
            let predicate = random_predicate(&mut rng, &shared);
            let cylinder = CylinderSet::new(shared, predicate)?;
            let a = self.measure_of_on_base(&cylinder, indices[i])?;
            let b = self.measure_of_on_base(&cylinder, indices[j])?;
            max_discrepancy = max_discrepancy.max((a - b).abs());
        }
        Ok(max_discrepancy)
    }

    /// `count` i.i.d. draws from the marginal on `target`, which must be a
    /// materialized index. Deterministic for a fixed seed.
    pub fn sample(
        &self,
        target: &VariableSet,
        count: usize,
        seed: u64,
    ) -> Result<Vec<BTreeMap<VarId, f64>>> {
        let marginal = self
            .family
            .marginal(target)
            .ok_or_else(|| Error::BaseNotCovered {
                base: target.clone(),
            })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count).map(|_| marginal.sample_point(&mut rng)).collect())
    }

    /// Writes one marginal JSON file per index (named by the sorted variable
    /// ids) plus a manifest with the index list and the exactness report.
    pub fn save_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (set, marginal) in &self.family.measures {
            let body = serde_json::to_string_pretty(marginal)
                .map_err(|e| Error::Bundle(e.to_string()))?;
            write_atomically(&dir.join(bundle_file_name(set)), &body)?;
        }
        let manifest = BundleManifest {
            index_list: self
                .family
                .measures
                .keys()
                .map(|f| f.iter().collect())
                .collect(),
            comparison_degree: self.family.comparison_degree,
            exactness: self.exactness.clone(),
        };
        let body = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Bundle(e.to_string()))?;
        write_atomically(&dir.join("manifest.json"), &body)
    }

    /// Reads a bundle back and re-verifies exactness before resealing.
    pub fn load_bundle(dir: &Path) -> Result<SealedFamily> {
        let manifest: BundleManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)
                .map_err(|e| Error::Bundle(format!("manifest: {e}")))?;
        let mut family = ProjectiveFamily::new(manifest.comparison_degree);
        for ids in &manifest.index_list {
            let set = VariableSet::from_ids(ids.iter().copied());
            let path = dir.join(bundle_file_name(&set));
            let marginal: Marginal = serde_json::from_str(&std::fs::read_to_string(&path)?)
                .map_err(|e| Error::Bundle(format!("{}: {e}", path.display())))?;
            if marginal.variables() != set {
                return Err(Error::Bundle(format!(
                    "marginal in {} is on {} but the manifest lists {set}",
                    path.display(),
                    marginal.variables()
                )));
            }
            family.insert(marginal);
        }
        family.seal(manifest.exactness.tolerance)
    }
}

fn bundle_file_name(set: &VariableSet) -> String {
    let ids: Vec<String> = set.iter().map(|v| v.to_string()).collect();
    format!("{}.json", ids.join("_"))
}

fn write_atomically(path: &Path, body: &str) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, body)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct BundleManifest {
    index_list: Vec<Vec<VarId>>,
    comparison_degree: u32,
    exactness: ExactnessReport,
}

/// One or two integer half-spaces over `vars`, joined by and/or.
fn random_predicate<R: Rng>(rng: &mut R, vars: &VariableSet) -> Predicate {
    let count = if rng.gen_bool(0.5) { 1 } else { 2 };
    let mut parts = Vec::with_capacity(count);
    for _ in 0..count {
        parts.push(random_half_space(rng, vars));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else if rng.gen_bool(0.5) {
        Predicate::And(parts)
    } else {
        Predicate::Or(parts)
    }
}

/// Boundary padding for audit thresholds. Marginals on different bases carry
/// independently extracted coordinates that agree only to roundoff, so an
/// atom sitting exactly on an integer threshold could flip between bases.
/// Nudging the closed threshold outward keeps such atoms on the same side
/// everywhere without changing which generic atoms are captured.
const AUDIT_THRESHOLD_SLACK: f64 = 1e-9;

fn random_half_space<R: Rng>(rng: &mut R, vars: &VariableSet) -> Predicate {
    let ids: Vec<VarId> = vars.iter().collect();
    let mut terms = Vec::new();
    for &v in &ids {
        if rng.gen_bool(0.5) {
            let mut c = rng.gen_range(-3i32..=3);
            if c == 0 {
                c = 1;
            }
            terms.push((MultiIndex::single(v, 1), c as f64));
        }
    }
    if terms.is_empty() {
        let v = ids[rng.gen_range(0..ids.len())];
        terms.push((MultiIndex::single(v, 1), 1.0));
    }
    let poly = Polynomial::from_terms(terms);
    let grid = rng.gen_range(-3i32..=3) as f64;
    if rng.gen_bool(0.5) {
        Predicate::constraint(poly, Rel::Ge, grid - AUDIT_THRESHOLD_SLACK)
    } else {
        Predicate::constraint(poly, Rel::Le, grid + AUDIT_THRESHOLD_SLACK)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_point_measure(vars: &[VarId]) -> AtomicMeasure {
        let set = VariableSet::from_ids(vars.iter().copied());
        let mut low = BTreeMap::new();
        let mut high = BTreeMap::new();
        for &v in vars {
            low.insert(v, if v == 1 { -1.0 } else { 0.25 });
            high.insert(v, if v == 1 { 1.0 } else { 0.25 });
        }
        AtomicMeasure::new(set, [(low, 0.5), (high, 0.5)]).unwrap()
    }

    fn sealed_two_point_family() -> SealedFamily {
        let large = two_point_measure(&[1, 2]);
        let small = large.pushforward(&VariableSet::from_ids([1])).unwrap();
        let mut family = ProjectiveFamily::new(4);
        family.insert(Marginal::Atomic(large));
        family.insert(Marginal::Atomic(small));
        family.seal(1e-9).unwrap()
    }

    #[test]
    fn seal_accepts_consistent_marginals() {
        let sealed = sealed_two_point_family();
        assert!(sealed.exactness().is_exact());
        assert_eq!(sealed.len(), 2);
    }

    #[test]
    fn seal_rejects_mismatched_marginals() {
        let mut family = ProjectiveFamily::new(4);
        // marginal on {1} says the point sits at 0, the joint one says 1
        family.insert(Marginal::Atomic(
            AtomicMeasure::new(
                VariableSet::from_ids([1]),
                [(BTreeMap::from([(1, 0.0)]), 1.0)],
            )
            .unwrap(),
        ));
        family.insert(Marginal::Atomic(
            AtomicMeasure::new(
                VariableSet::from_ids([1, 2]),
                [(BTreeMap::from([(1, 1.0), (2, 0.0)]), 1.0)],
            )
            .unwrap(),
        ));
        let err = family.seal(1e-9).unwrap_err();
        match err {
            Error::ExactnessViolation { small, large, discrepancy, .. } => {
                assert_eq!(small, VariableSet::from_ids([1]));
                assert_eq!(large, VariableSet::from_ids([1, 2]));
                assert_relative_eq!(discrepancy, 1.0, epsilon = 1e-12);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn singleton_family_seals_vacuously() {
        let mut family = ProjectiveFamily::new(4);
        family.insert(Marginal::Atomic(two_point_measure(&[1])));
        let sealed = family.seal(1e-9).unwrap();
        assert!(sealed.exactness().pairs_checked.is_empty());
        assert_eq!(sealed.exactness().max_discrepancy, 0.0);
    }

    #[test]
    fn non_directed_family_is_rejected() {
        let mut family = ProjectiveFamily::new(4);
        family.insert(Marginal::Atomic(two_point_measure(&[1])));
        family.insert(Marginal::Atomic(two_point_measure(&[2])));
        assert!(matches!(family.seal(1e-9), Err(Error::NotDirected { .. })));
    }

    #[test]
    fn cylinder_evaluation_on_the_smallest_base() {
        let sealed = sealed_two_point_family();
        let base = VariableSet::from_ids([1]);
        let halfline = CylinderSet::new(
            base.clone(),
            Predicate::constraint(Polynomial::var(1), Rel::Ge, 0.0),
        )
        .unwrap();
        let value = sealed.measure_of(&halfline).unwrap();
        assert_relative_eq!(value.value, 0.5);
        assert_eq!(value.base_used, base);

        let everything = CylinderSet::new(base.clone(), Predicate::True).unwrap();
        assert_relative_eq!(sealed.measure_of(&everything).unwrap().value, 1.0);

        // the same event evaluated on the larger base gives the same mass
        let via_large = sealed
            .measure_of_on_base(&halfline, &VariableSet::from_ids([1, 2]))
            .unwrap();
        assert_relative_eq!(via_large, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn monotone_and_additive_on_same_base() {
        let sealed = sealed_two_point_family();
        let base = VariableSet::from_ids([1]);
        let strict = CylinderSet::new(
            base.clone(),
            Predicate::constraint(Polynomial::var(1), Rel::Gt, 0.0),
        )
        .unwrap();
        let loose = CylinderSet::new(
            base.clone(),
            Predicate::constraint(Polynomial::var(1), Rel::Ge, -1.0),
        )
        .unwrap();
        let complement = CylinderSet::new(
            base.clone(),
            Predicate::Not(Box::new(Predicate::constraint(
                Polynomial::var(1),
                Rel::Gt,
                0.0,
            ))),
        )
        .unwrap();
        let a = sealed.measure_of(&strict).unwrap().value;
        let b = sealed.measure_of(&loose).unwrap().value;
        let c = sealed.measure_of(&complement).unwrap().value;
        assert!(a <= b);
        assert_relative_eq!(a + c, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn base_not_covered() {
        let sealed = sealed_two_point_family();
        let foreign = CylinderSet::new(
            VariableSet::from_ids([7]),
            Predicate::constraint(Polynomial::var(7), Rel::Ge, 0.0),
        )
        .unwrap();
        assert!(matches!(
            sealed.measure_of(&foreign),
            Err(Error::BaseNotCovered { .. })
        ));
    }

    #[test]
    fn audit_of_exact_family_is_quiet() {
        let sealed = sealed_two_point_family();
        let discrepancy = sealed.well_definedness_audit(500, 7).unwrap();
        assert!(discrepancy <= 1e-12, "discrepancy {discrepancy}");
        assert_eq!(sealed.well_definedness_audit(0, 7).unwrap(), 0.0);
    }

    #[test]
    fn audit_detects_a_perturbed_weight() {
        let large = two_point_measure(&[1, 2]);
        let small = AtomicMeasure::new(
            VariableSet::from_ids([1]),
            [
                (BTreeMap::from([(1, -1.0)]), 0.5 + 1e-3),
                (BTreeMap::from([(1, 1.0)]), 0.5 - 1e-3),
            ],
        )
        .unwrap();
        let mut family = ProjectiveFamily::new(4);
        family.insert(Marginal::Atomic(large));
        family.insert(Marginal::Atomic(small));
        // loose sealing tolerance lets the corrupted family through
        let sealed = family.seal(0.01).unwrap();
        let discrepancy = sealed.well_definedness_audit(500, 7).unwrap();
        assert!(discrepancy > 1e-4, "discrepancy {discrepancy}");
    }

    #[test]
    fn sampling_is_seeded_and_respects_the_marginal() {
        let sealed = sealed_two_point_family();
        let target = VariableSet::from_ids([1]);
        let samples = sealed.sample(&target, 10_000, 99).unwrap();
        let again = sealed.sample(&target, 10_000, 99).unwrap();
        assert_eq!(samples, again);
        let mean: f64 = samples.iter().map(|p| p[&1]).sum::<f64>() / samples.len() as f64;
        assert!(mean.abs() < 3e-2, "empirical mean {mean}");
        assert!(sealed.sample(&target, 0, 1).unwrap().is_empty());

        let dirac = {
            let mut family = ProjectiveFamily::new(2);
            family.insert(Marginal::Atomic(
                AtomicMeasure::new(
                    VariableSet::from_ids([1]),
                    [(BTreeMap::from([(1, 0.25)]), 1.0)],
                )
                .unwrap(),
            ));
            family.seal(1e-9).unwrap()
        };
        for p in dirac.sample(&VariableSet::from_ids([1]), 32, 5).unwrap() {
            assert_eq!(p[&1], 0.25);
        }
    }

    #[test]
    fn bundle_round_trip() {
        let sealed = sealed_two_point_family();
        let dir = tempfile::tempdir().unwrap();
        sealed.save_bundle(dir.path()).unwrap();
        assert!(dir.path().join("1.json").exists());
        assert!(dir.path().join("1_2.json").exists());
        assert!(dir.path().join("manifest.json").exists());
        let loaded = SealedFamily::load_bundle(dir.path()).unwrap();
        assert_eq!(loaded.len(), sealed.len());
        for set in sealed.index_list() {
            assert_eq!(loaded.marginal(set), sealed.marginal(set));
        }
    }

    #[test]
    fn product_marginal_masses_and_pushforward() {
        let marginal = Marginal::Product(ProductMarginal::new(BTreeMap::from([
            (1, Component::Gaussian { variance: 1.0 }),
            (2, Component::Uniform { radius: 1.0 }),
        ])));
        let radii = BTreeMap::from([(1, 1.0), (2, 0.5)]);
        let mass = marginal.box_mass(&radii).unwrap();
        assert_relative_eq!(mass, 0.6826894921370859 * 0.5, epsilon = 1e-12);

        let projected = marginal.pushforward(&VariableSet::from_ids([2])).unwrap();
        assert_relative_eq!(
            projected.moment(&MultiIndex::single(2, 2)).unwrap(),
            1.0 / 3.0
        );
        assert!(marginal
            .measure_of(&Predicate::constraint(Polynomial::var(1), Rel::Ge, 0.0))
            .is_err());
    }
}
