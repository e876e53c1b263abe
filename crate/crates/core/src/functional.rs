//! The linear functional `L` given through its moments, with `L(1) = 1`.
//!
//! A functional is backed either by a finite moment table (partial data, never
//! extrapolated), by a closed-form product source (Gaussian, uniform box or
//! point mass per coordinate, all centered conventions as listed below), or by
//! a finite atomic measure used as an oracle. Closed-form sources exist so
//! that tests and diagnostics have exact reference values.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::algebra::{MultiIndex, Polynomial, VarId, VariableSet};
use crate::error::{Error, Result};
use crate::extraction::AtomicMeasure;

/// One coordinate distribution of a product source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Component {
    /// Centered Gaussian with the given variance.
    Gaussian { variance: f64 },
    /// Uniform on `[-radius, radius]`.
    Uniform { radius: f64 },
    /// Point mass at `value`.
    Point { value: f64 },
}

impl Component {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Component::Gaussian { variance } => variance.is_finite() && variance > 0.0,
            Component::Uniform { radius } => radius.is_finite() && radius > 0.0,
            Component::Point { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidFunctional(format!(
                "component parameter out of range: {self:?}"
            )))
        }
    }

    /// k-th raw moment of the coordinate distribution.
    pub fn moment(&self, k: u32) -> f64 {
        match *self {
            Component::Gaussian { variance } => {
                if k % 2 == 1 {
                    0.0
                } else {
                    variance.powi((k / 2) as i32) * double_factorial_odd(k)
                }
            }
            Component::Uniform { radius } => {
                if k % 2 == 1 {
                    0.0
                } else {
                    radius.powi(k as i32) / (k as f64 + 1.0)
                }
            }
            Component::Point { value } => value.powi(k as i32),
        }
    }

    /// Mass of `[-r, r]`.
    pub fn mass_within(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        match *self {
            Component::Gaussian { variance } => libm::erf(r / (2.0 * variance).sqrt()),
            Component::Uniform { radius } => (r / radius).min(1.0),
            Component::Point { value } => {
                if value.abs() <= r {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Smallest radius `r` with tail mass `P(|X| > r) <= eps`.
    pub fn tail_radius(&self, eps: f64) -> f64 {
        match *self {
            Component::Gaussian { variance } => {
                if eps >= 1.0 {
                    return 0.0;
                }
                // erfc is monotone decreasing; bisect on a bracketing interval
                let sigma = variance.sqrt();
                let target = eps;
                let mut lo = 0.0;
                let mut hi = sigma;
                while libm::erfc(hi / (2.0 * variance).sqrt()) > target {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if libm::erfc(mid / (2.0 * variance).sqrt()) > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
            Component::Uniform { radius } => radius * (1.0 - eps).max(0.0),
            Component::Point { value } => value.abs(),
        }
    }

    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> f64 {
        use rand_distr::Distribution;
        match *self {
            Component::Gaussian { variance } => {
                rand_distr::Normal::new(0.0, variance.sqrt()).unwrap().sample(rng)
            }
            Component::Uniform { radius } => rng.gen_range(-radius..=radius),
            Component::Point { value } => value,
        }
    }
}

/// (k-1)!! for even k; equals the k-th moment of the standard Gaussian.
fn double_factorial_odd(k: u32) -> f64 {
    debug_assert!(k % 2 == 0);
    let mut acc = 1.0;
    let mut j = 1;
    while j < k {
        acc *= j as f64;
        j += 2;
    }
    acc
}

/// Backing data of a moment functional.
#[derive(Clone, Debug)]
pub enum Source {
    /// Finite tabulated moments up to `max_degree`. Missing entries within the
    /// bound are reported as errors, never read as zero.
    Table {
        moments: BTreeMap<MultiIndex, f64>,
        max_degree: u32,
    },
    /// Infinite product measure: explicitly listed coordinates use their
    /// component, all others use `default`.
    Product {
        components: BTreeMap<VarId, Component>,
        default: Component,
    },
    /// Moments of a finite atomic measure.
    Atomic(AtomicMeasure),
}

/// The linear functional `L` with `L(1) = 1`, queried through moments.
///
/// Restriction to a coordinate subalgebra shares the source and the moment
/// cache; it only narrows the set of answerable indices.
#[derive(Clone)]
pub struct MomentFunctional {
    source: Arc<Source>,
    scope: Option<VariableSet>,
    cache: Arc<RwLock<HashMap<MultiIndex, f64>>>,
}

impl std::fmt::Debug for MomentFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MomentFunctional")
            .field("source", &self.source)
            .field("scope", &self.scope)
            .finish()
    }
}

impl MomentFunctional {
    fn from_source(source: Source) -> Self {
        Self {
            source: Arc::new(source),
            scope: None,
            cache: Arc::new(RwLock::new(HashMap::new())),
        }
    }

    /// Product of centered Gaussians; unlisted variables get variance 1.
    pub fn gaussian_product(variances: BTreeMap<VarId, f64>) -> Result<Self> {
        Self::product(
            variances
                .into_iter()
                .map(|(v, variance)| (v, Component::Gaussian { variance }))
                .collect(),
            Component::Gaussian { variance: 1.0 },
        )
    }

    /// Point mass; unlisted coordinates sit at 0.
    pub fn dirac_product(point: BTreeMap<VarId, f64>) -> Result<Self> {
        Self::product(
            point
                .into_iter()
                .map(|(v, value)| (v, Component::Point { value }))
                .collect(),
            Component::Point { value: 0.0 },
        )
    }

    /// Product of uniform distributions on `[-r_i, r_i]`; unlisted radii are 1.
    pub fn uniform_box_product(radii: BTreeMap<VarId, f64>) -> Result<Self> {
        Self::product(
            radii
                .into_iter()
                .map(|(v, radius)| (v, Component::Uniform { radius }))
                .collect(),
            Component::Uniform { radius: 1.0 },
        )
    }

    pub fn product(components: BTreeMap<VarId, Component>, default: Component) -> Result<Self> {
        for c in components.values().chain([&default]) {
            c.validate()?;
        }
        Ok(Self::from_source(Source::Product { components, default }))
    }

    /// Oracle for the moments of a finite atomic measure.
    pub fn atomic_oracle(measure: AtomicMeasure) -> Self {
        Self::from_source(Source::Atomic(measure))
    }

    /// Partial functional from tabulated moments. The table must contain the
    /// empty index with value 1 (normalization `L(1) = 1`).
    pub fn table(moments: BTreeMap<MultiIndex, f64>, max_degree: u32) -> Result<Self> {
        match moments.get(&MultiIndex::one()) {
            Some(&v) if (v - 1.0).abs() <= 1e-9 => {}
            Some(&v) => {
                return Err(Error::InvalidFunctional(format!(
                    "table has L(1) = {v}, expected 1"
                )))
            }
            None => {
                return Err(Error::InvalidFunctional(
                    "table is missing the constant moment L(1)".into(),
                ))
            }
        }
        if let Some(m) = moments.keys().find(|m| m.degree() > max_degree) {
            return Err(Error::InvalidFunctional(format!(
                "table entry {m} exceeds max_degree {max_degree}"
            )));
        }
        Ok(Self::from_source(Source::Table { moments, max_degree }))
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    /// Degree bound for tabulated sources; closed-form sources answer any degree.
    pub fn available_degree(&self) -> Option<u32> {
        match *self.source {
            Source::Table { max_degree, .. } => Some(max_degree),
            _ => None,
        }
    }

    pub fn scope(&self) -> Option<&VariableSet> {
        self.scope.as_ref()
    }

    /// The coordinate component governing variable `var`, for product sources.
    pub fn component(&self, var: VarId) -> Option<Component> {
        match &*self.source {
            Source::Product { components, default } => {
                Some(components.get(&var).copied().unwrap_or(*default))
            }
            _ => None,
        }
    }

    /// The moment `L(x^m)`.
    pub fn moment(&self, m: &MultiIndex) -> Result<f64> {
        if let Some(scope) = &self.scope {
            if !m.is_supported_in(scope) {
                return Err(Error::OutOfScope {
                    index: m.to_string(),
                    scope: scope.clone(),
                });
            }
        }
        match &*self.source {
            Source::Table { moments, max_degree } => {
                if m.degree() > *max_degree {
                    return Err(Error::DegreeExceeded {
                        requested: m.degree(),
                        available: *max_degree,
                    });
                }
                moments.get(m).copied().ok_or_else(|| Error::MissingMoment {
                    index: m.to_string(),
                })
            }
            Source::Product { components, default } => {
                Ok(self.cached(m, || {
                    m.entries()
                        .map(|(var, exp)| {
                            components.get(&var).unwrap_or(default).moment(exp)
                        })
                        .product()
                }))
            }
            Source::Atomic(measure) => Ok(self.cached(m, || measure.moment(m))),
        }
    }

    fn cached(&self, m: &MultiIndex, compute: impl FnOnce() -> f64) -> f64 {
        if let Some(&v) = self.cache.read().unwrap().get(m) {
            return v;
        }
        let v = compute();
        // concurrent duplicate computation is fine; both arrive at the same value
        self.cache.write().unwrap().insert(m.clone(), v);
        v
    }

    /// Riesz evaluation `L(p)` by linearity.
    pub fn riesz(&self, p: &Polynomial) -> Result<f64> {
        let mut acc = 0.0;
        for (index, coeff) in p.terms() {
            acc += coeff * self.moment(index)?;
        }
        Ok(acc)
    }

    /// The restriction `L|_S` to the coordinate subalgebra on `set`: answers
    /// only multi-indices supported there, agreeing with `L` on them.
    pub fn restrict(&self, set: &VariableSet) -> Self {
        let scope = match &self.scope {
            None => set.clone(),
            Some(existing) => existing.intersection(set),
        };
        Self {
            source: Arc::clone(&self.source),
            scope: Some(scope),
            cache: Arc::clone(&self.cache),
        }
    }
}

/// On-disk description of a functional, `{"type": ...}` tagged.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionalDescriptor {
    Gaussian {
        #[serde(default, with = "crate::algebra::varmap")]
        variances: BTreeMap<VarId, f64>,
    },
    Dirac {
        #[serde(default, with = "crate::algebra::varmap")]
        point: BTreeMap<VarId, f64>,
    },
    Uniform {
        #[serde(default, with = "crate::algebra::varmap")]
        radii: BTreeMap<VarId, f64>,
    },
    Product {
        #[serde(default, with = "crate::algebra::varmap")]
        components: BTreeMap<VarId, Component>,
        default: Component,
    },
    Table {
        max_degree: u32,
        moments: Vec<TableEntry>,
    },
    Atomic {
        atoms: Vec<AtomEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variables: Option<Vec<VarId>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableEntry {
    pub index: MultiIndex,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomEntry {
    #[serde(with = "crate::algebra::varmap")]
    pub point: BTreeMap<VarId, f64>,
    pub weight: f64,
}

impl FunctionalDescriptor {
    pub fn build(&self) -> Result<MomentFunctional> {
        match self {
            FunctionalDescriptor::Gaussian { variances } => {
                MomentFunctional::gaussian_product(variances.clone())
            }
            FunctionalDescriptor::Dirac { point } => {
                MomentFunctional::dirac_product(point.clone())
            }
            FunctionalDescriptor::Uniform { radii } => {
                MomentFunctional::uniform_box_product(radii.clone())
            }
            FunctionalDescriptor::Product { components, default } => {
                MomentFunctional::product(components.clone(), *default)
            }
            FunctionalDescriptor::Table { max_degree, moments } => {
                let mut table = BTreeMap::new();
                for entry in moments {
                    if table.insert(entry.index.clone(), entry.value).is_some() {
                        return Err(Error::InvalidFunctional(format!(
                            "duplicate table entry for {}",
                            entry.index
                        )));
                    }
                }
                MomentFunctional::table(table, *max_degree)
            }
            FunctionalDescriptor::Atomic { atoms, variables } => {
                let set = match variables {
                    Some(ids) => VariableSet::from_ids(ids.iter().copied()),
                    None => atoms
                        .iter()
                        .flat_map(|a| a.point.keys().copied())
                        .collect(),
                };
                let measure = AtomicMeasure::new(
                    set,
                    atoms.iter().map(|a| (a.point.clone(), a.weight)),
                )?;
                Ok(MomentFunctional::atomic_oracle(measure))
            }
        }
    }
}
