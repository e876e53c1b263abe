//! Sufficient-condition diagnostics: Carleman partial sums per variable,
//! syntactic Archimedean bound detection with the moment-growth check, the
//! split into bounded and determinate variables, and the product-box
//! tightness certificate for sealed families.
//!
//! Divergence of the Carleman series is not decidable from finitely many
//! moments, so the verdict is three-valued and the certified tier is reserved
//! for closed-form sources whose series is known to diverge. Archimedean
//! detection is syntactic only: a bound is claimed exactly when a generator
//! of the form `c - x_i^2` or a pair `N - x_i`, `N + x_i` is present.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{MultiIndex, QuadraticModule, VarId, VariableSet};
use crate::error::{Error, Result};
use crate::functional::{Component, MomentFunctional, Source};
use crate::projective::SealedFamily;

/// Default partial-sum threshold above which divergence is called likely.
pub const DEFAULT_CARLEMAN_THRESHOLD: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarlemanVerdict {
    Inconclusive,
    /// Partial sum crossed the threshold; divergence is plausible but not proven.
    DivergenceLikely,
    /// Closed-form source with a known divergent series (or degenerate data).
    DivergenceCertified,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CarlemanReport {
    pub variable: VarId,
    pub terms_used: u32,
    /// Sum of `L(x^{2n})^{-1/(2n)}` for `n = 1..=terms_used`.
    pub partial_sum: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form_tag: Option<String>,
    pub verdict: CarlemanVerdict,
}

/// Evaluates the Carleman partial sum for one variable. Even moments must be
/// available up to degree `2 * max_n` and non-negative; all-zero even moments
/// short-circuit to the degenerate point-mass case.
pub fn carleman(
    l: &MomentFunctional,
    var: VarId,
    max_n: u32,
    threshold: f64,
) -> Result<CarlemanReport> {
    let mut moments = Vec::with_capacity(max_n as usize);
    for n in 1..=max_n {
        let value = l.moment(&MultiIndex::single(var, 2 * n))?;
        if value < 0.0 {
            return Err(Error::InvalidEvenMoment {
                var,
                power: 2 * n,
                value,
            });
        }
        moments.push(value);
    }
    let zeros = moments.iter().filter(|&&m| m == 0.0).count();
    if zeros == moments.len() && !moments.is_empty() {
        return Ok(CarlemanReport {
            variable: var,
            terms_used: max_n,
            partial_sum: f64::INFINITY,
            closed_form_tag: Some("degenerate_point_mass".into()),
            verdict: CarlemanVerdict::DivergenceCertified,
        });
    }
    if zeros > 0 {
        let n = moments.iter().position(|&m| m == 0.0).unwrap() as u32 + 1;
        return Err(Error::InvalidEvenMoment {
            var,
            power: 2 * n,
            value: 0.0,
        });
    }
    let partial_sum: f64 = moments
        .iter()
        .enumerate()
        .map(|(k, &m)| m.powf(-1.0 / (2.0 * (k as f64 + 1.0))))
        .sum();

    let closed_form_tag = match l.source() {
        Source::Product { .. } => match l.component(var).unwrap() {
            Component::Gaussian { .. } => Some("gaussian".to_string()),
            Component::Uniform { .. } => Some("uniform_box".to_string()),
            Component::Point { .. } => Some("point_mass".to_string()),
        },
        // finitely many atoms are compactly supported
        Source::Atomic(_) => Some("atomic".to_string()),
        Source::Table { .. } => None,
    };
    let verdict = if closed_form_tag.is_some() {
        CarlemanVerdict::DivergenceCertified
    } else if partial_sum >= threshold {
        CarlemanVerdict::DivergenceLikely
    } else {
        CarlemanVerdict::Inconclusive
    };
    Ok(CarlemanReport {
        variable: var,
        terms_used: max_n,
        partial_sum,
        closed_form_tag,
        verdict,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchimedeanVerdict {
    /// Every variable in scope carries a syntactic bound generator.
    ArchimedeanSyntactic,
    Unknown,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArchimedeanReport {
    /// Per-variable bound `N` with `|x| <= N` forced by the generators.
    #[serde(with = "crate::algebra::varmap")]
    pub per_variable_bound: BTreeMap<VarId, f64>,
    pub verdict: ArchimedeanVerdict,
    /// Whether `L(x^{2n}) <= N^{2n}` held for every tested `n`.
    #[serde(with = "crate::algebra::varmap")]
    pub growth_check: BTreeMap<VarId, bool>,
}

/// Scans the generators for per-variable bound patterns and, where a bound
/// `N` exists, validates the moment growth `L(x^{2n}) <= N^{2n}` up to
/// `max_n`. Soundness over completeness: without a syntactic certificate the
/// verdict stays `Unknown`.
pub fn archimedean(
    q: &QuadraticModule,
    l: &MomentFunctional,
    variables: &VariableSet,
    max_n: u32,
) -> ArchimedeanReport {
    let per_variable_bound = syntactic_bounds(q);
    let verdict = if variables
        .iter()
        .all(|v| per_variable_bound.contains_key(&v))
        && !variables.is_empty()
    {
        ArchimedeanVerdict::ArchimedeanSyntactic
    } else {
        ArchimedeanVerdict::Unknown
    };
    let mut growth_check = BTreeMap::new();
    for (&var, &bound) in &per_variable_bound {
        if !variables.contains(var) {
            continue;
        }
        let mut ok = true;
        for n in 1..=max_n {
            match l.moment(&MultiIndex::single(var, 2 * n)) {
                Ok(m) => {
                    if m > bound.powi(2 * n as i32) * (1.0 + 1e-9) {
                        ok = false;
                        break;
                    }
                }
                // shorter tables bound the tested range, they do not fail it
                Err(_) => break,
            }
        }
        growth_check.insert(var, ok);
    }
    ArchimedeanReport {
        per_variable_bound: per_variable_bound
            .into_iter()
            .filter(|(v, _)| variables.contains(*v))
            .collect(),
        verdict,
        growth_check,
    }
}

/// Bound patterns recognized: `a - b*x_i^2` (a, b > 0) giving `sqrt(a/b)`,
/// and the pair `a - b*x_i`, `c + d*x_i` giving `max(a/b, c/d)`. The smallest
/// bound wins when several generators constrain the same variable.
fn syntactic_bounds(q: &QuadraticModule) -> BTreeMap<VarId, f64> {
    let mut quadratic: BTreeMap<VarId, f64> = BTreeMap::new();
    let mut upper: BTreeMap<VarId, f64> = BTreeMap::new();
    let mut lower: BTreeMap<VarId, f64> = BTreeMap::new();
    for g in q.generators() {
        if g.num_terms() != 2 {
            continue;
        }
        let constant = g.coefficient(&MultiIndex::one());
        if constant <= 0.0 {
            continue;
        }
        let support = g.support();
        if support.len() != 1 {
            continue;
        }
        let var = support.iter().next().unwrap();
        let square = g.coefficient(&MultiIndex::single(var, 2));
        let linear = g.coefficient(&MultiIndex::single(var, 1));
        if square < 0.0 {
            let bound = (constant / -square).sqrt();
            insert_min(&mut quadratic, var, bound);
        } else if linear < 0.0 {
            insert_min(&mut upper, var, constant / -linear);
        } else if linear > 0.0 {
            insert_min(&mut lower, var, constant / linear);
        }
    }
    let mut bounds = quadratic;
    for (var, u) in upper {
        if let Some(&l) = lower.get(&var) {
            insert_min(&mut bounds, var, u.max(l));
        }
    }
    bounds
}

fn insert_min(map: &mut BTreeMap<VarId, f64>, var: VarId, value: f64) {
    map.entry(var)
        .and_modify(|existing| *existing = existing.min(value))
        .or_insert(value);
}

/// Split of the variables into the syntactically bounded part, the part
/// covered by a Carleman verdict, and the remainder.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitReport {
    /// Variables with a validated syntactic bound.
    pub archimedean: VariableSet,
    /// Remaining variables whose Carleman diagnostic reached at least
    /// "divergence likely".
    pub carleman: VariableSet,
    pub uncovered: VariableSet,
}

impl SplitReport {
    /// Whether the bounded and determinate parts jointly cover every variable.
    pub fn covers_all(&self) -> bool {
        self.uncovered.is_empty()
    }
}

/// Classifies each variable: syntactic bound with passing growth check,
/// otherwise Carleman divergence at least likely, otherwise uncovered.
pub fn partial_split(
    q: &QuadraticModule,
    l: &MomentFunctional,
    variables: &VariableSet,
    max_n: u32,
    threshold: f64,
) -> Result<SplitReport> {
    let arch = archimedean(q, l, variables, max_n);
    let mut archimedean_vars = VariableSet::empty();
    let mut carleman_vars = VariableSet::empty();
    let mut uncovered = VariableSet::empty();
    for var in variables.iter() {
        if arch.per_variable_bound.contains_key(&var)
            && arch.growth_check.get(&var).copied().unwrap_or(false)
        {
            archimedean_vars.insert(var);
            continue;
        }
        match carleman(l, var, max_n, threshold) {
            Ok(report) if report.verdict >= CarlemanVerdict::DivergenceLikely => {
                carleman_vars.insert(var);
            }
            Ok(_) => uncovered.insert(var),
            // not enough data to run the diagnostic: the variable stays uncovered
            Err(Error::DegreeExceeded { .. }) | Err(Error::MissingMoment { .. }) => {
                uncovered.insert(var)
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SplitReport {
        archimedean: archimedean_vars,
        carleman: carleman_vars,
        uncovered,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TightnessVerdict {
    Certified,
    Failed,
}

/// Product-box tightness certificate: every materialized marginal must give
/// the box `prod [-R_i, R_i]` at least mass `1 - epsilon`. Projections of
/// product boxes are product boxes, so the compact-set nesting across indices
/// holds by construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TightnessCertificate {
    pub epsilon: f64,
    #[serde(with = "crate::algebra::varmap")]
    pub radius_schedule: BTreeMap<VarId, f64>,
    pub per_index_mass: Vec<(VariableSet, f64)>,
    pub verdict: TightnessVerdict,
}

impl TightnessCertificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == TightnessVerdict::Certified
    }
}

pub fn tightness(
    family: &SealedFamily,
    epsilon: f64,
    schedule: &BTreeMap<VarId, f64>,
) -> Result<TightnessCertificate> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    for var in family.all_variables().iter() {
        if !schedule.contains_key(&var) {
            return Err(Error::ScheduleIncomplete { var });
        }
    }
    let mut per_index_mass = Vec::new();
    let mut certified = true;
    for index in family.index_list() {
        let mass = family
            .marginal(index)
            .expect("index list enumerates materialized marginals")
            .box_mass(schedule)?;
        if mass < 1.0 - epsilon {
            certified = false;
        }
        per_index_mass.push((index.clone(), mass));
    }
    Ok(TightnessCertificate {
        epsilon,
        radius_schedule: schedule.clone(),
        per_index_mass,
        verdict: if certified {
            TightnessVerdict::Certified
        } else {
            TightnessVerdict::Failed
        },
    })
}

/// A radius schedule constructed so that the single-coordinate tail of the
/// variable of rank `k` (position in sorted id order) is at most
/// `epsilon * 2^{-k}`; the product bound then clears `1 - epsilon` on every
/// index. Variables whose tails cannot be bounded from the available data are
/// listed separately instead of receiving a radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScheduleSuggestion {
    #[serde(with = "crate::algebra::varmap")]
    pub radii: BTreeMap<VarId, f64>,
    pub unbounded: Vec<VarId>,
}

pub fn suggest_schedule(family: &SealedFamily, epsilon: f64) -> Result<ScheduleSuggestion> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let mut radii = BTreeMap::new();
    let mut unbounded = Vec::new();
    for (rank, var) in family.all_variables().iter().enumerate() {
        let target = epsilon * 0.5f64.powi(rank as i32 + 1);
        // take the largest tail radius over every marginal seeing this
        // variable: independently solved marginals agree only within the
        // sealing tolerance, so a single marginal's radius could cut an
        // atom of another index off the box boundary
        let mut radius: Option<f64> = None;
        for index in family.index_list() {
            if !index.contains(var) {
                continue;
            }
            let marginal = family
                .marginal(index)
                .expect("index list enumerates materialized marginals");
            match marginal.tail_radius(var, target) {
                Ok(r) => radius = Some(radius.map_or(r, |acc: f64| acc.max(r))),
                Err(_) => {
                    radius = None;
                    break;
                }
            }
        }
        match radius {
            Some(r) => {
                radii.insert(var, r);
            }
            None => unbounded.push(var),
        }
    }
    Ok(ScheduleSuggestion { radii, unbounded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Polynomial;
    use crate::extraction::AtomicMeasure;
    use crate::projective::{Marginal, ProductMarginal, ProjectiveFamily};
    use approx::assert_relative_eq;

    fn gaussian() -> MomentFunctional {
        MomentFunctional::gaussian_product(BTreeMap::new()).unwrap()
    }

    #[test]
    fn carleman_gaussian_is_certified() {
        let report = carleman(&gaussian(), 1, 50, DEFAULT_CARLEMAN_THRESHOLD).unwrap();
        assert_eq!(report.verdict, CarlemanVerdict::DivergenceCertified);
        assert_eq!(report.closed_form_tag.as_deref(), Some("gaussian"));
        // terms behave like (2n-1)!!^{-1/2n} ~ sqrt(e/2n): slow divergence
        assert!(report.partial_sum > 8.0 && report.partial_sum < 20.0);
    }

    #[test]
    fn carleman_partial_sums_are_monotone_in_max_n() {
        let mut last = 0.0;
        for max_n in [5, 10, 20, 40] {
            let report = carleman(&gaussian(), 1, max_n, DEFAULT_CARLEMAN_THRESHOLD).unwrap();
            assert!(report.partial_sum >= last);
            last = report.partial_sum;
        }
    }

    #[test]
    fn carleman_lognormal_like_table_is_inconclusive() {
        // L(x^{2n}) = e^{2n^2}: the terms are e^{-n}, summing below 1
        let mut moments = BTreeMap::from([(MultiIndex::one(), 1.0)]);
        for n in 1..=50u32 {
            moments.insert(
                MultiIndex::single(1, 2 * n),
                (2.0 * (n as f64) * (n as f64)).exp(),
            );
        }
        let l = MomentFunctional::table(moments, 100).unwrap();
        let report = carleman(&l, 1, 50, DEFAULT_CARLEMAN_THRESHOLD).unwrap();
        assert_eq!(report.verdict, CarlemanVerdict::Inconclusive);
        assert!(report.partial_sum < 1.0);
        // geometric oracle: sum_{n=1}^{50} e^{-n} = (1 - e^{-50}) / (e - 1)
        let oracle = (1.0 - (-50.0f64).exp()) / (std::f64::consts::E - 1.0);
        assert_relative_eq!(report.partial_sum, oracle, epsilon = 1e-8);
    }

    #[test]
    fn carleman_degenerate_point_mass() {
        let l = MomentFunctional::dirac_product(BTreeMap::new()).unwrap();
        let report = carleman(&l, 1, 10, DEFAULT_CARLEMAN_THRESHOLD).unwrap();
        assert_eq!(report.verdict, CarlemanVerdict::DivergenceCertified);
        assert_eq!(report.closed_form_tag.as_deref(), Some("degenerate_point_mass"));
    }

    #[test]
    fn carleman_rejects_negative_even_moments() {
        let moments = BTreeMap::from([
            (MultiIndex::one(), 1.0),
            (MultiIndex::single(1, 2), -1.0),
        ]);
        let l = MomentFunctional::table(moments, 2).unwrap();
        assert!(matches!(
            carleman(&l, 1, 1, DEFAULT_CARLEMAN_THRESHOLD),
            Err(Error::InvalidEvenMoment { .. })
        ));
    }

    #[test]
    fn archimedean_uniform_box_passes_growth() {
        let q = QuadraticModule::new(vec![
            Polynomial::parse("1 - x1^2").unwrap(),
            Polynomial::parse("1 - x2^2").unwrap(),
        ]);
        let l = MomentFunctional::uniform_box_product(BTreeMap::new()).unwrap();
        let vars = VariableSet::from_ids([1, 2]);
        let report = archimedean(&q, &l, &vars, 50);
        assert_eq!(report.verdict, ArchimedeanVerdict::ArchimedeanSyntactic);
        assert_eq!(report.per_variable_bound[&1], 1.0);
        assert_eq!(report.per_variable_bound[&2], 1.0);
        assert!(report.growth_check[&1] && report.growth_check[&2]);
    }

    #[test]
    fn archimedean_without_bound_generators_is_unknown() {
        let q = QuadraticModule::new(vec![Polynomial::var(1)]);
        let l = gaussian();
        let report = archimedean(&q, &l, &VariableSet::from_ids([1]), 10);
        assert_eq!(report.verdict, ArchimedeanVerdict::Unknown);
        assert!(report.per_variable_bound.is_empty());
    }

    #[test]
    fn archimedean_gaussian_fails_growth_at_n_two() {
        let q = QuadraticModule::new(vec![Polynomial::parse("1 - x1^2").unwrap()]);
        let l = gaussian();
        let report = archimedean(&q, &l, &VariableSet::from_ids([1]), 10);
        assert_eq!(report.verdict, ArchimedeanVerdict::ArchimedeanSyntactic);
        // L(x^4) = 3 > 1 = N^4
        assert!(!report.growth_check[&1]);
    }

    #[test]
    fn linear_pair_bounds_are_recognized() {
        let q = QuadraticModule::new(vec![
            Polynomial::parse("2 - x1").unwrap(),
            Polynomial::parse("2 + x1").unwrap(),
        ]);
        let bounds = syntactic_bounds(&q);
        assert_eq!(bounds[&1], 2.0);
        // one side alone is not a bound
        let half = QuadraticModule::new(vec![Polynomial::parse("2 - x1").unwrap()]);
        assert!(syntactic_bounds(&half).is_empty());
    }

    #[test]
    fn split_mixed_uniform_gaussian() {
        let q = QuadraticModule::new(vec![Polynomial::parse("1 - x1^2").unwrap()]);
        let l = MomentFunctional::product(
            BTreeMap::from([
                (1, Component::Uniform { radius: 1.0 }),
                (2, Component::Gaussian { variance: 1.0 }),
            ]),
            Component::Gaussian { variance: 1.0 },
        )
        .unwrap();
        let vars = VariableSet::from_ids([1, 2]);
        let split = partial_split(&q, &l, &vars, 20, DEFAULT_CARLEMAN_THRESHOLD).unwrap();
        assert_eq!(split.archimedean, VariableSet::from_ids([1]));
        assert_eq!(split.carleman, VariableSet::from_ids([2]));
        assert!(split.covers_all());
    }

    #[test]
    fn split_gaussian_without_module() {
        let split = partial_split(
            &QuadraticModule::empty(),
            &gaussian(),
            &VariableSet::from_ids([1, 2]),
            20,
            DEFAULT_CARLEMAN_THRESHOLD,
        )
        .unwrap();
        assert!(split.archimedean.is_empty());
        assert_eq!(split.carleman, VariableSet::from_ids([1, 2]));
    }

    #[test]
    fn split_leaves_lognormal_table_uncovered() {
        let mut moments = BTreeMap::from([(MultiIndex::one(), 1.0)]);
        for n in 1..=20u32 {
            moments.insert(
                MultiIndex::single(1, 2 * n),
                (2.0 * (n as f64) * (n as f64)).exp(),
            );
        }
        let l = MomentFunctional::table(moments, 40).unwrap();
        let split = partial_split(
            &QuadraticModule::empty(),
            &l,
            &VariableSet::from_ids([1]),
            20,
            DEFAULT_CARLEMAN_THRESHOLD,
        )
        .unwrap();
        assert_eq!(split.uncovered, VariableSet::from_ids([1]));
        assert!(!split.covers_all());
    }

    fn gaussian_chain_family(depth: VarId) -> SealedFamily {
        let mut family = ProjectiveFamily::new(4);
        for top in 1..=depth {
            let components = (1..=top)
                .map(|v| (v, Component::Gaussian { variance: 1.0 }))
                .collect();
            family.insert(Marginal::Product(ProductMarginal::new(components)));
        }
        family.seal(1e-9).unwrap()
    }

    #[test]
    fn gaussian_chain_constant_schedule_fails() {
        let family = gaussian_chain_family(6);
        let schedule: BTreeMap<VarId, f64> = (1..=6).map(|v| (v, 1.0)).collect();
        let cert = tightness(&family, 0.1, &schedule).unwrap();
        assert_eq!(cert.verdict, TightnessVerdict::Failed);
        // erf(1/sqrt(2))^6 from the one-sigma mass
        let deepest = cert.per_index_mass.last().unwrap();
        assert_eq!(deepest.0.len(), 6);
        assert_relative_eq!(deepest.1, 0.6826894921370859f64.powi(6), epsilon = 1e-12);
    }

    #[test]
    fn gaussian_chain_suggested_schedule_certifies() {
        let family = gaussian_chain_family(6);
        let suggestion = suggest_schedule(&family, 0.1).unwrap();
        assert!(suggestion.unbounded.is_empty());
        let radii: Vec<f64> = suggestion.radii.values().copied().collect();
        assert!(radii.windows(2).all(|w| w[0] < w[1]), "radii increase with rank");
        let cert = tightness(&family, 0.1, &suggestion.radii).unwrap();
        assert_eq!(cert.verdict, TightnessVerdict::Certified);
        for (_, mass) in &cert.per_index_mass {
            assert!(*mass >= 0.9);
        }
    }

    #[test]
    fn compactly_supported_family_certifies_with_unit_radii() {
        let measure = AtomicMeasure::new(
            VariableSet::from_ids([1]),
            [
                (BTreeMap::from([(1, -1.0)]), 0.5),
                (BTreeMap::from([(1, 1.0)]), 0.5),
            ],
        )
        .unwrap();
        let mut family = ProjectiveFamily::new(4);
        family.insert(Marginal::Atomic(measure));
        let family = family.seal(1e-9).unwrap();
        let cert = tightness(&family, 0.1, &BTreeMap::from([(1, 1.0)])).unwrap();
        assert_eq!(cert.verdict, TightnessVerdict::Certified);
        assert_relative_eq!(cert.per_index_mass[0].1, 1.0);

        let suggestion = suggest_schedule(&family, 0.1).unwrap();
        assert_eq!(suggestion.radii[&1], 1.0);
    }

    #[test]
    fn schedule_must_cover_every_variable() {
        let family = gaussian_chain_family(2);
        let schedule = BTreeMap::from([(1, 1.0)]);
        assert!(matches!(
            tightness(&family, 0.1, &schedule),
            Err(Error::ScheduleIncomplete { var: 2 })
        ));
        assert!(tightness(&family, 1.5, &schedule).is_err());
    }

    #[test]
    fn dirac_schedule_is_zero_radius() {
        let mut family = ProjectiveFamily::new(2);
        family.insert(Marginal::Product(ProductMarginal::new(BTreeMap::from([
            (1, Component::Point { value: 0.0 }),
        ]))));
        let family = family.seal(1e-9).unwrap();
        let suggestion = suggest_schedule(&family, 0.05).unwrap();
        assert_eq!(suggestion.radii[&1], 0.0);
        let cert = tightness(&family, 0.05, &suggestion.radii).unwrap();
        assert!(cert.is_certified());
    }
}
