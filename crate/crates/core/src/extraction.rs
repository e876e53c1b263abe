//! Construction of atomic representing measures from flat moment data, the
//! pushforward between coordinate subalgebras, and the exactness check for
//! families of marginals.
//!
//! At a flat truncation order the moment data of `L` restricted to finitely
//! many variables is reproduced by a measure with `rank M_n` atoms. One
//! variable goes through the Hankel/Jacobi-matrix quadrature route; several
//! variables go through multiplication operators on the column space of the
//! moment matrix and simultaneous diagonalization by a random combination.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{monomials_up_to, MultiIndex, Polynomial, QuadraticModule, VarId, VariableSet};
use crate::error::{Error, Result};
use crate::functional::MomentFunctional;
use crate::matrices::{self, DEFAULT_RANK_TOL};
use crate::projective::ProjectiveFamily;

/// Atoms closer than this (sup-norm) are merged into one.
pub const ATOM_MERGE_TOL: f64 = 1e-7;
/// Weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A probability measure with finitely many weighted atoms on the coordinate
/// space of `variable_set`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AtomicMeasureData", into = "AtomicMeasureData")]
pub struct AtomicMeasure {
    variable_set: VariableSet,
    atoms: Vec<Atom>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    point: BTreeMap<VarId, f64>,
    weight: f64,
}

impl Atom {
    pub fn point(&self) -> &BTreeMap<VarId, f64> {
        &self.point
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn coordinate(&self, var: VarId) -> f64 {
        self.point.get(&var).copied().unwrap_or(0.0)
    }
}

impl AtomicMeasure {
    /// Builds a measure from raw atoms. Coordinates are canonicalized to the
    /// variable set (absent ones read as 0), atoms within [`ATOM_MERGE_TOL`]
    /// of each other are merged, weights must be positive and sum to one.
    pub fn new<I>(variable_set: VariableSet, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BTreeMap<VarId, f64>, f64)>,
    {
        let mut merged: Vec<Atom> = Vec::new();
        for (raw_point, weight) in atoms {
            if !weight.is_finite() || weight <= 0.0 {
                return Err(Error::InvalidFunctional(format!(
                    "atom weight {weight} is not a positive real"
                )));
            }
            for var in raw_point.keys() {
                if !variable_set.contains(*var) {
                    return Err(Error::InvalidFunctional(format!(
                        "atom has a coordinate for x{var} outside the variable set {variable_set}"
                    )));
                }
            }
            let point: BTreeMap<VarId, f64> = variable_set
                .iter()
                .map(|v| (v, raw_point.get(&v).copied().unwrap_or(0.0)))
                .collect();
            if point.values().any(|x| !x.is_finite()) {
                return Err(Error::InvalidFunctional("atom coordinate is not finite".into()));
            }
            match merged
                .iter_mut()
                .find(|a| sup_distance(&a.point, &point) <= ATOM_MERGE_TOL)
            {
                Some(existing) => existing.weight += weight,
                None => merged.push(Atom { point, weight }),
            }
        }
        let total: f64 = merged.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidFunctional(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        // canonical order: coordinates lexicographically, independent of the
        // construction path
        merged.sort_by(|a, b| {
            a.point
                .values()
                .zip(b.point.values())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(Self {
            variable_set,
            atoms: merged,
        })
    }

    pub fn variables(&self) -> &VariableSet {
        &self.variable_set
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Raw moment of the monomial `x^m`; coordinates outside the variable set
    /// are read as 0 (the embedding into the full product space).
    pub fn moment(&self, m: &MultiIndex) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight * m.evaluate_embedded(&a.point))
            .sum()
    }

    /// Coordinate projection onto `set`; coincident projections merge with
    /// summed weights.
    pub fn pushforward(&self, set: &VariableSet) -> Result<AtomicMeasure> {
        if !set.is_subset_of(&self.variable_set) {
            return Err(Error::NotASubset {
                child: set.clone(),
                parent: self.variable_set.clone(),
            });
        }
        AtomicMeasure::new(
            set.clone(),
            self.atoms.iter().map(|a| {
                let projected: BTreeMap<VarId, f64> = a
                    .point
                    .iter()
                    .filter(|(v, _)| set.contains(**v))
                    .map(|(&v, &x)| (v, x))
                    .collect();
                (projected, a.weight)
            }),
        )
    }
}

fn sup_distance(a: &BTreeMap<VarId, f64>, b: &BTreeMap<VarId, f64>) -> f64 {
    a.iter()
        .map(|(v, &x)| (x - b.get(v).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

#[derive(Serialize, Deserialize)]
struct AtomicMeasureData {
    variables: Vec<VarId>,
    atoms: Vec<AtomData>,
}

#[derive(Serialize, Deserialize)]
struct AtomData {
    #[serde(with = "crate::algebra::varmap")]
    point: BTreeMap<VarId, f64>,
    weight: f64,
}

impl TryFrom<AtomicMeasureData> for AtomicMeasure {
    type Error = Error;

    fn try_from(data: AtomicMeasureData) -> Result<Self> {
        AtomicMeasure::new(
            VariableSet::from_ids(data.variables),
            data.atoms.into_iter().map(|a| (a.point, a.weight)),
        )
    }
}

impl From<AtomicMeasure> for AtomicMeasureData {
    fn from(measure: AtomicMeasure) -> Self {
        AtomicMeasureData {
            variables: measure.variable_set.iter().collect(),
            atoms: measure
                .atoms
                .into_iter()
                .map(|a| AtomData {
                    point: a.point,
                    weight: a.weight,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExtractionOptions {
    /// Numerical rank threshold, relative to the spectral norm.
    pub rank_tol: f64,
    /// Accepted relative mismatch between the input moments and the moments
    /// of the extracted measure, over all monomials of degree <= 2n.
    pub moment_tol: f64,
    /// Seed for the random combination used in simultaneous diagonalization.
    pub combination_seed: u64,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            moment_tol: 1e-6,
            combination_seed: 42,
        }
    }
}

/// Extracts the atomic measure behind a flat truncation of `L` on `set`.
///
/// Requires `rank M_n = rank M_{n-1}`; the measure has that many atoms and
/// reproduces all moments of degree <= 2n within `moment_tol` (relative).
pub fn extract(
    l: &MomentFunctional,
    set: &VariableSet,
    n: u32,
    options: &ExtractionOptions,
) -> Result<AtomicMeasure> {
    if n == 0 || set.is_empty() {
        return Err(Error::InvalidArgument(
            "extraction needs a non-empty variable set and order n >= 1".into(),
        ));
    }
    let flat = matrices::flatness(l, set, n, options.rank_tol)?;
    if !flat.is_flat {
        return Err(Error::NotFlat {
            order: n,
            rank_n: flat.rank_n,
            rank_n_minus_1: flat.rank_n_minus_1,
        });
    }
    extract_with_rank(l, set, n, flat.rank_n, options)
}

/// Extraction at an explicitly prescribed atom count, skipping the rank test.
fn extract_with_rank(
    l: &MomentFunctional,
    set: &VariableSet,
    n: u32,
    rank: usize,
    options: &ExtractionOptions,
) -> Result<AtomicMeasure> {
    let restricted = l.restrict(set);
    let (points, raw_weights) = if set.len() == 1 {
        let var = set.iter().next().unwrap();
        univariate_nodes(&restricted, var, n, rank)?
    } else {
        multivariate_nodes(&restricted, set, n, rank, options)?
    };

    // refit the weights linearly, then polish atoms and weights jointly
    // against all moments of degree <= 2n
    let weights = refine_weights(&restricted, set, n, &points, raw_weights)?;
    let (points, weights) = polish(&restricted, set, n, points, weights)?;
    let measure = AtomicMeasure::new(
        set.clone(),
        points.into_iter().zip(weights),
    )
    .map_err(|e| Error::IllConditioned {
        detail: format!("extracted atoms do not form a probability measure: {e}"),
        residual: f64::NAN,
    })?;

    let residual = moment_residual(&restricted, set, 2 * n, &measure)?;
    if residual > options.moment_tol {
        return Err(Error::IllConditioned {
            detail: format!(
                "moment mismatch after extracting {} atoms at order {n}",
                measure.len()
            ),
            residual,
        });
    }
    Ok(measure)
}

/// Largest relative mismatch between the measure's moments and `L` over all
/// monomials of degree <= `degree`.
pub fn moment_residual(
    l: &MomentFunctional,
    set: &VariableSet,
    degree: u32,
    measure: &AtomicMeasure,
) -> Result<f64> {
    let mut residual = 0.0f64;
    for m in monomials_up_to(set, degree) {
        let want = l.moment(&m)?;
        residual = residual.max((want - measure.moment(&m)).abs() / want.abs().max(1.0));
    }
    Ok(residual)
}

/// Scans truncation orders `1..=max_order` and keeps the extraction with the
/// smallest moment residual. A low flat order can numerically swallow an
/// atom when nodes nearly collide; the extra data at higher orders exposes
/// it, so the residual decides which model the moments actually support.
/// Returns the measure and the order it came from.
pub fn extract_best(
    l: &MomentFunctional,
    set: &VariableSet,
    max_order: u32,
    options: &ExtractionOptions,
) -> Result<(AtomicMeasure, u32)> {
    if max_order == 0 {
        return Err(Error::InvalidArgument(
            "extraction scan needs max_order >= 1".into(),
        ));
    }
    let mut best: Option<(AtomicMeasure, u32, f64)> = None;
    let mut last_flat: Option<crate::matrices::FlatnessReport> = None;
    for n in 1..=max_order {
        let report = matrices::flatness(l, set, n, options.rank_tol)?;
        let flat_rank = report.rank_n;
        let is_flat = report.is_flat;
        last_flat = Some(report);
        if !is_flat {
            continue;
        }
        // the rank reading under-counts by one when atoms cluster; try the
        // next rank as well and let the residual decide (a phantom atom is
        // rejected by the weight positivity gate or loses on residual)
        let low_block_dim = monomials_up_to(set, n - 1).len();
        let speculative = flat_rank + 1;
        let mut candidate_ranks = vec![flat_rank];
        if speculative <= low_block_dim && (set.len() > 1 || speculative as u32 <= n) {
            candidate_ranks.push(speculative);
        }
        for rank in candidate_ranks {
            match extract_with_rank(l, set, n, rank, options) {
                Ok(measure) => {
                    let residual = moment_residual(l, set, 2 * n, &measure)?;
                    if best.as_ref().map_or(true, |(_, _, r)| residual < *r) {
                        best = Some((measure, n, residual));
                    }
                }
                Err(Error::IllConditioned { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        if best.as_ref().is_some_and(|(_, _, r)| *r <= 1e-12) {
            break;
        }
    }
    match best {
        Some((measure, n, _)) => Ok((measure, n)),
        None => {
            let report = last_flat.expect("max_order >= 1 produced a flatness report");
            Err(Error::NotFlat {
                order: report.order,
                rank_n: report.rank_n,
                rank_n_minus_1: report.rank_n_minus_1,
            })
        }
    }
}

/// Quadrature nodes of a univariate flat moment sequence via the Jacobi
/// matrix of the orthogonal-polynomial recurrence (Golub-Welsch).
fn univariate_nodes(
    l: &MomentFunctional,
    var: VarId,
    n: u32,
    rank: usize,
) -> Result<(Vec<BTreeMap<VarId, f64>>, Vec<f64>)> {
    let mut h = Vec::with_capacity(2 * n as usize + 1);
    for k in 0..=2 * n {
        h.push(l.moment(&MultiIndex::single(var, k))?);
    }
    let hankel = DMatrix::from_fn(rank, rank, |i, j| h[i + j]);
    let shifted = DMatrix::from_fn(rank, rank, |i, j| h[i + j + 1]);
    let chol = nalgebra::Cholesky::new(hankel).ok_or(Error::IllConditioned {
        detail: "Hankel matrix of the flat data is numerically singular".into(),
        residual: f64::NAN,
    })?;
    let lower = chol.l();
    // J = L^{-1} H' L^{-T}, symmetric tridiagonal for exact data
    let a = lower
        .solve_lower_triangular(&shifted)
        .ok_or_else(ill_conditioned_triangular)?;
    let j = lower
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(ill_conditioned_triangular)?
        .transpose();
    let j = symmetrize(&j);
    let eig = j.symmetric_eigen();
    let mut points = Vec::with_capacity(rank);
    let mut weights = Vec::with_capacity(rank);
    for k in 0..rank {
        let node = eig.eigenvalues[k];
        let first = eig.eigenvectors[(0, k)];
        points.push(BTreeMap::from([(var, node)]));
        weights.push(h[0] * first * first);
    }
    Ok((points, weights))
}

fn ill_conditioned_triangular() -> Error {
    Error::IllConditioned {
        detail: "triangular solve against the Cholesky factor failed".into(),
        residual: f64::NAN,
    }
}

/// Atom coordinates from multiplication operators on the column space of the
/// moment matrix. A rank-revealing factor `V` of `M_n` is computed from its
/// eigendecomposition; the shift-by-`x_v` action on rows of `V` defines one
/// symmetric operator per variable, all diagonalized by a common orthogonal
/// basis, which a random combination recovers.
fn multivariate_nodes(
    l: &MomentFunctional,
    set: &VariableSet,
    n: u32,
    rank: usize,
    options: &ExtractionOptions,
) -> Result<(Vec<BTreeMap<VarId, f64>>, Vec<f64>)> {
    let matrix = matrices::moment_matrix(l, set, n, &Polynomial::one())?;
    let basis = matrix.basis().to_vec();
    let eig = matrix.entries().clone().symmetric_eigen();

    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
    });
    let top = eig.eigenvalues[order[0]];
    let bottom = eig.eigenvalues[*order.last().unwrap()];
    if bottom < -options.rank_tol * top.abs().max(1.0) {
        return Err(Error::IllConditioned {
            detail: "moment matrix has a significantly negative eigenvalue".into(),
            residual: bottom,
        });
    }
    let smallest_kept = eig.eigenvalues[order[rank - 1]];
    if smallest_kept <= 0.0 {
        return Err(Error::IllConditioned {
            detail: "rank-revealing eigenvalues are not positive".into(),
            residual: smallest_kept,
        });
    }

    // V = U_r diag(sqrt(lambda)), rows indexed by basis monomials
    let mut factor = DMatrix::<f64>::zeros(basis.len(), rank);
    for (col, &idx) in order.iter().take(rank).enumerate() {
        let scale = eig.eigenvalues[idx].sqrt();
        for row in 0..basis.len() {
            factor[(row, col)] = eig.eigenvectors[(row, idx)] * scale;
        }
    }

    let row_of: BTreeMap<&MultiIndex, usize> =
        basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
    // the graded basis puts every monomial of degree <= n-1 first
    let low_count = basis.iter().take_while(|m| m.degree() < n).count();
    let low_rows = factor.rows(0, low_count).into_owned();
    let svd = nalgebra::SVD::new(low_rows, true, true);

    let vars: Vec<VarId> = set.iter().collect();
    let mut shift_ops = Vec::with_capacity(vars.len());
    for &v in &vars {
        let mut shifted_rows = DMatrix::<f64>::zeros(low_count, rank);
        for i in 0..low_count {
            let target = basis[i].times_var(v);
            let row = *row_of.get(&target).expect("shifted monomial within order n");
            shifted_rows.set_row(i, &factor.row(row));
        }
        let op = svd
            .solve(&shifted_rows, 1e-12)
            .map_err(|msg| Error::IllConditioned {
                detail: format!("least-squares for the shift operator failed: {msg}"),
                residual: f64::NAN,
            })?;
        shift_ops.push(symmetrize(&op));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.combination_seed);
    let mut combination = DMatrix::<f64>::zeros(rank, rank);
    let mut norm = 0.0;
    let mut coeffs = Vec::with_capacity(vars.len());
    for _ in &vars {
        let c: f64 = rng.gen_range(-1.0..1.0);
        coeffs.push(c);
        norm += c * c;
    }
    let norm = norm.sqrt().max(1e-9);
    for (op, &c) in shift_ops.iter().zip(&coeffs) {
        combination += op * (c / norm);
    }
    let common = combination.symmetric_eigen();

    let first_row = factor.row(0).into_owned();
    let mut points = Vec::with_capacity(rank);
    let mut weights = Vec::with_capacity(rank);
    for k in 0..rank {
        let q = common.eigenvectors.column(k);
        let mut point = BTreeMap::new();
        for (op, &v) in shift_ops.iter().zip(&vars) {
            point.insert(v, (q.transpose() * op * q)[(0, 0)]);
        }
        points.push(point);
        let amplitude: f64 = first_row
            .iter()
            .zip(q.iter())
            .map(|(a, b)| a * b)
            .sum();
        weights.push(amplitude * amplitude);
    }
    Ok((points, weights))
}

/// Least-squares weight fit over all monomials of degree <= 2n, keeping the
/// eigen-derived weights only as a fallback check.
fn refine_weights(
    l: &MomentFunctional,
    set: &VariableSet,
    n: u32,
    points: &[BTreeMap<VarId, f64>],
    raw: Vec<f64>,
) -> Result<Vec<f64>> {
    let monomials = monomials_up_to(set, 2 * n);
    let mut design = DMatrix::<f64>::zeros(monomials.len(), points.len());
    let mut target = DVector::<f64>::zeros(monomials.len());
    for (i, m) in monomials.iter().enumerate() {
        target[i] = l.moment(m)?;
        for (j, p) in points.iter().enumerate() {
            design[(i, j)] = m.evaluate_embedded(p);
        }
    }
    let fitted = nalgebra::SVD::new(design, true, true)
        .solve(&target, 1e-12)
        .map(|w| w.iter().copied().collect::<Vec<f64>>())
        .unwrap_or(raw);

    let sum: f64 = fitted.iter().sum();
    if fitted.iter().any(|&w| !(w > 1e-10)) || (sum - 1.0).abs() > 1e-7 {
        return Err(Error::IllConditioned {
            detail: format!(
                "fitted weights are not a probability vector (sum {sum:.6})"
            ),
            residual: (sum - 1.0).abs(),
        });
    }
    Ok(fitted.into_iter().map(|w| w / sum).collect())
}

/// Gauss-Newton polish of atom coordinates and weights against the moment
/// equations of degree <= 2n. The eigenvector routes land within a few
/// orders of magnitude of machine precision; this step closes the rest and
/// never returns parameters worse than its input.
fn polish(
    l: &MomentFunctional,
    set: &VariableSet,
    n: u32,
    points: Vec<BTreeMap<VarId, f64>>,
    weights: Vec<f64>,
) -> Result<(Vec<BTreeMap<VarId, f64>>, Vec<f64>)> {
    let monomials = monomials_up_to(set, 2 * n);
    let vars: Vec<VarId> = set.iter().collect();
    let k = points.len();
    let params_per_atom = vars.len() + 1;
    if monomials.len() < k * params_per_atom {
        return Ok((points, weights));
    }
    let mut target = DVector::<f64>::zeros(monomials.len());
    for (i, m) in monomials.iter().enumerate() {
        target[i] = l.moment(m)?;
    }
    let scale: Vec<f64> = target.iter().map(|h| h.abs().max(1.0)).collect();

    let residual_norm = |points: &[BTreeMap<VarId, f64>], weights: &[f64]| -> f64 {
        monomials
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let predicted: f64 = points
                    .iter()
                    .zip(weights)
                    .map(|(p, w)| w * m.evaluate_embedded(p))
                    .sum();
                ((predicted - target[i]) / scale[i]).abs()
            })
            .fold(0.0, f64::max)
    };

    let mut best_points = points.clone();
    let mut best_weights = weights.clone();
    let mut best = residual_norm(&best_points, &best_weights);
    let mut current_points = points;
    let mut current_weights = weights;
    for _ in 0..20 {
        if best <= 1e-14 {
            break;
        }
        let mut jacobian = DMatrix::<f64>::zeros(monomials.len(), k * params_per_atom);
        let mut residual = DVector::<f64>::zeros(monomials.len());
        for (i, m) in monomials.iter().enumerate() {
            let mut predicted = 0.0;
            for (j, (p, &w)) in current_points.iter().zip(&current_weights).enumerate() {
                let value = m.evaluate_embedded(p);
                predicted += w * value;
                let col = j * params_per_atom;
                jacobian[(i, col)] = value / scale[i];
                for (a, &v) in vars.iter().enumerate() {
                    jacobian[(i, col + 1 + a)] = w * monomial_derivative(m, v, p) / scale[i];
                }
            }
            residual[i] = (target[i] - predicted) / scale[i];
        }
        let Ok(step) = nalgebra::SVD::new(jacobian, true, true).solve(&residual, 1e-13) else {
            break;
        };
        // damped step: halve until the residual improves
        let mut improved = false;
        let mut damping = 1.0;
        for _ in 0..6 {
            let mut next_points = current_points.clone();
            let mut next_weights = current_weights.clone();
            for j in 0..k {
                let col = j * params_per_atom;
                next_weights[j] += damping * step[col];
                for (a, &v) in vars.iter().enumerate() {
                    *next_points[j].get_mut(&v).unwrap() += damping * step[col + 1 + a];
                }
            }
            let next = residual_norm(&next_points, &next_weights);
            if next < best {
                best = next;
                best_points = next_points.clone();
                best_weights = next_weights.clone();
                current_points = next_points;
                current_weights = next_weights;
                improved = true;
                break;
            }
            damping *= 0.5;
        }
        if !improved {
            break;
        }
    }
    // weights may have drifted off the simplex by roundoff
    let sum: f64 = best_weights.iter().sum();
    if best_weights.iter().any(|&w| !(w > 1e-10)) || (sum - 1.0).abs() > 1e-7 {
        return Err(Error::IllConditioned {
            detail: format!("polished weights are not a probability vector (sum {sum:.6})"),
            residual: (sum - 1.0).abs(),
        });
    }
    for w in &mut best_weights {
        *w /= sum;
    }
    Ok((best_points, best_weights))
}

/// d/dx_v of the monomial x^m at the point.
fn monomial_derivative(m: &MultiIndex, var: VarId, point: &BTreeMap<VarId, f64>) -> f64 {
    let exp = m.exponent(var);
    if exp == 0 {
        return 0.0;
    }
    let mut acc = exp as f64;
    for (v, e) in m.entries() {
        let x = point.get(&v).copied().unwrap_or(0.0);
        let power = if v == var { e - 1 } else { e };
        acc *= x.powi(power as i32);
    }
    acc
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactnessVerdict {
    Exact,
    NotExact,
}

/// Result of comparing marginals against pushforwards of larger ones.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactnessReport {
    pub pairs_checked: Vec<(VariableSet, VariableSet)>,
    pub max_discrepancy: f64,
    /// The pair attaining the maximum, when any pair was checked.
    pub worst_pair: Option<(VariableSet, VariableSet)>,
    pub verdict: ExactnessVerdict,
    pub tolerance: f64,
}

impl ExactnessReport {
    pub fn is_exact(&self) -> bool {
        self.verdict == ExactnessVerdict::Exact
    }

    pub fn vacuous(tolerance: f64) -> Self {
        Self {
            pairs_checked: Vec::new(),
            max_discrepancy: 0.0,
            worst_pair: None,
            verdict: ExactnessVerdict::Exact,
            tolerance,
        }
    }
}

/// Compares, for each pair `(F, F')` with `F` a subset of `F'`, the marginal
/// on `F` against the pushforward of the marginal on `F'`. The discrepancy
/// metric is the maximum absolute difference of moment vectors up to the
/// family's comparison degree.
pub fn check_exactness(
    family: &ProjectiveFamily,
    pairs: &[(VariableSet, VariableSet)],
    tol: f64,
) -> Result<ExactnessReport> {
    let mut max_discrepancy = 0.0f64;
    let mut worst_pair = None;
    for (small, large) in pairs {
        if !small.is_subset_of(large) {
            return Err(Error::NotASubset {
                child: small.clone(),
                parent: large.clone(),
            });
        }
        let mu_small = family
            .marginal(small)
            .ok_or_else(|| Error::MissingMarginal { index: small.clone() })?;
        let mu_large = family
            .marginal(large)
            .ok_or_else(|| Error::MissingMarginal { index: large.clone() })?;
        let pushed = mu_large.pushforward(small)?;
        for m in monomials_up_to(small, family.comparison_degree()) {
            let d = (pushed.moment(&m)? - mu_small.moment(&m)?).abs();
            if d >= max_discrepancy {
                max_discrepancy = d;
                worst_pair = Some((small.clone(), large.clone()));
            }
        }
    }
    let verdict = if max_discrepancy <= tol {
        ExactnessVerdict::Exact
    } else {
        ExactnessVerdict::NotExact
    };
    Ok(ExactnessReport {
        pairs_checked: pairs.to_vec(),
        max_discrepancy,
        worst_pair,
        verdict,
        tolerance: tol,
    })
}

/// Whether every atom satisfies `g >= -tol` for every generator of the
/// restricted module, i.e. the measure is supported in the prescribed set.
pub fn check_support(measure: &AtomicMeasure, module: &QuadraticModule, tol: f64) -> bool {
    measure
        .atoms()
        .iter()
        .all(|a| module.contains_point(a.point(), tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::MomentFunctional;
    use approx::assert_relative_eq;

    fn atomic(entries: &[(&[(VarId, f64)], f64)], vars: &[VarId]) -> AtomicMeasure {
        AtomicMeasure::new(
            VariableSet::from_ids(vars.iter().copied()),
            entries.iter().map(|(coords, w)| {
                (coords.iter().copied().collect::<BTreeMap<_, _>>(), *w)
            }),
        )
        .unwrap()
    }

    #[test]
    fn extract_dirac_at_zero() {
        let l = MomentFunctional::dirac_product(BTreeMap::new()).unwrap();
        let f = VariableSet::from_ids([1]);
        let measure = extract(&l, &f, 1, &ExtractionOptions::default()).unwrap();
        assert_eq!(measure.len(), 1);
        let atom = &measure.atoms()[0];
        assert_relative_eq!(atom.coordinate(1), 0.0, epsilon = 1e-12);
        assert_relative_eq!(atom.weight(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn extract_two_symmetric_atoms() {
        let source = atomic(&[(&[(1, -1.0)], 0.5), (&[(1, 1.0)], 0.5)], &[1]);
        let l = MomentFunctional::atomic_oracle(source.clone());
        let f = VariableSet::from_ids([1]);
        let measure = extract(&l, &f, 2, &ExtractionOptions::default()).unwrap();
        assert_eq!(measure.len(), 2);
        let mut coords: Vec<f64> = measure.atoms().iter().map(|a| a.coordinate(1)).collect();
        coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(coords[0], -1.0, epsilon = 1e-9);
        assert_relative_eq!(coords[1], 1.0, epsilon = 1e-9);
        for atom in measure.atoms() {
            assert_relative_eq!(atom.weight(), 0.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn extract_three_atoms_from_brute_force_moments() {
        // moments computed by brute force from the known 3-atom measure
        let source = atomic(
            &[(&[(1, 0.0)], 0.2), (&[(1, 1.0)], 0.3), (&[(1, 2.0)], 0.5)],
            &[1],
        );
        let l = MomentFunctional::atomic_oracle(source.clone());
        let f = VariableSet::from_ids([1]);
        let measure = extract(&l, &f, 3, &ExtractionOptions::default()).unwrap();
        assert_eq!(measure.len(), 3);
        let mut recovered: Vec<(f64, f64)> = measure
            .atoms()
            .iter()
            .map(|a| (a.coordinate(1), a.weight()))
            .collect();
        recovered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let expected = [(0.0, 0.2), (1.0, 0.3), (2.0, 0.5)];
        for ((x, w), (ex, ew)) in recovered.iter().zip(expected) {
            assert_relative_eq!(*x, ex, epsilon = 1e-6);
            assert_relative_eq!(*w, ew, epsilon = 1e-6);
        }
    }

    #[test]
    fn extract_bivariate_atoms() {
        let source = atomic(
            &[
                (&[(1, -1.0), (2, 0.5)], 0.25),
                (&[(1, 0.5), (2, -0.75)], 0.35),
                (&[(1, 1.25), (2, 1.0)], 0.40),
            ],
            &[1, 2],
        );
        let l = MomentFunctional::atomic_oracle(source.clone());
        let f = VariableSet::from_ids([1, 2]);
        let measure = extract(&l, &f, 3, &ExtractionOptions::default()).unwrap();
        assert_eq!(measure.len(), 3);
        for m in monomials_up_to(&f, 4) {
            assert_relative_eq!(measure.moment(&m), source.moment(&m), epsilon = 1e-8);
        }
    }

    #[test]
    fn extract_requires_flatness() {
        let source = atomic(&[(&[(1, -1.0)], 0.5), (&[(1, 1.0)], 0.5)], &[1]);
        let l = MomentFunctional::atomic_oracle(source);
        let f = VariableSet::from_ids([1]);
        let err = extract(&l, &f, 1, &ExtractionOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotFlat { order: 1, rank_n: 2, rank_n_minus_1: 1 }));
    }

    #[test]
    fn pushforward_merges_coincident_projections() {
        let mu = atomic(
            &[(&[(1, 0.0), (2, 0.0)], 0.5), (&[(1, 0.0), (2, 1.0)], 0.5)],
            &[1, 2],
        );
        let projected = mu.pushforward(&VariableSet::from_ids([1])).unwrap();
        assert_eq!(projected.len(), 1);
        assert_relative_eq!(projected.atoms()[0].weight(), 1.0);
        assert_relative_eq!(projected.atoms()[0].coordinate(1), 0.0);
    }

    #[test]
    fn pushforward_keeps_distinct_projections() {
        let mu = atomic(
            &[(&[(1, -1.0), (2, 5.0)], 0.5), (&[(1, 1.0), (2, 5.0)], 0.5)],
            &[1, 2],
        );
        let projected = mu.pushforward(&VariableSet::from_ids([1])).unwrap();
        assert_eq!(projected.len(), 2);
        // identity projection is the measure itself
        let same = mu.pushforward(mu.variables()).unwrap();
        assert_eq!(same, mu);
    }

    #[test]
    fn pushforward_rejects_foreign_sets() {
        let mu = atomic(&[(&[(1, 0.0)], 1.0)], &[1]);
        assert!(matches!(
            mu.pushforward(&VariableSet::from_ids([2])),
            Err(Error::NotASubset { .. })
        ));
    }

    #[test]
    fn pushforward_commutes_with_moments() {
        let mu = atomic(
            &[
                (&[(1, 0.3), (2, -1.4), (3, 0.9)], 0.25),
                (&[(1, -0.8), (2, 0.1), (3, 1.7)], 0.45),
                (&[(1, 1.1), (2, 0.6), (3, -0.2)], 0.30),
            ],
            &[1, 2, 3],
        );
        let f = VariableSet::from_ids([1, 3]);
        let projected = mu.pushforward(&f).unwrap();
        for m in monomials_up_to(&f, 4) {
            assert_relative_eq!(projected.moment(&m), mu.moment(&m), epsilon = 1e-12);
        }
    }

    #[test]
    fn pushforward_is_functorial() {
        let mu = atomic(
            &[
                (&[(1, 0.3), (2, -1.4), (3, 0.9)], 0.5),
                (&[(1, -0.8), (2, 0.1), (3, 1.7)], 0.5),
            ],
            &[1, 2, 3],
        );
        let mid = VariableSet::from_ids([1, 2]);
        let small = VariableSet::from_ids([1]);
        let two_step = mu.pushforward(&mid).unwrap().pushforward(&small).unwrap();
        let one_step = mu.pushforward(&small).unwrap();
        assert_eq!(two_step, one_step);
    }

    #[test]
    fn support_check_on_boundary_and_outside() {
        let inside = atomic(&[(&[(1, -1.0)], 0.5), (&[(1, 1.0)], 0.5)], &[1]);
        let ball = QuadraticModule::new(vec![Polynomial::parse("1 - x1^2").unwrap()]);
        assert!(check_support(&inside, &ball, 1e-9));

        let outside = atomic(&[(&[(1, 2.0)], 1.0)], &[1]);
        assert!(!check_support(&outside, &ball, 1e-9));
        assert!(check_support(&outside, &QuadraticModule::empty(), 0.0));
    }

    #[test]
    fn weights_must_be_a_probability_vector() {
        let bad = AtomicMeasure::new(
            VariableSet::from_ids([1]),
            [(BTreeMap::from([(1, 0.0)]), 0.7)],
        );
        assert!(bad.is_err());
        let negative = AtomicMeasure::new(
            VariableSet::from_ids([1]),
            [
                (BTreeMap::from([(1, 0.0)]), 1.5),
                (BTreeMap::from([(1, 1.0)]), -0.5),
            ],
        );
        assert!(negative.is_err());
    }

    #[test]
    fn measure_json_round_trip() {
        let mu = atomic(
            &[(&[(1, -1.0), (2, 0.0)], 0.5), (&[(1, 1.0), (2, 0.25)], 0.5)],
            &[1, 2],
        );
        let json = serde_json::to_string(&mu).unwrap();
        assert!(json.contains("\"variables\":[1,2]"));
        let back: AtomicMeasure = serde_json::from_str(&json).unwrap();
        assert_eq!(back, mu);
    }
}
