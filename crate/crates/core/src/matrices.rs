//! Moment matrices, localizing matrices, PSD tests and flatness detection.
//!
//! For a functional `L` restricted to the variables `F`, the matrix of order
//! `n` with shift polynomial `g` has entries `L(x^u * x^v * g)` over the
//! graded monomial basis of degree <= n. With `g = 1` this is the plain
//! moment matrix; a representing measure supported where `g` is non-negative
//! forces every such matrix to be positive semidefinite, which is the finite
//! computable shadow of the representability hypothesis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{monomials_up_to, MultiIndex, Polynomial, VariableSet};
use crate::error::{Error, Result};
use crate::functional::MomentFunctional;

/// Default relative tolerance for PSD verdicts.
pub const DEFAULT_PSD_TOL: f64 = 1e-8;
/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct MomentMatrix {
    variables: VariableSet,
    order: u32,
    shift: Polynomial,
    basis: Vec<MultiIndex>,
    entries: DMatrix<f64>,
}

impl MomentMatrix {
    pub fn variables(&self) -> &VariableSet {
        &self.variables
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn shift(&self) -> &Polynomial {
        &self.shift
    }

    pub fn basis(&self) -> &[MultiIndex] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Eigenvalues of the symmetric matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eig: Vec<f64> = self
            .entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eig
    }

    /// CSV rendering with basis monomials as header row and column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("basis");
        for m in &self.basis {
            out.push(',');
            out.push_str(&m.to_string());
        }
        out.push('\n');
        for (i, m) in self.basis.iter().enumerate() {
            out.push_str(&m.to_string());
            for j in 0..self.basis.len() {
                out.push(',');
                out.push_str(&format!("{}", self.entries[(i, j)]));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the order-`n` matrix for `L` on `set` with shift polynomial `g`
/// (`g = 1` gives the plain moment matrix). Each unordered entry pair is
/// computed once, so the matrix is exactly symmetric.
pub fn moment_matrix(
    l: &MomentFunctional,
    set: &VariableSet,
    n: u32,
    g: &Polynomial,
) -> Result<MomentMatrix> {
    if !g.support().is_subset_of(set) {
        return Err(Error::NotASubset {
            child: g.support(),
            parent: set.clone(),
        });
    }
    if let Some(available) = l.available_degree() {
        let requested = 2 * n + g.degree();
        if requested > available {
            return Err(Error::DegreeExceeded { requested, available });
        }
    }
    let restricted = l.restrict(set);
    let basis = monomials_up_to(set, n);
    let dim = basis.len();
    let mut entries = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let pair = basis[i].mul(&basis[j]);
            let mut value = 0.0;
            for (index, coeff) in g.terms() {
                value += coeff * restricted.moment(&pair.mul(index))?;
            }
            entries[(i, j)] = value;
            entries[(j, i)] = value;
        }
    }
    Ok(MomentMatrix {
        variables: set.clone(),
        order: n,
        shift: g.clone(),
        basis,
        entries,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdVerdict {
    Psd,
    /// Smallest eigenvalue within the tolerance band around zero.
    Marginal,
    NotPsd,
}

impl PsdVerdict {
    /// Whether the matrix passes the PSD necessary condition (exact zeros and
    /// tolerance-band eigenvalues are accepted).
    pub fn accepts(self) -> bool {
        !matches!(self, PsdVerdict::NotPsd)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    /// Spectral norm (largest eigenvalue magnitude).
    pub matrix_norm: f64,
    pub verdict: PsdVerdict,
    pub tolerance_used: f64,
}

/// Exact symmetric eigendecomposition check: the verdict is `NotPsd` when the
/// smallest eigenvalue is below `-tol * max(1, norm)` and `Marginal` when it
/// lies within that band around zero.
pub fn psd_check(matrix: &MomentMatrix, tol: f64) -> PsdReport {
    let eig = matrix.eigenvalues();
    let min = eig.first().copied().unwrap_or(0.0);
    let norm = eig.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let band = tol * norm.max(1.0);
    let verdict = if min < -band {
        PsdVerdict::NotPsd
    } else if min < band {
        PsdVerdict::Marginal
    } else {
        PsdVerdict::Psd
    };
    PsdReport {
        min_eigenvalue: min,
        matrix_norm: norm,
        verdict,
        tolerance_used: tol,
    }
}

/// Eigenvalue-count rank at threshold `tol * max(1, spectral norm)`,
/// evaluated on the diagonally scaled matrix `D^{-1/2} M D^{-1/2}`.
///
/// The congruence preserves rank exactly while flattening the growth of the
/// diagonal (moments of high degree dominate the raw spectral norm), so a
/// small cluster eigenvalue is not swallowed by the threshold. On raw
/// matrices the reading can even be non-monotone across nested orders.
pub fn numerical_rank(matrix: &MomentMatrix, tol: f64) -> usize {
    let m = &matrix.entries;
    let dim = m.nrows();
    let max_diag = (0..dim).fold(0.0f64, |acc, i| acc.max(m[(i, i)]));
    let floor = (max_diag * 1e-16).max(1e-300);
    let scale: Vec<f64> = (0..dim).map(|i| m[(i, i)].max(floor).sqrt()).collect();
    let scaled = DMatrix::from_fn(dim, dim, |i, j| m[(i, j)] / (scale[i] * scale[j]));
    let mut eig: Vec<f64> = scaled
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let norm = eig.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let threshold = tol * norm.max(1.0);
    eig.iter().filter(|x| x.abs() > threshold).count()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub order: u32,
    pub rank_n: usize,
    pub rank_n_minus_1: usize,
    pub is_flat: bool,
    pub rank_tolerance: f64,
}

/// Rank comparison of the order-`n` and order-`n-1` moment matrices. A flat
/// pair certifies an atomic representing measure for the truncated data with
/// `rank_n` atoms.
pub fn flatness(
    l: &MomentFunctional,
    set: &VariableSet,
    n: u32,
    rank_tol: f64,
) -> Result<FlatnessReport> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "flatness needs order n >= 1".into(),
        ));
    }
    let one = Polynomial::one();
    let m_n = moment_matrix(l, set, n, &one)?;
    let m_prev = moment_matrix(l, set, n - 1, &one)?;
    let rank_n = numerical_rank(&m_n, rank_tol);
    let rank_n_minus_1 = numerical_rank(&m_prev, rank_tol);
    Ok(FlatnessReport {
        order: n,
        rank_n,
        rank_n_minus_1,
        is_flat: rank_n == rank_n_minus_1,
        rank_tolerance: rank_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::VariableSet;
    use crate::extraction::AtomicMeasure;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn two_point() -> MomentFunctional {
        let measure = AtomicMeasure::new(
            VariableSet::from_ids([1]),
            [
                (BTreeMap::from([(1, -1.0)]), 0.5),
                (BTreeMap::from([(1, 1.0)]), 0.5),
            ],
        )
        .unwrap();
        MomentFunctional::atomic_oracle(measure)
    }

    #[test]
    fn dirac_moment_matrix() {
        let l = MomentFunctional::dirac_product(BTreeMap::new()).unwrap();
        let f = VariableSet::from_ids([1]);
        let m = moment_matrix(&l, &f, 1, &Polynomial::one()).unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.entries()[(0, 0)], 1.0);
        assert_eq!(m.entries()[(0, 1)], 0.0);
        assert_eq!(m.entries()[(1, 1)], 0.0);
    }

    #[test]
    fn two_point_moment_matrix_is_identity() {
        let f = VariableSet::from_ids([1]);
        let m = moment_matrix(&two_point(), &f, 1, &Polynomial::one()).unwrap();
        assert_eq!(m.entries(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn gaussian_order_two_matrix() {
        let l = MomentFunctional::gaussian_product(BTreeMap::new()).unwrap();
        let f = VariableSet::from_ids([1]);
        let m = moment_matrix(&l, &f, 2, &Polynomial::one()).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 3.0],
        );
        assert_eq!(m.entries(), &expected);
    }

    #[test]
    fn psd_check_reference_matrices() {
        let f = VariableSet::from_ids([1]);
        // [[1,0],[0,0]]: eigenvalues {0, 1}; min sits in the marginal band
        let l = MomentFunctional::dirac_product(BTreeMap::new()).unwrap();
        let m = moment_matrix(&l, &f, 1, &Polynomial::one()).unwrap();
        let report = psd_check(&m, DEFAULT_PSD_TOL);
        assert!(report.verdict.accepts());
        assert_eq!(report.verdict, PsdVerdict::Marginal);
        assert_relative_eq!(report.min_eigenvalue, 0.0, epsilon = 1e-14);

        // [[1,2],[2,1]] has eigenvalues 3 and -1
        let table = BTreeMap::from([
            (MultiIndex::one(), 1.0),
            (MultiIndex::single(1, 1), 2.0),
            (MultiIndex::single(1, 2), 1.0),
        ]);
        let l = MomentFunctional::table(table, 2).unwrap();
        let m = moment_matrix(&l, &f, 1, &Polynomial::one()).unwrap();
        let report = psd_check(&m, DEFAULT_PSD_TOL);
        assert_eq!(report.verdict, PsdVerdict::NotPsd);
        assert_relative_eq!(report.min_eigenvalue, -1.0, epsilon = 1e-12);
        assert_relative_eq!(report.matrix_norm, 3.0, epsilon = 1e-12);

        // identity: strictly PSD with min eigenvalue 1
        let report = psd_check(
            &moment_matrix(&two_point(), &f, 1, &Polynomial::one()).unwrap(),
            DEFAULT_PSD_TOL,
        );
        assert_eq!(report.verdict, PsdVerdict::Psd);
        assert_relative_eq!(report.min_eigenvalue, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn flatness_of_reference_sources() {
        let f = VariableSet::from_ids([1]);

        let dirac = MomentFunctional::dirac_product(BTreeMap::new()).unwrap();
        let report = flatness(&dirac, &f, 1, DEFAULT_RANK_TOL).unwrap();
        assert!(report.is_flat);
        assert_eq!((report.rank_n, report.rank_n_minus_1), (1, 1));

        let l = two_point();
        let report = flatness(&l, &f, 1, DEFAULT_RANK_TOL).unwrap();
        assert!(!report.is_flat);
        assert_eq!((report.rank_n, report.rank_n_minus_1), (2, 1));
        let report = flatness(&l, &f, 2, DEFAULT_RANK_TOL).unwrap();
        assert!(report.is_flat);
        assert_eq!((report.rank_n, report.rank_n_minus_1), (2, 2));

        // Gaussian Hankel matrices have full rank at every order
        let gaussian = MomentFunctional::gaussian_product(BTreeMap::new()).unwrap();
        for n in 1..=4 {
            let report = flatness(&gaussian, &f, n, DEFAULT_RANK_TOL).unwrap();
            assert!(!report.is_flat, "gaussian flat at order {n}");
            assert_eq!(report.rank_n, n as usize + 1);
        }
    }

    #[test]
    fn localizing_matrix_psd_on_supported_generator() {
        // atoms at +-1 satisfy 1 - x^2 >= 0, so the localizing matrix is PSD
        let f = VariableSet::from_ids([1]);
        let g = Polynomial::parse("1 - x1^2").unwrap();
        let m = moment_matrix(&two_point(), &f, 1, &g).unwrap();
        let report = psd_check(&m, DEFAULT_PSD_TOL);
        assert!(report.verdict.accepts());

        // an atom at 2 violates it and the localizing matrix picks that up
        let measure = AtomicMeasure::new(
            VariableSet::from_ids([1]),
            [(BTreeMap::from([(1, 2.0)]), 1.0)],
        )
        .unwrap();
        let l = MomentFunctional::atomic_oracle(measure);
        let m = moment_matrix(&l, &f, 1, &g).unwrap();
        assert_eq!(psd_check(&m, DEFAULT_PSD_TOL).verdict, PsdVerdict::NotPsd);
    }

    #[test]
    fn nesting_of_moment_matrices() {
        // M_n is the leading principal submatrix of M_{n+1} in the graded basis
        let l = MomentFunctional::gaussian_product(BTreeMap::new()).unwrap();
        let f = VariableSet::from_ids([1, 2]);
        let small = moment_matrix(&l, &f, 1, &Polynomial::one()).unwrap();
        let large = moment_matrix(&l, &f, 2, &Polynomial::one()).unwrap();
        for i in 0..small.dim() {
            for j in 0..small.dim() {
                assert_eq!(small.entries()[(i, j)], large.entries()[(i, j)]);
            }
        }
        assert_eq!(&large.basis()[..small.dim()], small.basis());
    }

    #[test]
    fn restriction_compatibility() {
        let l = MomentFunctional::gaussian_product(BTreeMap::from([(1, 1.0), (2, 2.0)])).unwrap();
        let small = VariableSet::from_ids([1]);
        let large = VariableSet::from_ids([1, 2]);
        let direct = moment_matrix(&l, &small, 2, &Polynomial::one()).unwrap();
        let via_restriction =
            moment_matrix(&l.restrict(&large), &small, 2, &Polynomial::one()).unwrap();
        assert_eq!(direct.entries(), via_restriction.entries());
    }

    #[test]
    fn degree_exceeded_for_short_tables() {
        let table = BTreeMap::from([(MultiIndex::one(), 1.0), (MultiIndex::single(1, 2), 1.0)]);
        let l = MomentFunctional::table(table, 2).unwrap();
        let f = VariableSet::from_ids([1]);
        let err = moment_matrix(&l, &f, 2, &Polynomial::one()).unwrap_err();
        assert!(matches!(err, Error::DegreeExceeded { requested: 4, available: 2 }));
    }

    #[test]
    fn shift_outside_variables_is_rejected() {
        let l = MomentFunctional::gaussian_product(BTreeMap::new()).unwrap();
        let f = VariableSet::from_ids([1]);
        let g = Polynomial::parse("1 - x2^2").unwrap();
        assert!(matches!(
            moment_matrix(&l, &f, 1, &g),
            Err(Error::NotASubset { .. })
        ));
    }

    #[test]
    fn csv_has_basis_headers() {
        let f = VariableSet::from_ids([1]);
        let m = moment_matrix(&two_point(), &f, 1, &Polynomial::one()).unwrap();
        let csv = m.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "basis,1,x1");
        assert_eq!(lines.next().unwrap(), "1,1,0");
        assert_eq!(lines.next().unwrap(), "x1,0,1");
    }
}
