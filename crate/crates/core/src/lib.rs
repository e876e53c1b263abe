//! Decides, at desk scale, whether a linear functional on the polynomial
//! algebra in countably many variables admits a representing measure.
//!
//! The route is the reduction to finitely many variables: solve classical
//! truncated moment problems on every materialized coordinate subalgebra,
//! assemble the per-subalgebra measures into an exact projective family, and
//! certify tightness of the family with a product-box compact. On top of the
//! construction sit the determinacy diagnostics (Carleman partial sums,
//! syntactic Archimedean bounds, and the split between bounded and
//! determinate variables).
//!
//! Module map:
//! - [`algebra`]: sparse multi-indices, polynomials, variable sets, quadratic
//!   modules and their syntactic restriction.
//! - [`functional`]: moment sources and Riesz evaluation.
//! - [`matrices`]: moment and localizing matrices, PSD and flatness tests.
//! - [`extraction`]: atomic measures from flat data, pushforward, exactness.
//! - [`projective`]: marginal families, cylinder sets, sealing, sampling.
//! - [`asymptotics`]: Carleman/Archimedean diagnostics and tightness.

pub mod algebra;
pub mod asymptotics;
pub mod error;
pub mod extraction;
pub mod functional;
pub mod matrices;
pub mod projective;

pub use algebra::{
    monomials_up_to, MultiIndex, Polynomial, QuadraticModule, VarId, VariableSet,
};
pub use asymptotics::{
    archimedean, carleman, partial_split, suggest_schedule, tightness, ArchimedeanReport,
    ArchimedeanVerdict, CarlemanReport, CarlemanVerdict, ScheduleSuggestion, SplitReport,
    TightnessCertificate, TightnessVerdict, DEFAULT_CARLEMAN_THRESHOLD,
};
pub use error::{Error, Result};
pub use extraction::{
    check_exactness, check_support, extract, extract_best, moment_residual, AtomicMeasure,
    ExactnessReport, ExactnessVerdict, ExtractionOptions,
};
pub use functional::{Component, FunctionalDescriptor, MomentFunctional, Source};
pub use matrices::{
    flatness, moment_matrix, numerical_rank, psd_check, FlatnessReport, MomentMatrix, PsdReport,
    PsdVerdict, DEFAULT_PSD_TOL, DEFAULT_RANK_TOL,
};
pub use projective::{
    CylinderMeasureValue, CylinderSet, Marginal, Predicate, ProductMarginal, ProjectiveFamily,
    Rel, SealedFamily,
};
