//! Exact and semi-analytic reference values.

pub mod poisson;
pub mod singular_drift;
pub mod volterra;

pub use poisson::{central_moment_bruteforce, central_moment_poly, CentralMomentPoly};
pub use singular_drift::{
    exact_linear_mean, exact_linear_path_value, exact_linear_second_moment, mu_integral,
    SingularDriftParams,
};
pub use volterra::{
    apply_singular_operator, mittag_leffler_series, neumann_moment_curve,
    neumann_moment_curve_with, GridFunction, MomentCurve, MomentKind, NeumannOptions,
    NeumannReport, VolterraMomentParams, DEFAULT_MAX_TERMS, DEFAULT_TOL,
};
