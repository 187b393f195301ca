//! Exact representation and analysis of multistep methods.

mod analysis;
mod parse;
mod registry;
mod spec;

pub use analysis::{
    analyze, characteristic_polynomials, defect_horizon, defects, is_irreducible, is_symmetric,
    lambda_matrix, order_analysis, rho_roots, root_condition, AnalysisReport, OrderCertificate,
    PolyPair, Root, RootCondition, ROOT_MODULUS_SLACK, ROOT_SEPARATION,
};
pub use parse::{method_document, parse_method};
pub use registry::{
    builtin, builtin_method, builtin_schemes, pc_m2, resolve_method, resolve_scheme, ResolveError, BUILTIN_NAMES,
};
pub use spec::{MethodError, MethodKind, MethodSpec, MethodWarning};
