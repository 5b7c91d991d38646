//! Sparse symmetric linear-algebra kernels: CSR matrices, conjugate-gradient
//! solves, shift-invert Lanczos, metric operator norms, heat-semigroup
//! action, and the dense oracles that validate them.

pub mod cg;
pub mod csr;
pub mod dense;
pub mod heat;
pub mod lanczos;
pub mod opnorm;

pub use cg::{cg_solve, power_of_resolvent_apply};
pub use csr::{FnOp, LinOp, SparseOperator};
pub use heat::heat_apply;
pub use lanczos::lanczos_smallest;
pub use opnorm::{metric_opnorm, L2Metric, Metric, MetricNormProblem, SobolevMetric};
