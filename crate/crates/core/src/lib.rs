//! Bulk and edge observables of discretized random magnetic Schrödinger
//! operators, with the pure Landau Hamiltonian as an analytic reference.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bulk;
pub mod edge;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod landau;
pub mod model;
pub mod solve;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};

static SEQUENTIAL: std::sync::Once = std::sync::Once::new();

/// Dense kernels run single-threaded so results do not depend on the pool size;
/// parallelism lives one level up, over fibers and tasks.
pub(crate) fn sequential_kernels() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

pub use edge::{CutoffSpec, EdgeSystem};
pub use ensemble::{run_sweep, ObservableRegistry, SweepPlan, SweepTable};
pub use experiments::{run_experiment, Check, ExperimentConfig, ExperimentId, ExperimentOutput};
pub use model::{DisorderSpec, Grid, ModelParams};
pub use spectral::DistributionSpec;
