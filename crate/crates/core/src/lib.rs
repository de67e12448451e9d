//! Lattice laboratory for the fractional p-Laplacian on Steiner symmetric
//! domains: two-point rearrangements, second eigenpairs, least energy nodal
//! solutions and nodal-set diagnostics.
//!
//! Numerical code is generic over [`scalar::Real`]; the aliases below fix
//! the scalar to `f64` or `f32`.

pub mod cli;
pub mod config;
mod descent;
pub mod eigensolver;
pub mod energy;
pub mod error;
pub mod grid;
pub mod inequalities;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod nehari;
pub mod nonlinearity;
pub mod pairs;
pub mod payne;
pub mod polarization;
pub mod quadrature;
pub mod scalar;

pub use config::{load_config, DomainSpec, ExperimentConfig, Shape};
pub use eigensolver::{first_eigenpair, rayleigh_curve, second_eigen_mu2, verify_second_eigen, EigenOptions, EigenReport};
pub use energy::{de_residual, dpairing, energy, gagliardo_p};
pub use error::{Error, Result};
pub use grid::GridFunction;
pub use io::{emit_results, Format};
pub use kernel::{build_kernel, KernelWeights};
pub use lattice::{make_steiner_domain, LatticeDomain, ReflectionParam, Variant, Window};
pub use nehari::{lens_minimize, lens_verify, nehari_ground_state, nehari_scale, NehariOptions, NehariReport};
pub use nonlinearity::Nonlinearity;
pub use payne::{run_payne_experiment, PayneOptions, PayneReport, SolutionKind};
pub use polarization::{equality_case, polarization_identities_check, polarization_pairing_deficit, polarize};
pub use scalar::Real;

pub type Grid64 = GridFunction<f64>;
pub type Grid32 = GridFunction<f32>;
pub type Domain64 = LatticeDomain<f64>;
pub type Domain32 = LatticeDomain<f32>;
pub type Window64 = Window<f64>;
pub type Window32 = Window<f32>;
pub type Kernel64 = KernelWeights<f64>;
pub type Kernel32 = KernelWeights<f32>;
pub type Nonlinearity64 = Nonlinearity<f64>;
pub type Nonlinearity32 = Nonlinearity<f32>;
