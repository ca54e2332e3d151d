//! Pseudo-spectral Galerkin simulation of two-dimensional couple-stress
//! convection in a saturated porous layer with local thermal
//! non-equilibrium, together with runtime certificates for the a priori
//! energy estimates of the system.
//!
//! The state is `(psi, theta, phi)`: stream function, fluid temperature and
//! solid temperature perturbations on the rectangle `(0, a) x (0, 1)`, all
//! vanishing on the boundary and expanded in products of sines.
//!
//! ```no_run
//! use ltne::{Domain, Dynamics, ModelOptions, Params, State};
//! use ltne::integrator::{run, RunOptions, StepperConfig};
//!
//! let dom = Domain::new(1.0, 16, 16)?;
//! let model = Dynamics::new(Params::default(), dom, ModelOptions::default())?;
//! let mut s0 = State::zeros(&dom);
//! s0.theta.set(1, 1, 1.0)?;
//! let traj = run(&model, &s0, &StepperConfig::default(), &mut (), &RunOptions::default())?;
//! println!("E_Y(t_end) = {}", model.energy(&traj.final_state));
//! # Ok::<(), ltne::Error>(())
//! ```

pub mod certificates;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod params;
pub mod snapshot;
pub mod spectral;

pub use certificates::{CertificateConfig, CertificateConstants, CertificateSuite, TrajectoryRecord};
pub use config::{InitialCondition, RunConfig, SweepSpec};
pub use dynamics::{Dynamics, LinearOperator, ModelOptions, State, Tangent};
pub use error::{Error, Result};
pub use integrator::{Scheme, Stepper, StepperConfig, Trajectory};
pub use params::{nondimensionalize, poincare_constant, Domain, Params, PhysicalParams};
pub use spectral::{Basis, GridField, SpectralField};
