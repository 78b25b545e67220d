//! Stability analysis for N-informer particle swarm updates.
//!
//! A particle following
//!
//! ```text
//! v(t+1) = θ₀v(t) + Σ θ_ι(ζ_ι(t) − x(t))
//! x(t+1) = x(t) + v(t+1)
//! ```
//!
//! with random coefficients θ and informers ζ is analysed through its first
//! and second moments. The crate provides coefficient distributions, exact
//! order-1 and order-2 stability criteria, moment fixed points, closed-form
//! bounds for common swarm variants, and Monte Carlo checks.

pub mod config;
pub mod dist;
pub mod eigen;
pub mod error;
pub mod fixed_points;
pub mod report;
pub mod rng;
pub mod simulation;
pub mod stability;
pub mod sweep;
pub mod variants;

pub use config::RunConfig;
pub use dist::{
    CoefficientDistribution, CustomDistribution, InformerProcess, InformerTerm, NipsoSpec,
};
pub use error::{Error, Result};
pub use fixed_points::{
    fixed_point, general_variance, mean_fixed_point, variance_fixed_point, FixedPoint,
};
pub use simulation::{
    convergence_verdict, run_swarm, simulate_recurrence, MomentTrajectory, Objective,
    RecurrenceRun, SwarmRun, SwarmTrace, Tolerances, Topology,
};
pub use stability::{
    full_report, order1_stable, order2_stable, summarize, MomentSummary, StabilityReport, Verdict,
};
pub use sweep::{run_sufficiency_sweep, SweepReport};
pub use variants::{CpsoParams, FipsParams, UpsoParams, Variant};
