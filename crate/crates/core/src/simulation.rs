//! Monte Carlo simulation of the particle recurrence and a full-swarm runner.
//!
//! `simulate_recurrence` drives many independent copies of the
//! one-dimensional recurrence
//!
//! ```text
//! x(t+1) = x(t)(1 + θ₀) − θ₀x(t−1) + Σθ_ι(ζ_ι(t) − x(t))
//! ```
//!
//! with fresh coefficient draws at every step and reports cross-run moments
//! per step. Runs are split into fixed-size chunks, simulated in parallel
//! and merged in a fixed pairwise order, so results depend only on the seed.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::NipsoSpec;
use crate::error::{Error, Result};
use crate::fixed_points::FixedPoint;
use crate::rng::{StreamRng, StreamSeeder};
use crate::variants::CpsoParams;

/// |x| beyond which a run is classified as diverged and stopped.
pub const DIVERGENCE_GUARD: f64 = 1e15;

/// Runs per parallel work unit. Fixed so the merge order never depends on the
/// number of worker threads.
const CHUNK_RUNS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    /// x(0) ~ U(x0_lo, x0_hi); equal bounds give a fixed start.
    pub x0_lo: f64,
    pub x0_hi: f64,
    /// v(0), so that x(−1) = x(0) − v(0).
    pub v0: f64,
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self {
            x0_lo: -5.0,
            x0_hi: 5.0,
            v0: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecurrenceRun {
    pub spec: NipsoSpec,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
    pub init: InitialCondition,
}

impl RecurrenceRun {
    pub fn new(spec: NipsoSpec, steps: usize, runs: usize, seed: u64) -> Self {
        Self {
            spec,
            steps,
            runs,
            seed,
            init: InitialCondition::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidParameter("steps must be >= 2".into()));
        }
        if self.runs < 1 {
            return Err(Error::InvalidParameter("runs must be >= 1".into()));
        }
        let InitialCondition { x0_lo, x0_hi, v0 } = self.init;
        if !(x0_lo.is_finite() && x0_hi.is_finite() && v0.is_finite()) || x0_lo > x0_hi {
            return Err(Error::InvalidParameter(format!(
                "invalid initial condition {:?}",
                self.init
            )));
        }
        Ok(())
    }
}

/// Cross-run moment estimates per step.
///
/// Index `t` holds statistics of x(t) for t = 0..steps. A run that crosses
/// [`DIVERGENCE_GUARD`] stops contributing from that step on; steps with no
/// surviving run hold NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTrajectory {
    pub mean_series: Vec<f64>,
    pub var_series: Vec<f64>,
    /// Surviving runs per step.
    pub count_series: Vec<u64>,
    pub diverged: bool,
    pub diverged_runs: usize,
    pub runs: usize,
    /// Average of `mean_series` over the tail window.
    pub tail_mean: f64,
    /// Standard error of `tail_mean`, from the spread of per-run tail averages.
    pub tail_mean_se: f64,
    /// Average of `var_series` over the tail window.
    pub tail_var: f64,
}

impl MomentTrajectory {
    pub fn divergence_rate(&self) -> f64 {
        self.diverged_runs as f64 / self.runs as f64
    }
}

/// First index of the tail window: the final half of the trajectory.
pub fn tail_start(steps: usize) -> usize {
    steps / 2
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let count = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * nb / count as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / count as f64,
        }
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    fn variance(&self) -> f64 {
        match self.count {
            0 => f64::NAN,
            1 => 0.0,
            n => (self.m2 / (n - 1) as f64).max(0.0),
        }
    }
}

/// Which algebraic form of the update to iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateForm {
    /// x(t+1) = x(t)(1 + θ₀) − θ₀x(t−1) + Σθ_ι(ζ_ι − x(t)).
    SecondOrder,
    /// v(t+1) = θ₀v(t) + Σθ_ι(ζ_ι − x(t)); x(t+1) = x(t) + v(t+1).
    Velocity,
}

/// Per-run random streams: initial condition, θ₀, then one stream per
/// coefficient and one per informer.
struct RunStreams {
    init: StreamRng,
    theta0: StreamRng,
    coefficients: Vec<StreamRng>,
    informers: Vec<StreamRng>,
}

impl RunStreams {
    fn new(seeder: &StreamSeeder, run: u64, informers: usize) -> Self {
        let i = informers as u32;
        Self {
            init: seeder.stream(run, 0),
            theta0: seeder.stream(run, 1),
            coefficients: (0..i).map(|k| seeder.stream(run, 2 + k)).collect(),
            informers: (0..i).map(|k| seeder.stream(run, 2 + i + k)).collect(),
        }
    }
}

/// Iterates one run, calling `visit(t, x(t))` for t = 0..steps. Returns the
/// step at which the run diverged, if it did.
fn run_path(
    spec: &NipsoSpec,
    seeder: &StreamSeeder,
    run: u64,
    init: &InitialCondition,
    steps: usize,
    form: UpdateForm,
    mut visit: impl FnMut(usize, f64),
) -> Option<usize> {
    let mut rng = RunStreams::new(seeder, run, spec.informer_count());
    let x0 = if init.x0_hi > init.x0_lo {
        rng.init.random_range(init.x0_lo..init.x0_hi)
    } else {
        init.x0_lo
    };
    let mut x = x0;
    let mut x_prev = x0 - init.v0;
    let mut v = init.v0;
    visit(0, x);
    for t in 1..steps {
        let theta0 = spec.theta0().sample(&mut rng.theta0);
        let mut pull = 0.0;
        for (k, term) in spec.terms().iter().enumerate() {
            let theta = term.coefficient.sample(&mut rng.coefficients[k]);
            let zeta = term.informer.sample((t - 1) as u64, &mut rng.informers[k]);
            pull += theta * (zeta - x);
        }
        let next = match form {
            UpdateForm::SecondOrder => x * (1.0 + theta0) - theta0 * x_prev + pull,
            UpdateForm::Velocity => {
                v = theta0 * v + pull;
                x + v
            }
        };
        x_prev = x;
        x = next;
        if !x.is_finite() || x.abs() > DIVERGENCE_GUARD {
            return Some(t);
        }
        visit(t, x);
    }
    None
}

/// A single trajectory x(0..steps) of run index `run`, truncated at divergence.
pub fn simulate_path(run: &RecurrenceRun, index: u64, form: UpdateForm) -> Vec<f64> {
    let mut path = Vec::with_capacity(run.steps);
    run_path(
        &run.spec,
        &StreamSeeder::new(run.seed),
        index,
        &run.init,
        run.steps,
        form,
        |_, x| path.push(x),
    );
    path
}

struct ChunkStats {
    per_step: Vec<Welford>,
    /// Per-run tail averages of runs that never diverged.
    tail: Welford,
    diverged: usize,
}

impl ChunkStats {
    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.per_step.iter_mut().zip(other.per_step) {
            *a = a.merge(b);
        }
        self.tail = self.tail.merge(other.tail);
        self.diverged += other.diverged;
        self
    }
}

fn pairwise_merge(mut parts: Vec<ChunkStats>) -> ChunkStats {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().expect("at least one chunk")
}

pub fn simulate_recurrence(run: &RecurrenceRun) -> Result<MomentTrajectory> {
    run.validate()?;
    let seeder = StreamSeeder::new(run.seed);
    let steps = run.steps;
    let tail_from = tail_start(steps);
    let chunks = run.runs.div_ceil(CHUNK_RUNS);

    let parts: Vec<ChunkStats> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stats = ChunkStats {
                per_step: vec![Welford::default(); steps],
                tail: Welford::default(),
                diverged: 0,
            };
            let end = ((c + 1) * CHUNK_RUNS).min(run.runs);
            for r in c * CHUNK_RUNS..end {
                let mut tail_sum = 0.0;
                let diverged = run_path(
                    &run.spec,
                    &seeder,
                    r as u64,
                    &run.init,
                    steps,
                    UpdateForm::SecondOrder,
                    |t, x| {
                        stats.per_step[t].push(x);
                        if t >= tail_from {
                            tail_sum += x;
                        }
                    },
                );
                match diverged {
                    Some(_) => stats.diverged += 1,
                    None => stats.tail.push(tail_sum / (steps - tail_from) as f64),
                }
            }
            stats
        })
        .collect();
    let merged = pairwise_merge(parts);

    let mean_series: Vec<f64> = merged.per_step.iter().map(Welford::mean).collect();
    let var_series: Vec<f64> = merged.per_step.iter().map(Welford::variance).collect();
    let count_series = merged.per_step.iter().map(|w| w.count).collect();
    let tail_len = (steps - tail_from) as f64;
    let tail_mean = mean_series[tail_from..].iter().sum::<f64>() / tail_len;
    let tail_var = var_series[tail_from..].iter().sum::<f64>() / tail_len;
    let tail_mean_se = if merged.tail.count > 1 {
        (merged.tail.variance() / merged.tail.count as f64).sqrt()
    } else {
        f64::NAN
    };

    Ok(MomentTrajectory {
        mean_series,
        var_series,
        count_series,
        diverged: merged.diverged > 0,
        diverged_runs: merged.diverged,
        runs: run.runs,
        tail_mean,
        tail_mean_se,
        tail_var,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed |tail_mean − E_x| in standard errors of the tail mean.
    pub mean_se_multiple: f64,
    /// Allowed |tail_var − V_x| relative to V_x.
    pub var_relative: f64,
    /// Absolute slack added to both checks, for deterministic trajectories.
    pub absolute_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mean_se_multiple: 3.0,
            var_relative: 0.05,
            absolute_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    pub mean_pass: bool,
    pub var_pass: bool,
    pub mean_error: f64,
    /// |tail_var − V_x| / V_x (absolute error when V_x = 0).
    pub var_error: f64,
}

impl ConvergenceVerdict {
    pub fn passed(&self) -> bool {
        self.mean_pass && self.var_pass
    }
}

pub fn convergence_verdict(
    traj: &MomentTrajectory,
    predicted: &FixedPoint,
    tol: &Tolerances,
) -> ConvergenceVerdict {
    let mean_error = (traj.tail_mean - predicted.mean).abs();
    let var_abs = (traj.tail_var - predicted.variance).abs();
    let var_error = if predicted.variance > 0.0 {
        var_abs / predicted.variance
    } else {
        var_abs
    };
    if traj.diverged {
        return ConvergenceVerdict {
            mean_pass: false,
            var_pass: false,
            mean_error,
            var_error,
        };
    }
    let se = if traj.tail_mean_se.is_finite() {
        traj.tail_mean_se
    } else {
        0.0
    };
    ConvergenceVerdict {
        mean_pass: mean_error <= tol.mean_se_multiple * se + tol.absolute_floor,
        var_pass: var_abs <= tol.var_relative * predicted.variance + tol.absolute_floor,
        mean_error,
        var_error,
    }
}

/// Benchmark objectives (minimisation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Sphere,
    Rastrigin,
    Rosenbrock,
    Absolute,
}

impl Objective {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            Self::Sphere => x.iter().map(|v| v * v).sum(),
            Self::Rastrigin => x
                .iter()
                .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos() + 10.0)
                .sum(),
            Self::Rosenbrock => x
                .windows(2)
                .map(|p| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2))
                .sum(),
            Self::Absolute => x.iter().map(|v| v.abs()).sum(),
        }
    }

    /// Initialisation hypercube `[lo, hi]^d`.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Self::Sphere | Self::Absolute => (-100.0, 100.0),
            Self::Rastrigin => (-5.12, 5.12),
            Self::Rosenbrock => (-30.0, 30.0),
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sphere" => Ok(Self::Sphere),
            "rastrigin" => Ok(Self::Rastrigin),
            "rosenbrock" => Ok(Self::Rosenbrock),
            "absolute" | "absolute-value" | "abs" => Ok(Self::Absolute),
            other => Err(Error::InvalidParameter(format!(
                "unknown objective `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sphere => "sphere",
            Self::Rastrigin => "rastrigin",
            Self::Rosenbrock => "rosenbrock",
            Self::Absolute => "absolute",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Every particle informs every other.
    Global,
    /// Particle i is informed by i − 1, i and i + 1 (cyclically).
    Ring,
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "global" | "gbest" => Ok(Self::Global),
            "ring" | "lbest" => Ok(Self::Ring),
            other => Err(Error::InvalidParameter(format!(
                "unknown topology `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwarmRun {
    pub objective: Objective,
    pub swarm_size: usize,
    pub dimensions: usize,
    pub topology: Topology,
    pub params: CpsoParams,
    pub iterations: usize,
    pub seed: u64,
    /// Overrides the objective's default initialisation hypercube.
    pub bounds: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    /// Average ‖x_i(t) − x_i(t−1)‖ over the swarm.
    pub mean_step: f64,
    pub best_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SwarmTrace {
    /// Width `hi − lo` of the initialisation hypercube.
    pub initial_width: f64,
    pub iterations: Vec<IterationStats>,
}

impl SwarmTrace {
    /// Median step size over the final `fraction` of iterations.
    pub fn tail_median_step(&self, fraction: f64) -> f64 {
        let n = self.iterations.len();
        let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n.max(1));
        let mut tail: Vec<f64> = self.iterations[n - k..]
            .iter()
            .map(|s| s.mean_step)
            .collect();
        tail.sort_by(f64::total_cmp);
        tail[tail.len() / 2]
    }
}

/// Inertia-weight PSO state (personal and neighbourhood bests included).
pub struct Swarm {
    objective: Objective,
    topology: Topology,
    params: CpsoParams,
    dims: usize,
    positions: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
    personal_best: Vec<Vec<f64>>,
    personal_value: Vec<f64>,
    neighbourhood_best: Vec<Vec<f64>>,
    neighbourhood_value: Vec<f64>,
    rng: StreamRng,
    iteration: usize,
}

impl Swarm {
    pub fn new(run: &SwarmRun) -> Result<Self> {
        if run.swarm_size < 2 {
            return Err(Error::InvalidParameter("swarm size must be >= 2".into()));
        }
        if run.dimensions < 1 {
            return Err(Error::InvalidParameter("dimensions must be >= 1".into()));
        }
        let (lo, hi) = run.bounds.unwrap_or_else(|| run.objective.bounds());
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "empty hypercube [{lo}, {hi}]"
            )));
        }
        let mut rng = StreamSeeder::new(run.seed).stream(0, 0);
        let positions: Vec<Vec<f64>> = (0..run.swarm_size)
            .map(|_| {
                (0..run.dimensions)
                    .map(|_| rng.random_range(lo..hi))
                    .collect()
            })
            .collect();
        let values: Vec<f64> = positions
            .iter()
            .map(|x| run.objective.evaluate(x))
            .collect();
        Ok(Self {
            objective: run.objective,
            topology: run.topology,
            params: run.params,
            dims: run.dimensions,
            velocities: vec![vec![0.0; run.dimensions]; run.swarm_size],
            personal_best: positions.clone(),
            personal_value: values.clone(),
            neighbourhood_best: positions.clone(),
            neighbourhood_value: values,
            positions,
            rng: StreamSeeder::new(run.seed).stream(0, 1),
            iteration: 0,
        })
    }

    /// Indices of the particles whose neighbourhood contains particle `i`.
    fn informed_by(&self, i: usize) -> Vec<usize> {
        let n = self.positions.len();
        match self.topology {
            Topology::Global => (0..n).collect(),
            Topology::Ring => {
                let mut v = vec![(i + n - 1) % n, i, (i + 1) % n];
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }

    /// Best updates followed by one velocity/position update of every particle.
    pub fn step(&mut self) -> IterationStats {
        let n = self.positions.len();
        for i in 0..n {
            let f = self.objective.evaluate(&self.positions[i]);
            if f < self.personal_value[i] {
                self.personal_value[i] = f;
                self.personal_best[i].clone_from(&self.positions[i]);
            }
            for j in self.informed_by(i) {
                if self.personal_value[i] < self.neighbourhood_value[j] {
                    self.neighbourhood_value[j] = self.personal_value[i];
                    self.neighbourhood_best[j].clone_from(&self.personal_best[i]);
                }
            }
        }

        let CpsoParams { w, c1, c2 } = self.params;
        let mut total_step = 0.0;
        for i in 0..n {
            let mut sq = 0.0;
            for k in 0..self.dims {
                let x = self.positions[i][k];
                let r1: f64 = self.rng.random();
                let r2: f64 = self.rng.random();
                let v = w * self.velocities[i][k]
                    + c1 * r1 * (self.personal_best[i][k] - x)
                    + c2 * r2 * (self.neighbourhood_best[i][k] - x);
                self.velocities[i][k] = v;
                self.positions[i][k] = x + v;
                sq += v * v;
            }
            total_step += sq.sqrt();
        }
        self.iteration += 1;
        IterationStats {
            iteration: self.iteration,
            mean_step: total_step / n as f64,
            best_value: self
                .personal_value
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn personal_best_values(&self) -> &[f64] {
        &self.personal_value
    }

    pub fn neighbourhood_best_values(&self) -> &[f64] {
        &self.neighbourhood_value
    }

    pub fn neighbourhood_best(&self, i: usize) -> &[f64] {
        &self.neighbourhood_best[i]
    }
}

pub fn run_swarm(run: &SwarmRun) -> Result<SwarmTrace> {
    let mut swarm = Swarm::new(run)?;
    let (lo, hi) = run.bounds.unwrap_or_else(|| run.objective.bounds());
    let iterations = (0..run.iterations).map(|_| swarm.step()).collect();
    Ok(SwarmTrace {
        initial_width: hi - lo,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{CoefficientDistribution as D, InformerProcess as Z};
    use crate::fixed_points::fixed_point;
    use crate::variants::cpso_spec;

    fn cpso_run(w: f64, c: f64, steps: usize, runs: usize, seed: u64) -> RecurrenceRun {
        let spec = cpso_spec(&CpsoParams { w, c1: c, c2: c }, (0.0, 1.0)).unwrap();
        RecurrenceRun::new(spec, steps, runs, seed)
    }

    #[test]
    fn deterministic_jump_to_informer() {
        let spec =
            NipsoSpec::new(D::constant(0.0), [(D::constant(1.0), Z::constant(3.0))]).unwrap();
        let mut run = RecurrenceRun::new(spec, 20, 7, 1);
        run.init = InitialCondition {
            x0_lo: 0.0,
            x0_hi: 0.0,
            v0: 0.0,
        };
        let traj = simulate_recurrence(&run).unwrap();
        assert_eq!(traj.mean_series[0], 0.0);
        assert!(traj.mean_series[1..].iter().all(|&m| m == 3.0));
        assert!(traj.var_series.iter().all(|&v| v == 0.0));
        assert_eq!(traj.tail_var, 0.0);
        assert!(!traj.diverged);
        let fp = FixedPoint {
            mean: 3.0,
            variance: 0.0,
            kappa1: 0.0,
            kappa2: 0.0,
            kappa3: 0.0,
            denominator: 1.0,
        };
        assert!(convergence_verdict(&traj, &fp, &Tolerances::default()).passed());
    }

    #[test]
    fn seed_determinism() {
        let a = simulate_recurrence(&cpso_run(0.7, 1.4, 300, 300, 42)).unwrap();
        let b = simulate_recurrence(&cpso_run(0.7, 1.4, 300, 300, 42)).unwrap();
        assert_eq!(a, b);
        let c = simulate_recurrence(&cpso_run(0.7, 1.4, 300, 300, 43)).unwrap();
        assert_ne!(a.mean_series, c.mean_series);
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let run = cpso_run(0.7, 1.4, 200, 700, 9);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_recurrence(&run).unwrap());
        assert_eq!(single, simulate_recurrence(&run).unwrap());
    }

    #[test]
    fn velocity_and_second_order_forms_agree() {
        let spec = NipsoSpec::new(
            D::gaussian(0.5, 0.02),
            [
                (D::scaled_uniform(1.2), Z::gaussian(1.0, 0.5)),
                (D::mixture(0.3, 1.5), Z::decaying(-2.0, 0.1, 3.0, 0.9)),
            ],
        )
        .unwrap();
        let mut run = RecurrenceRun::new(spec, 400, 1, 17);
        run.init.v0 = 0.7;
        for index in 0..5 {
            let a = simulate_path(&run, index, UpdateForm::SecondOrder);
            let b = simulate_path(&run, index, UpdateForm::Velocity);
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn stable_cpso_converges_to_fixed_point() {
        let run = cpso_run(0.7, 1.4, 2000, 2000, 3);
        let traj = simulate_recurrence(&run).unwrap();
        let fp = fixed_point(&run.spec).unwrap();
        let verdict = convergence_verdict(&traj, &fp, &Tolerances::default());
        assert!(
            verdict.passed(),
            "{verdict:?} tail ({}, {})",
            traj.tail_mean,
            traj.tail_var
        );
    }

    #[test]
    fn far_outside_region_diverges() {
        // Order-1 unstable: ψ = 4 > 2(1 + w) = 3.4.
        let traj = simulate_recurrence(&cpso_run(0.7, 4.0, 1000, 500, 5)).unwrap();
        assert!(traj.diverged);
        assert!(traj.divergence_rate() > 0.99);
        let fp = FixedPoint {
            mean: 0.5,
            variance: 1.0,
            kappa1: 0.0,
            kappa2: 0.0,
            kappa3: 0.0,
            denominator: 1.0,
        };
        let v = convergence_verdict(&traj, &fp, &Tolerances::default());
        assert!(!v.mean_pass && !v.var_pass);
    }

    #[test]
    fn extreme_initial_points_still_converge() {
        let mut run = cpso_run(0.7, 1.4, 2000, 1000, 8);
        run.init = InitialCondition {
            x0_lo: -1e3,
            x0_hi: 1e3,
            v0: 0.0,
        };
        let traj = simulate_recurrence(&run).unwrap();
        let fp = fixed_point(&run.spec).unwrap();
        assert!(convergence_verdict(&traj, &fp, &Tolerances::default()).passed());
    }

    #[test]
    fn rejects_invalid_runs() {
        assert!(simulate_recurrence(&cpso_run(0.7, 1.4, 1, 10, 0)).is_err());
        assert!(simulate_recurrence(&cpso_run(0.7, 1.4, 10, 0, 0)).is_err());
    }

    fn swarm_run(params: CpsoParams, n: usize, topology: Topology) -> SwarmRun {
        SwarmRun {
            objective: Objective::Sphere,
            swarm_size: n,
            dimensions: 3,
            topology,
            params,
            iterations: 50,
            seed: 1,
            bounds: None,
        }
    }

    #[test]
    fn two_particle_global_best_is_better_personal_best() {
        let run = swarm_run(
            CpsoParams {
                w: 0.7,
                c1: 1.4,
                c2: 1.4,
            },
            2,
            Topology::Global,
        );
        let mut swarm = Swarm::new(&run).unwrap();
        for _ in 0..100 {
            swarm.step();
            let best = swarm.personal_best_values()[0].min(swarm.personal_best_values()[1]);
            assert!(swarm.neighbourhood_best_values().iter().all(|&v| v == best));
        }
    }

    #[test]
    fn ring_neighbourhood_best_is_local() {
        let run = swarm_run(
            CpsoParams {
                w: 0.7,
                c1: 1.4,
                c2: 1.4,
            },
            8,
            Topology::Ring,
        );
        let mut swarm = Swarm::new(&run).unwrap();
        for _ in 0..30 {
            swarm.step();
            let pb = swarm.personal_best_values();
            for i in 0..8 {
                let local = pb[(i + 7) % 8].min(pb[i]).min(pb[(i + 1) % 8]);
                assert_eq!(swarm.neighbourhood_best_values()[i], local);
            }
        }
    }

    #[test]
    fn objectives_and_errors() {
        assert_eq!(Objective::Sphere.evaluate(&[1.0, 2.0]), 5.0);
        assert_eq!(Objective::Rastrigin.evaluate(&[0.0, 0.0]), 0.0);
        assert_eq!(Objective::Rosenbrock.evaluate(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(Objective::Absolute.evaluate(&[-1.0, 2.0]), 3.0);
        assert!("griewank".parse::<Objective>().is_err());
        let params = CpsoParams {
            w: 0.7,
            c1: 1.4,
            c2: 1.4,
        };
        assert!(Swarm::new(&swarm_run(params, 1, Topology::Global)).is_err());
    }

    #[test]
    fn swarm_is_seed_deterministic() {
        let run = swarm_run(
            CpsoParams {
                w: 0.7,
                c1: 1.4,
                c2: 1.4,
            },
            10,
            Topology::Ring,
        );
        let a = run_swarm(&run).unwrap();
        let b = run_swarm(&run).unwrap();
        assert_eq!(a.iterations, b.iterations);
    }
}
