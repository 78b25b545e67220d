//! Randomised check that configurations satisfying the order-2 criterion
//! have a contracting second-moment matrix.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::rng::{StreamRng, StreamSeeder};
use crate::stability::{matrix_b, order2_stable, spectral_radius, MomentSummary};

const CHUNK: usize = 1024;
/// Rejection attempts per sample before giving up on it.
const MAX_ATTEMPTS: u32 = 100_000;

/// Coefficient moments of one random configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentConfig {
    pub e_theta0: f64,
    pub v_theta0: f64,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl MomentConfig {
    pub fn summary(&self) -> MomentSummary {
        MomentSummary::from_moments(
            self.e_theta0,
            self.v_theta0,
            self.means.iter().sum(),
            self.variances.iter().sum(),
        )
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Draws one configuration with `informers` terms: E[θ₀] ~ U(−1, 1),
/// V[θ₀] ~ U[0, 1 − E[θ₀]²), informer means log-uniform on [1e−4, 4/√I] and
/// variances log-uniform on [1e−6, 4/I].
pub fn random_config<R: Rng>(informers: usize, rng: &mut R) -> MomentConfig {
    let e_theta0 = rng.random_range(-1.0..1.0);
    let v_theta0 = rng.random::<f64>() * (1.0 - e_theta0 * e_theta0);
    let i = informers as f64;
    let means = (0..informers)
        .map(|_| log_uniform(rng, 1e-4, 4.0 / i.sqrt()))
        .collect();
    let variances = (0..informers)
        .map(|_| log_uniform(rng, 1e-6, 4.0 / i))
        .collect();
    MomentConfig {
        e_theta0,
        v_theta0,
        means,
        variances,
    }
}

/// Rejection-samples `random_config` until the order-2 criterion holds.
pub fn random_stable_config<R: Rng>(informers: usize, rng: &mut R) -> Option<MomentConfig> {
    (0..MAX_ATTEMPTS)
        .map(|_| random_config(informers, rng))
        .find(|c| order2_stable(&c.summary()).stable)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub informers: usize,
    pub samples: usize,
    pub passed: usize,
    /// Samples for which the generator found no criterion-satisfying draw.
    pub exhausted: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl SweepRow {
    pub fn pass_rate(&self) -> f64 {
        if self.samples == 0 {
            1.0
        } else {
            self.passed as f64 / self.samples as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub config: MomentConfig,
    pub rho_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn all_passed(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.passed == r.samples && r.exhausted == 0)
    }
}

#[derive(Default)]
struct Tally {
    passed: usize,
    exhausted: usize,
    counterexamples: Vec<Counterexample>,
}

/// For each I in 1..=max_informers, checks ρ(B) < 1 on `samples_per_informer`
/// criterion-satisfying configurations. Sample k of I uses stream (k, I).
pub fn run_sufficiency_sweep(
    max_informers: usize,
    samples_per_informer: usize,
    seed: u64,
) -> SweepReport {
    let seeder = StreamSeeder::new(seed);
    let rows = (1..=max_informers)
        .map(|informers| {
            let chunks = samples_per_informer.div_ceil(CHUNK);
            let tallies: Vec<Tally> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut tally = Tally::default();
                    for k in c * CHUNK..((c + 1) * CHUNK).min(samples_per_informer) {
                        let mut rng: StreamRng = seeder.stream(k as u64, informers as u32);
                        let Some(config) = random_stable_config(informers, &mut rng) else {
                            tally.exhausted += 1;
                            continue;
                        };
                        let rho_b =
                            spectral_radius(&matrix_b(&config.summary())).unwrap_or(f64::NAN);
                        if rho_b < 1.0 {
                            tally.passed += 1;
                        } else {
                            tally.counterexamples.push(Counterexample { config, rho_b });
                        }
                    }
                    tally
                })
                .collect();
            let mut row = SweepRow {
                informers,
                samples: samples_per_informer,
                passed: 0,
                exhausted: 0,
                counterexamples: Vec::new(),
            };
            for t in tallies {
                row.passed += t.passed;
                row.exhausted += t.exhausted;
                row.counterexamples.extend(t.counterexamples);
            }
            row
        })
        .collect();
    SweepReport { seed, rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_respects_ranges() {
        let mut rng = StreamSeeder::new(3).stream(0, 0);
        for i in 1..=6 {
            for _ in 0..200 {
                let c = random_config(i, &mut rng);
                assert!(c.e_theta0 > -1.0 && c.e_theta0 < 1.0);
                assert!(c.v_theta0 >= 0.0 && c.v_theta0 < 1.0 - c.e_theta0 * c.e_theta0);
                assert_eq!(c.means.len(), i);
                assert!(c.means.iter().all(|&m| (1e-4..=4.0).contains(&m)));
                assert!(c.variances.iter().all(|&v| (1e-6..=4.0).contains(&v)));
            }
        }
    }

    #[test]
    fn stable_generator_only_returns_stable_configs() {
        let mut rng = StreamSeeder::new(4).stream(0, 0);
        for i in 1..=4 {
            for _ in 0..100 {
                let c = random_stable_config(i, &mut rng).unwrap();
                assert!(order2_stable(&c.summary()).stable);
            }
        }
    }

    #[test]
    fn small_sweep_passes_and_is_deterministic() {
        let a = run_sufficiency_sweep(3, 2000, 11);
        assert!(a.all_passed(), "{:?}", a.rows);
        assert_eq!(a, run_sufficiency_sweep(3, 2000, 11));
    }

    #[test]
    fn empty_sweep() {
        let r = run_sufficiency_sweep(2, 0, 1);
        assert_eq!(r.rows.len(), 2);
        assert!(r
            .rows
            .iter()
            .all(|row| row.samples == 0 && row.pass_rate() == 1.0));
    }
}
