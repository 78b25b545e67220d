//! CPSO, FIPS and UPSO expressed as N-informer specs, plus each variant's
//! closed-form order-1/order-2 criterion.

use serde::{Deserialize, Serialize};

use crate::dist::{CoefficientDistribution as Dist, InformerProcess, NipsoSpec};
use crate::error::{Error, Result};

/// Inertia-weight PSO: `v ← w·v + c₁r₁(y − x) + c₂r₂(ŷ − x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpsoParams {
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Fully informed PSO with acceleration `c_hat` shared by `n_size` neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FipsParams {
    pub w: f64,
    pub c_hat: f64,
    pub n_size: usize,
}

/// Unified PSO blending global-best and local-best updates with factor `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpsoParams {
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
    pub u: f64,
}

fn check_finite(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{name} must be finite, got {v}"
            )));
        }
    }
    Ok(())
}

/// Two informers: personal best `y` weighted by c₁r₁ and neighbourhood best
/// `ŷ` weighted by c₂r₂.
pub fn cpso_spec(p: &CpsoParams, informer_means: (f64, f64)) -> Result<NipsoSpec> {
    check_finite(&[("w", p.w), ("c1", p.c1), ("c2", p.c2)])?;
    NipsoSpec::new(
        Dist::constant(p.w),
        [
            (
                Dist::scaled_uniform(p.c1),
                InformerProcess::constant(informer_means.0),
            ),
            (
                Dist::scaled_uniform(p.c2),
                InformerProcess::constant(informer_means.1),
            ),
        ],
    )
}

/// Right-hand side of `0 < c₁ + c₂ < bound` for unrestricted c₁, c₂.
pub fn cpso_bound(p: &CpsoParams) -> f64 {
    let sum = p.c1 + p.c2;
    4.0 * (1.0 - p.w * p.w)
        / (1.0 - p.w + (p.c1 * p.c1 + p.c2 * p.c2) * (1.0 + p.w) / (3.0 * sum * sum))
}

/// The bound when c₁ = c₂: 24(1 − w²)/(7 − 5w).
pub fn cpso_equal_coefficient_bound(w: f64) -> f64 {
    24.0 * (1.0 - w * w) / (7.0 - 5.0 * w)
}

pub fn cpso_criterion(p: &CpsoParams) -> bool {
    let sum = p.c1 + p.c2;
    -1.0 < p.w && p.w < 1.0 && sum > 0.0 && sum < cpso_bound(p)
}

/// `n_size` constant informers, each weighted by U(0, ĉ)/|N|.
pub fn fips_spec(p: &FipsParams, informer_means: &[f64]) -> Result<NipsoSpec> {
    check_finite(&[("w", p.w), ("chat", p.c_hat)])?;
    if p.n_size == 0 {
        return Err(Error::InvalidParameter("nsize must be >= 1".into()));
    }
    if informer_means.len() != p.n_size {
        return Err(Error::InformerCountMismatch {
            expected: p.n_size,
            actual: informer_means.len(),
        });
    }
    let weight = Dist::scaled_uniform(p.c_hat / p.n_size as f64);
    NipsoSpec::new(
        Dist::constant(p.w),
        informer_means
            .iter()
            .map(|&m| (weight.clone(), InformerProcess::constant(m))),
    )
}

/// Upper bound on ĉ/2: 6|N|(1 − w²)/(3|N| + 1 + w(1 − 3|N|)).
pub fn fips_bound(p: &FipsParams) -> f64 {
    let n = p.n_size as f64;
    6.0 * n * (1.0 - p.w * p.w) / (3.0 * n + 1.0 + p.w * (1.0 - 3.0 * n))
}

pub fn fips_criterion(p: &FipsParams) -> bool {
    let half = 0.5 * p.c_hat;
    p.n_size >= 1 && -1.0 < p.w && p.w < 1.0 && half > 0.0 && half < fips_bound(p)
}

/// Three informers: `y` weighted by c₁(u·r₁ + (1 − u)r′₁), the global best `g`
/// by c₂·u·r₂ and the neighbourhood best `ŷ` by c₂(1 − u)r′₂.
pub fn upso_spec(p: &UpsoParams, informer_means: (f64, f64, f64)) -> Result<NipsoSpec> {
    check_finite(&[("w", p.w), ("c1", p.c1), ("c2", p.c2), ("u", p.u)])?;
    if !(0.0..=1.0).contains(&p.u) {
        return Err(Error::InvalidParameter(format!(
            "u must lie in [0, 1], got {}",
            p.u
        )));
    }
    let (y, g, yhat) = informer_means;
    NipsoSpec::new(
        Dist::constant(p.w),
        [
            (Dist::mixture(p.u, p.c1), InformerProcess::constant(y)),
            (
                Dist::scaled_uniform(p.c2 * p.u),
                InformerProcess::constant(g),
            ),
            (
                Dist::scaled_uniform(p.c2 * (1.0 - p.u)),
                InformerProcess::constant(yhat),
            ),
        ],
    )
}

pub fn upso_bound(p: &UpsoParams) -> f64 {
    let sum = p.c1 + p.c2;
    let spread = p.u * p.u + (1.0 - p.u) * (1.0 - p.u);
    4.0 * (1.0 - p.w * p.w)
        / (1.0 - p.w + (p.c1 * p.c1 + p.c2 * p.c2) * spread * (1.0 + p.w) / (3.0 * sum * sum))
}

/// The bound when c₁ = c₂: 24(1 − w²)/(7 − 5w + 2(u² − u)(1 + w)).
pub fn upso_equal_coefficient_bound(w: f64, u: f64) -> f64 {
    24.0 * (1.0 - w * w) / (7.0 - 5.0 * w + 2.0 * (u * u - u) * (1.0 + w))
}

pub fn upso_criterion(p: &UpsoParams) -> bool {
    let sum = p.c1 + p.c2;
    -1.0 < p.w && p.w < 1.0 && sum > 0.0 && sum < upso_bound(p)
}

/// A variant selected by name, as addressed from the command line.
#[derive(Debug, Clone)]
pub enum Variant {
    Cpso(CpsoParams),
    Fips(FipsParams),
    Upso(UpsoParams),
    Custom(NipsoSpec),
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Cpso(_) => "cpso",
            Self::Fips(_) => "fips",
            Self::Upso(_) => "upso",
            Self::Custom(_) => "custom",
        }
    }

    /// Spec with the given informer limit means; an empty slice means
    /// informers at the origin (stability verdicts do not depend on them).
    pub fn spec(&self, informer_means: &[f64]) -> Result<NipsoSpec> {
        let means = |n: usize| -> Result<Vec<f64>> {
            match informer_means.len() {
                0 => Ok(vec![0.0; n]),
                k if k == n => Ok(informer_means.to_vec()),
                k => Err(Error::InformerCountMismatch {
                    expected: n,
                    actual: k,
                }),
            }
        };
        match self {
            Self::Cpso(p) => {
                let m = means(2)?;
                cpso_spec(p, (m[0], m[1]))
            }
            Self::Fips(p) => fips_spec(p, &means(p.n_size)?),
            Self::Upso(p) => {
                let m = means(3)?;
                upso_spec(p, (m[0], m[1], m[2]))
            }
            Self::Custom(spec) => {
                if informer_means.is_empty() {
                    Ok(spec.clone())
                } else {
                    let informers: Vec<InformerProcess> = informer_means
                        .iter()
                        .map(|&m| InformerProcess::constant(m))
                        .collect();
                    spec.with_informers(&informers)
                }
            }
        }
    }

    /// The variant's own closed-form order-2 criterion, when it has one.
    pub fn criterion(&self) -> Option<bool> {
        match self {
            Self::Cpso(p) => Some(cpso_criterion(p)),
            Self::Fips(p) => Some(fips_criterion(p)),
            Self::Upso(p) => Some(upso_criterion(p)),
            Self::Custom(_) => None,
        }
    }
}
