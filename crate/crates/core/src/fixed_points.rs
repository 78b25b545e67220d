//! Limiting mean and variance of particle positions under stability.

use serde::Serialize;

use crate::dist::NipsoSpec;
use crate::error::{Error, Result};
use crate::stability::{order1_stable, order2_stable, recurrence_denominator, summarize};

/// Fixed point of (E[x(t)], V[x(t)]) together with the terms of the variance
/// formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub mean: f64,
    pub variance: f64,
    /// Σ(E²[θ]V[ζ] + E²[ζ]V[θ] + V[θ]V[ζ]).
    pub kappa1: f64,
    /// Σ V[θ]E[ζ].
    pub kappa2: f64,
    /// Σ V[θ] (equal to φ).
    pub kappa3: f64,
    pub denominator: f64,
}

/// ψ-weighted average of the informer limit means.
pub fn mean_fixed_point(spec: &NipsoSpec) -> Result<f64> {
    let psi = spec.psi();
    if psi == 0.0 {
        return Err(Error::UndefinedFixedPoint);
    }
    let weighted: f64 = spec
        .terms()
        .iter()
        .map(|t| t.coefficient.mean() * t.informer.limit_mean)
        .sum();
    Ok(weighted / psi)
}

/// Mean and variance fixed points of an order-1 and order-2 stable spec.
pub fn fixed_point(spec: &NipsoSpec) -> Result<FixedPoint> {
    let ms = summarize(spec);
    if !order1_stable(&ms).stable || !order2_stable(&ms).stable {
        return Err(Error::Unstable);
    }
    let mean = mean_fixed_point(spec)?;

    let (mut kappa1, mut kappa2, mut kappa3) = (0.0, 0.0, 0.0);
    for t in spec.terms() {
        let (et, vt) = (t.coefficient.mean(), t.coefficient.variance());
        let (ez, vz) = (t.informer.limit_mean, t.informer.limit_variance);
        kappa1 += et * et * vz + ez * ez * vt + vt * vz;
        kappa2 += vt * ez;
        kappa3 += vt;
    }

    let (e0, v0, psi, phi) = (ms.e_theta0, ms.v_theta0, ms.psi, ms.phi);
    let denominator = 2.0 * psi * (1.0 - e0 * e0 - v0) - phi * (1.0 + e0) + psi * psi * (e0 - 1.0);
    if denominator <= 0.0 {
        return Err(Error::CriterionBoundary(denominator));
    }
    let numerator = (1.0 + e0) * (kappa1 - 2.0 * kappa2 * mean + kappa3 * mean * mean);
    Ok(FixedPoint {
        mean,
        // Clamp rounding noise for deterministic specs.
        variance: (numerator / denominator).max(0.0),
        kappa1,
        kappa2,
        kappa3,
        denominator,
    })
}

pub fn variance_fixed_point(spec: &NipsoSpec) -> Result<f64> {
    fixed_point(spec).map(|fp| fp.variance)
}

/// Variance fixed point of any recurrence `x(t+1) = αx(t) + βx(t−1) + γ_t`:
/// E[d²] / (1 − E[α²] − E[β²] − 2E[αβ]E[α]/(1 − E[β])), where
/// d = γ − E_x(1 − α − β) is the centred driving term.
pub fn general_variance(
    e_alpha: f64,
    e_beta: f64,
    e_alpha2: f64,
    e_beta2: f64,
    e_alphabeta: f64,
    e_d2: f64,
) -> Result<f64> {
    if e_beta == 1.0 {
        return Err(Error::Unstable);
    }
    let denominator = recurrence_denominator(e_alpha, e_beta, e_alpha2, e_beta2, e_alphabeta);
    if denominator.is_nan() || denominator <= 0.0 {
        return Err(Error::Unstable);
    }
    Ok(e_d2 / denominator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{CoefficientDistribution as D, InformerProcess as Z};

    fn cpso(w: f64, c1: f64, c2: f64, y: f64, yhat: f64) -> NipsoSpec {
        NipsoSpec::new(
            D::constant(w),
            [
                (D::scaled_uniform(c1), Z::constant(y)),
                (D::scaled_uniform(c2), Z::constant(yhat)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_informer_mean() {
        for c in [0.3, 1.0, -2.0] {
            let spec =
                NipsoSpec::new(D::constant(0.5), [(D::constant(c), Z::constant(5.0))]).unwrap();
            assert!((mean_fixed_point(&spec).unwrap() - 5.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cpso_means() {
        assert!((mean_fixed_point(&cpso(0.7, 1.4, 1.4, 0.0, 1.0)).unwrap() - 0.5).abs() < 1e-15);
        assert!((mean_fixed_point(&cpso(0.7, 1.0, 3.0, 0.0, 1.0)).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_psi_has_no_fixed_point() {
        let spec = NipsoSpec::new(
            D::constant(0.5),
            [
                (D::constant(1.0), Z::constant(1.0)),
                (D::constant(-1.0), Z::constant(2.0)),
            ],
        )
        .unwrap();
        assert_eq!(
            mean_fixed_point(&spec).unwrap_err(),
            Error::UndefinedFixedPoint
        );
    }

    #[test]
    fn deterministic_system_has_zero_variance() {
        let spec = NipsoSpec::new(
            D::constant(0.3),
            [
                (D::constant(0.5), Z::constant(1.0)),
                (D::constant(0.4), Z::constant(-2.0)),
            ],
        )
        .unwrap();
        let fp = fixed_point(&spec).unwrap();
        assert_eq!(fp.kappa1, 0.0);
        assert_eq!(fp.kappa2, 0.0);
        assert_eq!(fp.variance, 0.0);
    }

    #[test]
    fn cpso_variance() {
        // κ₁ = κ₂ = 1.96/12, κ₃ = φ = 2·1.96/12, E_x = 0.5:
        // numerator 1.7·φ/4, denominator 2·1.4·0.51 − 1.7φ − 0.3·1.96.
        let phi = 2.0 * 1.96 / 12.0;
        let expected = 1.7 * phi / 4.0 / (2.0 * 1.4 * 0.51 - 1.7 * phi - 0.3 * 1.96);
        let v = variance_fixed_point(&cpso(0.7, 1.4, 1.4, 0.0, 1.0)).unwrap();
        assert!((v - expected).abs() < 1e-14);
        assert!((v - 0.4877).abs() < 1e-4);
    }

    #[test]
    fn coincident_informers_collapse() {
        for (w, c1, c2) in [(0.7, 1.4, 1.4), (0.5, 0.8, 1.9), (-0.3, 0.5, 0.5)] {
            let v = variance_fixed_point(&cpso(w, c1, c2, 2.5, 2.5)).unwrap();
            assert!(v.abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn unstable_spec_is_rejected() {
        assert_eq!(
            variance_fixed_point(&cpso(0.7, 2.0, 2.0, 0.0, 1.0)).unwrap_err(),
            Error::Unstable
        );
    }

    #[test]
    fn general_variance_examples() {
        assert_eq!(
            general_variance(0.3, -0.7, 0.4, 0.49, -0.21, 0.0).unwrap(),
            0.0
        );
        assert_eq!(general_variance(0.0, 0.0, 0.0, 0.0, 0.0, 2.0).unwrap(), 2.0);
        assert_eq!(
            general_variance(0.0, 0.0, 1.5, 0.0, 0.0, 1.0).unwrap_err(),
            Error::Unstable
        );
        assert!(general_variance(0.0, 1.0, 0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn general_variance_agrees_for_cpso() {
        let spec = cpso(0.7, 1.4, 1.4, 0.0, 1.0);
        let ms = summarize(&spec);
        // d = Σθ(ζ − E_x) with constant informers: E[d²] = Σ V[θ](ζ − E_x)².
        let e_d2 = 2.0 * (1.96 / 12.0) * 0.25;
        let g = general_variance(
            ms.e_alpha,
            ms.e_beta,
            ms.e_alpha2,
            ms.e_beta2,
            ms.e_alphabeta,
            e_d2,
        )
        .unwrap();
        let v = variance_fixed_point(&spec).unwrap();
        assert!(((g - v) / v).abs() < 1e-10, "{g} vs {v}");
    }
}
