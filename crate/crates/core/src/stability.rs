//! Order-1 and order-2 stability of N-informer PSO.
//!
//! Rewriting the velocity/position update as the second-order recurrence
//! `x(t+1) = α·x(t) + β·x(t−1) + γ_t` with
//!
//! ```text
//! α = 1 + θ₀ − Σθ_ι,   β = −θ₀,   γ_t = Σθ_ι·ζ_ι(t)
//! ```
//!
//! the first moment evolves through the 2×2 matrix `A` and the second
//! moments through the 5×5 matrix `B`. The closed-form criteria below depend
//! on the coefficients only through E[θ₀], V[θ₀], ψ = ΣE[θ_ι] and
//! φ = ΣV[θ_ι].

use serde::Serialize;

use crate::dist::NipsoSpec;
use crate::eigen::{eigenvalues_qr, spectral_radius_2x2};
use crate::error::{Error, Result};

/// Half-width of the band around a criterion boundary inside which a verdict
/// is reported as marginal.
pub const BOUNDARY_BAND: f64 = 1e-9;

pub type Matrix2 = [[f64; 2]; 2];
pub type Matrix5 = [[f64; 5]; 5];

/// First and second moments of α and β, derived from the coefficient moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSummary {
    pub e_theta0: f64,
    pub v_theta0: f64,
    pub psi: f64,
    pub phi: f64,
    pub e_alpha: f64,
    pub e_beta: f64,
    pub e_alpha2: f64,
    pub e_beta2: f64,
    pub e_alphabeta: f64,
}

impl MomentSummary {
    pub fn from_moments(e_theta0: f64, v_theta0: f64, psi: f64, phi: f64) -> Self {
        let e_theta0_sq = v_theta0 + e_theta0 * e_theta0;
        Self {
            e_theta0,
            v_theta0,
            psi,
            phi,
            e_alpha: 1.0 + e_theta0 - psi,
            e_beta: -e_theta0,
            // E[(1 + θ₀ − S)²] with S = Σθ_ι independent of θ₀.
            e_alpha2: 1.0 + 2.0 * e_theta0 + e_theta0_sq - 2.0 * (1.0 + e_theta0) * psi
                + phi
                + psi * psi,
            e_beta2: e_theta0_sq,
            // E[−θ₀(1 + θ₀ − S)].
            e_alphabeta: -e_theta0 - e_theta0_sq + e_theta0 * psi,
        }
    }
}

/// Closed-form moment summary of a spec; no sampling.
pub fn summarize(spec: &NipsoSpec) -> MomentSummary {
    MomentSummary::from_moments(
        spec.theta0().mean(),
        spec.theta0().variance(),
        spec.psi(),
        spec.phi(),
    )
}

pub fn matrix_a(ms: &MomentSummary) -> Matrix2 {
    [[ms.e_alpha, ms.e_beta], [1.0, 0.0]]
}

/// Second-moment transition matrix on the state
/// (E[x(t)], E[x(t−1)], E[x²(t)], E[x²(t−1)], E[x(t)x(t−1)]).
pub fn matrix_b(ms: &MomentSummary) -> Matrix5 {
    [
        [ms.e_alpha, ms.e_beta, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, ms.e_alpha2, ms.e_beta2, 2.0 * ms.e_alphabeta],
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, ms.e_alpha, 0.0, ms.e_beta],
    ]
}

/// Maximum eigenvalue modulus of a 2×2 matrix, or of a 5×5 matrix that
/// decouples into a leading 2×2 block and a trailing 3×3 block.
///
/// The 2×2 spectrum is solved analytically; the 3×3 block goes through
/// Hessenberg QR. Other shapes are rejected.
pub fn spectral_radius<const N: usize>(m: &[[f64; N]; N]) -> Result<f64> {
    if m.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteMatrix);
    }
    match N {
        2 => Ok(spectral_radius_2x2(&[
            [m[0][0], m[0][1]],
            [m[1][0], m[1][1]],
        ])),
        5 => {
            let coupled = (0..2).any(|i| (2..5).any(|j| m[i][j] != 0.0 || m[j][i] != 0.0));
            if coupled {
                return Err(Error::UnsupportedMatrix(
                    "5×5 matrix is not block diagonal (2×2 ⊕ 3×3)".into(),
                ));
            }
            let top = spectral_radius_2x2(&[[m[0][0], m[0][1]], [m[1][0], m[1][1]]]);
            let mut lower = [[0.0; 3]; 3];
            for (i, row) in lower.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = m[i + 2][j + 2];
                }
            }
            let bottom = eigenvalues_qr(&lower)?
                .iter()
                .map(|e| e.modulus())
                .fold(0.0, f64::max);
            Ok(top.max(bottom))
        }
        n => Err(Error::UnsupportedMatrix(format!(
            "expected a 2×2 or 5×5 matrix, got {n}×{n}"
        ))),
    }
}

/// Outcome of one closed-form criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub stable: bool,
    /// Smallest signed slack over the criterion's inequalities; negative when
    /// some inequality is violated.
    pub margin: f64,
    /// Some inequality holds or fails by less than [`BOUNDARY_BAND`].
    pub marginal: bool,
}

impl Verdict {
    fn from_slacks(slacks: &[f64]) -> Self {
        let margin = slacks.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            stable: slacks.iter().all(|s| *s > 0.0),
            margin,
            marginal: slacks.iter().any(|s| s.abs() < BOUNDARY_BAND),
        }
    }
}

/// −1 < E[θ₀] < 1 and 0 < ψ < 2(E[θ₀] + 1).
pub fn order1_stable(ms: &MomentSummary) -> Verdict {
    let e0 = ms.e_theta0;
    Verdict::from_slacks(&[e0 + 1.0, 1.0 - e0, ms.psi, 2.0 * (e0 + 1.0) - ms.psi])
}

/// V[θ₀] < 1, −1 < E[θ₀]/√(1 − V[θ₀]) < 1 and
/// 0 < ψ < −2(E[θ₀]² + V[θ₀] − 1) / (1 − E[θ₀] + φ(1 + E[θ₀])/ψ²).
///
/// Inequalities are checked in order; the first failure ends the evaluation
/// so degenerate inputs never reach a division by zero.
pub fn order2_stable(ms: &MomentSummary) -> Verdict {
    let (e0, v0, psi, phi) = (ms.e_theta0, ms.v_theta0, ms.psi, ms.phi);
    let mut slacks = vec![1.0 - v0];
    if v0 >= 1.0 {
        return Verdict::from_slacks(&slacks);
    }
    let ratio = e0 / (1.0 - v0).sqrt();
    slacks.extend([ratio + 1.0, 1.0 - ratio]);
    if ratio.abs() >= 1.0 {
        return Verdict::from_slacks(&slacks);
    }
    slacks.push(psi);
    if psi <= 0.0 {
        return Verdict::from_slacks(&slacks);
    }
    // The denominator is positive here: |E[θ₀]| < 1 and φ ≥ 0.
    let bound = -2.0 * (e0 * e0 + v0 - 1.0) / (1.0 - e0 + phi * (1.0 + e0) / (psi * psi));
    slacks.push(bound - psi);
    Verdict::from_slacks(&slacks)
}

/// ψ ≠ 0, E[β] ≠ 1 and 1 − E[α²] − E[β²] − 2E[αβ]E[α]/(1 − E[β]) > 0.
pub fn necessary_conditions(ms: &MomentSummary) -> bool {
    if 1.0 - ms.e_alpha - ms.e_beta == 0.0 || ms.e_beta == 1.0 {
        return false;
    }
    second_moment_denominator(ms) > 0.0
}

fn second_moment_denominator(ms: &MomentSummary) -> f64 {
    recurrence_denominator(
        ms.e_alpha,
        ms.e_beta,
        ms.e_alpha2,
        ms.e_beta2,
        ms.e_alphabeta,
    )
}

/// 1 − E[α²] − E[β²] − 2E[αβ]E[α]/(1 − E[β]).
pub fn recurrence_denominator(
    e_alpha: f64,
    e_beta: f64,
    e_alpha2: f64,
    e_beta2: f64,
    e_alphabeta: f64,
) -> f64 {
    1.0 - e_alpha2 - e_beta2 - 2.0 * e_alphabeta * e_alpha / (1.0 - e_beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub order1: bool,
    pub order2: bool,
    pub rho_a: f64,
    pub rho_b: f64,
    pub psi: f64,
    pub phi: f64,
    pub order1_margin: f64,
    pub order2_margin: f64,
    pub order1_marginal: bool,
    pub order2_marginal: bool,
    pub necessary_ok: bool,
    pub moments: MomentSummary,
}

pub fn report_from_summary(ms: &MomentSummary) -> StabilityReport {
    let o1 = order1_stable(ms);
    let o2 = order2_stable(ms);
    // Non-finite moments only arise from non-finite inputs, which specs reject.
    let rho_a = spectral_radius(&matrix_a(ms)).unwrap_or(f64::NAN);
    let rho_b = spectral_radius(&matrix_b(ms)).unwrap_or(f64::NAN);
    StabilityReport {
        order1: o1.stable,
        order2: o2.stable,
        rho_a,
        rho_b,
        psi: ms.psi,
        phi: ms.phi,
        order1_margin: o1.margin,
        order2_margin: o2.margin,
        order1_marginal: o1.marginal,
        order2_marginal: o2.marginal,
        necessary_ok: necessary_conditions(ms),
        moments: *ms,
    }
}

pub fn full_report(spec: &NipsoSpec) -> StabilityReport {
    report_from_summary(&summarize(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{CoefficientDistribution as D, InformerProcess, NipsoSpec};

    fn cpso(w: f64, c1: f64, c2: f64) -> NipsoSpec {
        NipsoSpec::new(
            D::constant(w),
            [
                (D::scaled_uniform(c1), InformerProcess::constant(0.0)),
                (D::scaled_uniform(c2), InformerProcess::constant(1.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn summary_identities() {
        let ms = summarize(&cpso(0.7, 1.4, 1.4));
        assert!((ms.psi - 1.4).abs() < 1e-15);
        assert!((ms.phi - 2.0 * 1.96 / 12.0).abs() < 1e-15);
        assert!((ms.e_alpha - 0.3).abs() < 1e-15);
        assert_eq!(ms.e_beta, -0.7);
        // α = 1.7 − S with E[S] = 1.4, V[S] = φ, so E[α²] = φ + 0.09.
        assert!((ms.e_alpha2 - (ms.phi + 0.09)).abs() < 1e-14);
        assert!((ms.e_beta2 - 0.49).abs() < 1e-15);
        // E[αβ] = −0.7·E[α] for a constant θ₀.
        assert!((ms.e_alphabeta + 0.21).abs() < 1e-14);
    }

    #[test]
    fn all_constant_coefficients() {
        let spec = NipsoSpec::new(
            D::constant(0.4),
            [(D::constant(0.6), InformerProcess::constant(2.0))],
        )
        .unwrap();
        let ms = summarize(&spec);
        assert_eq!(ms.phi, 0.0);
        assert!((ms.e_beta2 - 0.16).abs() < 1e-15);
        // Deterministic α: E[α²] = E[α]².
        assert!((ms.e_alpha2 - ms.e_alpha * ms.e_alpha).abs() < 1e-15);
        assert!((ms.e_alphabeta - ms.e_alpha * ms.e_beta).abs() < 1e-15);
    }

    #[test]
    fn matrix_a_examples() {
        let ms = MomentSummary::from_moments(0.0, 0.0, 1.0, 0.0);
        assert_eq!(matrix_a(&ms), [[0.0, 0.0], [1.0, 0.0]]);
        let ms = summarize(&cpso(0.7, 1.4, 1.4));
        let a = matrix_a(&ms);
        assert!((a[0][0] - 0.3).abs() < 1e-15 && a[0][1] == -0.7);
        let ms = MomentSummary::from_moments(1.0, 0.0, 0.0, 0.0);
        let a = matrix_a(&ms);
        assert_eq!(a, [[2.0, -1.0], [1.0, 0.0]]);
        assert!((spectral_radius(&a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_b_examples() {
        let ms = MomentSummary::from_moments(0.0, 0.0, 1.0, 0.0);
        let b = matrix_b(&ms);
        assert_eq!(b[2][2], 0.0);
        assert_eq!(b[2][3], 0.0);
        assert_eq!(b[2][4], 0.0);
        assert_eq!(spectral_radius(&b).unwrap(), 0.0);

        let ms = summarize(&cpso(0.7, 1.4, 1.4));
        let b = matrix_b(&ms);
        let a = matrix_a(&ms);
        assert_eq!([[b[0][0], b[0][1]], [b[1][0], b[1][1]]], a);
        assert!(spectral_radius(&b).unwrap() < 1.0);
    }

    #[test]
    fn spectral_radius_examples() {
        assert_eq!(spectral_radius(&[[0.0, 0.0], [1.0, 0.0]]).unwrap(), 0.0);
        let r = spectral_radius(&[[0.3, -0.7], [1.0, 0.0]]).unwrap();
        assert!((r - 0.836_660_026_534_075_6).abs() < 1e-12);
        let mut id = [[0.0; 5]; 5];
        for (i, row) in id.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        assert!((spectral_radius(&id).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_errors() {
        assert_eq!(
            spectral_radius(&[[f64::INFINITY, 0.0], [0.0, 0.0]]).unwrap_err(),
            Error::NonFiniteMatrix
        );
        let mut coupled = [[0.0; 5]; 5];
        coupled[0][3] = 1.0;
        assert!(matches!(
            spectral_radius(&coupled),
            Err(Error::UnsupportedMatrix(_))
        ));
        assert!(spectral_radius(&[[1.0; 3]; 3]).is_err());
    }

    #[test]
    fn order1_examples() {
        assert!(order1_stable(&MomentSummary::from_moments(0.7, 0.0, 1.4, 0.0)).stable);
        let v = order1_stable(&MomentSummary::from_moments(1.0, 0.0, 1.0, 0.0));
        assert!(!v.stable && v.marginal);
        assert!(!order1_stable(&MomentSummary::from_moments(0.5, 0.0, 0.0, 0.0)).stable);
        let v = order1_stable(&MomentSummary::from_moments(0.7, 0.0, 1.4, 0.0));
        // Slacks: 1.7, 0.3, 1.4, 2.0.
        assert!((v.margin - 0.3).abs() < 1e-15);
    }

    #[test]
    fn order2_examples() {
        assert!(order2_stable(&summarize(&cpso(0.7, 1.4, 1.4))).stable);
        assert!(!order2_stable(&summarize(&cpso(0.7, 2.0, 2.0))).stable);
        let v = order2_stable(&MomentSummary::from_moments(0.0, 1.0, 1.0, 0.1));
        assert!(!v.stable);
        let v = order2_stable(&MomentSummary::from_moments(0.0, 1.5, 1.0, 0.1));
        assert!(!v.stable && v.margin < 0.0);
        let v = order2_stable(&MomentSummary::from_moments(0.2, 0.1, 0.0, 0.1));
        assert!(!v.stable && v.margin.is_finite());
    }

    #[test]
    fn necessary_condition_examples() {
        assert!(!necessary_conditions(&MomentSummary::from_moments(
            0.5, 0.0, 0.0, 0.0
        )));
        assert!(necessary_conditions(&summarize(&cpso(0.7, 1.4, 1.4))));
        // E[β] = 1.
        assert!(!necessary_conditions(&MomentSummary::from_moments(
            -1.0, 0.0, 1.0, 0.0
        )));
    }

    #[test]
    fn full_report_examples() {
        let r = full_report(&cpso(0.7, 1.4, 1.4));
        assert!(r.order1 && r.order2 && r.necessary_ok);
        assert!((r.rho_a - 0.836_660_026_534_075_6).abs() < 1e-9);
        assert!(r.rho_b < 1.0);
        let r = full_report(&cpso(1.2, 1.4, 1.4));
        assert!(!r.order1 && !r.order2);
        assert!(r.rho_a >= 1.0);
    }

    #[test]
    fn report_serializes_all_moments() {
        let json = serde_json::to_value(full_report(&cpso(0.7, 1.4, 1.4))).unwrap();
        for key in [
            "order1",
            "order2",
            "rho_a",
            "rho_b",
            "psi",
            "phi",
            "order1_margin",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(json["moments"].get("e_alphabeta").is_some());
    }
}
