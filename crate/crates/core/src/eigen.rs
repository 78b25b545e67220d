//! Eigenvalues of the small dense matrices that appear in the moment
//! recursions: an analytic solver for 2×2 and a Francis double-shift QR for
//! the 3×3 second-moment block.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    pub fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Roots of λ² − trace·λ + det.
pub fn eigenvalues_2x2(m: &[[f64; 2]; 2]) -> [Eigenvalue; 2] {
    let trace = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = trace * trace - 4.0 * det;
    if disc >= 0.0 {
        // Avoid cancellation: take the larger root directly, the other via det.
        let q = 0.5 * (trace + disc.sqrt().copysign(trace));
        let other = if q != 0.0 { det / q } else { 0.0 };
        [Eigenvalue::real(q), Eigenvalue::real(other)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        let re = 0.5 * trace;
        [Eigenvalue { re, im }, Eigenvalue { re, im: -im }]
    }
}

pub(crate) fn spectral_radius_2x2(m: &[[f64; 2]; 2]) -> f64 {
    let trace = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if trace * trace - 4.0 * det < 0.0 {
        // Complex pair: |λ|² = det.
        det.sqrt()
    } else {
        let [a, b] = eigenvalues_2x2(m);
        a.re.abs().max(b.re.abs())
    }
}

/// Reduces `a` to upper Hessenberg form by stabilized elimination.
#[allow(clippy::needless_range_loop)]
fn to_hessenberg<const N: usize>(a: &mut [[f64; N]; N]) {
    for m in 1..N.saturating_sub(1) {
        let mut pivot: f64 = 0.0;
        let mut row = m;
        for (j, r) in a.iter().enumerate().skip(m) {
            if r[m - 1].abs() > pivot.abs() {
                pivot = r[m - 1];
                row = j;
            }
        }
        if row != m {
            a.swap(row, m);
            for r in a.iter_mut() {
                r.swap(row, m);
            }
        }
        if pivot != 0.0 {
            for i in m + 1..N {
                let y = a[i][m - 1] / pivot;
                if y != 0.0 {
                    for j in m..N {
                        a[i][j] -= y * a[m][j];
                    }
                    for r in a.iter_mut() {
                        r[m] += y * r[i];
                    }
                }
            }
        }
    }
    for (i, r) in a.iter_mut().enumerate() {
        for x in r.iter_mut().take(i.saturating_sub(1)) {
            *x = 0.0;
        }
    }
}

/// All eigenvalues of a small real matrix via Hessenberg reduction followed
/// by Francis double-shift QR.
#[allow(clippy::needless_range_loop)]
pub fn eigenvalues_qr<const N: usize>(m: &[[f64; N]; N]) -> Result<[Eigenvalue; N]> {
    if m.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteMatrix);
    }
    let mut a = *m;
    to_hessenberg(&mut a);
    let mut w = [Eigenvalue::real(0.0); N];
    if N == 0 {
        return Ok(w);
    }

    let mut anorm = 0.0;
    for (i, r) in a.iter().enumerate() {
        for x in r.iter().skip(i.saturating_sub(1)) {
            anorm += x.abs();
        }
    }

    let mut nn = N as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let n = nn as usize;
            // Look for a single small subdiagonal element.
            let mut l = n;
            while l > 0 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() <= f64::EPSILON * s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[n][n];
            if l == n {
                w[n] = Eigenvalue::real(x + t);
                nn -= 1;
                break;
            }
            let mut y = a[n - 1][n - 1];
            let mut ww = a[n][n - 1] * a[n - 1][n];
            if l + 1 == n {
                let p = 0.5 * (y - x);
                let q = p * p + ww;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    w[n - 1] = Eigenvalue::real(x + z);
                    w[n] = Eigenvalue::real(if z != 0.0 { x - ww / z } else { x + z });
                } else {
                    w[n] = Eigenvalue { re: x + p, im: -z };
                    w[n - 1] = Eigenvalue { re: x + p, im: z };
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return Err(Error::UnsupportedMatrix(
                    "QR iteration did not converge".into(),
                ));
            }
            if its == 10 || its == 20 {
                // Exceptional shift.
                t += x;
                for (i, r) in a.iter_mut().enumerate().take(n + 1) {
                    r[i] -= x;
                }
                let s = a[n][n - 1].abs() + a[n - 1][n - 2].abs();
                x = 0.75 * s;
                y = x;
                ww = -0.4375 * s * s;
            }
            its += 1;

            // Form the shift and look for two consecutive small subdiagonals.
            let (mut p, mut q, mut r);
            let mut m = n - 2;
            loop {
                let z = a[m][m];
                let rr = x - z;
                let s = y - z;
                p = (rr * s - ww) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - s;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in m..n - 1 {
                a[i + 2][i] = 0.0;
                if i != m {
                    a[i + 2][i - 1] = 0.0;
                }
            }

            // Double-shift QR step on rows l..=n and columns m..=n.
            let mut k = m;
            while k < n {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k + 1 != n { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=n {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k + 1 != n {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = n.min(k + 3);
                    for row in a.iter_mut().take(mmin + 1).skip(l) {
                        let mut pp = x * row[k] + y * row[k + 1];
                        if k + 1 != n {
                            pp += z * row[k + 2];
                            row[k + 2] -= pp * r;
                        }
                        row[k + 1] -= pp * q;
                        row[k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(w)
}
