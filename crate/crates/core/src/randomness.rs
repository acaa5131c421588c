//! Guessing-probability bound for CHSH when Alice's input leaks to Bob.
//!
//! Outputs are the analytic bound; it is tight against numerical upper
//! bounds but is not itself derived from one.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::behavior::check_unit;
use crate::error::{BellError, Result};

/// Slack allowed when checking that `beta` lies in `[beta_c, beta_q]`.
pub const BETA_TOL: f64 = 1e-9;

/// Quantum maximum of the leaky CHSH expression.
pub fn beta_q(kappa: f64) -> Result<f64> {
    check_unit("kappa", &kappa)?;
    Ok(if kappa <= FRAC_1_SQRT_2 { 2.0 * SQRT_2 * (kappa + (1.0 - kappa * kappa).sqrt()) } else { 4.0 })
}

/// Classical maximum `2 + 2 kappa`.
pub fn beta_c(kappa: f64) -> Result<f64> {
    check_unit("kappa", &kappa)?;
    Ok(2.0 + 2.0 * kappa)
}

fn check_beta(beta: f64, kappa: f64) -> Result<(f64, f64)> {
    let (lo, hi) = (beta_c(kappa)?, beta_q(kappa)?);
    if !beta.is_finite() || beta < lo - BETA_TOL || beta > hi + BETA_TOL {
        return Err(BellError::OutOfRange(format!("beta = {beta} outside [{lo}, {hi}] for kappa = {kappa}")));
    }
    Ok((lo, hi))
}

/// `u(beta) = sqrt(beta^2 - (2 - 4k^2)^2) - 4k sqrt(1-k^2)` and its derivative.
fn u_and_du(beta: f64, kappa: f64) -> (f64, f64) {
    let c = 2.0 - 4.0 * kappa * kappa;
    let r = (beta * beta - c * c).max(0.0).sqrt();
    (r - 4.0 * kappa * (1.0 - kappa * kappa).sqrt(), beta / r)
}

/// `P̄(beta)` before range checks.
fn pbar_raw(beta: f64, kappa: f64) -> f64 {
    let arg = if kappa <= FRAC_1_SQRT_2 {
        // 4 - u^2 = (bq^2 - beta^2)(2 + u) / (2 + 4ks + r), exact zero at bq
        let s = (1.0 - kappa * kappa).sqrt();
        let bq = 2.0 * SQRT_2 * (kappa + s);
        let c = 2.0 - 4.0 * kappa * kappa;
        let r = (beta * beta - c * c).max(0.0).sqrt();
        let u = r - 4.0 * kappa * s;
        (bq - beta) * (bq + beta) * (2.0 + u) / (2.0 + 4.0 * kappa * s + r)
    } else {
        beta * (4.0 - beta)
    };
    0.5 + 0.25 * arg.max(0.0).sqrt()
}

fn dpbar_raw(beta: f64, kappa: f64) -> f64 {
    if kappa <= FRAC_1_SQRT_2 {
        let (u, du) = u_and_du(beta, kappa);
        -0.25 * u * du / (4.0 - u * u).sqrt()
    } else {
        (2.0 - beta) / (4.0 * (beta * (4.0 - beta)).sqrt())
    }
}

/// The concave bound `P̄_g(beta, kappa)`.
pub fn pbar_g(beta: f64, kappa: f64) -> Result<f64> {
    check_beta(beta, kappa)?;
    Ok(pbar_raw(beta, kappa))
}

/// `dP̄_g / d beta`, from the chain rule on the closed form.
pub fn dpbar_g(beta: f64, kappa: f64) -> Result<f64> {
    check_beta(beta, kappa)?;
    Ok(dpbar_raw(beta, kappa))
}

/// `g(beta) = P̄'(beta) (beta - beta_c) - (P̄(beta) - 1)`; zero where the line
/// from `(beta_c, 1)` touches the curve.
pub fn tangency_residual(beta: f64, kappa: f64) -> Result<f64> {
    let (bc, _) = check_beta(beta, kappa)?;
    Ok(dpbar_raw(beta, kappa) * (beta - bc) - (pbar_raw(beta, kappa) - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tangency {
    pub beta: f64,
    pub residual: f64,
    /// Sign changes of the residual on a uniform scan of the bracket; 1 means
    /// the root is unique at scan resolution.
    pub sign_changes: usize,
}

const SCAN_POINTS: usize = 2000;

/// Tangency point `beta*` by bisection on `[beta_c + 1e-9, beta_q - 1e-9]`.
/// At `kappa = 0` the curve already reaches 1 at `beta_c`, so `beta* = beta_c`.
pub fn beta_star(kappa: f64) -> Result<Tangency> {
    let (bc, bq) = (beta_c(kappa)?, beta_q(kappa)?);
    if kappa == 0.0 {
        return Ok(Tangency { beta: bc, residual: 0.0, sign_changes: 0 });
    }
    let g = |b: f64| dpbar_raw(b, kappa) * (b - bc) - (pbar_raw(b, kappa) - 1.0);
    let (mut lo, mut hi) = (bc + 1e-9, bq - 1e-9);
    let (f_lo, f_hi) = (g(lo), g(hi));
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(BellError::Bracketing { lo, hi, f_lo, f_hi });
    }
    let step = (hi - lo) / SCAN_POINTS as f64;
    let mut sign_changes = 0;
    let mut prev = f_lo;
    for i in 1..=SCAN_POINTS {
        let v = g(lo + step * i as f64);
        if v.signum() != prev.signum() && v != 0.0 {
            sign_changes += 1;
        }
        prev = v;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    Ok(Tangency { beta, residual: g(beta), sign_changes })
}

/// The piecewise bound for one `kappa`, with `beta*` computed once.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GuessingBound {
    pub kappa: f64,
    pub beta_c: f64,
    pub beta_q: f64,
    pub tangency: Tangency,
    pbar_star: f64,
}

impl GuessingBound {
    pub fn new(kappa: f64) -> Result<Self> {
        let tangency = beta_star(kappa)?;
        Ok(Self {
            kappa,
            beta_c: beta_c(kappa)?,
            beta_q: beta_q(kappa)?,
            tangency,
            pbar_star: pbar_raw(tangency.beta, kappa),
        })
    }

    /// Chord from `(beta_c, 1)` to `(beta*, P̄(beta*))` left of `beta*`,
    /// `P̄` to the right.
    pub fn pg(&self, beta: f64) -> Result<f64> {
        check_beta(beta, self.kappa)?;
        let bs = self.tangency.beta;
        let beta = beta.clamp(self.beta_c, self.beta_q);
        if beta >= bs {
            Ok(pbar_raw(beta, self.kappa))
        } else {
            Ok(1.0 + (self.pbar_star - 1.0) * (beta - self.beta_c) / (bs - self.beta_c))
        }
    }

    pub fn point(&self, beta: f64) -> Result<GuessCurvePoint> {
        let pg = self.pg(beta)?;
        Ok(GuessCurvePoint { beta_obs: beta, kappa: self.kappa, pg, hmin: -pg.log2() })
    }
}

pub fn guessing_probability(beta: f64, kappa: f64) -> Result<f64> {
    GuessingBound::new(kappa)?.pg(beta)
}

/// `H_min = -log2(P_g)`.
pub fn min_entropy(pg: f64) -> f64 {
    -pg.log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GuessCurvePoint {
    pub beta_obs: f64,
    pub kappa: f64,
    pub pg: f64,
    pub hmin: f64,
}

/// `n` points uniformly spaced over `[beta_c, beta_q]`, endpoints included.
pub fn curve(kappa: f64, n: usize) -> Result<Vec<GuessCurvePoint>> {
    if n < 2 {
        return Err(BellError::InvalidParams(format!("curve needs at least 2 points, got {n}")));
    }
    let gb = GuessingBound::new(kappa)?;
    let step = (gb.beta_q - gb.beta_c) / (n - 1) as f64;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let beta = if i == n - 1 { gb.beta_q } else { gb.beta_c + step * i as f64 };
            gb.point(beta)
        })
        .collect()
}

/// Brute-force maximum of `2 (sin a + sin 2t cos b)` subject to
/// `cos(a + b) <= 2k^2 - 1`, on a grid with `resolution` points per angle.
///
/// The grid runs over `t in [0, pi/4]`, `g = a + b` on the feasible arc
/// (endpoints included) and `a in [0, 2 pi)`, with `b = g - a`.
pub fn oracle_max_chsh(kappa: f64, resolution: usize) -> Result<f64> {
    check_unit("kappa", &kappa)?;
    let n = resolution.max(2);
    let g0 = (2.0 * kappa * kappa - 1.0).clamp(-1.0, 1.0).acos();
    let (sin_a, cos_a): (Vec<f64>, Vec<f64>) =
        (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin_cos()).unzip();
    let best = (0..n)
        .into_par_iter()
        .map(|it| {
            let s = (2.0 * (PI / 4.0) * it as f64 / (n - 1) as f64).sin();
            let mut best = f64::NEG_INFINITY;
            for ig in 0..n {
                let g = g0 + (2.0 * PI - 2.0 * g0) * ig as f64 / (n - 1) as f64;
                let (sg, cg) = g.sin_cos();
                for ia in 0..n {
                    // cos(g - a) = cos g cos a + sin g sin a
                    let v = sin_a[ia] + s * (cg * cos_a[ia] + sg * sin_a[ia]);
                    if v > best {
                        best = v;
                    }
                }
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(2.0 * best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!((beta_q(0.0).unwrap() - 2.0 * SQRT_2).abs() < 1e-15);
        assert!((beta_q(FRAC_1_SQRT_2).unwrap() - 4.0).abs() < 1e-12);
        assert!((beta_q(0.3).unwrap() - 3.546_675_650_070).abs() < 1e-11);
        assert_eq!(beta_c(0.25).unwrap(), 2.5);
        assert!(beta_q(1.0).is_err());
    }

    #[test]
    fn pbar_examples() {
        assert!((pbar_g(2.0 * SQRT_2, 0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((pbar_g(2.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((pbar_g(4.0, 0.8).unwrap() - 0.5).abs() < 1e-15);
        assert!(pbar_g(1.9, 0.0).is_err());
        assert!(pbar_g(4.1, 0.8).is_err());
    }

    #[test]
    fn branches_meet_at_breakpoint() {
        let k = FRAC_1_SQRT_2;
        for beta in [3.5, 3.7, 3.9] {
            let lower = pbar_raw(beta, k - 1e-12);
            let upper = pbar_raw(beta, k + 1e-12);
            assert!((lower - upper).abs() < 1e-6, "{beta}: {lower} vs {upper}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for &(k, b) in &[(0.1, 2.5), (0.5, 3.6), (0.75, 3.9), (0.3, 3.2)] {
            let h = 1e-6;
            let fd = (pbar_raw(b + h, k) - pbar_raw(b - h, k)) / (2.0 * h);
            assert!((fd - dpbar_raw(b, k)).abs() < 1e-6, "k={k}");
        }
    }

    #[test]
    fn tangency_roots() {
        for k in [0.5, 0.75] {
            let t = beta_star(k).unwrap();
            assert!(t.residual.abs() < 1e-9);
            assert_eq!(t.sign_changes, 1);
            let g = |b| tangency_residual(b, k).unwrap();
            assert!(g(t.beta - 1e-6) > 0.0 && g(t.beta + 1e-6) < 0.0);
        }
        assert_eq!(beta_star(0.0).unwrap().beta, 2.0);
    }

    #[test]
    fn curve_endpoints() {
        let c = curve(0.0, 3).unwrap();
        assert_eq!(c[0].beta_obs, 2.0);
        assert!((c[0].pg - 1.0).abs() < 1e-12);
        assert!((c[2].beta_obs - 2.0 * SQRT_2).abs() < 1e-15);
        assert!((c[2].pg - 0.5).abs() < 1e-9);
        assert!((c[2].hmin - 1.0).abs() < 1e-8);
        assert!(curve(0.2, 1).is_err());
        let gb = GuessingBound::new(0.75).unwrap();
        assert!((gb.pg(4.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn small_oracle_is_close() {
        let v = oracle_max_chsh(0.3, 200).unwrap();
        assert!((v - beta_q(0.3).unwrap()).abs() < 1e-3);
    }
}
