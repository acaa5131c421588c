//! Two-qubit correlation engine.
//!
//! Observables are explicit 2x2 Hermitian matrices; the Bloch form is
//! derived on demand. Everything here is float policy.

use num_complex::Complex64 as C;

use crate::behavior::{check_unit, Behavior, BellScenario};
use crate::error::{BellError, Result};

/// Hermiticity and normalisation tolerance.
pub const QTOL: f64 = 1e-12;

type Mat2 = [[C; 2]; 2];

const fn c(re: f64) -> C {
    C::new(re, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitObservable {
    m: Mat2,
}

impl QubitObservable {
    /// Accepts a Hermitian matrix with spectrum inside `[-1, 1]`.
    pub fn new(m: Mat2) -> Result<Self> {
        let off = (m[0][1] - m[1][0].conj()).norm();
        if off > QTOL || m[0][0].im.abs() > QTOL || m[1][1].im.abs() > QTOL {
            return Err(BellError::InvalidObservable("matrix is not Hermitian".into()));
        }
        let (lo, hi) = eig2(&m);
        if lo < -1.0 - QTOL || hi > 1.0 + QTOL {
            return Err(BellError::InvalidObservable(format!("eigenvalues {lo}, {hi} leave [-1, 1]")));
        }
        Ok(Self { m })
    }

    /// `x sx + y sy + z sz`; the Bloch vector must have norm at most 1.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let [x, y, z] = r;
        Self::new([[c(z), C::new(x, -y)], [C::new(x, y), c(-z)]])
    }

    pub fn sigma_x() -> Self {
        Self { m: [[c(0.0), c(1.0)], [c(1.0), c(0.0)]] }
    }

    pub fn sigma_z() -> Self {
        Self { m: [[c(1.0), c(0.0)], [c(0.0), c(-1.0)]] }
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.m
    }

    /// `(x, y, z)` of the traceless part.
    pub fn bloch(&self) -> [f64; 3] {
        let m = &self.m;
        [m[0][1].re, -m[0][1].im, (m[0][0].re - m[1][1].re) / 2.0]
    }

    /// True when the spectrum is exactly `{-1, +1}`.
    pub fn is_projective(&self) -> bool {
        let tr = (self.m[0][0].re + self.m[1][1].re) / 2.0;
        let r = self.bloch();
        tr.abs() <= QTOL && ((r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt() - 1.0).abs() <= QTOL
    }

    /// `(I + (-1)^k O) / 2`.
    fn projector(&self, k: usize) -> Mat2 {
        let s = if k == 0 { 0.5 } else { -0.5 };
        let m = &self.m;
        [[c(0.5) + m[0][0] * s, m[0][1] * s], [m[1][0] * s, c(0.5) + m[1][1] * s]]
    }
}

/// Eigenvalues `(lo, hi)` of a Hermitian 2x2 matrix.
fn eig2(m: &Mat2) -> (f64, f64) {
    let t = (m[0][0].re + m[1][1].re) / 2.0;
    let d = (m[0][0].re - m[1][1].re) / 2.0;
    let r = (d * d + m[0][1].norm_sqr()).sqrt();
    (t - r, t + r)
}

/// Largest absolute eigenvalue of `O1 - O2`.
pub fn operator_norm_diff(o1: &QubitObservable, o2: &QubitObservable) -> f64 {
    let mut d = o1.m;
    for (i, row) in d.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v -= o2.m[i][j];
        }
    }
    let (lo, hi) = eig2(&d);
    lo.abs().max(hi.abs())
}

/// Amplitudes in the basis `|00>, |01>, |10>, |11>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitState {
    amps: [C; 4],
}

impl TwoQubitState {
    pub fn new(amps: [C; 4]) -> Result<Self> {
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > QTOL {
            return Err(BellError::InvalidState(format!("squared norm is {n}, expected 1")));
        }
        Ok(Self { amps })
    }

    pub fn real(amps: [f64; 4]) -> Result<Self> {
        Self::new(amps.map(c))
    }

    /// `(|00> + |11>)/sqrt2`
    pub fn phi_plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { amps: [c(s), c(0.0), c(0.0), c(s)] }
    }

    pub fn amplitudes(&self) -> &[C; 4] {
        &self.amps
    }

    /// `<psi| P (x) Q |psi>`
    fn expect_kron(&self, p: &Mat2, q: &Mat2) -> f64 {
        let mut acc = C::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                let k = p[i / 2][j / 2] * q[i % 2][j % 2];
                acc += self.amps[i].conj() * k * self.amps[j];
            }
        }
        acc.re
    }
}

/// Bob's observables: one per `y`, or one per `(y, x)` when Alice's input leaks.
#[derive(Clone, Debug, PartialEq)]
pub enum BobObservables {
    Shared(Vec<QubitObservable>),
    /// Indexed `[y][x]`.
    Leaky(Vec<Vec<QubitObservable>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitStrategy {
    pub state: TwoQubitState,
    pub alice: Vec<QubitObservable>,
    pub bob: BobObservables,
    pub kappa: f64,
}

impl TwoQubitStrategy {
    pub fn scenario(&self) -> Result<BellScenario> {
        let n_y = match &self.bob {
            BobObservables::Shared(b) => b.len(),
            BobObservables::Leaky(b) => b.len(),
        };
        BellScenario::new(2, 2, self.alice.len(), n_y)
    }

    /// Bob's observable for inputs `(x, y)`.
    pub fn bob_obs(&self, x: usize, y: usize) -> &QubitObservable {
        match &self.bob {
            BobObservables::Shared(b) => &b[y],
            BobObservables::Leaky(b) => &b[y][x],
        }
    }

    /// `max_y ||B_{y,x} - B_{y,x'}||` over all pairs `x, x'`; zero without leakage.
    pub fn leakage_norm(&self) -> f64 {
        let BobObservables::Leaky(b) = &self.bob else { return 0.0 };
        let mut worst: f64 = 0.0;
        for row in b {
            for i in 0..row.len() {
                for j in i + 1..row.len() {
                    worst = worst.max(operator_norm_diff(&row[i], &row[j]));
                }
            }
        }
        worst
    }

    /// Validates the leakage constraint `||B_{y,x} - B_{y,x'}|| <= 2 kappa`.
    pub fn validate(&self) -> Result<()> {
        let sc = self.scenario()?;
        if let BobObservables::Leaky(b) = &self.bob {
            if b.iter().any(|row| row.len() != sc.n_x()) {
                return Err(BellError::InvalidObservable("leaky Bob needs one observable per x".into()));
            }
        }
        if self.leakage_norm() > 2.0 * self.kappa + QTOL {
            return Err(BellError::InvalidObservable(format!(
                "leakage norm {} exceeds 2 kappa = {}",
                self.leakage_norm(),
                2.0 * self.kappa
            )));
        }
        Ok(())
    }

    /// `<A_x>` computed on the state.
    pub fn alice_mean(&self, x: usize) -> f64 {
        let id = [[c(1.0), c(0.0)], [c(0.0), c(1.0)]];
        self.state.expect_kron(&self.alice[x].m, &id)
    }
}

/// Born-rule conditional behavior `p(ab|xy)`.
pub fn behavior_of(s: &TwoQubitStrategy) -> Result<Behavior<f64>> {
    s.validate()?;
    let sc = s.scenario()?;
    let all = s.alice.iter().chain(match &s.bob {
        BobObservables::Shared(b) => Box::new(b.iter()) as Box<dyn Iterator<Item = _>>,
        BobObservables::Leaky(b) => Box::new(b.iter().flatten()),
    });
    for o in all {
        if !o.is_projective() {
            return Err(BellError::InvalidObservable("only +-1 valued observables are supported".into()));
        }
    }
    let mut v = vec![0.0; sc.table_len()];
    for x in 0..sc.n_x() {
        for y in 0..sc.n_y() {
            let bo = s.bob_obs(x, y);
            for a in 0..2 {
                let pa = s.alice[x].projector(a);
                for b in 0..2 {
                    v[sc.index(a, b, x, y)] = s.state.expect_kron(&pa, &bo.projector(b));
                }
            }
        }
    }
    Behavior::conditional(sc, v)
}

/// `theta = arcsin(3 - sqrt(4 eps + 5))`.
pub fn tilted_hardy_theta(eps: f64) -> Result<f64> {
    check_unit("eps", &eps)?;
    Ok((3.0 - (4.0 * eps + 5.0).sqrt()).asin())
}

/// Partially entangled state `cos(t/2)|00> - sin(t/2)|11>` with
/// `A0 = B0`, `A1 = B1` chosen so that `p(01|01) = p(10|10) = p(00|11) = 0`.
pub fn tilted_hardy_strategy(eps: f64) -> Result<TwoQubitStrategy> {
    let theta = tilted_hardy_theta(eps)?;
    let s = theta.sin();
    let state = TwoQubitState::real([(theta / 2.0).cos(), 0.0, 0.0, -(theta / 2.0).sin()])?;
    let den = (2.0 - s) * (1.0 + s).sqrt();
    let o0 = QubitObservable::from_bloch([
        -(2.0f64).sqrt() * s * s.sqrt() / den,
        0.0,
        -(2.0 + s) * (1.0 - s).sqrt() / den,
    ])?;
    let o1 = QubitObservable::from_bloch([
        (2.0 * s / (1.0 + s)).sqrt(),
        0.0,
        -((1.0 - s) / (1.0 + s)).sqrt(),
    ])?;
    Ok(TwoQubitStrategy { state, alice: vec![o0, o1], bob: BobObservables::Shared(vec![o0, o1]), kappa: 0.0 })
}

/// Closed form of `p(00|00) + eps p(11|00)` for the tilted strategy:
/// `((4e+5)^{3/2} - (12e+11)) / (2(1+e))`.
pub fn tilted_hardy_value(eps: f64) -> Result<f64> {
    check_unit("eps", &eps)?;
    let r = 4.0 * eps + 5.0;
    Ok((r * r.sqrt() - (12.0 * eps + 11.0)) / (2.0 * (1.0 + eps)))
}

/// Maximally entangled state with `A0 = sz`, `A1 = sx` and Bob's
/// `B_{y,x}` tilted by `kappa`.
pub fn chsh_leak_strategy(kappa: f64) -> Result<TwoQubitStrategy> {
    check_unit("kappa", &kappa)?;
    let bob = if kappa <= std::f64::consts::FRAC_1_SQRT_2 {
        let r = (1.0 - kappa * kappa).sqrt();
        let k = std::f64::consts::FRAC_1_SQRT_2;
        let b = |sx: f64, sz: f64| QubitObservable::from_bloch([sx * k, 0.0, sz * k]);
        vec![
            vec![b(-kappa + r, kappa + r)?, b(kappa + r, -kappa + r)?],
            vec![b(kappa - r, kappa + r)?, b(-kappa - r, -kappa + r)?],
        ]
    } else {
        let (z, x) = (QubitObservable::sigma_z(), QubitObservable::sigma_x());
        vec![vec![z, x], vec![z, QubitObservable::from_bloch([-1.0, 0.0, 0.0])?]]
    };
    let s = TwoQubitStrategy {
        state: TwoQubitState::phi_plus(),
        alice: vec![QubitObservable::sigma_z(), QubitObservable::sigma_x()],
        bob: BobObservables::Leaky(bob),
        kappa,
    };
    s.validate()?;
    Ok(s)
}

/// `<A0 B00> + <A0 B10> + <A1 B01> - <A1 B11>` with
/// `<A_x B_y> = sum (-1)^{a+b} p(ab|xy)`.
pub fn chsh_leak_value(cond: &Behavior<f64>) -> Result<f64> {
    if cond.scenario() != BellScenario::CHSH || cond.kind() != crate::behavior::BehaviorKind::Conditional {
        return Err(BellError::InvalidScenario("CHSH value needs a (2,2;2,2) conditional table".into()));
    }
    let corr = |x: usize, y: usize| -> f64 {
        (0..2)
            .flat_map(|a| (0..2).map(move |b| (a, b)))
            .map(|(a, b)| if (a + b) % 2 == 0 { 1.0 } else { -1.0 } * cond.get(a, b, x, y))
            .sum()
    };
    Ok(corr(0, 0) + corr(0, 1) + corr(1, 0) - corr(1, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::signaling_deficit;

    #[test]
    fn tilted_theta_at_zero() {
        let t = tilted_hardy_theta(0.0).unwrap();
        assert!((t.sin() - (3.0 - 5f64.sqrt())).abs() < 1e-15);
        assert!((t - 0.869_384_7).abs() < 1e-6);
        let s = tilted_hardy_strategy(0.0).unwrap();
        let z = s.alice[1].bloch()[2];
        assert!((z + ((1.0 - t.sin()) / (1.0 + t.sin())).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tilted_limit_state() {
        let t = tilted_hardy_theta(1.0 - 1e-12).unwrap();
        assert!(t.abs() < 1e-11);
    }

    #[test]
    fn perfect_correlation() {
        let s = TwoQubitStrategy {
            state: TwoQubitState::phi_plus(),
            alice: vec![QubitObservable::sigma_z(), QubitObservable::sigma_x()],
            bob: BobObservables::Shared(vec![QubitObservable::sigma_z(), QubitObservable::sigma_x()]),
            kappa: 0.0,
        };
        let b = behavior_of(&s).unwrap();
        assert!((b.get(0, 0, 0, 0) - 0.5).abs() < 1e-15);
        assert!((b.get(1, 1, 0, 0) - 0.5).abs() < 1e-15);
        let (da, db) = signaling_deficit(&b).unwrap();
        assert!(da < 1e-12 && db < 1e-12);
    }

    #[test]
    fn norm_diff_examples() {
        let (z, x) = (QubitObservable::sigma_z(), QubitObservable::sigma_x());
        assert_eq!(operator_norm_diff(&z, &z), 0.0);
        assert!((operator_norm_diff(&z, &x) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn leak_strategy_collapses_at_zero() {
        let s = chsh_leak_strategy(0.0).unwrap();
        assert!(s.leakage_norm() < 1e-15);
        let b00 = s.bob_obs(0, 0).bloch();
        let k = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b00[0] - k).abs() < 1e-15 && (b00[2] - k).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(QubitObservable::from_bloch([1.0, 1.0, 0.0]).is_err());
        assert!(QubitObservable::new([[c(0.0), C::new(0.0, 1.0)], [C::new(0.0, 1.0), c(0.0)]]).is_err());
        assert!(TwoQubitState::real([1.0, 1.0, 0.0, 0.0]).is_err());
        assert!(tilted_hardy_strategy(1.0).is_err());
        assert!(chsh_leak_strategy(-0.1).is_err());
        let half = QubitObservable::from_bloch([0.5, 0.0, 0.0]).unwrap();
        let s = TwoQubitStrategy {
            state: TwoQubitState::phi_plus(),
            alice: vec![half, half],
            bob: BobObservables::Shared(vec![half, half]),
            kappa: 0.0,
        };
        assert!(matches!(behavior_of(&s), Err(BellError::InvalidObservable(_))));
    }

    #[test]
    fn leakage_bound_enforced() {
        let mut s = chsh_leak_strategy(0.5).unwrap();
        s.kappa = 0.1;
        assert!(s.validate().is_err());
    }
}
