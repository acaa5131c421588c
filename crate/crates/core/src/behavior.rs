//! Scenarios, probability tables and relaxation parameters.
//!
//! Every table is stored flat in row-major order with the nesting
//! `(x, y, a, b)`: inputs outermost, outcomes innermost. Input
//! distributions use `(x, y)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};
use crate::numeric::{Num, Policy, FLOAT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BellScenario {
    #[serde(rename = "nA")]
    n_a: usize,
    #[serde(rename = "nB")]
    n_b: usize,
    #[serde(rename = "nX")]
    n_x: usize,
    #[serde(rename = "nY")]
    n_y: usize,
}

impl BellScenario {
    /// The (2,2;2,2) scenario.
    pub const CHSH: BellScenario = BellScenario { n_a: 2, n_b: 2, n_x: 2, n_y: 2 };

    /// Only binary outcomes are supported; each party needs at least two inputs.
    pub fn new(n_a: usize, n_b: usize, n_x: usize, n_y: usize) -> Result<Self> {
        Self { n_a, n_b, n_x, n_y }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.n_a != 2 || self.n_b != 2 {
            return Err(BellError::InvalidScenario(format!(
                "outcome counts must be 2, got nA={}, nB={}",
                self.n_a, self.n_b
            )));
        }
        if self.n_x < 2 || self.n_y < 2 {
            return Err(BellError::InvalidScenario(format!(
                "input counts must be at least 2, got nX={}, nY={}",
                self.n_x, self.n_y
            )));
        }
        Ok(self)
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }
    pub fn n_b(&self) -> usize {
        self.n_b
    }
    pub fn n_x(&self) -> usize {
        self.n_x
    }
    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_inputs(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_a * self.n_b
    }

    /// Length of a joint or conditional table.
    pub fn table_len(&self) -> usize {
        self.n_inputs() * self.n_outcomes()
    }

    pub fn index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        ((x * self.n_y + y) * self.n_a + a) * self.n_b + b
    }

    pub fn input_index(&self, x: usize, y: usize) -> usize {
        x * self.n_y + y
    }

    pub fn len_of(&self, kind: BehaviorKind) -> usize {
        match kind {
            BehaviorKind::Input => self.n_inputs(),
            BehaviorKind::Conditional | BehaviorKind::Joint => self.table_len(),
        }
    }
}

impl fmt::Display for BellScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{};{},{})", self.n_a, self.n_b, self.n_x, self.n_y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorKind {
    Conditional,
    Joint,
    Input,
}

impl fmt::Display for BehaviorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BehaviorKind::Conditional => "conditional",
            BehaviorKind::Joint => "joint",
            BehaviorKind::Input => "input",
        })
    }
}

/// A validated probability table: conditional `p(ab|xy)`, joint `p(abxy)`
/// or input distribution `p(xy)`. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior<T> {
    scenario: BellScenario,
    kind: BehaviorKind,
    values: Vec<T>,
}

fn tol_for<T: Num>() -> f64 {
    match T::POLICY {
        Policy::Exact => 0.0,
        Policy::Float => FLOAT_TOL,
    }
}

impl<T: Num> Behavior<T> {
    pub fn new(scenario: BellScenario, kind: BehaviorKind, values: Vec<T>) -> Result<Self> {
        let scenario = scenario.validated()?;
        let expected = scenario.len_of(kind);
        if values.len() != expected {
            return Err(BellError::DimensionMismatch { expected, got: values.len() });
        }
        let tol = tol_for::<T>();
        if let Some(i) = values.iter().position(|v| v.definitely_lt(&T::zero(), tol)) {
            return Err(BellError::InvalidBehavior(format!("entry {i} is negative ({})", values[i])));
        }
        let block = match kind {
            BehaviorKind::Conditional => scenario.n_outcomes(),
            BehaviorKind::Joint | BehaviorKind::Input => values.len(),
        };
        for (k, chunk) in values.chunks(block).enumerate() {
            let s = chunk.iter().fold(T::zero(), |acc, v| acc + v.clone());
            if !s.approx_eq(&T::one(), tol) {
                let what = match kind {
                    BehaviorKind::Conditional => format!("block {k}"),
                    _ => "table".to_string(),
                };
                return Err(BellError::InvalidBehavior(format!(
                    "{kind} {what} sums to {} instead of 1",
                    s.to_f64()
                )));
            }
        }
        Ok(Self { scenario, kind, values })
    }

    pub fn conditional(scenario: BellScenario, values: Vec<T>) -> Result<Self> {
        Self::new(scenario, BehaviorKind::Conditional, values)
    }

    pub fn joint(scenario: BellScenario, values: Vec<T>) -> Result<Self> {
        Self::new(scenario, BehaviorKind::Joint, values)
    }

    pub fn input(scenario: BellScenario, values: Vec<T>) -> Result<Self> {
        Self::new(scenario, BehaviorKind::Input, values)
    }

    /// Uniform input distribution.
    pub fn uniform_input(scenario: BellScenario) -> Result<Self> {
        let n = scenario.n_inputs() as i64;
        Self::input(scenario, vec![T::ratio(1, n); n as usize])
    }

    pub fn scenario(&self) -> BellScenario {
        self.scenario
    }

    pub fn kind(&self) -> BehaviorKind {
        self.kind
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// `p(ab|xy)` or `p(abxy)` depending on the kind.
    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> &T {
        &self.values[self.scenario.index(a, b, x, y)]
    }

    fn expect_kind(&self, kind: BehaviorKind) -> Result<()> {
        if self.kind != kind {
            return Err(BellError::InvalidBehavior(format!("expected a {kind} table, got {}", self.kind)));
        }
        Ok(())
    }

    pub fn map<U: Num>(&self, f: impl Fn(&T) -> U) -> Result<Behavior<U>> {
        Behavior::new(self.scenario, self.kind, self.values.iter().map(f).collect())
    }
}

fn same_scenario(l: BellScenario, r: BellScenario) -> Result<()> {
    if l != r {
        return Err(BellError::ScenarioMismatch { left: l.to_string(), right: r.to_string() });
    }
    Ok(())
}

/// `p(abxy) = p(ab|xy) p(xy)`.
pub fn joint_from_conditional<T: Num>(cond: &Behavior<T>, inp: &Behavior<T>) -> Result<Behavior<T>> {
    cond.expect_kind(BehaviorKind::Conditional)?;
    inp.expect_kind(BehaviorKind::Input)?;
    same_scenario(cond.scenario, inp.scenario)?;
    let block = cond.scenario.n_outcomes();
    let values = cond
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v.clone() * inp.values[i / block].clone())
        .collect();
    Behavior::joint(cond.scenario, values)
}

/// Splits a joint table into `p(xy)` and `p(ab|xy)`. Blocks with zero input
/// probability are filled with the uniform distribution.
pub fn condition<T: Num>(joint: &Behavior<T>) -> Result<(Behavior<T>, Behavior<T>)> {
    joint.expect_kind(BehaviorKind::Joint)?;
    let sc = joint.scenario;
    let block = sc.n_outcomes();
    let mut inp = Vec::with_capacity(sc.n_inputs());
    let mut cond = Vec::with_capacity(sc.table_len());
    for chunk in joint.values.chunks(block) {
        let w = chunk.iter().fold(T::zero(), |acc, v| acc + v.clone());
        if w.is_negligible() {
            cond.extend(std::iter::repeat(T::ratio(1, block as i64)).take(block));
        } else {
            cond.extend(chunk.iter().map(|v| v.clone() / w.clone()));
        }
        inp.push(w);
    }
    Ok((Behavior::input(sc, inp)?, Behavior::conditional(sc, cond)?))
}

/// Single-party marginals of a conditional table, indexed as `[x][y][outcome]`
/// flattened in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals<T> {
    scenario: BellScenario,
    alice: Vec<T>,
    bob: Vec<T>,
}

impl<T> Marginals<T> {
    /// `pA(a|x,y)`
    pub fn alice(&self, a: usize, x: usize, y: usize) -> &T {
        &self.alice[self.scenario.input_index(x, y) * self.scenario.n_a() + a]
    }

    /// `pB(b|x,y)`
    pub fn bob(&self, b: usize, x: usize, y: usize) -> &T {
        &self.bob[self.scenario.input_index(x, y) * self.scenario.n_b() + b]
    }
}

pub fn marginals<T: Num>(cond: &Behavior<T>) -> Result<Marginals<T>> {
    cond.expect_kind(BehaviorKind::Conditional)?;
    let sc = cond.scenario;
    let mut alice = Vec::with_capacity(sc.n_inputs() * sc.n_a());
    let mut bob = Vec::with_capacity(sc.n_inputs() * sc.n_b());
    for x in 0..sc.n_x() {
        for y in 0..sc.n_y() {
            for a in 0..sc.n_a() {
                alice.push((0..sc.n_b()).fold(T::zero(), |acc, b| acc + cond.get(a, b, x, y).clone()));
            }
            for b in 0..sc.n_b() {
                bob.push((0..sc.n_a()).fold(T::zero(), |acc, a| acc + cond.get(a, b, x, y).clone()));
            }
        }
    }
    Ok(Marginals { scenario: sc, alice, bob })
}

fn tv<T: Num>(p: impl Iterator<Item = T>, q: impl Iterator<Item = T>) -> T {
    p.zip(q).fold(T::zero(), |acc, (u, v)| acc + (u - v).abs_val()) * T::ratio(1, 2)
}

/// Largest total-variation shift of each party's marginal under a change of
/// the other party's input: `(dA, dB)`.
pub fn signaling_deficit<T: Num>(cond: &Behavior<T>) -> Result<(T, T)> {
    let m = marginals(cond)?;
    let sc = cond.scenario;
    let mut d_a = T::zero();
    for x in 0..sc.n_x() {
        for y in 0..sc.n_y() {
            for y2 in y + 1..sc.n_y() {
                let d = tv((0..sc.n_a()).map(|a| m.alice(a, x, y).clone()), (0..sc.n_a()).map(|a| m.alice(a, x, y2).clone()));
                if d > d_a {
                    d_a = d;
                }
            }
        }
    }
    let mut d_b = T::zero();
    for y in 0..sc.n_y() {
        for x in 0..sc.n_x() {
            for x2 in x + 1..sc.n_x() {
                let d = tv((0..sc.n_b()).map(|b| m.bob(b, x, y).clone()), (0..sc.n_b()).map(|b| m.bob(b, x2, y).clone()));
                if d > d_b {
                    d_b = d;
                }
            }
        }
    }
    Ok((d_a, d_b))
}

/// Relaxation knobs: input box `l <= p(xy) <= h`, parameter-dependence
/// bounds `eps_a`, `eps_b`, and the leakage bound `kappa`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxationParams<T> {
    pub l: T,
    pub h: T,
    pub eps_a: T,
    pub eps_b: T,
    pub kappa: T,
}

impl<T: Num> RelaxationParams<T> {
    pub fn new(scenario: BellScenario, l: T, h: T, eps_a: T, eps_b: T, kappa: T) -> Result<Self> {
        let p = Self { l, h, eps_a, eps_b, kappa };
        p.validate(scenario)?;
        Ok(p)
    }

    /// Uniform inputs (`l = h = 1/(nX nY)`), no leakage.
    pub fn pd(scenario: BellScenario, eps_a: T, eps_b: T) -> Result<Self> {
        let u = T::ratio(1, scenario.n_inputs() as i64);
        Self::new(scenario, u.clone(), u, eps_a, eps_b, T::zero())
    }

    pub fn validate(&self, scenario: BellScenario) -> Result<()> {
        let bad = |m: String| Err(BellError::InvalidParams(m));
        if !(self.l > T::zero() && self.l <= self.h && self.h <= T::one()) {
            return bad(format!("need 0 < l <= h <= 1, got l={}, h={}", self.l, self.h));
        }
        let n = T::from_i64(scenario.n_inputs() as i64);
        let tol = tol_for::<T>();
        if (self.l.clone() * n.clone()).definitely_gt(&T::one(), tol)
            || (self.h.clone() * n).definitely_lt(&T::one(), tol)
        {
            return bad(format!("input box l={}, h={} admits no distribution", self.l, self.h));
        }
        check_unit("epsA", &self.eps_a)?;
        check_unit("epsB", &self.eps_b)?;
        check_unit("kappa", &self.kappa)
    }
}

/// Checks `0 <= v < 1`.
pub(crate) fn check_unit<T: Num>(name: &str, v: &T) -> Result<()> {
    if *v < T::zero() || *v >= T::one() {
        return Err(BellError::OutOfRange(format!("{name} must lie in [0, 1), got {}", v)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{q, Rational};

    fn det_cond() -> Behavior<Rational> {
        let sc = BellScenario::CHSH;
        let mut v = vec![q(0, 1); 16];
        for x in 0..2 {
            for y in 0..2 {
                v[sc.index(0, 0, x, y)] = q(1, 1);
            }
        }
        Behavior::conditional(sc, v).unwrap()
    }

    #[test]
    fn scenario_validation() {
        assert!(BellScenario::new(3, 2, 2, 2).is_err());
        assert!(BellScenario::new(2, 2, 1, 2).is_err());
        let sc = BellScenario::new(2, 2, 3, 2).unwrap();
        assert_eq!(sc.table_len(), 24);
        assert_eq!(BellScenario::CHSH.index(1, 0, 1, 0), 10);
    }

    #[test]
    fn uniform_times_deterministic() {
        let inp = Behavior::uniform_input(BellScenario::CHSH).unwrap();
        let j = joint_from_conditional(&det_cond(), &inp).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(*j.get(0, 0, x, y), q(1, 4));
                assert_eq!(*j.get(1, 1, x, y), q(0, 1));
            }
        }
    }

    #[test]
    fn unnormalised_input_rejected() {
        let r = Behavior::input(BellScenario::CHSH, vec![0.3, 0.2, 0.2, 0.2]);
        assert!(matches!(r, Err(BellError::InvalidBehavior(_))));
        let r = Behavior::input(BellScenario::CHSH, vec![q(1, 2), q(1, 2), q(1, 2), q(-1, 2)]);
        assert!(matches!(r, Err(BellError::InvalidBehavior(_))));
    }

    #[test]
    fn scenario_mismatch() {
        let inp = Behavior::uniform_input(BellScenario::new(2, 2, 3, 2).unwrap()).unwrap();
        assert!(matches!(
            joint_from_conditional(&det_cond(), &inp),
            Err(BellError::ScenarioMismatch { .. })
        ));
    }

    #[test]
    fn product_vertex_marginals_and_deficit() {
        // Alice non-signalling with pA(0)=eps everywhere; Bob pair (0, eps) for each y.
        let eps = q(1, 4);
        let sc = BellScenario::CHSH;
        let mut v = vec![q(0, 1); 16];
        for x in 0..2 {
            for y in 0..2 {
                let pa = eps.clone();
                let pb = if x == 0 { q(0, 1) } else { eps.clone() };
                for a in 0..2 {
                    for b in 0..2 {
                        let fa = if a == 0 { pa.clone() } else { q(1, 1) - pa.clone() };
                        let fb = if b == 0 { pb.clone() } else { q(1, 1) - pb.clone() };
                        v[sc.index(a, b, x, y)] = fa * fb;
                    }
                }
            }
        }
        let c = Behavior::conditional(sc, v).unwrap();
        let m = marginals(&c).unwrap();
        assert_eq!(*m.alice(0, 1, 1), eps);
        assert_eq!(*m.bob(0, 1, 0), eps);
        assert_eq!(signaling_deficit(&c).unwrap(), (q(0, 1), eps));
    }

    #[test]
    fn uniform_conditional_marginals() {
        let c = Behavior::conditional(BellScenario::CHSH, vec![0.25; 16]).unwrap();
        let m = marginals(&c).unwrap();
        assert_eq!(*m.alice(1, 0, 1), 0.5);
        assert_eq!(*m.bob(0, 1, 1), 0.5);
    }

    #[test]
    fn params_validation() {
        let sc = BellScenario::CHSH;
        assert!(RelaxationParams::new(sc, q(1, 8), q(1, 2), q(1, 4), q(1, 4), q(0, 1)).is_ok());
        assert!(RelaxationParams::new(sc, q(1, 3), q(1, 2), q(0, 1), q(0, 1), q(0, 1)).is_err());
        assert!(RelaxationParams::new(sc, q(1, 8), q(1, 5), q(0, 1), q(0, 1), q(0, 1)).is_err());
        assert!(RelaxationParams::new(sc, q(1, 4), q(1, 4), q(1, 1), q(0, 1), q(0, 1)).is_err());
        assert!(RelaxationParams::new(sc, q(0, 1), q(1, 4), q(0, 1), q(0, 1), q(0, 1)).is_err());
    }

    #[test]
    fn conditioning_handles_zero_blocks() {
        let sc = BellScenario::CHSH;
        let mut v = vec![q(0, 1); 16];
        v[sc.index(0, 0, 0, 0)] = q(1, 2);
        v[sc.index(1, 1, 1, 1)] = q(1, 2);
        let (inp, cond) = condition(&Behavior::joint(sc, v).unwrap()).unwrap();
        assert_eq!(inp.values(), &[q(1, 2), q(0, 1), q(0, 1), q(1, 2)]);
        assert_eq!(*cond.get(1, 0, 0, 1), q(1, 4));
    }
}
