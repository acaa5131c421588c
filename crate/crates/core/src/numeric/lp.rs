//! Two-phase revised simplex over `A x = b, x >= 0`.
//!
//! Dantzig pricing with a Bland fallback on degenerate stretches; ties in
//! the ratio test go to the smallest basic index. Phase 1 puts
//! an artificial variable on every row; dual vectors and infeasibility
//! certificates are read from `c_B^T B^-1`.

use super::{dot, DenseMatrix, Num, Policy, FLOAT_TOL};
use crate::error::{BellError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpSense {
    Feasibility,
    Maximize,
}

#[derive(Clone, Debug)]
pub struct LpProblem<T> {
    pub a: DenseMatrix<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
    pub sense: LpSense,
}

impl<T: Num> LpProblem<T> {
    pub fn feasibility(a: DenseMatrix<T>, b: Vec<T>) -> Result<Self> {
        let c = vec![T::zero(); a.cols()];
        Self::new(a, b, c, LpSense::Feasibility)
    }

    pub fn maximize(a: DenseMatrix<T>, b: Vec<T>, c: Vec<T>) -> Result<Self> {
        Self::new(a, b, c, LpSense::Maximize)
    }

    fn new(a: DenseMatrix<T>, b: Vec<T>, c: Vec<T>, sense: LpSense) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(BellError::DimensionMismatch { expected: a.rows(), got: b.len() });
        }
        if c.len() != a.cols() {
            return Err(BellError::DimensionMismatch { expected: a.cols(), got: c.len() });
        }
        Ok(Self { a, b, c, sense })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    Feasible { x: Vec<T> },
    Optimal { x: Vec<T>, dual: Vec<T>, objective: T },
    /// `y` with `y^T A <= 0` and `y^T b > 0`.
    Infeasible { certificate: Vec<T> },
    Unbounded { x: Vec<T>, ray: Vec<T> },
}

impl<T> LpOutcome<T> {
    pub fn status(&self) -> &'static str {
        match self {
            LpOutcome::Feasible { .. } => "feasible",
            LpOutcome::Optimal { .. } => "optimal",
            LpOutcome::Infeasible { .. } => "infeasible",
            LpOutcome::Unbounded { .. } => "unbounded",
        }
    }
}

const MAX_PIVOTS: usize = 200_000;
const DEGENERATE_STREAK: usize = 50;

/// Revised simplex state: only `B^-1` and `B^-1 b` are stored, columns are
/// formed on demand, which keeps exact runs on wide vertex matrices cheap.
struct Revised<'a, T> {
    a: &'a DenseMatrix<T>,
    sign: &'a [T],
    m: usize,
    n: usize,
    binv: Vec<Vec<T>>,
    xb: Vec<T>,
    basis: Vec<usize>,
    pivots: usize,
}

impl<T: Num> Revised<'_, T> {
    /// Entry `i` of column `j` of the row-signed matrix `[A | I]`.
    fn entry(&self, i: usize, j: usize) -> T {
        if j < self.n {
            let v = self.a.get(i, j);
            if v.near_zero(0.0) {
                T::zero()
            } else {
                self.sign[i].clone() * v.clone()
            }
        } else if j - self.n == i {
            T::one()
        } else {
            T::zero()
        }
    }

    /// `y . column j`.
    fn price(&self, y: &[T], j: usize) -> T {
        if j >= self.n {
            return y[j - self.n].clone();
        }
        (0..self.m).fold(T::zero(), |acc, i| {
            let v = self.a.get(i, j);
            if v.near_zero(0.0) || y[i].near_zero(0.0) {
                acc
            } else {
                acc + y[i].clone() * self.sign[i].clone() * v.clone()
            }
        })
    }

    /// `B^-1` times column `j`.
    fn column(&self, j: usize) -> Vec<T> {
        let col: Vec<T> = (0..self.m).map(|i| self.entry(i, j)).collect();
        self.binv
            .iter()
            .map(|row| {
                row.iter().zip(&col).fold(T::zero(), |acc, (r, c)| {
                    if r.near_zero(0.0) || c.near_zero(0.0) {
                        acc
                    } else {
                        acc + r.clone() * c.clone()
                    }
                })
            })
            .collect()
    }

    /// `c_B^T B^-1`.
    fn duals(&self, cost: &impl Fn(usize) -> T) -> Vec<T> {
        (0..self.m)
            .map(|k| {
                (0..self.m).fold(T::zero(), |acc, i| {
                    let c = cost(self.basis[i]);
                    if c.near_zero(0.0) {
                        acc
                    } else {
                        acc + c * self.binv[i][k].clone()
                    }
                })
            })
            .collect()
    }

    fn pivot(&mut self, r: usize, u: &[T]) -> Result<()> {
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(BellError::NumericBreakdown("simplex pivot limit exceeded".into()));
        }
        let pv = u[r].clone();
        for v in self.binv[r].iter_mut() {
            *v = v.clone() / pv.clone();
        }
        self.xb[r] = self.xb[r].clone() / pv;
        for i in 0..self.m {
            if i == r || u[i].near_zero(0.0) {
                continue;
            }
            let f = u[i].clone();
            for k in 0..self.m {
                let pr = &self.binv[r][k];
                if !pr.near_zero(0.0) {
                    self.binv[i][k] = self.binv[i][k].clone() - f.clone() * pr.clone();
                }
            }
            self.xb[i] = self.xb[i].clone() - f * self.xb[r].clone();
        }
        Ok(())
    }

    /// Simplex iterations over entering columns `0..limit` for the
    /// objective `max cost . x`. Returns `Some((column, B^-1 column))` if
    /// that column proves unboundedness.
    ///
    /// Entering columns follow Dantzig's rule; after `DEGENERATE_STREAK`
    /// pivots without progress the smallest-index (Bland) rule takes over
    /// until a pivot moves the objective, which rules out cycling.
    fn run(&mut self, limit: usize, cost: &impl Fn(usize) -> T) -> Result<Option<(usize, Vec<T>)>> {
        let mut stalled = 0usize;
        loop {
            let y = self.duals(cost);
            let reduced = |j: usize| cost(j) - self.price(&y, j);
            let entering = if stalled < DEGENERATE_STREAK {
                let mut best: Option<(usize, T)> = None;
                for j in (0..limit).filter(|j| !self.basis.contains(j)) {
                    let d = reduced(j);
                    if d.definitely_gt(&T::zero(), FLOAT_TOL) && best.as_ref().map_or(true, |(_, b)| d > *b) {
                        best = Some((j, d));
                    }
                }
                best.map(|(j, _)| j)
            } else {
                (0..limit).find(|&j| !self.basis.contains(&j) && reduced(j).definitely_gt(&T::zero(), FLOAT_TOL))
            };
            let Some(e) = entering else {
                return Ok(None);
            };
            let u = self.column(e);
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.m {
                if !u[i].definitely_gt(&T::zero(), FLOAT_TOL) {
                    continue;
                }
                let ratio = self.xb[i].clone() / u[i].clone();
                let better = match &leave {
                    None => true,
                    Some((bi, br)) => {
                        if ratio.approx_eq(br, FLOAT_TOL) {
                            self.basis[i] < self.basis[*bi]
                        } else {
                            ratio < *br
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, ratio)) => {
                    if ratio.near_zero(FLOAT_TOL) {
                        stalled += 1;
                    } else {
                        stalled = 0;
                    }
                    self.pivot(r, &u)?;
                    self.basis[r] = e;
                }
                None => return Ok(Some((e, u))),
            }
        }
    }

    fn primal(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        for (i, &bv) in self.basis.iter().enumerate() {
            if bv < self.n {
                x[bv] = self.xb[i].clone();
            }
        }
        x
    }
}

/// Solves the problem and verifies the answer by re-substitution before
/// returning it.
pub fn lp_solve<T: Num>(p: &LpProblem<T>) -> Result<LpOutcome<T>> {
    let (m, n) = (p.a.rows(), p.a.cols());
    let sign: Vec<T> = p.b.iter().map(|b| if *b < T::zero() { -T::one() } else { T::one() }).collect();
    let mut binv = vec![vec![T::zero(); m]; m];
    for (i, row) in binv.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let xb: Vec<T> = p.b.iter().zip(&sign).map(|(b, s)| b.clone() * s.clone()).collect();
    let mut rs = Revised { a: &p.a, sign: &sign, m, n, binv, xb, basis: (n..n + m).collect(), pivots: 0 };

    // phase 1: maximise -sum(artificials)
    let phase1 = |j: usize| if j >= n { -T::one() } else { T::zero() };
    rs.run(n, &phase1)?;
    let infeasibility = (0..m)
        .filter(|&i| rs.basis[i] >= n)
        .fold(T::zero(), |acc, i| acc + rs.xb[i].clone());
    if infeasibility.definitely_gt(&T::zero(), FLOAT_TOL) {
        let y = rs.duals(&phase1);
        let certificate: Vec<T> = y.into_iter().zip(&sign).map(|(yk, s)| -(yk * s.clone())).collect();
        verify_certificate(p, &certificate)?;
        return Ok(LpOutcome::Infeasible { certificate });
    }

    // drive zero-level artificials out of the basis where possible
    for i in 0..m {
        if rs.basis[i] < n {
            continue;
        }
        let row_entry = |j: usize| -> T {
            (0..m).fold(T::zero(), |acc, k| {
                let v = p.a.get(k, j);
                if v.near_zero(0.0) {
                    acc
                } else {
                    acc + rs.binv[i][k].clone() * sign[k].clone() * v.clone()
                }
            })
        };
        let candidate = match T::POLICY {
            Policy::Exact => (0..n).find(|&j| !rs.basis.contains(&j) && !row_entry(j).near_zero(0.0)),
            Policy::Float => (0..n)
                .filter(|&j| !rs.basis.contains(&j))
                .map(|j| (j, row_entry(j).abs_val()))
                .filter(|(_, v)| !v.near_zero(FLOAT_TOL))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
                .map(|(j, _)| j),
        };
        if let Some(j) = candidate {
            let u = rs.column(j);
            rs.pivot(i, &u)?;
            rs.basis[i] = j;
        }
    }

    if p.sense == LpSense::Feasibility {
        let x = rs.primal();
        verify_primal(p, &x)?;
        return Ok(LpOutcome::Feasible { x });
    }

    // phase 2
    let cost = |j: usize| if j < n { p.c[j].clone() } else { T::zero() };
    if let Some((e, u)) = rs.run(n, &cost)? {
        let x = rs.primal();
        verify_primal(p, &x)?;
        let mut ray = vec![T::zero(); n];
        ray[e] = T::one();
        for i in 0..m {
            if rs.basis[i] < n {
                ray[rs.basis[i]] = -u[i].clone();
            }
        }
        return Ok(LpOutcome::Unbounded { x, ray });
    }
    let x = rs.primal();
    verify_primal(p, &x)?;
    let dual: Vec<T> = rs.duals(&cost).into_iter().zip(&sign).map(|(yk, s)| yk * s.clone()).collect();
    verify_dual(p, &x, &dual)?;
    let objective = dot(&p.c, &x);
    Ok(LpOutcome::Optimal { x, dual, objective })
}

fn residual_tol<T: Num>() -> f64 {
    match T::POLICY {
        Policy::Exact => 0.0,
        Policy::Float => FLOAT_TOL,
    }
}

fn verify_primal<T: Num>(p: &LpProblem<T>, x: &[T]) -> Result<()> {
    let tol = residual_tol::<T>();
    if let Some(j) = x.iter().position(|v| v.definitely_lt(&T::zero(), tol)) {
        return Err(BellError::NumericBreakdown(format!("primal x[{j}] = {} is negative", x[j])));
    }
    for i in 0..p.a.rows() {
        let lhs = dot(p.a.row(i), x);
        if !lhs.approx_eq(&p.b[i], tol) {
            return Err(BellError::NumericBreakdown(format!(
                "row {i} residual {:?}",
                (lhs - p.b[i].clone()).to_f64()
            )));
        }
    }
    Ok(())
}

fn verify_certificate<T: Num>(p: &LpProblem<T>, y: &[T]) -> Result<()> {
    let tol = residual_tol::<T>();
    for j in 0..p.a.cols() {
        let col = (0..p.a.rows()).fold(T::zero(), |acc, i| acc + y[i].clone() * p.a.get(i, j).clone());
        if col.definitely_gt(&T::zero(), tol) {
            return Err(BellError::NumericBreakdown(format!("certificate fails on column {j}")));
        }
    }
    if !dot(y, &p.b).definitely_gt(&T::zero(), tol) {
        return Err(BellError::NumericBreakdown("certificate has y^T b <= 0".into()));
    }
    Ok(())
}

fn verify_dual<T: Num>(p: &LpProblem<T>, x: &[T], y: &[T]) -> Result<()> {
    let tol = residual_tol::<T>();
    for j in 0..p.a.cols() {
        let col = (0..p.a.rows()).fold(T::zero(), |acc, i| acc + y[i].clone() * p.a.get(i, j).clone());
        let slack = col - p.c[j].clone();
        if slack.definitely_lt(&T::zero(), tol) {
            return Err(BellError::NumericBreakdown(format!("dual infeasible on column {j}")));
        }
        if !(slack * x[j].clone()).near_zero(tol) {
            return Err(BellError::NumericBreakdown(format!("complementary slackness fails on column {j}")));
        }
    }
    Ok(())
}
