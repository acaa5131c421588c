//! Polytope queries over vertex lists: named inequalities, maxima,
//! saturating sets, dimension, facet checks and LP membership.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::behavior::{check_unit, Behavior, BehaviorKind, BellScenario, RelaxationParams};
use crate::error::{BellError, Result};
use crate::numeric::{affine_rank, dot, lp_solve, DenseMatrix, LpOutcome, LpProblem, Num, Policy, FLOAT_TOL};
use crate::vertices::VertexSet;

/// `coeffs . p <= bound` over a flat table of the given kind.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFunctional<T> {
    pub scenario: BellScenario,
    pub kind: BehaviorKind,
    pub coeffs: Vec<T>,
    pub bound: T,
}

impl<T: Num> LinearFunctional<T> {
    pub fn new(scenario: BellScenario, kind: BehaviorKind, coeffs: Vec<T>, bound: T) -> Result<Self> {
        let d = scenario.len_of(kind);
        if coeffs.len() != d {
            return Err(BellError::DimensionMismatch { expected: d, got: coeffs.len() });
        }
        Ok(Self { scenario, kind, coeffs, bound })
    }

    pub fn evaluate(&self, p: &[T]) -> Result<T> {
        if p.len() != self.coeffs.len() {
            return Err(BellError::DimensionMismatch { expected: self.coeffs.len(), got: p.len() });
        }
        Ok(dot(&self.coeffs, p))
    }

    /// Evaluates on a behavior after checking kind and scenario.
    pub fn evaluate_behavior(&self, p: &Behavior<T>) -> Result<T> {
        self.check_compatible(p.scenario(), p.kind())?;
        self.evaluate(p.values())
    }

    /// `value - bound`; positive means violated.
    pub fn margin(&self, p: &Behavior<T>) -> Result<T> {
        Ok(self.evaluate_behavior(p)? - self.bound.clone())
    }

    fn check_compatible(&self, scenario: BellScenario, kind: BehaviorKind) -> Result<()> {
        if scenario != self.scenario {
            return Err(BellError::ScenarioMismatch { left: self.scenario.to_string(), right: scenario.to_string() });
        }
        if kind != self.kind {
            return Err(BellError::InvalidBehavior(format!("functional acts on {} tables, got {kind}", self.kind)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InequalityName {
    Mdl,
    PdFacet,
    Mdpdl,
    Chsh,
    ChshLeak,
}

impl InequalityName {
    pub const ALL: [InequalityName; 5] =
        [InequalityName::Mdl, InequalityName::PdFacet, InequalityName::Mdpdl, InequalityName::Chsh, InequalityName::ChshLeak];

    pub fn as_str(&self) -> &'static str {
        match self {
            InequalityName::Mdl => "mdl",
            InequalityName::PdFacet => "pd_facet",
            InequalityName::Mdpdl => "mdpdl",
            InequalityName::Chsh => "chsh",
            InequalityName::ChshLeak => "chsh_leak",
        }
    }

    /// Which table the functional is written on.
    pub fn kind(&self) -> BehaviorKind {
        match self {
            InequalityName::Mdl | InequalityName::Mdpdl => BehaviorKind::Joint,
            _ => BehaviorKind::Conditional,
        }
    }
}

impl fmt::Display for InequalityName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InequalityName {
    type Err = BellError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s || n.as_str().replace('_', "-") == s)
            .ok_or_else(|| BellError::UnknownInequality(s.to_string()))
    }
}

/// Builds one of the named (2,2;2,2) inequalities. Marginal terms such as
/// `p(xy)` are expanded into joint coefficients here.
///
/// * `mdl`: `l p(0000) - h [p(0101) + p(1010) + p(0011)] <= 0` (joint)
/// * `pd_facet`: `(1-e) p(00|00) + e(1-e) p(11|00) - p(01|01) - p(10|10) - p(00|11) <= e(1-e)`
/// * `mdpdl`: `l(1-e)[p(0000) + e p(1100) - e p(xy=00)] - h [...] <= 0` (joint)
/// * `chsh`: `E00 + E01 + E10 - E11 <= 2`
/// * `chsh_leak`: same coefficients, bound `2 + 2 kappa`
///
/// `pd_facet` and `mdpdl` need `eps_a == eps_b`.
pub fn build_inequality<T: Num>(
    name: InequalityName,
    params: &RelaxationParams<T>,
    scenario: BellScenario,
) -> Result<LinearFunctional<T>> {
    if scenario != BellScenario::CHSH {
        return Err(BellError::InvalidScenario(format!("{name} is defined for (2,2;2,2), got {scenario}")));
    }
    let sc = scenario;
    let kind = name.kind();
    let mut c = vec![T::zero(); sc.len_of(kind)];
    let sym_eps = || -> Result<T> {
        if !params.eps_a.approx_eq(&params.eps_b, 0.0) {
            return Err(BellError::InvalidParams(format!("{name} needs epsA == epsB")));
        }
        check_unit("eps", &params.eps_a)?;
        Ok(params.eps_a.clone())
    };
    let hardy_zeros = |c: &mut Vec<T>, w: T| {
        c[sc.index(0, 1, 0, 1)] = -w.clone();
        c[sc.index(1, 0, 1, 0)] = -w.clone();
        c[sc.index(0, 0, 1, 1)] = -w;
    };
    let bound = match name {
        InequalityName::Mdl => {
            c[sc.index(0, 0, 0, 0)] = params.l.clone();
            hardy_zeros(&mut c, params.h.clone());
            T::zero()
        }
        InequalityName::Mdpdl => {
            let e = sym_eps()?;
            let lw = params.l.clone() * (T::one() - e.clone());
            c[sc.index(0, 0, 0, 0)] = lw.clone();
            c[sc.index(1, 1, 0, 0)] = lw.clone() * e.clone();
            for a in 0..2 {
                for b in 0..2 {
                    let i = sc.index(a, b, 0, 0);
                    c[i] = c[i].clone() - lw.clone() * e.clone();
                }
            }
            hardy_zeros(&mut c, params.h.clone());
            T::zero()
        }
        InequalityName::PdFacet => {
            let e = sym_eps()?;
            let ce = T::one() - e.clone();
            c[sc.index(0, 0, 0, 0)] = ce.clone();
            c[sc.index(1, 1, 0, 0)] = e.clone() * ce.clone();
            hardy_zeros(&mut c, T::one());
            e * ce
        }
        InequalityName::Chsh | InequalityName::ChshLeak => {
            for x in 0..2 {
                for y in 0..2 {
                    let s = if x == 1 && y == 1 { -1 } else { 1 };
                    for a in 0..2 {
                        for b in 0..2 {
                            let sign = if (a + b) % 2 == 0 { s } else { -s };
                            c[sc.index(a, b, x, y)] = T::from_i64(sign);
                        }
                    }
                }
            }
            if name == InequalityName::Chsh {
                T::from_i64(2)
            } else {
                check_unit("kappa", &params.kappa)?;
                T::from_i64(2) + T::from_i64(2) * params.kappa.clone()
            }
        }
    };
    LinearFunctional::new(sc, kind, c, bound)
}

fn check_set<T: Num>(f: &LinearFunctional<T>, v: &VertexSet<T>) -> Result<()> {
    f.check_compatible(v.scenario, v.kind)?;
    if v.is_empty() {
        return Err(BellError::Empty("vertex set"));
    }
    Ok(())
}

fn tie_tol<T: Num>() -> f64 {
    match T::POLICY {
        Policy::Exact => 0.0,
        Policy::Float => FLOAT_TOL,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxResult<T> {
    pub value: T,
    /// Indices into the vertex list, ascending (= canonical order).
    pub argmax: Vec<usize>,
}

pub fn max_over_vertices<T: Num>(f: &LinearFunctional<T>, v: &VertexSet<T>) -> Result<MaxResult<T>> {
    check_set(f, v)?;
    let values: Vec<T> = v.vertices.par_iter().map(|p| dot(&f.coeffs, p)).collect();
    let value = values
        .iter()
        .cloned()
        .reduce(|m, x| if x > m { x } else { m })
        .expect("nonempty");
    let tol = tie_tol::<T>();
    let argmax = values.iter().enumerate().filter(|(_, x)| x.approx_eq(&value, tol)).map(|(i, _)| i).collect();
    Ok(MaxResult { value, argmax })
}

/// Vertices on the hyperplane `coeffs . p = bound`.
pub fn saturating_vertices<T: Num>(f: &LinearFunctional<T>, v: &VertexSet<T>) -> Result<VertexSet<T>> {
    check_set(f, v)?;
    let tol = tie_tol::<T>();
    let vertices = v
        .vertices
        .iter()
        .filter(|p| dot(&f.coeffs, p).approx_eq(&f.bound, tol))
        .cloned()
        .collect();
    Ok(VertexSet { vertices, ..v.clone() })
}

/// Affine dimension of the convex hull.
pub fn polytope_dim<T: Num>(v: &VertexSet<T>) -> Result<usize> {
    affine_rank(&v.vertices)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FacetReport<T> {
    pub facet: bool,
    pub saturating_count: usize,
    pub saturating_dim: usize,
    pub polytope_dim: usize,
    /// `saturating_dim + 1` affinely independent saturating vertices.
    pub witness: Vec<Vec<T>>,
}

/// Checks validity of `f` on `v`, then compares the affine dimension of the
/// saturating set with `polytope_dim(v) - 1`.
pub fn is_facet<T: Num>(f: &LinearFunctional<T>, v: &VertexSet<T>) -> Result<FacetReport<T>> {
    let max = max_over_vertices(f, v)?;
    if max.value.definitely_gt(&f.bound, tie_tol::<T>()) {
        return Err(BellError::NotValidInequality { max: max.value.to_string(), bound: f.bound.to_string() });
    }
    let sat = saturating_vertices(f, v)?;
    let pdim = polytope_dim(v)?;
    if sat.is_empty() {
        return Ok(FacetReport { facet: false, saturating_count: 0, saturating_dim: 0, polytope_dim: pdim, witness: vec![] });
    }
    let witness = affinely_independent_subset(&sat.vertices)?;
    let sdim = witness.len() - 1;
    Ok(FacetReport {
        facet: pdim > 0 && sdim == pdim - 1,
        saturating_count: sat.len(),
        saturating_dim: sdim,
        polytope_dim: pdim,
        witness,
    })
}

/// Greedy maximal affinely independent subset, in input order.
pub fn affinely_independent_subset<T: Num>(points: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let mut chosen: Vec<Vec<T>> = Vec::new();
    for p in points {
        chosen.push(p.clone());
        if chosen.len() > 1 && affine_rank(&chosen)? < chosen.len() - 1 {
            chosen.pop();
        }
    }
    Ok(chosen)
}

/// Sorts vertices saturating `pd_facet` at `eps` into the five structural
/// classes; the sixth slot counts vertices matching none of them.
///
/// Classes are keyed on `p(00|00), p(11|00), p(01|01), p(10|10), p(00|11)`:
/// `(0,1,0,0,0)`, `(e,0,0,0,0)`, `(1,0,c,0,0)`, `(1,0,0,c,0)`, `(1,0,0,0,c)`
/// with `c = (1-e)^2`.
pub fn pd_facet_classes<T: Num>(eps: &T, saturating: &VertexSet<T>) -> Result<[usize; 6]> {
    if saturating.scenario != BellScenario::CHSH || saturating.kind != BehaviorKind::Conditional {
        return Err(BellError::InvalidBehavior("classes are defined on (2,2;2,2) conditional tables".into()));
    }
    let sc = saturating.scenario;
    let (z, o, e) = (T::zero(), T::one(), eps.clone());
    let c = (T::one() - e.clone()) * (T::one() - e.clone());
    let patterns = [
        [z.clone(), o.clone(), z.clone(), z.clone(), z.clone()],
        [e, z.clone(), z.clone(), z.clone(), z.clone()],
        [o.clone(), z.clone(), c.clone(), z.clone(), z.clone()],
        [o.clone(), z.clone(), z.clone(), c.clone(), z.clone()],
        [o, z.clone(), z.clone(), z, c],
    ];
    let tol = tie_tol::<T>();
    let mut counts = [0usize; 6];
    for v in &saturating.vertices {
        let key = [
            &v[sc.index(0, 0, 0, 0)],
            &v[sc.index(1, 1, 0, 0)],
            &v[sc.index(0, 1, 0, 1)],
            &v[sc.index(1, 0, 1, 0)],
            &v[sc.index(0, 0, 1, 1)],
        ];
        let class = patterns
            .iter()
            .position(|pat| pat.iter().zip(key).all(|(a, b)| a.approx_eq(b, tol)))
            .unwrap_or(5);
        counts[class] += 1;
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq)]
pub enum MembershipResult<T> {
    Inside {
        /// One weight per vertex, in vertex order.
        weights: Vec<T>,
        /// Largest absolute entry of `sum_i w_i v_i - p`.
        residual: f64,
    },
    Outside {
        /// Valid on every vertex, violated by the query.
        separator: LinearFunctional<T>,
        /// `separator(p) - max over vertices of separator`.
        gap: T,
    },
}

impl<T> MembershipResult<T> {
    pub fn is_inside(&self) -> bool {
        matches!(self, MembershipResult::Inside { .. })
    }
}

/// Residual tolerance for float certificates.
pub const CERT_TOL: f64 = 1e-10;

/// Decides whether `p` lies in the convex hull of `v` and returns a
/// checked certificate either way.
pub fn membership<T: Num>(p: &Behavior<T>, v: &VertexSet<T>) -> Result<MembershipResult<T>> {
    if p.scenario() != v.scenario {
        return Err(BellError::ScenarioMismatch { left: p.scenario().to_string(), right: v.scenario.to_string() });
    }
    if p.kind() != v.kind {
        return Err(BellError::InvalidBehavior(format!("query is {} but vertices are {}", p.kind(), v.kind)));
    }
    membership_raw(p.values(), v)
}

/// Same as [`membership`] for an unvalidated point, e.g. one that is not
/// normalised.
pub fn membership_raw<T: Num>(p: &[T], v: &VertexSet<T>) -> Result<MembershipResult<T>> {
    if v.is_empty() {
        return Err(BellError::Empty("vertex set"));
    }
    let d = v.dim();
    if p.len() != d {
        return Err(BellError::DimensionMismatch { expected: d, got: p.len() });
    }
    let mut rows: Vec<Vec<T>> = (0..d).map(|k| v.vertices.iter().map(|q| q[k].clone()).collect()).collect();
    rows.push(vec![T::one(); v.len()]);
    let mut b = p.to_vec();
    b.push(T::one());
    let lp = LpProblem::feasibility(DenseMatrix::from_rows(rows)?, b)?;
    let tol = match T::POLICY {
        Policy::Exact => 0.0,
        Policy::Float => CERT_TOL,
    };
    match lp_solve(&lp)? {
        LpOutcome::Feasible { x } => {
            let mut residual = 0.0f64;
            for k in 0..d {
                let r = v.vertices.iter().zip(&x).fold(T::zero(), |acc, (q, w)| acc + q[k].clone() * w.clone())
                    - p[k].clone();
                if !r.near_zero(tol) {
                    return Err(BellError::NumericBreakdown(format!("decomposition residual {} at entry {k}", r.to_f64())));
                }
                residual = residual.max(r.to_f64().abs());
            }
            Ok(MembershipResult::Inside { weights: x, residual })
        }
        LpOutcome::Infeasible { certificate } => {
            let coeffs = certificate[..d].to_vec();
            let bound = -certificate[d].clone();
            let separator = LinearFunctional::new(v.scenario, v.kind, coeffs, bound)?;
            let vmax = v
                .vertices
                .iter()
                .map(|q| dot(&separator.coeffs, q))
                .reduce(|m, x| if x > m { x } else { m })
                .expect("nonempty");
            let at_p = dot(&separator.coeffs, p);
            let gap = at_p - vmax;
            if !gap.definitely_gt(&T::zero(), tol) {
                return Err(BellError::NumericBreakdown("separating functional does not separate".into()));
            }
            Ok(MembershipResult::Outside { separator, gap })
        }
        other => Err(BellError::NumericBreakdown(format!("unexpected LP status {}", other.status()))),
    }
}
