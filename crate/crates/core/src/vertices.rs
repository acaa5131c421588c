//! Vertex enumeration for the input box, the parameter-dependent
//! conditional polytope and the joint polytope built from both.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::behavior::{check_unit, BehaviorKind, BellScenario, RelaxationParams};
use crate::error::{BellError, Result};
use crate::numeric::{canonicalize, lp_solve, DenseMatrix, LpOutcome, LpProblem, Num, DEDUP_TOL};

/// A deduplicated point list in canonical (lexicographic) order.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexSet<T> {
    pub scenario: BellScenario,
    pub kind: BehaviorKind,
    pub vertices: Vec<Vec<T>>,
}

impl<T: Num> VertexSet<T> {
    /// Canonicalises `points` (sort + dedup) and checks their length.
    pub fn new(scenario: BellScenario, kind: BehaviorKind, mut points: Vec<Vec<T>>) -> Result<Self> {
        let d = scenario.len_of(kind);
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(BellError::DimensionMismatch { expected: d, got: p.len() });
        }
        canonicalize(&mut points);
        Ok(Self { scenario, kind, vertices: points })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.scenario.len_of(self.kind)
    }

    /// Drops every point that is a convex combination of the others.
    pub fn filter_extremal(self) -> Result<Self> {
        let vertices = extremal_subset(&self.vertices)?;
        Ok(Self { vertices, ..self })
    }
}

/// Vertices of `{p : l <= p(xy) <= h, sum p = 1}`.
pub fn input_vertices<T: Num>(params: &RelaxationParams<T>, scenario: BellScenario) -> Result<VertexSet<T>> {
    params.validate(scenario)?;
    let big_n = scenario.n_inputs();
    let (l, h) = (params.l.clone(), params.h.clone());
    if l.approx_eq(&h, DEDUP_TOL) {
        return VertexSet::new(scenario, BehaviorKind::Input, vec![vec![l; big_n]]);
    }
    let n_t = T::from_i64(big_n as i64);
    let ratio = (T::one() - n_t * l.clone()) / (h.clone() - l.clone());
    let n = ratio
        .floor_i64()
        .ok_or_else(|| BellError::NumericBreakdown("non-finite vertex count".into()))?;
    // h * N = 1 gives n = N; the only vertex is then all-h.
    let n = (n.max(0) as usize).min(big_n - 1);
    let n_low = big_n - n - 1;
    let rest = T::one() - T::from_i64(n as i64) * h.clone() - T::from_i64(n_low as i64) * l.clone();
    let mut multiset: Vec<T> = std::iter::repeat(h).take(n).chain(std::iter::repeat(l).take(n_low)).collect();
    multiset.push(rest);
    VertexSet::new(scenario, BehaviorKind::Input, distinct_permutations(multiset))
}

/// All distinct orderings of a multiset, via lexicographic successor steps.
fn distinct_permutations<T: Num>(mut items: Vec<T>) -> Vec<Vec<T>> {
    let cmp = |a: &T, b: &T| if a.approx_eq(b, DEDUP_TOL) { Ordering::Equal } else { a.total_cmp(b) };
    items.sort_by(cmp);
    let mut out = vec![items.clone()];
    loop {
        let Some(i) = (0..items.len().saturating_sub(1)).rev().find(|&i| cmp(&items[i], &items[i + 1]) == Ordering::Less)
        else {
            return out;
        };
        let j = (i + 1..items.len()).rev().find(|&j| cmp(&items[i], &items[j]) == Ordering::Less).expect("successor exists");
        items.swap(i, j);
        items[i + 1..].reverse();
        out.push(items.clone());
    }
}

/// The extreme `(p(0|first), p(0|second))` pairs of one party's marginal
/// under a two-valued conditioning input.
pub fn marginal_vertex_pairs<T: Num>(eps: &T) -> Result<Vec<(T, T)>> {
    check_unit("eps", eps)?;
    let (z, o, e) = (T::zero(), T::one(), eps.clone());
    let c = T::one() - e.clone();
    let mut pts = vec![
        vec![z.clone(), z.clone()],
        vec![o.clone(), o.clone()],
        vec![z.clone(), e.clone()],
        vec![o.clone(), c.clone()],
        vec![e, z],
        vec![c, o],
    ];
    canonicalize(&mut pts);
    Ok(pts.into_iter().map(|p| (p[0].clone(), p[1].clone())).collect())
}

/// Extreme points of `{t in [0,1]^n : |t_i - t_j| <= eps}`, where `t_i` is
/// the probability of outcome 0 under conditioning input `i`.
///
/// Candidates come from the grid `{0, eps, 1-eps, 1}^n`; redundant ones are
/// removed by LP.
pub fn marginal_vertices<T: Num>(eps: &T, n_inputs: usize) -> Result<Vec<Vec<T>>> {
    check_unit("eps", eps)?;
    if n_inputs < 2 {
        return Err(BellError::InvalidParams(format!("need at least 2 conditioning inputs, got {n_inputs}")));
    }
    let mut levels = vec![vec![T::zero()], vec![eps.clone()], vec![T::one() - eps.clone()], vec![T::one()]];
    canonicalize(&mut levels);
    let levels: Vec<T> = levels.into_iter().map(|mut v| v.remove(0)).collect();
    let k = levels.len();
    let mut grid = Vec::new();
    for code in 0..k.pow(n_inputs as u32) {
        let mut c = code;
        let mut t = Vec::with_capacity(n_inputs);
        for _ in 0..n_inputs {
            t.push(levels[c % k].clone());
            c /= k;
        }
        let max = t.iter().cloned().fold(T::zero(), |m, v| if v > m { v } else { m });
        let min = t.iter().cloned().fold(T::one(), |m, v| if v < m { v } else { m });
        if !(max - min).definitely_gt(eps, DEDUP_TOL) {
            grid.push(t);
        }
    }
    canonicalize(&mut grid);
    extremal_subset(&grid)
}

/// Keeps the points that are not convex combinations of the others.
pub fn extremal_subset<T: Num>(points: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let keep: Vec<bool> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let others: Vec<&Vec<T>> = points.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, q)| q).collect();
            Ok(!in_hull(p, &others)?)
        })
        .collect::<Result<_>>()?;
    Ok(points.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p.clone()).collect())
}

fn in_hull<T: Num>(p: &[T], pts: &[&Vec<T>]) -> Result<bool> {
    if pts.is_empty() {
        return Ok(false);
    }
    let d = p.len();
    let mut rows: Vec<Vec<T>> = (0..d).map(|k| pts.iter().map(|q| q[k].clone()).collect()).collect();
    rows.push(vec![T::one(); pts.len()]);
    let mut b = p.to_vec();
    b.push(T::one());
    let lp = LpProblem::feasibility(DenseMatrix::from_rows(rows)?, b)?;
    Ok(matches!(lp_solve(&lp)?, LpOutcome::Feasible { .. }))
}

/// Product vertices `pA(a|xy) pB(b|xy)` of the parameter-dependent polytope,
/// with Alice's marginal picked per `x` (as a table over `y`) and Bob's per
/// `y` (as a table over `x`).
pub fn pd_conditional_vertices<T: Num>(eps_a: &T, eps_b: &T, scenario: BellScenario) -> Result<VertexSet<T>> {
    let sc = scenario.validated()?;
    let alice_tables = party_tables(&marginal_vertices(eps_a, sc.n_y())?, sc.n_x());
    let bob_tables = party_tables(&marginal_vertices(eps_b, sc.n_x())?, sc.n_y());
    let points: Vec<Vec<T>> = alice_tables
        .par_iter()
        .flat_map_iter(|al| {
            bob_tables.iter().map(move |bo| {
                let mut v = vec![T::zero(); sc.table_len()];
                for x in 0..sc.n_x() {
                    for y in 0..sc.n_y() {
                        let pa = &al[x][y];
                        let pb = &bo[y][x];
                        for a in 0..2 {
                            let fa = if a == 0 { pa.clone() } else { T::one() - pa.clone() };
                            for b in 0..2 {
                                let fb = if b == 0 { pb.clone() } else { T::one() - pb.clone() };
                                v[sc.index(a, b, x, y)] = fa.clone() * fb;
                            }
                        }
                    }
                }
                v
            })
        })
        .collect();
    VertexSet::new(sc, BehaviorKind::Conditional, points)
}

/// Every assignment of one marginal table per outer input.
fn party_tables<T: Num>(margs: &[Vec<T>], n_outer: usize) -> Vec<Vec<Vec<T>>> {
    let mut out: Vec<Vec<Vec<T>>> = vec![Vec::new()];
    for _ in 0..n_outer {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                margs.iter().map(move |m| {
                    let mut next = prefix.clone();
                    next.push(m.clone());
                    next
                })
            })
            .collect();
    }
    out
}

/// Joint points `p(ab|xy) p(xy)` over all input vertices and conditional
/// vertices. Without `filter_extremal` the set may contain non-extreme
/// points; its convex hull is the joint polytope either way.
pub fn mdpdl_vertices<T: Num>(
    params: &RelaxationParams<T>,
    scenario: BellScenario,
    filter_extremal: bool,
) -> Result<VertexSet<T>> {
    let inputs = input_vertices(params, scenario)?;
    let conds = pd_conditional_vertices(&params.eps_a, &params.eps_b, scenario)?;
    let block = scenario.n_outcomes();
    let per_input = |inp: &Vec<T>| -> Result<Vec<Vec<T>>> {
        let kept = if filter_extremal { extreme_on_support(&conds, inp)? } else { vec![true; conds.len()] };
        Ok(conds
            .vertices
            .iter()
            .zip(kept)
            .filter(|(_, k)| *k)
            .map(|(c, _)| c.iter().enumerate().map(|(i, v)| v.clone() * inp[i / block].clone()).collect())
            .collect())
    };
    let points: Vec<Vec<T>> = inputs
        .vertices
        .par_iter()
        .map(per_input)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    VertexSet::new(scenario, BehaviorKind::Joint, points)
}

/// Which conditional vertices stay extreme once weighted by the input
/// vertex `inp`.
///
/// Block sums of a joint point give back its input vertex, and input
/// vertices are extreme, so a decomposition only mixes points with the same
/// input vertex; on its support the conditional part is then a convex
/// combination too. The conditional vertices are all pairs of an Alice and a
/// Bob marginal table, and the product is linear in each, so a point is
/// extreme iff both marginals, restricted to the support, are extreme among
/// the restricted marginals of their party. Those hull tests are tiny.
fn extreme_on_support<T: Num>(conds: &VertexSet<T>, inp: &[T]) -> Result<Vec<bool>> {
    let sc = conds.scenario;
    let support: Vec<(usize, usize)> = (0..sc.n_x())
        .flat_map(|x| (0..sc.n_y()).map(move |y| (x, y)))
        .filter(|&(x, y)| !inp[x * sc.n_y() + y].approx_eq(&T::zero(), DEDUP_TOL))
        .collect();
    let marginal = |c: &Vec<T>, alice: bool| -> Vec<T> {
        support
            .iter()
            .map(|&(x, y)| {
                let (i, j) = if alice { (sc.index(0, 0, x, y), sc.index(0, 1, x, y)) } else { (sc.index(0, 0, x, y), sc.index(1, 0, x, y)) };
                c[i].clone() + c[j].clone()
            })
            .collect()
    };
    let same = |u: &[T], v: &[T]| u.iter().zip(v).all(|(a, b)| a.approx_eq(b, DEDUP_TOL));
    let mut keep = vec![true; conds.len()];
    for alice in [true, false] {
        let projected: Vec<Vec<T>> = conds.vertices.iter().map(|c| marginal(c, alice)).collect();
        let mut distinct = projected.clone();
        canonicalize(&mut distinct);
        let extreme = extremal_subset(&distinct)?;
        for (k, p) in keep.iter_mut().zip(&projected) {
            *k &= extreme.iter().any(|e| same(e, p));
        }
    }
    Ok(keep)
}
