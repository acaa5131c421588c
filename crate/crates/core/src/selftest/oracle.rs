//! LP-free classification oracle for the (2,2;2,2) parameter-dependent
//! polytope.
//!
//! A complete facet list of the 1296-vertex polytope is out of reach for
//! double description on a desk machine, so the oracle works with the facet
//! families it can prove: seed inequalities whose facet status is checked by
//! exact rank computations, closed under the 128-element relabelling group
//! of the scenario (the vertex set's invariance under every generator is
//! checked too). Test points get their ground truth from construction:
//! explicit convex weights for inside points, and a push across one listed
//! facet for outside points.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::behavior::{BehaviorKind, BellScenario, RelaxationParams};
use crate::error::{BellError, Result};
use crate::geometry::{build_inequality, is_facet, max_over_vertices, membership_raw, InequalityName, LinearFunctional};
use crate::numeric::{dot, lex_cmp, Num, Rational};
use crate::vertices::{pd_conditional_vertices, VertexSet};

/// Index permutation `sigma` acting as `(sigma p)[sigma(i)] = p[i]`.
pub type Perm = Vec<usize>;

fn perm_from(f: impl Fn(usize, usize, usize, usize) -> (usize, usize, usize, usize)) -> Perm {
    let sc = BellScenario::CHSH;
    let mut out = vec![0; 16];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let (a2, b2, x2, y2) = f(a, b, x, y);
                    out[sc.index(a, b, x, y)] = sc.index(a2, b2, x2, y2);
                }
            }
        }
    }
    out
}

/// Input relabellings, outcome flips conditioned on the local input, and
/// the party swap (valid when both parties share `eps`).
pub fn generators() -> Vec<Perm> {
    vec![
        perm_from(|a, b, x, y| (a, b, 1 - x, y)),
        perm_from(|a, b, x, y| (a, b, x, 1 - y)),
        perm_from(|a, b, x, y| (if x == 0 { 1 - a } else { a }, b, x, y)),
        perm_from(|a, b, x, y| (if x == 1 { 1 - a } else { a }, b, x, y)),
        perm_from(|a, b, x, y| (a, if y == 0 { 1 - b } else { b }, x, y)),
        perm_from(|a, b, x, y| (a, if y == 1 { 1 - b } else { b }, x, y)),
        perm_from(|a, b, x, y| (b, a, y, x)),
    ]
}

fn compose(s: &Perm, t: &Perm) -> Perm {
    t.iter().map(|&i| s[i]).collect()
}

/// Closure of the generators under composition.
pub fn symmetry_group() -> Vec<Perm> {
    let gens = generators();
    let id: Perm = (0..16).collect();
    let mut seen: BTreeSet<Perm> = BTreeSet::from([id.clone()]);
    let mut frontier = vec![id];
    while let Some(p) = frontier.pop() {
        for g in &gens {
            let n = compose(g, &p);
            if seen.insert(n.clone()) {
                frontier.push(n);
            }
        }
    }
    seen.into_iter().collect()
}

pub fn apply<T: Clone>(sigma: &Perm, p: &[T]) -> Vec<T> {
    let mut out = p.to_vec();
    for (i, &j) in sigma.iter().enumerate() {
        out[j] = p[i].clone();
    }
    out
}

/// Checks that every generator maps the vertex list onto itself.
pub fn check_invariance<T: Num>(v: &VertexSet<T>) -> Result<()> {
    for (k, g) in generators().iter().enumerate() {
        for p in &v.vertices {
            let img = apply(g, p);
            if v.vertices.binary_search_by(|q| lex_cmp(q, &img)).is_err() {
                return Err(BellError::NumericBreakdown(format!("generator {k} does not preserve the vertex set")));
            }
        }
    }
    Ok(())
}

/// Representative of `f` modulo the normalisation `sum_ab p(ab|xy) = 1`:
/// the `p(00|xy)` coefficient of each block is moved into the bound.
fn normal_form(f: &LinearFunctional<Rational>) -> (Vec<Rational>, Rational) {
    let sc = f.scenario;
    let mut c = f.coeffs.clone();
    let mut bound = f.bound.clone();
    for x in 0..2 {
        for y in 0..2 {
            let base = c[sc.index(0, 0, x, y)].clone();
            for a in 0..2 {
                for b in 0..2 {
                    let i = sc.index(a, b, x, y);
                    c[i] = c[i].clone() - base.clone();
                }
            }
            bound -= base;
        }
    }
    (c, bound)
}

#[derive(Clone, Debug)]
pub struct FacetFamily {
    pub name: &'static str,
    pub facets: Vec<LinearFunctional<Rational>>,
}

fn seeds(eps: &Rational, v: &VertexSet<Rational>) -> Result<Vec<(&'static str, LinearFunctional<Rational>)>> {
    let sc = BellScenario::CHSH;
    let z = Rational::zero;
    let mut pos = vec![z(); 16];
    pos[sc.index(0, 0, 0, 0)] = -Rational::one();
    let mut tv = vec![z(); 16];
    for b in 0..2 {
        tv[sc.index(0, b, 0, 0)] = Rational::one();
        tv[sc.index(0, b, 0, 1)] = -Rational::one();
    }
    let params = RelaxationParams::pd(sc, eps.clone(), eps.clone())?;
    let chsh = build_inequality(InequalityName::Chsh, &params, sc)?;
    let chsh_max = max_over_vertices(&chsh, v)?.value;
    Ok(vec![
        ("positivity", LinearFunctional::new(sc, BehaviorKind::Conditional, pos, z())?),
        ("marginal shift", LinearFunctional::new(sc, BehaviorKind::Conditional, tv, eps.clone())?),
        ("pd_facet", build_inequality(InequalityName::PdFacet, &params, sc)?),
        ("chsh", LinearFunctional { bound: chsh_max, ..chsh }),
    ])
}

/// Verified facet families at `eps`: each seed must pass the exact rank
/// test; its orbit is deduplicated modulo normalisation and every member
/// is re-checked for validity.
pub fn facet_families(eps: &Rational, v: &VertexSet<Rational>) -> Result<Vec<FacetFamily>> {
    check_invariance(v)?;
    let group = symmetry_group();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (name, seed) in seeds(eps, v)? {
        if !is_facet(&seed, v)?.facet {
            continue;
        }
        let mut facets = Vec::new();
        for g in &group {
            let f = LinearFunctional { coeffs: apply(g, &seed.coeffs), ..seed.clone() };
            if seen.insert(normal_form(&f)) {
                if max_over_vertices(&f, v)?.value > f.bound {
                    return Err(BellError::NumericBreakdown(format!("{name} image is not valid")));
                }
                facets.push(f);
            }
        }
        out.push(FacetFamily { name, facets });
    }
    Ok(out)
}

/// First listed facet violated by `p`, if any.
pub fn violated<'a>(families: &'a [FacetFamily], p: &[Rational]) -> Option<&'a LinearFunctional<Rational>> {
    families.iter().flat_map(|f| &f.facets).find(|f| dot(&f.coeffs, p) > f.bound)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub point: Vec<Rational>,
    /// Ground truth from the construction.
    pub inside: bool,
}

fn random_combination(rng: &mut ChaCha8Rng, pool: &[&Vec<Rational>], k: usize) -> Vec<Rational> {
    let mut acc = vec![Rational::zero(); 16];
    let mut total = 0i64;
    for _ in 0..k {
        let w = rng.gen_range(1..=1000i64);
        total += w;
        let v = pool[rng.gen_range(0..pool.len())];
        for (a, x) in acc.iter_mut().zip(v) {
            *a += Rational::from_i64(w) * x;
        }
    }
    let t = Rational::from_i64(total);
    acc.into_iter().map(|a| a / t.clone()).collect()
}

/// `n_in` random convex combinations of vertices, and `n_out` points pushed
/// outward across a listed facet from a random point of that facet.
///
/// The push direction is the facet normal with its per-block mean removed,
/// so outside points stay normalised.
pub fn samples(
    v: &VertexSet<Rational>,
    families: &[FacetFamily],
    n_in: usize,
    n_out: usize,
    seed: u64,
) -> Result<Vec<Sample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<&Vec<Rational>> = v.vertices.iter().collect();
    let mut out = Vec::with_capacity(n_in + n_out);
    for _ in 0..n_in {
        let k = rng.gen_range(2..=30);
        out.push(Sample { point: random_combination(&mut rng, &all, k), inside: true });
    }
    let facets: Vec<&LinearFunctional<Rational>> = families.iter().flat_map(|f| &f.facets).collect();
    if facets.is_empty() && n_out > 0 {
        return Err(BellError::Empty("facet list"));
    }
    let sc = BellScenario::CHSH;
    for _ in 0..n_out {
        let f = facets[rng.gen_range(0..facets.len())];
        let on: Vec<&Vec<Rational>> = v.vertices.iter().filter(|p| dot(&f.coeffs, p) == f.bound).collect();
        let k = rng.gen_range(1..=20);
        let mut p = random_combination(&mut rng, &on, k);
        let delta = Rational::new(rng.gen_range(5..=50i64).into(), 1000.into());
        for x in 0..2 {
            for y in 0..2 {
                let idx: Vec<usize> =
                    (0..2).flat_map(|a| (0..2).map(move |b| sc.index(a, b, x, y))).collect();
                let mean = idx.iter().fold(Rational::zero(), |s, &i| s + f.coeffs[i].clone()) / Rational::from_i64(4);
                for i in idx {
                    p[i] += delta.clone() * (f.coeffs[i].clone() - mean.clone());
                }
            }
        }
        out.push(Sample { point: p, inside: false });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agreement {
    pub facets: usize,
    pub samples: usize,
    /// Oracle verdict differs from the construction.
    pub oracle_mismatches: usize,
    /// LP verdict differs from the construction.
    pub lp_mismatches: usize,
}

/// Runs the oracle and float LP membership on the generated samples.
pub fn cross_check(eps: &Rational, n_in: usize, n_out: usize, seed: u64) -> Result<Agreement> {
    let sc = BellScenario::CHSH;
    let v = pd_conditional_vertices(eps, eps, sc)?;
    let families = facet_families(eps, &v)?;
    let vf = VertexSet::new(
        sc,
        BehaviorKind::Conditional,
        v.vertices.iter().map(|p| p.iter().map(Num::to_f64).collect()).collect(),
    )?;
    let pts = samples(&v, &families, n_in, n_out, seed)?;
    let mut oracle_mismatches = 0;
    let mut lp_mismatches = 0;
    for s in &pts {
        if violated(&families, &s.point).is_none() != s.inside {
            oracle_mismatches += 1;
        }
        let pf: Vec<f64> = s.point.iter().map(Num::to_f64).collect();
        if membership_raw(&pf, &vf)?.is_inside() != s.inside {
            lp_mismatches += 1;
        }
    }
    Ok(Agreement {
        facets: families.iter().map(|f| f.facets.len()).sum(),
        samples: pts.len(),
        oracle_mismatches,
        lp_mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::q;

    #[test]
    fn group_order() {
        let g = symmetry_group();
        assert_eq!(g.len(), 128);
        for p in &g {
            let mut s = p.clone();
            s.sort();
            assert_eq!(s, (0..16).collect::<Vec<_>>());
        }
    }

    #[test]
    fn families_at_zero_are_valid() {
        let e = q(0, 1);
        let v = pd_conditional_vertices(&e, &e, BellScenario::CHSH).unwrap();
        let fam = facet_families(&e, &v).unwrap();
        // At eps = 0 the polytope is the local one: positivity and CHSH
        // orbits give all 24 facets.
        let names: Vec<_> = fam.iter().map(|f| (f.name, f.facets.len())).collect();
        assert!(names.contains(&("positivity", 16)), "{names:?}");
        assert!(names.contains(&("chsh", 8)), "{names:?}");
    }
}
