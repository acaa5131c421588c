//! The acceptance suite, shared by the `acceptance` test target and the
//! `self-test` subcommand.

pub mod oracle;

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::time::Instant;

use serde::Serialize;

use crate::behavior::{joint_from_conditional, Behavior, BellScenario, RelaxationParams};
use crate::error::Result;
use crate::geometry::{
    build_inequality, is_facet, max_over_vertices, membership, pd_facet_classes, saturating_vertices,
    InequalityName, MembershipResult,
};
use crate::numeric::{det_exact, q, Num, Rational};
use crate::quantum::{behavior_of, chsh_leak_strategy, chsh_leak_value, operator_norm_diff, tilted_hardy_strategy};
use crate::randomness::{beta_q, curve, oracle_max_chsh, pbar_g, dpbar_g, GuessingBound};
use crate::reference;
use crate::vertices::{mdpdl_vertices, pd_conditional_vertices};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "vertex counts"),
    (2, "pd_facet reproduction"),
    (3, "Hardy decomposition"),
    (4, "strict superset of MDL"),
    (5, "tilted Hardy violation"),
    (6, "CHSH value under leakage"),
    (7, "classical bound under leakage"),
    (8, "guessing probability"),
    (9, "oracle cross-checks"),
];

/// Runs one criterion; errors count as failures.
pub fn run(id: u8) -> Option<CriterionOutcome> {
    let (_, name) = *CRITERIA.iter().find(|(i, _)| *i == id)?;
    let t0 = Instant::now();
    let res = match id {
        1 => vertex_counts(),
        2 => facet_reproduction(),
        3 => hardy_decomposition(),
        4 => strict_superset(),
        5 => tilted_hardy(),
        6 => leak_quantum(),
        7 => leak_classical(),
        8 => guessing(),
        9 => oracles(),
        _ => unreachable!(),
    };
    let (passed, detail) = match res {
        Ok(failures) if failures.is_empty() => (true, "ok".to_string()),
        Ok(failures) => (false, failures.join("; ")),
        Err(e) => (false, format!("error: {e}")),
    };
    Some(CriterionOutcome { id, name, passed, detail, seconds: t0.elapsed().as_secs_f64() })
}

pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().filter_map(|(id, _)| run(*id)).collect()
}

/// One line per criterion: `PASS  3  Hardy decomposition (0.4s): ok`.
pub fn format_line(o: &CriterionOutcome) -> String {
    format!(
        "{}  {}  {} ({:.1}s): {}",
        if o.passed { "PASS" } else { "FAIL" },
        o.id,
        o.name,
        o.seconds,
        o.detail
    )
}

type Failures = Vec<String>;

fn check(fails: &mut Failures, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        fails.push(msg());
    }
}

fn vertex_counts() -> Result<Failures> {
    let mut f = Vec::new();
    for (e, want) in [(q(1, 5), 1296), (q(1, 4), 1296), (q(1, 2), 1296), (q(0, 1), 16)] {
        let n = pd_conditional_vertices(&e, &e, BellScenario::CHSH)?.len();
        check(&mut f, n == want, || format!("eps={e}: {n} vertices, want {want}"));
    }
    Ok(f)
}

fn facet_reproduction() -> Result<Failures> {
    let mut f = Vec::new();
    let sc = BellScenario::CHSH;
    for e in [q(1, 5), q(1, 4), q(1, 3), q(1, 2), q(3, 4)] {
        let v = pd_conditional_vertices(&e, &e, sc)?;
        let ineq = build_inequality(InequalityName::PdFacet, &RelaxationParams::pd(sc, e.clone(), e.clone())?, sc)?;
        let bound = e.clone() * (Rational::one() - e.clone());
        let max = max_over_vertices(&ineq, &v)?.value;
        check(&mut f, max == bound, || format!("eps={e}: max {max}, want {bound}"));
        let sat = saturating_vertices(&ineq, &v)?;
        check(&mut f, sat.len() == 56, || format!("eps={e}: {} saturating", sat.len()));
        let classes = pd_facet_classes(&e, &sat)?;
        check(&mut f, classes == [28, 16, 4, 4, 4, 0], || format!("eps={e}: classes {classes:?}"));
        let rep = is_facet(&ineq, &v)?;
        check(&mut f, rep.saturating_dim == 11 && rep.polytope_dim == 12 && rep.facet, || {
            format!("eps={e}: saturating dim {}, polytope dim {}", rep.saturating_dim, rep.polytope_dim)
        });
        let det = det_exact(&reference::facet_witness_matrix(&e)?)?;
        let want = reference::facet_witness_det(&e);
        check(&mut f, det == want, || format!("eps={e}: det {det}, want {want}"));
    }
    Ok(f)
}

fn hardy_decomposition() -> Result<Failures> {
    let mut f = Vec::new();
    let hardy = reference::hardy_behavior();
    let verts = reference::table_one_vertices(&0.25f64);
    let w = reference::table_one_weights();
    let mut worst = 0f64;
    for i in 0..16 {
        let s: f64 = verts.iter().zip(w).map(|(v, w)| v[i] * w).sum();
        worst = worst.max((s - hardy.values()[i]).abs());
    }
    check(&mut f, worst < 1e-10, || format!("published weights: residual {worst:.3e}"));
    let v = pd_conditional_vertices(&0.25f64, &0.25f64, BellScenario::CHSH)?;
    for t in &verts {
        if !v.vertices.iter().any(|p| p.iter().zip(t).all(|(a, b)| (a - b).abs() < 1e-12)) {
            f.push("a listed extreme point is not a vertex".into());
            break;
        }
    }
    match membership(&hardy, &v)? {
        MembershipResult::Inside { residual, .. } => {
            check(&mut f, residual < 1e-10, || format!("LP residual {residual:.3e}"))
        }
        MembershipResult::Outside { .. } => f.push("LP classifies the Hardy behavior as outside".into()),
    }
    Ok(f)
}

fn strict_superset() -> Result<Failures> {
    let mut f = Vec::new();
    let sc = BellScenario::CHSH;
    let params = RelaxationParams::new(sc, 0.25, 0.25, 0.25, 0.25, 0.0)?;
    let joint = joint_from_conditional(&reference::hardy_behavior(), &Behavior::uniform_input(sc)?)?;
    let margin = build_inequality(InequalityName::Mdl, &params, sc)?.margin(&joint)?;
    let want = 0.25 * 0.25 * reference::hardy_p0000();
    check(&mut f, (margin - want).abs() <= 1e-10, || format!("mdl margin {margin}, want {want}"));
    check(&mut f, margin > 0.0, || "mdl not violated".into());
    let v = mdpdl_vertices(&params, sc, false)?;
    check(&mut f, membership(&joint, &v)?.is_inside(), || "outside the MDPDL set".into());
    Ok(f)
}

fn tilted_hardy() -> Result<Failures> {
    let mut f = Vec::new();
    let sc = BellScenario::CHSH;
    let grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99];
    for e in grid {
        let p = behavior_of(&tilted_hardy_strategy(e)?)?;
        let zeros = [*p.get(0, 1, 0, 1), *p.get(1, 0, 1, 0), *p.get(0, 0, 1, 1)];
        check(&mut f, zeros.iter().all(|z| *z <= 1e-9), || format!("eps={e}: zeros {zeros:?}"));
        let val = p.get(0, 0, 0, 0) + e * p.get(1, 1, 0, 0);
        let r: f64 = 4.0 * e + 5.0;
        let want = (r.powf(1.5) - (12.0 * e + 11.0)) / (2.0 * (1.0 + e));
        check(&mut f, (val - want).abs() <= 1e-9, || format!("eps={e}: value {val}, want {want}"));
        let params = RelaxationParams::new(sc, 0.25, 0.25, e, e, 0.0)?;
        let joint = joint_from_conditional(&p, &Behavior::uniform_input(sc)?)?;
        let m = build_inequality(InequalityName::Mdpdl, &params, sc)?.margin(&joint)?;
        check(&mut f, m > 0.0, || format!("eps={e}: mdpdl margin {m}"));
    }
    Ok(f)
}

fn kappa_grid() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, FRAC_1_SQRT_2, 0.8, 0.9]
}

fn leak_quantum() -> Result<Failures> {
    let mut f = Vec::new();
    for k in kappa_grid() {
        let s = chsh_leak_strategy(k)?;
        let val = chsh_leak_value(&behavior_of(&s)?)?;
        let bq = beta_q(k)?;
        check(&mut f, (val - bq).abs() <= 1e-9, || format!("kappa={k}: value {val}, want {bq}"));
        for y in 0..2 {
            let d = operator_norm_diff(s.bob_obs(0, y), s.bob_obs(1, y));
            check(&mut f, d <= 2.0 * k + 1e-12, || format!("kappa={k}, y={y}: leakage {d}"));
            if k <= FRAC_1_SQRT_2 {
                check(&mut f, (d - 2.0 * k).abs() <= 1e-12, || format!("kappa={k}, y={y}: leakage {d} not tight"));
            }
        }
    }
    Ok(f)
}

fn leak_classical() -> Result<Failures> {
    let mut f = Vec::new();
    let sc = BellScenario::CHSH;
    for k in [q(0, 1), q(1, 4), q(1, 2), q(3, 4)] {
        let v = pd_conditional_vertices(&Rational::zero(), &k, sc)?;
        let params = RelaxationParams::new(sc, q(1, 4), q(1, 4), q(0, 1), k.clone(), k.clone())?;
        let ineq = build_inequality(InequalityName::ChshLeak, &params, sc)?;
        let max = max_over_vertices(&ineq, &v)?.value;
        let want = Rational::from_i64(2) + Rational::from_i64(2) * k.clone();
        check(&mut f, max == want, || format!("kappa={k}: max {max}, want {want}"));
    }
    Ok(f)
}

fn guessing() -> Result<Failures> {
    let mut f = Vec::new();
    let g0 = GuessingBound::new(0.0)?;
    let top = g0.point(2.0 * SQRT_2)?;
    check(&mut f, (top.pg - 0.5).abs() <= 1e-9 && (top.hmin - 1.0).abs() <= 1e-9, || {
        format!("kappa=0: P_g(2 sqrt2) = {}, H_min = {}", top.pg, top.hmin)
    });
    let low = g0.pg(2.0)?;
    check(&mut f, (low - 1.0).abs() <= 1e-9, || format!("kappa=0: P_g(2) = {low}"));
    for k in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9] {
        let g = GuessingBound::new(k)?;
        let bs = g.tangency.beta;
        let jump = (g.pg(bs + 1e-8)? - g.pg(bs - 1e-8)?).abs();
        check(&mut f, jump < 1e-6, || format!("kappa={k}: jump {jump:.3e} at beta*"));
        let chord = (pbar_g(bs, k)? - 1.0) / (bs - g.beta_c);
        let slope = dpbar_g(bs, k)?;
        check(&mut f, (chord - slope).abs() <= 1e-7, || format!("kappa={k}: chord {chord} vs slope {slope}"));
        let h = 1e-6;
        let fd = (pbar_g(bs + h, k)? - pbar_g(bs - h, k)?) / (2.0 * h);
        check(&mut f, (fd - slope).abs() <= 1e-7, || format!("kappa={k}: derivative {slope} vs difference {fd}"));
        if g.tangency.sign_changes != 1 {
            f.push(format!("kappa={k}: {} sign changes of the tangency residual", g.tangency.sign_changes));
        }
        let pts = curve(k, 1000)?;
        let worst = pts.windows(3).map(|w| w[2].pg - 2.0 * w[1].pg + w[0].pg).fold(f64::NEG_INFINITY, f64::max);
        check(&mut f, worst <= 1e-8, || format!("kappa={k}: second difference {worst:.3e}"));
    }
    Ok(f)
}

/// Grid resolution per angle for the quantum-bound oracle.
pub const ORACLE_RESOLUTION: usize = 1000;

fn oracles() -> Result<Failures> {
    let mut f = Vec::new();
    for k in kappa_grid() {
        let o = oracle_max_chsh(k, ORACLE_RESOLUTION)?;
        let bq = beta_q(k)?;
        check(&mut f, (o - bq).abs() <= 1e-3, || format!("kappa={k}: grid {o}, beta_q {bq}"));
    }
    let a = oracle::cross_check(&q(1, 4), 50, 50, 20_240_917)?;
    check(&mut f, a.samples == 100 && a.oracle_mismatches == 0 && a.lp_mismatches == 0, || {
        format!(
            "{} samples against {} facets: {} oracle and {} LP mismatches",
            a.samples, a.facets, a.oracle_mismatches, a.lp_mismatches
        )
    });
    Ok(f)
}
