use bellforge::geometry::{
    build_inequality, is_facet, max_over_vertices, membership, membership_raw, saturating_vertices,
    InequalityName, MembershipResult,
};
use bellforge::numeric::{q, Num, Rational};
use bellforge::reference::{facet_witness_det, facet_witness_matrix, hardy_behavior};
use bellforge::{joint_from_conditional, mdpdl_vertices, pd_conditional_vertices, Behavior, BellScenario, RelaxationParams};
use proptest::prelude::*;

const SC: BellScenario = BellScenario::CHSH;

/// Determinant by Gaussian elimination with partial pivoting.
fn lu_det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

#[test]
fn witness_determinant_formula() {
    for e in [0.05, 0.2, 0.25, 0.5, 0.7, 0.95] {
        let m = facet_witness_matrix(&e).unwrap().to_rows();
        let want = 4.0 * (2.0 - e) * (1.0 - e).powi(6) * e.powi(5);
        let got = lu_det(m);
        assert!((got - want).abs() <= 1e-9 * want.abs().max(1e-12), "eps={e}: {got} vs {want}");
        assert!((facet_witness_det(&e) - want).abs() <= 1e-15);
    }
    let det = bellforge::numeric::det_exact(&facet_witness_matrix(&q(1, 4)).unwrap()).unwrap();
    assert_eq!(det, q(5103, 4_194_304));
}

#[test]
fn pd_facet_is_a_facet_on_the_rational_sample() {
    for e in [q(1, 5), q(1, 4), q(1, 3), q(1, 2), q(2, 3), q(3, 4)] {
        let v = pd_conditional_vertices(&e, &e, SC).unwrap();
        let f = build_inequality(InequalityName::PdFacet, &RelaxationParams::pd(SC, e.clone(), e.clone()).unwrap(), SC)
            .unwrap();
        let rep = is_facet(&f, &v).unwrap();
        assert!(rep.facet, "eps={e}");
        assert_eq!((rep.saturating_count, rep.saturating_dim, rep.polytope_dim), (56, 11, 12));
        assert_eq!(rep.witness.len(), 12);
    }
}

#[test]
fn named_bounds_are_attained() {
    // (l, h, eps) triples; mdl uses eps = 0.
    let cases = [(q(1, 4), q(1, 4), q(1, 4)), (q(1, 8), q(1, 2), q(1, 4)), (q(1, 5), q(3, 10), q(1, 3))];
    for (l, h, e) in cases {
        let p0 = RelaxationParams::new(SC, l.clone(), h.clone(), q(0, 1), q(0, 1), q(0, 1)).unwrap();
        let mdl = build_inequality(InequalityName::Mdl, &p0, SC).unwrap();
        let v0 = mdpdl_vertices(&p0, SC, false).unwrap();
        assert_eq!(max_over_vertices(&mdl, &v0).unwrap().value, q(0, 1));

        let p = RelaxationParams::new(SC, l, h, e.clone(), e.clone(), q(0, 1)).unwrap();
        let mdpdl = build_inequality(InequalityName::Mdpdl, &p, SC).unwrap();
        let v = mdpdl_vertices(&p, SC, false).unwrap();
        assert_eq!(max_over_vertices(&mdpdl, &v).unwrap().value, q(0, 1));

        let pd = build_inequality(InequalityName::PdFacet, &p, SC).unwrap();
        let vc = pd_conditional_vertices(&e, &e, SC).unwrap();
        assert_eq!(max_over_vertices(&pd, &vc).unwrap().value, e.clone() * (q(1, 1) - e));
    }
}

#[test]
fn hardy_joint_behavior_is_outside_mdl() {
    let p = RelaxationParams::new(SC, 0.25, 0.25, 0.0, 0.0, 0.0).unwrap();
    let joint = joint_from_conditional(&hardy_behavior(), &Behavior::uniform_input(SC).unwrap()).unwrap();
    let v = mdpdl_vertices(&p, SC, false).unwrap();
    match membership(&joint, &v).unwrap() {
        MembershipResult::Outside { separator, gap } => {
            assert!(gap > 0.0);
            let vmax = v.vertices.iter().map(|w| separator.evaluate(w).unwrap()).fold(f64::MIN, f64::max);
            assert!(separator.evaluate(joint.values()).unwrap() > vmax);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn chsh_saturation_on_deterministic_vertices() {
    let v = pd_conditional_vertices(&q(0, 1), &q(0, 1), SC).unwrap();
    let f = build_inequality(InequalityName::Chsh, &RelaxationParams::pd(SC, q(0, 1), q(0, 1)).unwrap(), SC).unwrap();
    assert_eq!(saturating_vertices(&f, &v).unwrap().len(), 8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn convex_combinations_decompose(picks in proptest::collection::vec((0usize..1296, 1i64..100), 1..8)) {
        let e = q(1, 4);
        let v = pd_conditional_vertices(&e, &e, SC).unwrap();
        let total: i64 = picks.iter().map(|(_, w)| w).sum();
        let mut p = vec![Rational::zero(); 16];
        for (i, w) in &picks {
            for (a, x) in p.iter_mut().zip(&v.vertices[*i]) {
                *a += q(*w, total) * x;
            }
        }
        match membership_raw(&p, &v).unwrap() {
            MembershipResult::Inside { weights, .. } => {
                prop_assert!(weights.iter().all(|w| *w >= Rational::zero()));
                prop_assert_eq!(weights.iter().fold(Rational::zero(), |s, w| s + w), Rational::one());
                for k in 0..16 {
                    let r = v.vertices.iter().zip(&weights).fold(Rational::zero(), |s, (x, w)| s + x[k].clone() * w);
                    prop_assert_eq!(&r, &p[k]);
                }
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }
}
