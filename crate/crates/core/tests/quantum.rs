use std::f64::consts::FRAC_1_SQRT_2;

use bellforge::quantum::{
    behavior_of, chsh_leak_strategy, chsh_leak_value, operator_norm_diff, tilted_hardy_strategy, tilted_hardy_value,
    QubitObservable, TwoQubitStrategy,
};
use bellforge::randomness::beta_q;
use bellforge::{marginals, signaling_deficit, BellScenario};
use proptest::prelude::*;

/// Born rule with explicit real 4x4 matrices: projector of outcome `k`
/// for an observable with Bloch vector in the x-z plane is
/// `(I + (-1)^k (bx X + bz Z)) / 2`.
fn projector(o: &QubitObservable, k: usize) -> [[f64; 2]; 2] {
    let [bx, by, bz] = o.bloch();
    assert!(by.abs() < 1e-15, "oracle handles real observables only");
    let s = if k == 0 { 1.0 } else { -1.0 };
    [[(1.0 + s * bz) / 2.0, s * bx / 2.0], [s * bx / 2.0, (1.0 - s * bz) / 2.0]]
}

fn born(s: &TwoQubitStrategy, a: usize, b: usize, x: usize, y: usize) -> f64 {
    let psi: Vec<f64> = s.state.amplitudes().iter().map(|c| {
        assert!(c.im.abs() < 1e-15);
        c.re
    }).collect();
    let pa = projector(&s.alice[x], a);
    let pb = projector(s.bob_obs(x, y), b);
    let mut total = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let k = pa[i / 2][j / 2] * pb[i % 2][j % 2];
            total += psi[i] * k * psi[j];
        }
    }
    total
}

fn assert_born(s: &TwoQubitStrategy) {
    let p = behavior_of(s).unwrap();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let want = born(s, a, b, x, y);
                    assert!((p.get(a, b, x, y) - want).abs() < 1e-12, "p({a}{b}|{x}{y})");
                }
            }
        }
    }
}

#[test]
fn tilted_hardy_matches_born_rule_and_closed_form() {
    for e in [0.0, 0.05, 0.25, 0.5, 0.75, 0.99] {
        let s = tilted_hardy_strategy(e).unwrap();
        assert_born(&s);
        let p = behavior_of(&s).unwrap();
        let lhs = p.get(0, 0, 0, 0) + e * p.get(1, 1, 0, 0);
        let r: f64 = 4.0 * e + 5.0;
        let closed = (r * r.sqrt() - 12.0 * e - 11.0) / (2.0 + 2.0 * e);
        assert!((lhs - closed).abs() < 1e-12);
        assert!((tilted_hardy_value(e).unwrap() - closed).abs() < 1e-15);
        assert!(signaling_deficit(&p).unwrap().0 < 1e-12);
    }
}

#[test]
fn hardy_limit_at_zero() {
    let p = behavior_of(&tilted_hardy_strategy(0.0).unwrap()).unwrap();
    assert!((p.get(0, 0, 0, 0) - (5.0 * 5f64.sqrt() - 11.0) / 2.0).abs() < 1e-12);
}

#[test]
fn leak_strategy_matches_born_rule() {
    for k in [0.0, 0.3, FRAC_1_SQRT_2, 0.9] {
        assert_born(&chsh_leak_strategy(k).unwrap());
    }
}

#[test]
fn pauli_correlations() {
    // Phi+ gives <P (x) Q> = tr(P Q^T)/2: <ZZ> = <XX> = 1. Above the
    // threshold Bob uses Z, X, Z, -X, so the four correlators are 1, 1, 1, -1.
    let p = behavior_of(&chsh_leak_strategy(0.9).unwrap()).unwrap();
    let corr = |x, y| -> f64 {
        [(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)].iter().map(|(a, b, sg)| sg * p.get(*a, *b, x, y)).sum()
    };
    for ((x, y), want) in [((0, 0), 1.0), ((0, 1), 1.0), ((1, 0), 1.0), ((1, 1), -1.0)] {
        assert!((corr(x, y) - want).abs() < 1e-15, "E{x}{y}");
    }
    assert!((chsh_leak_value(&p).unwrap() - 4.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn leak_value_and_constraint(k in 0.0f64..0.999) {
        let s = chsh_leak_strategy(k).unwrap();
        let p = behavior_of(&s).unwrap();
        prop_assert!((chsh_leak_value(&p).unwrap() - beta_q(k).unwrap()).abs() < 1e-9);
        for y in 0..2 {
            let d = operator_norm_diff(s.bob_obs(0, y), s.bob_obs(1, y));
            prop_assert!(d <= 2.0 * k + 1e-12);
        }
        // Alice's outcome is unbiased: <A0> = 0.
        let m = marginals(&p).unwrap();
        for y in 0..2 {
            prop_assert!((m.alice(0, 0, y) - 0.5).abs() < 1e-12);
        }
        prop_assert!((s.alice_mean(0)).abs() < 1e-12);
        prop_assert_eq!(p.scenario(), BellScenario::CHSH);
    }

    #[test]
    fn tilted_zeros(e in 0.0f64..0.999) {
        let p = behavior_of(&tilted_hardy_strategy(e).unwrap()).unwrap();
        prop_assert!(p.get(0, 1, 0, 1).abs() < 1e-9);
        prop_assert!(p.get(1, 0, 1, 0).abs() < 1e-9);
        prop_assert!(p.get(0, 0, 1, 1).abs() < 1e-9);
    }
}
