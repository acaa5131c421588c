//! Published reference data: the maximal Hardy behavior, its convex
//! decomposition at `eps = 1/4`, and the twelve affinely independent
//! vertices on the `pd_facet` hyperplane.

use crate::behavior::{Behavior, BellScenario};
use crate::error::Result;
use crate::numeric::{DenseMatrix, Num};

/// Entries of the symbolic tables, polynomial in `eps`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sym {
    Zero,
    One,
    E,
    OneMinusE,
    E2,
    OneMinusESq,
    EMinusE2,
}

impl Sym {
    pub fn eval<T: Num>(self, eps: &T) -> T {
        let e = eps.clone();
        let c = T::one() - e.clone();
        match self {
            Sym::Zero => T::zero(),
            Sym::One => T::one(),
            Sym::E => e,
            Sym::OneMinusE => c,
            Sym::E2 => e.clone() * e,
            Sym::OneMinusESq => c.clone() * c,
            Sym::EMinusE2 => e.clone() - e.clone() * e,
        }
    }
}

/// The maximal Hardy behavior `p^H(ab|xy)` in float policy.
pub fn hardy_behavior() -> Behavior<f64> {
    let s5 = 5f64.sqrt();
    let t = (7.0 - 3.0 * s5) / 2.0;
    let g = (s5 - 1.0) / 2.0;
    let u = (3.0 - s5) / 2.0;
    #[rustfmt::skip]
    let values = vec![
        // x=0,y=0: 00 01 10 11
        (5.0 * s5 - 11.0) / 2.0, t, t, g,
        // x=0,y=1
        s5 - 2.0, 0.0, t, g,
        // x=1,y=0
        s5 - 2.0, t, 0.0, g,
        // x=1,y=1
        0.0, u, u, s5 - 2.0,
    ];
    Behavior::conditional(BellScenario::CHSH, values).expect("Hardy table is normalised")
}

/// `p^H(00|00) = (5 sqrt5 - 11)/2`.
pub fn hardy_p0000() -> f64 {
    (5.0 * 5f64.sqrt() - 11.0) / 2.0
}

/// Weights of the nine-vertex decomposition of the Hardy behavior.
pub fn table_one_weights() -> [f64; 9] {
    let s5 = 5f64.sqrt();
    [
        (108.0 * s5 - 241.0) / 5.0,
        (108.0 * s5 - 241.0) / 5.0,
        (311.0 - 138.0 * s5) / 15.0,
        (14.0 - 6.0 * s5) / 3.0,
        (1647.0 - 736.0 * s5) / 20.0,
        (1169.0 - 522.0 * s5) / 20.0,
        (882.0 * s5 - 1969.0) / 30.0,
        (141.0 - 63.0 * s5) / 2.0,
        (99.0 * s5 - 221.0) / 3.0,
    ]
}

use Sym::*;

/// For each of the nine decomposition vertices: `(pA(0|xy), pB(0|xy))`
/// for `xy = 00, 01, 10, 11`.
pub const TABLE_ONE_MARGINALS: [[(Sym, Sym); 4]; 9] = [
    [(Zero, Zero), (Zero, Zero), (Zero, Zero), (E, Zero)],
    [(Zero, Zero), (Zero, Zero), (E, Zero), (Zero, Zero)],
    [(Zero, Zero), (Zero, Zero), (One, E), (One, Zero)],
    [(Zero, Zero), (E, One), (Zero, Zero), (Zero, One)],
    [(E, E), (Zero, Zero), (Zero, Zero), (Zero, Zero)],
    [(E, OneMinusE), (Zero, Zero), (One, One), (One, Zero)],
    [(E, One), (Zero, Zero), (One, One), (One, Zero)],
    [(OneMinusE, E), (One, One), (Zero, Zero), (Zero, One)],
    [(One, E), (One, One), (Zero, Zero), (Zero, One)],
];

/// Product table `p(ab|xy) = pA(a|xy) pB(b|xy)` from per-input marginals.
pub fn product_vertex<T: Num>(marg: &[(T, T); 4]) -> Vec<T> {
    let sc = BellScenario::CHSH;
    let mut v = vec![T::zero(); 16];
    for x in 0..2 {
        for y in 0..2 {
            let (pa, pb) = &marg[sc.input_index(x, y)];
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
}

/// The nine decomposition vertices evaluated at `eps`.
pub fn table_one_vertices<T: Num>(eps: &T) -> Vec<Vec<T>> {
    TABLE_ONE_MARGINALS
        .iter()
        .map(|row| product_vertex(&row.map(|(a, b)| (a.eval(eps), b.eval(eps)))))
        .collect()
}

/// Rows `V1, V2, V7, V10, V24, V26, V29, V37, V44, V45, V51, V53`; columns
/// are `p(01|xy), p(10|xy), p(11|xy)` for `xy = 00, 01, 10, 11`.
#[rustfmt::skip]
pub const FACET_WITNESS_TABLE: [[Sym; 12]; 12] = [
    [Zero, Zero, One, Zero, Zero, One, Zero, Zero, One, Zero, Zero, One],
    [Zero, Zero, One, Zero, One, Zero, Zero, Zero, One, Zero, One, Zero],
    [Zero, Zero, One, Zero, Zero, One, One, Zero, Zero, One, Zero, Zero],
    [Zero, Zero, One, Zero, E, OneMinusE, Zero, Zero, One, E, Zero, OneMinusE],
    [Zero, Zero, One, Zero, OneMinusE, Zero, E, Zero, OneMinusE, Zero, OneMinusE, E],
    [Zero, Zero, One, Zero, E, OneMinusE, OneMinusE, Zero, Zero, One, Zero, Zero],
    [Zero, OneMinusE, Zero, Zero, Zero, One, Zero, Zero, Zero, One, Zero, Zero],
    [OneMinusE, Zero, Zero, Zero, Zero, Zero, Zero, Zero, One, Zero, One, Zero],
    [OneMinusE, Zero, Zero, Zero, E, Zero, E, Zero, OneMinusE, Zero, OneMinusE, E],
    [Zero, Zero, Zero, OneMinusESq, E2, EMinusE2, Zero, Zero, Zero, One, Zero, Zero],
    [Zero, Zero, Zero, Zero, E, Zero, E2, OneMinusESq, EMinusE2, Zero, Zero, One],
    [Zero, Zero, Zero, Zero, Zero, Zero, Zero, Zero, Zero, EMinusE2, EMinusE2, E2],
];

/// The 12x12 matrix `M_V` at `eps`.
pub fn facet_witness_matrix<T: Num>(eps: &T) -> Result<DenseMatrix<T>> {
    DenseMatrix::from_rows(FACET_WITNESS_TABLE.iter().map(|r| r.iter().map(|s| s.eval(eps)).collect()).collect())
}

/// Full 16-entry conditional tables for the witness rows; `p(00|xy)` is
/// restored from normalisation.
pub fn facet_witness_vertices<T: Num>(eps: &T) -> Vec<Vec<T>> {
    let sc = BellScenario::CHSH;
    FACET_WITNESS_TABLE
        .iter()
        .map(|r| {
            let mut v = vec![T::zero(); 16];
            for xy in 0..4 {
                let (x, y) = (xy / 2, xy % 2);
                let mut rest = T::zero();
                for (k, (a, b)) in [(0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                    let val = r[3 * xy + k].eval(eps);
                    rest = rest + val.clone();
                    v[sc.index(a, b, x, y)] = val;
                }
                v[sc.index(0, 0, x, y)] = T::one() - rest;
            }
            v
        })
        .collect()
}

/// `4 (2 - e) (1 - e)^6 e^5`.
pub fn facet_witness_det<T: Num>(eps: &T) -> T {
    let e = eps.clone();
    let c = T::one() - e.clone();
    let mut out = T::from_i64(4) * (T::from_i64(2) - e.clone());
    for _ in 0..6 {
        out = out * c.clone();
    }
    for _ in 0..5 {
        out = out * e.clone();
    }
    out
}
