#![allow(dead_code)] // shared across test binaries; each uses a subset

//! Shared test oracles, independent of the library's production paths.

use rwpot_core::field::LatticeBox;

/// Closed form for the d=1 cost per unit distance under a constant potential
/// λ, via the hyperbolic route `arccosh(e^λ)`; the library computes the same
/// quantity from the first-passage generating function `(1-√(1-s²))/s`.
pub fn arccosh_cost(lambda: f64) -> f64 {
    let y = lambda.exp();
    (y + (y * y - 1.0).sqrt()).ln()
}

/// Simple-walk Cramér rate by numeric Legendre transform of `log cosh`,
/// maximized by golden section.
pub fn cramer_by_legendre(x: f64) -> f64 {
    assert!(x.abs() < 1.0);
    let f = |theta: f64| theta * x - theta.cosh().ln();
    let (mut a, mut b) = (0.0f64, 20.0f64);
    for _ in 0..200 {
        let c = b - 0.618_033_988_749_894_9 * (b - a);
        let d = a + 0.618_033_988_749_894_9 * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b))
}

/// Finite-time path-sum oracle on an absorbing box: returns
/// `(e_T, survival_T)` where `e_T(x)` sums the weights
/// `(2d)^{-len} e^{-Σω}` of all paths from `x` first hitting `y` within `T`
/// steps, and `survival_T(x)` is the weight mass of length-`T` prefixes that
/// have neither hit `y` nor left the box — an upper bound on the tail
/// `e - e_T`.
pub fn path_sum_oracle(
    omega_at: &dyn Fn(&[i64]) -> f64,
    y: &[i64],
    bbox: &LatticeBox,
    t_max: usize,
) -> (Vec<f64>, Vec<f64>) {
    let d = bbox.dim();
    let n = bbox.len();
    let y_idx = bbox.index(y).expect("target inside box");
    let w: Vec<f64> = (0..n)
        .map(|i| (-omega_at(&bbox.site(i))).exp() / (2 * d) as f64)
        .collect();
    let neighbor_sum = |v: &[f64], i: usize| -> f64 {
        let site = bbox.site(i);
        let mut s = 0.0;
        for axis in 0..d {
            for sign in [-1i64, 1] {
                let mut nb = site.clone();
                nb[axis] += sign;
                if let Some(j) = bbox.index(&nb) {
                    s += v[j];
                }
            }
        }
        s
    };
    let mut e = vec![0.0; n];
    e[y_idx] = 1.0;
    let mut surv: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i != y_idx))).collect();
    for _ in 0..t_max {
        let mut e_next = vec![0.0; n];
        let mut s_next = vec![0.0; n];
        for i in 0..n {
            if i == y_idx {
                e_next[i] = 1.0;
                continue;
            }
            e_next[i] = w[i] * neighbor_sum(&e, i);
            s_next[i] = w[i] * neighbor_sum(&surv, i);
        }
        e = e_next;
        surv = s_next;
    }
    (e, surv)
}

/// Literal recursive enumeration of paths of length ≤ `t_max` from `x`
/// first hitting `y`, for validating the DP oracle on tiny instances.
pub fn enumerate_paths_weight(
    omega_at: &dyn Fn(&[i64]) -> f64,
    x: &[i64],
    y: &[i64],
    bbox: &LatticeBox,
    t_max: usize,
) -> f64 {
    fn recurse(
        omega_at: &dyn Fn(&[i64]) -> f64,
        pos: &mut Vec<i64>,
        y: &[i64],
        bbox: &LatticeBox,
        weight: f64,
        steps_left: usize,
        d: usize,
    ) -> f64 {
        if pos.as_slice() == y {
            return weight;
        }
        if steps_left == 0 || !bbox.contains(pos) {
            return 0.0;
        }
        let step_weight = weight * (-omega_at(pos)).exp() / (2 * d) as f64;
        let mut total = 0.0;
        for axis in 0..d {
            for sign in [-1i64, 1] {
                pos[axis] += sign;
                total += recurse(omega_at, pos, y, bbox, step_weight, steps_left - 1, d);
                pos[axis] -= sign;
            }
        }
        total
    }
    let mut pos = x.to_vec();
    let d = x.len();
    recurse(omega_at, &mut pos, y, bbox, 1.0, t_max, d)
}
