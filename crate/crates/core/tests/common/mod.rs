//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use gsr_core::{Discretization, GaussianMeanShift, KernelMatrix, LrModel};

// 15-point Kronrod nodes / weights and the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let (f1, f2) = (f(c - h * XGK[i]), f(c + h * XGK[i]));
        k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) on `[a, b]`, started from `pieces` equal
/// subintervals and refined until each piece meets `tol · (b − a)/L`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, pieces: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let len = b - a;
    let mut stack: Vec<(f64, f64)> = (0..pieces)
        .map(|k| {
            (
                a + len * k as f64 / pieces as f64,
                a + len * (k + 1) as f64 / pieces as f64,
            )
        })
        .collect();
    let mut total = 0.0;
    while let Some((lo, hi)) = stack.pop() {
        let (v, err) = gk15(f, lo, hi);
        if err <= tol * (hi - lo) / len || hi - lo < 1e-12 * len {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid));
            stack.push((mid, hi));
        }
    }
    total
}

/// `∫ K∞(x, y) w(y) dy` over `[lo, hi]` by quadrature on the closed-form density.
pub fn kernel_moment(
    m: &GaussianMeanShift,
    x: f64,
    lo: f64,
    hi: f64,
    w: &dyn Fn(f64) -> f64,
) -> f64 {
    let f = |y: f64| m.kernel_inf(x, y).unwrap() * w(y);
    integrate(&f, lo, hi, 1e-12, 64)
}

/// Hat-matrix entries by quadrature: `K_ij = ∫ K∞(z_i, y) φ_j(y) dy` with
/// `φ_j` the piecewise-linear cardinal function on the nodes.
pub fn hat_matrix_by_quadrature(m: &GaussianMeanShift, disc: &Discretization) -> Vec<f64> {
    let xs = disc.partition().nodes().to_vec();
    let z = disc.collocation().to_vec();
    let n = xs.len();
    let mut out = vec![0.0; n * n];
    for (i, &zi) in z.iter().enumerate() {
        for j in 0..n {
            let mut v = 0.0;
            if j > 0 {
                let (a, b) = (xs[j - 1], xs[j]);
                v += kernel_moment(m, zi, a, b, &|y| (y - a) / (b - a));
            }
            if j + 1 < n {
                let (a, b) = (xs[j], xs[j + 1]);
                v += kernel_moment(m, zi, a, b, &|y| (b - y) / (b - a));
            }
            out[i * n + j] = v;
        }
    }
    out
}

/// `Σ_k K^k v` until the increment drops below `tol` (or `max_terms`).
pub fn neumann(k: &KernelMatrix, v: &[f64], tol: f64, max_terms: usize) -> Vec<f64> {
    let mut sum = v.to_vec();
    let mut term = v.to_vec();
    for _ in 0..max_terms {
        term = k.apply(&term);
        let size = term.iter().fold(0.0f64, |a, t| a.max(t.abs()));
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        if size < tol {
            break;
        }
    }
    sum
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `‖(I − K)u − rhs‖∞ / ‖rhs‖∞`, computed directly.
pub fn relative_residual(k: &KernelMatrix, u: &[f64], rhs: &[f64]) -> f64 {
    let ku = k.apply(u);
    let r: Vec<f64> = u.iter().zip(&ku).zip(rhs).map(|((u, ku), b)| u - ku - b).collect();
    sup(&r) / sup(rhs)
}

pub fn gauss(theta: f64) -> GaussianMeanShift {
    GaussianMeanShift::new(theta).unwrap()
}
