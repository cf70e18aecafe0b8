//! Structural identities that hold independently of any tabulated value.

mod common;

use common::*;
use gsr_core::collocation::assemble;
use gsr_core::metrics::{add_k_sequence, solve_delta0, solve_iadd, VerificationPath};
use gsr_core::solver::solve_pair;
use gsr_core::{evaluate, Discretization, EvalOptions, LrModel, Method};

#[test]
fn change_of_measure_on_grid() {
    for theta in [0.1, 1.0, 2.0] {
        let m = gauss(theta);
        let mut worst = 0.0f64;
        for i in 0..100 {
            let x = 60.0 * i as f64 / 99.0;
            for j in 0..100 {
                let y = 0.01 + 120.0 * j as f64 / 99.0;
                let lhs = (1.0 + x) * m.kernel_0(x, y).unwrap();
                let rhs = y * m.kernel_inf(x, y).unwrap();
                worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-300).max(lhs.abs()).max(1.0));
            }
        }
        assert!(worst < 1e-12, "theta={theta}: {worst:e}");
    }
}

#[test]
fn redundant_path_identity_at_512() {
    for (theta, a) in [(1.0, 56.0), (0.5, 747.62), (0.1, 94.34)] {
        let m = gauss(theta);
        let k = assemble(&m, Discretization::hat(a, 512).unwrap()).unwrap();
        let s = solve_pair(&k).unwrap();
        let v = VerificationPath::solve(&k).unwrap();
        let rel = sup_diff(s.xi(), &v.xi_nodes()) / sup(s.xi());
        assert!(rel < 1e-8, "theta={theta}: {rel:e}");
        // Off the nodes, via the iterated solutions.
        for x in [0.0, 0.37 * a, a] {
            let (_, xi) = s.eval_both(&m, x).unwrap();
            let (d0, psi) = v.eval(&m, x).unwrap();
            assert!(((psi + x * d0) / xi - 1.0).abs() < 1e-8, "theta={theta} x={x}");
        }
    }
}

#[test]
fn delays_sum_to_integral_delay() {
    let m = gauss(1.0);
    let k = assemble(&m, Discretization::hat(56.0, 256).unwrap()).unwrap();
    let d0 = solve_delta0(&k).unwrap();
    let psi = solve_iadd(&k, &d0).unwrap();
    let seq = add_k_sequence(&k, &d0, 100_000);
    let mut sum = vec![0.0; d0.len()];
    for d in &seq {
        for (s, v) in sum.iter_mut().zip(d) {
            *s += v;
        }
    }
    assert!(sup_diff(&sum, &psi) < 1e-8 * sup(&psi));
}

#[test]
fn riadd_equals_stadd_without_headstart() {
    let m = gauss(0.5);
    let (_, rep) =
        evaluate(&m, Method::Hat, 74.76, 0.0, 1024, EvalOptions { verify: true }).unwrap();
    let riadd = rep.iadd.unwrap() / rep.arl;
    assert!((riadd / rep.stadd - 1.0).abs() < 1e-9);
}

#[test]
fn headstart_at_threshold_and_zero() {
    let m = gauss(1.0);
    let (s, _) = evaluate(&m, Method::Hat, 56.0, 0.0, 512, EvalOptions::default()).unwrap();
    // Starting at A the next step still has to cross: ℓ(A) ≥ 1.
    let (ell_a, _) = s.eval_both(&m, 56.0).unwrap();
    assert!(ell_a >= 1.0);
    // ℓ decreases in the headstart.
    let mut prev = f64::INFINITY;
    for i in 0..=20 {
        let (ell, _) = s.eval_both(&m, 56.0 * i as f64 / 20.0).unwrap();
        assert!(ell <= prev + 1e-9);
        prev = ell;
    }
}
