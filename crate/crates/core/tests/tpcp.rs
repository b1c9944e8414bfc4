mod common;

use std::time::Instant;

use common::*;
use lrtd::tpcp::{tpcp_objective, tpcp_solve_with};
use lrtd::volume::make_recovery_instance;
use lrtd::{tnn, tpcp_solve, with_workers, Lambda, TpcpConfig, TransformKind};

#[test]
fn pure_low_rank_input_stays_low_rank() {
    let t = spec(TransformKind::Dct, 8);
    let mut g = rng(4);
    let a = gaussian(&mut g, dims(20, 2, 8));
    let b = gaussian(&mut g, dims(2, 20, 8));
    let x = t.mproduct(&a, &b).unwrap();
    let r = tpcp_solve(&x, &TpcpConfig::default()).unwrap();
    assert!(r.converged);
    assert!(r.sparse.l1_norm() / x.l1_norm() < 1e-3);
    assert!(rel_err(&r.low_rank, &x) < 1e-3);
}

#[test]
fn converged_run_invariants() {
    let t = spec(TransformKind::Dct, 10);
    let inst = make_recovery_instance(dims(24, 20, 10), 3, 0.05, &t, 9).unwrap();
    let cfg = TpcpConfig::default();
    let r = tpcp_solve(&inst.observed, &cfg).unwrap();
    assert!(r.converged);
    let last = r.trace.last().unwrap();
    assert!(last.primal < cfg.eps && last.delta_low_rank < cfg.eps && last.delta_sparse < cfg.eps);
    assert!((&(&r.low_rank + &r.sparse) - &inst.observed).inf_norm() <= last.primal + 1e-15);
    let mus: Vec<f64> = r.trace.iter().map(|s| s.mu).collect();
    assert!(mus.windows(2).all(|w| w[0] <= w[1]) && mus.iter().all(|&m| m <= cfg.mu_max));
    let tail = &r.trace[r.trace.len().saturating_sub(5)..];
    assert!(tail.iter().all(|s| s.primal >= last.primal));
    let obj = tpcp_objective(&t, &r.low_rank, &r.sparse, r.lambda).unwrap();
    assert!(obj <= tnn(&t, &inst.observed).unwrap() + 1e-6);
}

#[test]
fn mu_caps_at_maximum() {
    let x = gaussian(&mut rng(1), dims(6, 6, 4));
    let cfg = TpcpConfig { mu0: 1.0, mu_max: 2.0, max_iters: 20, ..TpcpConfig::default() };
    let r = tpcp_solve(&x, &cfg).unwrap();
    assert_eq!(r.trace.last().unwrap().mu, 2.0);
}

#[test]
fn explicit_lambda_is_used() {
    let x = gaussian(&mut rng(2), dims(6, 6, 4));
    let cfg = TpcpConfig { lambda: Lambda::Value(0.25), ..TpcpConfig::default() };
    assert_eq!(tpcp_solve(&x, &cfg).unwrap().lambda, 0.25);
}

#[test]
fn identical_traces_across_worker_counts() {
    let t = spec(TransformKind::Dft, 6);
    let inst = make_recovery_instance(dims(12, 12, 6), 2, 0.05, &t, 3).unwrap();
    let cfg = TpcpConfig::default().with_transform(TransformKind::Dft);
    let a = with_workers(1, || tpcp_solve(&inst.observed, &cfg).unwrap());
    let b = with_workers(4, || tpcp_solve(&inst.observed, &cfg).unwrap());
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.low_rank, b.low_rank);
    assert_eq!(a.sparse, b.sparse);
}

#[test]
fn dwt_and_custom_transforms_solve() {
    let t = spec(TransformKind::Dwt4, 8);
    let inst = make_recovery_instance(dims(30, 30, 8), 2, 0.05, &t, 5).unwrap();
    let r = tpcp_solve(&inst.observed, &TpcpConfig::default().with_transform(TransformKind::Dwt4)).unwrap();
    assert!(r.converged && rel_err(&r.low_rank, &inst.low_rank) < 1e-3);

    let custom = lrtd::TransformSpec::custom(lrtd::transform::dct2_matrix(8) * 2.0).unwrap();
    let r2 = tpcp_solve_with(&inst.observed, &TpcpConfig::default(), &custom).unwrap();
    assert!(r2.converged);
}

/// Per-iteration cost at fixed n3 is dominated by the slice SVDs, cubic in
/// n1 = n2; the accepted band is 3x to 10x for doubling n1 and n2.
#[test]
fn iteration_cost_scaling() {
    let cfg = TpcpConfig { max_iters: 6, ..TpcpConfig::default() };
    let time = |n: usize| {
        let x = gaussian(&mut rng(n as u64), dims(n, n, 8));
        with_workers(1, || {
            (0..3)
                .map(|_| {
                    let st = Instant::now();
                    tpcp_solve(&x, &cfg).unwrap();
                    st.elapsed().as_secs_f64()
                })
                .fold(f64::INFINITY, f64::min)
        })
    };
    let ratio = time(64) / time(32);
    assert!((3.0..=10.0).contains(&ratio), "ratio {ratio}");
}
