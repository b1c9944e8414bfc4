mod common;

use common::*;
use lrtd::metrics::{dice, LabelVolume};
use lrtd::multislice::{pooled_stats, sweep_segment_length};
use lrtd::volume::{make_phantom, PhantomSpec};
use lrtd::{ms_lrtd, plan_segments, tpcp_solve, with_workers, Lambda, Tensor3, TpcpConfig, TransformKind};

#[test]
fn plan_tiles_and_pads() {
    for d in 2..40 {
        for k in 2..12 {
            let p = plan_segments(d, k).unwrap();
            let mut next = 0;
            for (j, s) in p.segments.iter().enumerate() {
                assert_eq!(s.core_start, next);
                assert!(s.core_end - s.core_start >= 2);
                let first = j == 0;
                let last = j + 1 == p.segments.len();
                assert_eq!(s.padded_start, if first { s.core_start } else { s.core_start - 1 });
                assert_eq!(s.padded_end, if last { s.core_end } else { s.core_end + 1 });
                next = s.core_end;
            }
            assert_eq!(next, d);
            assert!(p.segments.len() <= d.div_ceil(k));
        }
    }
}

#[test]
fn whole_volume_segment_equals_direct_solve() {
    let p = make_phantom(&PhantomSpec { n_volumes: 3, dims: dims(12, 10, 6), ..PhantomSpec::default() }).unwrap();
    let cfg = TpcpConfig::default();
    let ms = ms_lrtd(&p.volumes, 6, &cfg).unwrap();
    let refs: Vec<&Tensor3<f64>> = p.volumes.iter().collect();
    let direct = tpcp_solve(&Tensor3::concat3(&refs).unwrap(), &cfg).unwrap();
    for v in 0..3 {
        assert_eq!(ms.low_rank_volumes[v], direct.low_rank.slice_range_owned(6 * v, 6 * v + 6).unwrap());
        assert_eq!(ms.sparse_volumes[v], direct.sparse.slice_range_owned(6 * v, 6 * v + 6).unwrap());
    }
}

#[test]
fn identical_copies_with_dominant_lambda() {
    let x = gaussian(&mut rng(6), dims(32, 32, 12));
    let vols = vec![x.clone(); 4];
    for kind in [TransformKind::Dct, TransformKind::Dft] {
        let cfg = TpcpConfig { lambda: Lambda::Value(1.0), ..TpcpConfig::default().with_transform(kind) };
        let r = ms_lrtd(&vols, 5, &cfg).unwrap();
        for (l, e) in r.low_rank_volumes.iter().zip(&r.sparse_volumes) {
            assert_eq!(l.dims(), x.dims());
            assert!(rel_err(l, &x) < 1e-10, "{kind}");
            assert!(e.fro_norm() < 1e-10, "{kind}");
        }
    }
    // a periodic stack is shift invariant under the DFT, so every copy gets the same split
    let r = ms_lrtd(&vols, 5, &TpcpConfig::default().with_transform(TransformKind::Dft)).unwrap();
    for v in 1..4 {
        assert!(r.low_rank_volumes[v].max_abs_diff(&r.low_rank_volumes[0]).unwrap() < 1e-10);
    }
}

#[test]
#[ignore = "fails: a Gaussian volume is full rank in every transform-domain slice, rel err 0.13 to 0.63"]
fn identical_copies_at_auto_lambda() {
    let x = gaussian(&mut rng(6), dims(32, 32, 12));
    let r = ms_lrtd(&vec![x.clone(); 4], 5, &TpcpConfig::default()).unwrap();
    for l in &r.low_rank_volumes {
        assert!(rel_err(l, &x) < 1e-2);
    }
}

#[test]
fn phantom_without_anomalies_has_no_sparse_part() {
    let spec = PhantomSpec { sparse_magnitude: 0.0, ..PhantomSpec::default() };
    let p = make_phantom(&spec).unwrap();
    let r = ms_lrtd(&p.volumes, 5, &TpcpConfig::default()).unwrap();
    let e: f64 = r.sparse_volumes.iter().map(|e| e.l1_norm()).sum();
    let x: f64 = p.volumes.iter().map(|x| x.l1_norm()).sum();
    assert!(e / x < 1e-3, "{}", e / x);
}

#[test]
fn phantom_blobs_are_found() {
    let p = make_phantom(&PhantomSpec::default()).unwrap();
    let r = ms_lrtd(&p.volumes, 5, &TpcpConfig::default()).unwrap();
    assert!(r.all_converged());
    let max_e = r.sparse_volumes.iter().map(|e| e.inf_norm()).fold(0.0, f64::max);
    for (v, (e, m)) in r.sparse_volumes.iter().zip(&p.anomaly_masks).enumerate() {
        let support = LabelVolume::from_tensor(e, [1.0; 3], |x| x.abs() > 0.5 * max_e).unwrap();
        let dc = dice(&support, m).unwrap();
        assert!(dc > 80.0, "volume {v}: {dc}");
    }
    // the split pieces add back up to the input
    let worst = r.per_segment.iter().map(|s| s.final_primal_residual).fold(0.0, f64::max);
    for ((l, e), x) in r.low_rank_volumes.iter().zip(&r.sparse_volumes).zip(&p.volumes) {
        assert!((&(l + e) - x).inf_norm() <= worst + 1e-12);
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let p = make_phantom(&PhantomSpec { n_volumes: 2, ..PhantomSpec::default() }).unwrap();
    let cfg = TpcpConfig::default();
    let a = with_workers(1, || ms_lrtd(&p.volumes, 3, &cfg).unwrap());
    let b = with_workers(3, || ms_lrtd(&p.volumes, 3, &cfg).unwrap());
    assert_eq!(a.low_rank_volumes, b.low_rank_volumes);
    assert_eq!(a.sparse_volumes, b.sparse_volumes);
}

#[test]
fn sweep_reduces_sigma() {
    let p = make_phantom(&PhantomSpec::default()).unwrap();
    let mask = LabelVolume::full(p.volumes[0].dims());
    let table = sweep_segment_length(&p.volumes, &[2, 5, 9], &mask, &TpcpConfig::default(), 256).unwrap();
    assert_eq!(table.rows.len(), 3);
    let raw = pooled_stats(&p.volumes, &mask, 256, None).unwrap();
    assert_eq!(raw.sigma, table.raw.sigma);
    for row in &table.rows {
        assert!(row.sigma < raw.sigma, "K = {}: {} vs {}", row.k, row.sigma, raw.sigma);
    }
    let csv = table.to_csv();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("k,sigma,entropy_bits\n2,"));
}

#[test]
fn short_segments_rejected() {
    let x = Tensor3::zeros(dims(4, 4, 6));
    assert!(ms_lrtd(&[x], 1, &TpcpConfig::default()).is_err());
}
