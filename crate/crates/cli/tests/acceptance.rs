//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use lrtd::metrics::{asd, dice, jaccard, ncc, LabelVolume, DEFAULT_BINS};
use lrtd::multislice::{pooled_range, pooled_stats};
use lrtd::tensor::reference::tproduct_oracle;
use lrtd::tpcp::TpcpConfig;
use lrtd::volume::{
    make_phantom, make_recovery_instance, raw_path_for, read_volume, write_volume, ElementType, PhantomSpec,
    VolumeMeta,
};
use lrtd::{ms_lrtd, shrink, tnn, tpcp_solve, tsvd, tsvt, Dims, Tensor3, TransformKind, TransformSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

const KINDS: [TransformKind; 3] = [TransformKind::Dct, TransformKind::Dft, TransformKind::Dwt4];

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dims(n1: usize, n2: usize, n3: usize) -> Dims {
    Dims::new(n1, n2, n3).unwrap()
}

fn gaussian(r: &mut ChaCha8Rng, d: Dims) -> Tensor3<f64> {
    Tensor3::from_fn(d, |_, _, _| r.sample(StandardNormal))
}

fn spec(kind: TransformKind, n3: usize) -> TransformSpec {
    TransformSpec::build(kind, n3).unwrap()
}

fn rel(a: &Tensor3<f64>, b: &Tensor3<f64>) -> f64 {
    (a - b).fro_norm() / b.fro_norm().max(f64::MIN_POSITIVE)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Outcome {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (n1, n2, n4, n3) = (r.random_range(1..=4), r.random_range(1..=4), r.random_range(1..=4), r.random_range(1..=5));
        let a = gaussian(&mut r, dims(n1, n2, n3));
        let b = gaussian(&mut r, dims(n2, n4, n3));
        let fast = spec(TransformKind::Dft, n3).mproduct(&a, &b).unwrap();
        let slow = tproduct_oracle(&a, &b).unwrap();
        worst = worst.max(rel(&fast, &slow));
    }
    check(worst < 1e-10, format!("200 pairs, max relative error {worst:.2e}"))
}

fn tsvd_reconstruction() -> Outcome {
    let mut r = rng(2);
    let (mut rec, mut orth) = (0.0f64, 0.0f64);
    for kind in KINDS {
        for (n1, n2, n3) in [(32, 32, 16), (32, 20, 16), (9, 17, 8), (5, 3, 6)] {
            let t = spec(kind, n3);
            let x = gaussian(&mut r, dims(n1, n2, n3));
            let f = tsvd(&t, &x).unwrap();
            rec = rec.max(rel(&f.reconstruct().unwrap(), &x));
            for (q, n) in [(&f.u, n1), (&f.v, n2)] {
                let qtq = t.mproduct(&t.conj_transpose(q).unwrap(), q).unwrap();
                orth = orth.max((&qtq - &t.identity(n).unwrap()).fro_norm());
            }
        }
    }
    check(rec < 1e-8 && orth < 1e-8, format!("reconstruction {rec:.2e}, orthogonality {orth:.2e}"))
}

fn proximal_optimality() -> Outcome {
    let mut r = rng(3);
    let d = dims(8, 8, 6);
    let mut losses = 0usize;
    let mut trials = 0usize;
    for case in 0..50 {
        let t = spec(KINDS[case % 3], 6);
        let w = gaussian(&mut r, d).scale(r.random_range(0.5..3.0));
        for tau in [0.1, 0.5, 2.0] {
            let svt_obj = |z: &Tensor3<f64>| tau * tnn(&t, z).unwrap() + 0.5 * (z - &w).fro_norm().powi(2);
            let l1_obj = |z: &Tensor3<f64>| tau * z.l1_norm() + 0.5 * (z - &w).fro_norm().powi(2);
            let pairs: [(Tensor3<f64>, &dyn Fn(&Tensor3<f64>) -> f64); 2] =
                [(tsvt(&t, &w, tau).unwrap(), &svt_obj), (shrink(&w, tau), &l1_obj)];
            for (z, obj) in pairs {
                let best = obj(&z);
                let slack = 1e-12 * best.abs().max(1.0);
                let mut rivals = vec![w.clone(), Tensor3::zeros(d)];
                for _ in 0..100 {
                    let step = 10f64.powf(r.random_range(-4.0..0.0));
                    rivals.push(&z + &gaussian(&mut r, d).scale(step));
                }
                for c in &rivals {
                    trials += 1;
                    if obj(c) < best - slack {
                        losses += 1;
                    }
                }
            }
        }
    }
    check(losses == 0, format!("{trials} comparisons, {losses} beaten"))
}

fn exact_recovery() -> Outcome {
    let d = dims(64, 64, 30);
    let t = spec(TransformKind::Dct, 30);
    let cfg = TpcpConfig::default();
    let mut good = 0;
    let mut detail = Vec::new();
    for seed in 0..10 {
        let inst = make_recovery_instance(d, 5, 0.05, &t, seed).unwrap();
        let res = tpcp_solve(&inst.observed, &cfg).unwrap();
        let err = rel(&res.low_rank, &inst.low_rank);
        let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
        for (e, s) in res.sparse.data().iter().zip(inst.sparse.data()) {
            match (e.abs() > 1e-3, *s != 0.0) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
        }
        let f1 = 2.0 * tp as f64 / (2 * tp + fp + fneg).max(1) as f64;
        if err < 1e-3 && f1 > 0.95 {
            good += 1;
        }
        detail.push(format!("{err:.1e}/{f1:.3}"));
    }
    check(good >= 9, format!("{good}/10 seeds (rel err/F1: {})", detail.join(" ")))
}

fn stack_error(est: &[Tensor3<f64>], truth: &[Tensor3<f64>]) -> f64 {
    est.iter().zip(truth).map(|(a, b)| (a - b).fro_norm().powi(2)).sum::<f64>().sqrt()
}

fn multislice_correctness() -> Outcome {
    let cfg = TpcpConfig::default();
    let base = PhantomSpec {
        dims: dims(32, 32, 20),
        slice_drift: 0.3,
        n_volumes: 6,
        sparse_fraction: 0.03,
        ..PhantomSpec::default()
    };
    let p = make_phantom(&PhantomSpec { seed: 100, ..base }).unwrap();
    let whole = ms_lrtd(&p.volumes, 20, &cfg).unwrap();
    let refs: Vec<&Tensor3<f64>> = p.volumes.iter().collect();
    let direct = tpcp_solve(&Tensor3::concat3(&refs).unwrap(), &cfg).unwrap();
    let bitwise = whole.low_rank_volumes.iter().enumerate().all(|(v, l)| {
        l == &direct.low_rank.slice_range_owned(20 * v, 20 * (v + 1)).unwrap()
    });

    let mut wins = 0;
    let mut detail = Vec::new();
    for seed in 0..5 {
        let p = make_phantom(&PhantomSpec { seed, ..base }).unwrap();
        let e5 = stack_error(&ms_lrtd(&p.volumes, 5, &cfg).unwrap().low_rank_volumes, &p.truth_low_rank);
        let ed = stack_error(&ms_lrtd(&p.volumes, 20, &cfg).unwrap().low_rank_volumes, &p.truth_low_rank);
        if e5 < ed {
            wins += 1;
        }
        detail.push(format!("{e5:.3}<{ed:.3}"));
    }
    check(
        bitwise && wins >= 4,
        format!("K=d bitwise {bitwise}; K=5 better on {wins}/5 seeds ({})", detail.join(" ")),
    )
}

fn transform_table() -> Outcome {
    let p = make_phantom(&PhantomSpec::default()).unwrap();
    let mask = LabelVolume::full(p.volumes[0].dims());
    let range = pooled_range(&p.volumes, &mask).unwrap();
    let raw = pooled_stats(&p.volumes, &mask, DEFAULT_BINS, Some(range)).unwrap();
    let mut reduced = true;
    let mut ms = Vec::new();
    let mut detail = vec![format!("raw sigma {:.4} H {:.4}", raw.sigma, raw.entropy_bits)];
    for kind in KINDS {
        let res = ms_lrtd(&p.volumes, 5, &TpcpConfig::default().with_transform(kind)).unwrap();
        let s = pooled_stats(&res.low_rank_volumes, &mask, DEFAULT_BINS, Some(range)).unwrap();
        reduced &= s.sigma < raw.sigma && s.entropy_bits < raw.entropy_bits;
        let t = res.mean_solve_seconds() * 1e3;
        ms.push(t);
        detail.push(format!("{kind} sigma {:.4} H {:.4} {t:.0} ms", s.sigma, s.entropy_bits));
    }
    check(reduced && ms[0] < ms[1], detail.join("; "))
}

fn random_mask(r: &mut ChaCha8Rng, d: Dims, p: f64, spacing: [f64; 3]) -> LabelVolume {
    LabelVolume::new(d, (0..d.len()).map(|_| r.random::<f64>() < p).collect(), spacing).unwrap()
}

fn surface(m: &LabelVolume) -> Vec<[f64; 3]> {
    let d = m.dims();
    let sp = m.spacing();
    let n = [d.n1 as isize, d.n2 as isize, d.n3 as isize];
    let inside = |q: [isize; 3]| (0..3).all(|a| q[a] >= 0 && q[a] < n[a]) && m.get(q[0] as usize, q[1] as usize, q[2] as usize);
    let mut out = Vec::new();
    for k in 0..d.n3 {
        for j in 0..d.n2 {
            for i in 0..d.n1 {
                let p = [i as isize, j as isize, k as isize];
                if !inside(p) {
                    continue;
                }
                let edge = (0..3).any(|a| {
                    [-1, 1].iter().any(|s| {
                        let mut q = p;
                        q[a] += s;
                        !inside(q)
                    })
                });
                if edge {
                    out.push([i as f64 * sp[0], j as f64 * sp[1], k as f64 * sp[2]]);
                }
            }
        }
    }
    out
}

fn asd_brute(a: &LabelVolume, b: &LabelVolume) -> f64 {
    let (sa, sb) = (surface(a), surface(b));
    let near = |p: &[f64; 3], set: &[[f64; 3]]| {
        set.iter()
            .map(|q| (0..3).map(|x| (p[x] - q[x]).powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    };
    let total: f64 = sa.iter().map(|p| near(p, &sb)).sum::<f64>() + sb.iter().map(|p| near(p, &sa)).sum::<f64>();
    total / (sa.len() + sb.len()) as f64
}

fn metric_identities() -> Outcome {
    let mut r = rng(7);
    let (mut dj, mut da, mut dn) = (0.0f64, 0.0f64, 0.0f64);
    let mut pairs = 0;
    while pairs < 100 {
        let d = dims(r.random_range(1..=16), r.random_range(1..=16), r.random_range(1..=16));
        let sp = [r.random_range(0.5..2.0), r.random_range(0.5..2.0), r.random_range(0.5..3.0)];
        let p = r.random_range(0.02..0.7);
        let (a, b) = (random_mask(&mut r, d, p, sp), random_mask(&mut r, d, p, sp));
        if a.count() == 0 || b.count() == 0 {
            continue;
        }
        pairs += 1;
        let j = jaccard(&a, &b).unwrap() / 100.0;
        dj = dj.max((dice(&a, &b).unwrap() / 100.0 - 2.0 * j / (1.0 + j)).abs());
        da = da.max((asd(&a, &b).unwrap() - asd_brute(&a, &b)).abs());
        let x = gaussian(&mut r, d);
        dn = dn.max((ncc(&x, &x, None).unwrap() - 1.0).abs());
        dn = dn.max((ncc(&x, &x.scale(-1.0), None).unwrap() + 1.0).abs());
    }
    check(
        dj < 1e-9 && da < 1e-9 && dn < 1e-12,
        format!("100 pairs; DC-J {dj:.1e}, ASD vs brute force {da:.1e}, NCC {dn:.1e}"),
    )
}

fn format_round_trip(dir: &Path) -> Outcome {
    let mut r = rng(8);
    let mut bad = 0;
    for case in 0..50 {
        let et = [ElementType::U8, ElementType::I16, ElementType::F32][case % 3];
        let d = dims(r.random_range(1..=12), r.random_range(1..=12), r.random_range(1..=8));
        let x = Tensor3::from_fn(d, |_, _, _| match et {
            ElementType::U8 => f64::from(r.random::<u8>()),
            ElementType::I16 => f64::from(r.random::<i16>()),
            ElementType::F32 => f64::from(r.random::<f32>() * 2e4 - 1e4),
        });
        let path = dir.join(format!("rt{case}.mhd"));
        let meta = VolumeMeta::new(d, et).with_spacing([r.random_range(0.1..3.0), 1.0, r.random_range(0.5..5.0)]);
        write_volume(&path, &x, &meta).unwrap();
        let (y, m) = read_volume(&path).unwrap();
        let size_ok = fs::metadata(raw_path_for(&path)).unwrap().len() as usize == d.len() * et.size();
        let same = y.data().iter().zip(x.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        if !(same && size_ok && m == meta) {
            bad += 1;
        }
    }
    check(bad == 0, format!("50 cases, {bad} mismatched"))
}

fn lrtd_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lrtd")).args(args).output().expect("spawn lrtd")
}

fn cli_end_to_end(dir: &Path) -> Outcome {
    let s = |p: &PathBuf| p.to_str().unwrap().to_string();
    let ph = dir.join("ph");
    let out = dir.join("out");
    let rep = dir.join("decompose.json");
    let o = lrtd_cli(&["phantom", "--seed", "3", "--out-dir", &s(&ph)]);
    if !o.status.success() {
        return Err(format!("phantom exited {:?}", o.status.code()));
    }
    let vols: Vec<String> = (0..6).map(|v| s(&ph.join(format!("phantom_{v:02}.mhd")))).collect();
    let masks: Vec<String> = (0..6).map(|v| s(&ph.join(format!("phantom_{v:02}.mask.mhd")))).collect();
    let mut args = vec!["decompose".to_string(), "--out-dir".into(), s(&out), "--report".into(), s(&rep)];
    args.push("--input".into());
    args.extend(vols.iter().cloned());
    args.push("--truth-masks".into());
    args.extend(masks.iter().cloned());
    let o = lrtd_cli(&args.iter().map(String::as_str).collect::<Vec<_>>());
    if o.status.code() != Some(0) {
        return Err(format!("decompose exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
    }
    let r: Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    let mut keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    let schema = keys == ["argv", "command", "config", "metrics", "outputs", "report_version", "segments", "timings"]
        && r["report_version"] == 1
        && r["config"]["lambda"].as_array().is_some_and(|l| l.iter().all(Value::is_f64))
        && r["outputs"].as_array().unwrap().iter().all(|p| Path::new(p.as_str().unwrap()).exists());

    let mut dcs = Vec::new();
    for (v, mask) in masks.iter().enumerate() {
        let support = s(&out.join(format!("phantom_{v:02}.support.mhd")));
        let o = lrtd_cli(&["metrics", "--a", &support, "--b", mask]);
        if !o.status.success() {
            return Err(format!("metrics exited {:?}", o.status.code()));
        }
        let m: Value = serde_json::from_slice(&o.stdout).unwrap();
        dcs.push(m["metrics"]["dice_percent"].as_f64().unwrap());
    }
    let mean = dcs.iter().sum::<f64>() / dcs.len() as f64;
    let reported = r["metrics"]["mean_support_dice"].as_f64().unwrap_or(f64::NAN);
    check(
        schema && mean > 80.0 && (mean - reported).abs() < 1e-9,
        format!("schema valid {schema}; mean support Dice {mean:.2}% (report {reported:.2}%)"),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, f64, Box<dyn Fn() -> Outcome>)> = vec![
        ("oracle equivalence", 10.0, Box::new(oracle_equivalence)),
        ("t-SVD reconstruction", 30.0, Box::new(tsvd_reconstruction)),
        ("proximal optimality", 60.0, Box::new(proximal_optimality)),
        ("exact recovery", 300.0, Box::new(exact_recovery)),
        ("multi-slice correctness", 300.0, Box::new(multislice_correctness)),
        ("transform comparison", 300.0, Box::new(transform_table)),
        ("metric identities", 30.0, Box::new(metric_identities)),
        ("format round trip", 10.0, Box::new({
            let p = dir.path().to_path_buf();
            move || format_round_trip(&p)
        })),
        ("CLI end-to-end", 300.0, Box::new({
            let p = dir.path().to_path_buf();
            move || cli_end_to_end(&p)
        })),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) if secs <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over time budget {budget} s")),
            Err(d) => ("FAIL", d),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} {name} ({secs:.1} s): {detail}");
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
