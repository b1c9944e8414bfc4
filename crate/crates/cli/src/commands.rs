use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use lrtd::metrics::{self, LabelVolume, DEFAULT_BINS};
use lrtd::multislice::{pooled_range, pooled_stats, sweep_segment_length, MultiSliceResult};
use lrtd::tsvd::avg_rank;
use lrtd::volume::{
    make_phantom, read_label, read_volume, write_label, write_volume, ElementType, Normalization, PhantomSpec,
    VolumeMeta,
};
use lrtd::{ms_lrtd, tnn, Dims, Tensor3, TransformKind, TransformSpec};
use serde_json::{json, Value};

use crate::plot::sigma_vs_k_svg;
use crate::report::RunReport;
use crate::{SolverArgs, Status};

fn transform_arg(s: &str) -> Result<TransformKind, String> {
    match s.parse::<TransformKind>() {
        Ok(TransformKind::Custom) | Err(_) => Err(format!("unknown transform '{s}', expected dct, fft or dwt4")),
        Ok(k) => Ok(k),
    }
}

fn dims_arg(s: &str) -> Result<Dims, String> {
    let parts: Vec<usize> = s
        .split([',', 'x'])
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad dimension '{p}' in '{s}'")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Dims::new(a, b, c).map_err(|e| e.to_string()),
        _ => Err(format!("expected three dimensions like 32,32,12, got '{s}'")),
    }
}

fn k_arg(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(k) if k >= 2 => Ok(k),
        _ => Err(format!("segment lengths must be integers of at least 2, got '{s}'")),
    }
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    /// Input volumes (.mhd headers) with equal dimensions.
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    #[arg(long, default_value = "dct", value_parser = transform_arg)]
    transform: TransformKind,
    /// Consecutive slices per segment (at least 2).
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(2..))]
    segment_length: u32,
    /// Region for the masked sigma/entropy table in the report.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Reference anomaly masks, one per input, for support Dice in the report.
    #[arg(long, num_args = 1..)]
    truth_masks: Vec<PathBuf>,
    /// Support of the sparse part: voxels with |E| above this fraction of the
    /// largest |E| over all inputs.
    #[arg(long, default_value_t = 0.5)]
    support_threshold: f64,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Run report (JSON); printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

struct Inputs {
    volumes: Vec<Tensor3<f64>>,
    metas: Vec<VolumeMeta>,
    names: Vec<String>,
}

fn read_inputs(paths: &[PathBuf]) -> Result<Inputs> {
    let mut inputs = Inputs { volumes: Vec::new(), metas: Vec::new(), names: Vec::new() };
    let mut seen = HashSet::new();
    for p in paths {
        let (x, meta) = read_volume(p).with_context(|| format!("reading {}", p.display()))?;
        if let Some(first) = inputs.volumes.first() {
            ensure!(
                x.dims() == first.dims(),
                "{} has dims {} but {} has {}",
                p.display(),
                x.dims(),
                paths[0].display(),
                first.dims()
            );
        }
        let name = p
            .file_stem()
            .and_then(|s| s.to_str())
            .context("input path has no file name")?
            .to_string();
        ensure!(seen.insert(name.clone()), "two inputs share the name '{name}'");
        inputs.volumes.push(x);
        inputs.metas.push(meta);
        inputs.names.push(name);
    }
    Ok(inputs)
}

fn read_mask(path: &Option<PathBuf>, d: Dims) -> Result<LabelVolume> {
    match path {
        Some(p) => {
            let m = read_label(p).with_context(|| format!("reading mask {}", p.display()))?;
            ensure!(m.dims() == d, "mask {} has dims {} but the volumes have {d}", p.display(), m.dims());
            Ok(m)
        }
        None => Ok(LabelVolume::full(d)),
    }
}

fn solver_json(cfg: &lrtd::TpcpConfig, k: usize, workers: usize, res: &MultiSliceResult) -> Value {
    json!({
        "transform": cfg.transform.name(),
        "segment_length": k,
        "lambda": res.per_segment.iter().map(|s| s.lambda).collect::<Vec<_>>(),
        "mu0": cfg.mu0,
        "mu_max": cfg.mu_max,
        "rho": cfg.rho,
        "eps": cfg.eps,
        "max_iters": cfg.max_iters,
        "workers": resolved_workers(workers),
    })
}

fn resolved_workers(workers: usize) -> usize {
    if workers > 0 {
        workers
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

fn f32_meta(like: &VolumeMeta) -> VolumeMeta {
    VolumeMeta::new(like.dims, ElementType::F32).with_spacing(like.spacing)
}

pub fn decompose(a: &DecomposeArgs, workers: usize) -> Result<Status> {
    let started = Instant::now();
    let mut report = RunReport::new("decompose");
    ensure!(
        a.support_threshold > 0.0 && a.support_threshold < 1.0,
        "support threshold must lie in (0, 1), got {}",
        a.support_threshold
    );
    let k = a.segment_length as usize;
    let cfg = a.solver.config(a.transform);
    cfg.validate()?;

    let t = Instant::now();
    let inp = read_inputs(&a.input)?;
    let d = inp.volumes[0].dims();
    let mask = read_mask(&a.mask, d)?;
    let truth: Vec<LabelVolume> = a
        .truth_masks
        .iter()
        .map(|p| read_label(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<_>>()?;
    ensure!(
        truth.is_empty() || truth.len() == inp.volumes.len(),
        "got {} truth masks for {} inputs",
        truth.len(),
        inp.volumes.len()
    );
    report.time("read", t.elapsed().as_secs_f64());

    let refs: Vec<&Tensor3<f64>> = inp.volumes.iter().collect();
    let norm = Normalization::fit(&refs);
    let normalized: Vec<Tensor3<f64>> = inp.volumes.iter().map(|x| norm.apply(x)).collect();

    let t = Instant::now();
    let res = ms_lrtd(&normalized, k, &cfg)?;
    report.time("solve", t.elapsed().as_secs_f64());

    let max_e = res.sparse_volumes.iter().map(|e| e.inf_norm()).fold(0.0, f64::max);
    let cut = a.support_threshold * max_e;
    let low: Vec<Tensor3<f64>> = res.low_rank_volumes.iter().map(|l| norm.invert(l)).collect();
    let sparse: Vec<Tensor3<f64>> = res.sparse_volumes.iter().map(|e| norm.invert_scale(e)).collect();
    let supports: Vec<LabelVolume> = res
        .sparse_volumes
        .iter()
        .zip(&inp.metas)
        .map(|(e, m)| LabelVolume::from_tensor(e, m.spacing, |v| max_e > 0.0 && v.abs() > cut))
        .collect::<lrtd::Result<_>>()?;

    let t = Instant::now();
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for (v, name) in inp.names.iter().enumerate() {
        let meta = f32_meta(&inp.metas[v]);
        for (suffix, x) in [("lowrank", &low[v]), ("sparse", &sparse[v])] {
            let p = a.out_dir.join(format!("{name}.{suffix}.mhd"));
            write_volume(&p, x, &meta)?;
            report.output(&p);
        }
        let p = a.out_dir.join(format!("{name}.support.mhd"));
        write_label(&p, &supports[v])?;
        report.output(&p);
    }
    report.time("write", t.elapsed().as_secs_f64());

    let mut m = serde_json::Map::new();
    m.insert(
        "support_voxels".into(),
        json!(supports.iter().map(|s| s.count()).collect::<Vec<_>>()),
    );
    if !truth.is_empty() {
        let dc: Vec<f64> = supports
            .iter()
            .zip(&truth)
            .map(|(s, tm)| metrics::dice(s, tm))
            .collect::<lrtd::Result<_>>()?;
        let mean = dc.iter().sum::<f64>() / dc.len() as f64;
        m.insert("support_dice".into(), json!(dc));
        m.insert("mean_support_dice".into(), json!(mean));
    }
    let range = pooled_range(&inp.volumes, &mask)?;
    let raw = pooled_stats(&inp.volumes, &mask, DEFAULT_BINS, Some(range))?;
    let lr = pooled_stats(&low, &mask, DEFAULT_BINS, Some(range))?;
    m.insert("masked_raw".into(), serde_json::to_value(raw)?);
    m.insert("masked_low_rank".into(), serde_json::to_value(lr)?);

    report.config = solver_json(&cfg, k, workers, &res);
    if let Value::Object(c) = &mut report.config {
        c.insert("support_threshold".into(), json!(a.support_threshold));
        c.insert("support_cut_normalized".into(), json!(cut));
        c.insert("normalization".into(), json!({"offset": norm.offset, "scale": norm.scale}));
        c.insert("inputs".into(), json!(a.input));
    }
    report.metrics = Value::Object(m);
    let converged = res.all_converged();
    report.segments = res.per_segment;
    report.time("total", started.elapsed().as_secs_f64());
    report.emit(a.report.as_deref())?;
    Ok(if converged { Status::Ok } else { Status::NotConverged })
}

#[derive(Args, Debug)]
pub struct TsvdArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "dct", value_parser = transform_arg)]
    transform: TransformKind,
    /// Singular values at or below this count as zero; 0 means 1e-8 of the largest.
    #[arg(long, default_value_t = 0.0)]
    rank_tol: f64,
    /// Run report (JSON); printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn tsvd(a: &TsvdArgs) -> Result<Status> {
    ensure!(a.rank_tol >= 0.0, "rank tolerance must be non-negative");
    let mut report = RunReport::new("tsvd");
    let t = Instant::now();
    let (x, _) = read_volume(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    report.time("read", t.elapsed().as_secs_f64());
    let t = Instant::now();
    let spec = TransformSpec::build(a.transform, x.dims().n3)?;
    let f = lrtd::tsvd(&spec, &x)?;
    report.time("solve", t.elapsed().as_secs_f64());
    let rec = f.reconstruct()?;
    let err = if x.fro_norm() > 0.0 { (&rec - &x).fro_norm() / x.fro_norm() } else { rec.fro_norm() };
    report.config = json!({"transform": a.transform.name(), "rank_tol": a.rank_tol, "input": a.input});
    report.metrics = json!({
        "dims": x.dims().as_tuple(),
        "tubal_rank": f.tubal_rank(a.rank_tol),
        "average_rank": avg_rank(&spec, &x, a.rank_tol)?,
        "tnn": tnn(&spec, &x)?,
        "largest_singular_value": f.largest_singular_value(),
        "reconstruction_relative_error": err,
    });
    report.emit(a.report.as_deref())?;
    Ok(Status::Ok)
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(2..))]
    segment_length: u32,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Run report (JSON); printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

pub fn bench_transforms(a: &BenchArgs, workers: usize) -> Result<Status> {
    let started = Instant::now();
    let mut report = RunReport::new("bench-transforms");
    let k = a.segment_length as usize;
    let t = Instant::now();
    let inp = read_inputs(&a.inputs)?;
    let mask = read_mask(&a.mask, inp.volumes[0].dims())?;
    report.time("read", t.elapsed().as_secs_f64());
    let refs: Vec<&Tensor3<f64>> = inp.volumes.iter().collect();
    let norm = Normalization::fit(&refs);
    let normalized: Vec<Tensor3<f64>> = inp.volumes.iter().map(|x| norm.apply(x)).collect();
    let range = pooled_range(&inp.volumes, &mask)?;
    let raw = pooled_stats(&inp.volumes, &mask, DEFAULT_BINS, Some(range))?;

    let mut rows = Vec::new();
    let mut csv = String::from("transform,sigma,entropy_bits,mean_solve_ms\n");
    let mut all_converged = true;
    let mut failed = Vec::new();
    for kind in [TransformKind::Dct, TransformKind::Dft, TransformKind::Dwt4] {
        let cfg = a.solver.config(kind);
        let t = Instant::now();
        match ms_lrtd(&normalized, k, &cfg) {
            Ok(res) => {
                report.time(&format!("solve_{}", kind.name()), t.elapsed().as_secs_f64());
                let low: Vec<Tensor3<f64>> = res.low_rank_volumes.iter().map(|l| norm.invert(l)).collect();
                let s = pooled_stats(&low, &mask, DEFAULT_BINS, Some(range))?;
                let ms = res.mean_solve_seconds() * 1e3;
                all_converged &= res.all_converged();
                csv.push_str(&format!("{},{},{},{}\n", kind.name(), s.sigma, s.entropy_bits, ms));
                rows.push(json!({
                    "transform": kind.name(),
                    "sigma": s.sigma,
                    "entropy_bits": s.entropy_bits,
                    "mean_solve_ms": ms,
                    "converged": res.all_converged(),
                    "lambda": res.per_segment.iter().map(|s| s.lambda).collect::<Vec<_>>(),
                    "error": Value::Null,
                }));
            }
            Err(e) => {
                failed.push(format!("{}: {e}", kind.name()));
                rows.push(json!({
                    "transform": kind.name(),
                    "sigma": Value::Null,
                    "entropy_bits": Value::Null,
                    "mean_solve_ms": Value::Null,
                    "converged": false,
                    "lambda": Value::Null,
                    "error": e.to_string(),
                }));
            }
        }
    }
    if let Some(p) = &a.csv {
        std::fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?;
        report.output(p);
    }
    let base = a.solver.config(TransformKind::Dct);
    report.config = json!({
        "segment_length": k,
        "mu0": base.mu0, "mu_max": base.mu_max, "rho": base.rho, "eps": base.eps, "max_iters": base.max_iters,
        "workers": resolved_workers(workers),
        "bins": DEFAULT_BINS,
        "histogram_range": [range.0, range.1],
        "normalization": {"offset": norm.offset, "scale": norm.scale},
        "inputs": a.inputs,
    });
    report.metrics = json!({"raw": raw, "rows": rows});
    report.time("total", started.elapsed().as_secs_f64());
    report.emit(a.report.as_deref())?;
    if !failed.is_empty() {
        bail!("transform runs failed: {}", failed.join("; "));
    }
    Ok(if all_converged { Status::Ok } else { Status::NotConverged })
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Comma-separated segment lengths.
    #[arg(long, default_value = "2,3,4,5,6,7,8,9,10,11", value_delimiter = ',', value_parser = k_arg)]
    k_values: Vec<usize>,
    #[arg(long, default_value = "dct", value_parser = transform_arg)]
    transform: TransformKind,
    /// CSV table path; printed to stdout when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// SVG plot of sigma against K.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Run report (JSON); printed to stdout when omitted and --csv is given.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

pub fn sweep_k(a: &SweepArgs, workers: usize) -> Result<Status> {
    let started = Instant::now();
    let mut report = RunReport::new("sweep-k");
    let inp = read_inputs(&a.inputs)?;
    let mask = read_mask(&a.mask, inp.volumes[0].dims())?;
    let refs: Vec<&Tensor3<f64>> = inp.volumes.iter().collect();
    let norm = Normalization::fit(&refs);
    let normalized: Vec<Tensor3<f64>> = inp.volumes.iter().map(|x| norm.apply(x)).collect();
    let cfg = a.solver.config(a.transform);
    cfg.validate()?;

    let t = Instant::now();
    let mut table = sweep_segment_length(&normalized, &a.k_values, &mask, &cfg, DEFAULT_BINS)?;
    report.time("solve", t.elapsed().as_secs_f64());
    // sigma scales with the intensity map; entropy on shared edges does not change
    table.raw.sigma *= norm.scale;
    for r in &mut table.rows {
        r.sigma *= norm.scale;
    }

    let csv = table.to_csv();
    match &a.csv {
        Some(p) => {
            std::fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?;
            report.output(p);
        }
        None => print!("{csv}"),
    }
    if let Some(p) = &a.plot {
        std::fs::write(p, sigma_vs_k_svg(&table)).with_context(|| format!("writing {}", p.display()))?;
        report.output(p);
    }
    let converged = table.rows.iter().all(|r| r.all_converged);
    report.config = json!({
        "transform": a.transform.name(),
        "k_values": a.k_values,
        "mu0": cfg.mu0, "mu_max": cfg.mu_max, "rho": cfg.rho, "eps": cfg.eps, "max_iters": cfg.max_iters,
        "lambda": table.rows.iter().map(|r| (r.k.to_string(), json!(r.lambdas))).collect::<serde_json::Map<_, _>>(),
        "workers": resolved_workers(workers),
        "bins": DEFAULT_BINS,
        "normalization": {"offset": norm.offset, "scale": norm.scale},
        "inputs": a.inputs,
    });
    report.metrics = serde_json::to_value(&table)?;
    report.time("total", started.elapsed().as_secs_f64());
    if a.report.is_some() || a.csv.is_some() {
        report.emit(a.report.as_deref())?;
    }
    Ok(if converged { Status::Ok } else { Status::NotConverged })
}

#[derive(Args, Debug)]
pub struct PhantomArgs {
    #[arg(long, default_value = "32,32,12", value_parser = dims_arg)]
    dims: Dims,
    #[arg(long, default_value_t = 3)]
    rank: usize,
    #[arg(long, default_value_t = 6)]
    volumes: usize,
    #[arg(long, default_value_t = 0.03)]
    sparse_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    sparse_magnitude: f64,
    /// Anchor intervals per slice for the background subspaces; 0 keeps them fixed.
    #[arg(long, default_value_t = 0.0)]
    slice_drift: f64,
    #[arg(long, default_value_t = 0.1)]
    gain_spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Run report (JSON); printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn phantom(a: &PhantomArgs) -> Result<Status> {
    let mut report = RunReport::new("phantom");
    let spec = PhantomSpec {
        dims: a.dims,
        rank: a.rank,
        n_volumes: a.volumes,
        sparse_fraction: a.sparse_fraction,
        sparse_magnitude: a.sparse_magnitude,
        slice_drift: a.slice_drift,
        volume_gain_spread: a.gain_spread,
        seed: a.seed,
    };
    let t = Instant::now();
    let p = make_phantom(&spec)?;
    report.time("generate", t.elapsed().as_secs_f64());
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let meta = VolumeMeta::new(a.dims, ElementType::F32);
    let t = Instant::now();
    for v in 0..a.volumes {
        let stem = format!("phantom_{v:02}");
        let mut put = |name: String, x: &Tensor3<f64>| -> Result<()> {
            let path = a.out_dir.join(name);
            write_volume(&path, x, &meta)?;
            report.output(&path);
            Ok(())
        };
        put(format!("{stem}.mhd"), &p.volumes[v])?;
        put(format!("{stem}.truth_lowrank.mhd"), &p.truth_low_rank[v])?;
        put(format!("{stem}.truth_sparse.mhd"), &p.truth_sparse[v])?;
        let path = a.out_dir.join(format!("{stem}.mask.mhd"));
        write_label(&path, &p.anomaly_masks[v])?;
        report.output(&path);
    }
    report.time("write", t.elapsed().as_secs_f64());
    report.config = serde_json::to_value(spec)?;
    report.metrics = json!({
        "anomaly_voxels": p.anomaly_masks.iter().map(|m| m.count()).collect::<Vec<_>>(),
    });
    report.emit(a.report.as_deref())?;
    Ok(Status::Ok)
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["a", "image"]))]
pub struct MetricsArgs {
    /// First label volume for DC / JI / ASD.
    #[arg(long, requires = "b")]
    a: Option<PathBuf>,
    #[arg(long, requires = "a")]
    b: Option<PathBuf>,
    /// Image for masked sigma / entropy.
    #[arg(long, requires = "mask")]
    image: Option<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Second image for NCC against --image over the mask.
    #[arg(long, requires = "image")]
    other: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// Run report (JSON); printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn label(p: &Path) -> Result<LabelVolume> {
    read_label(p).with_context(|| format!("reading {}", p.display()))
}

pub fn metrics(a: &MetricsArgs) -> Result<Status> {
    let mut report = RunReport::new("metrics");
    let mut out = serde_json::Map::new();
    if let (Some(pa), Some(pb)) = (&a.a, &a.b) {
        let (la, lb) = (label(pa)?, label(pb)?);
        out.insert("dice_percent".into(), json!(metrics::dice(&la, &lb)?));
        out.insert("jaccard_percent".into(), json!(metrics::jaccard(&la, &lb)?));
        let asd = match metrics::asd(&la, &lb) {
            Ok(v) => json!(v),
            Err(lrtd::Error::Undefined(_)) => Value::Null,
            Err(e) => return Err(e.into()),
        };
        out.insert("asd_mm".into(), asd);
    }
    if let (Some(pi), Some(pm)) = (&a.image, &a.mask) {
        let (x, _) = read_volume(pi).with_context(|| format!("reading {}", pi.display()))?;
        let m = label(pm)?;
        let s = metrics::masked_stats(&x, &m, a.bins)?;
        out.insert("masked".into(), serde_json::to_value(s)?);
        if let Some(po) = &a.other {
            let (y, _) = read_volume(po).with_context(|| format!("reading {}", po.display()))?;
            out.insert("ncc".into(), json!(metrics::ncc(&x, &y, Some(&m))?));
        }
    }
    report.config = json!({"a": a.a, "b": a.b, "image": a.image, "mask": a.mask, "other": a.other, "bins": a.bins});
    report.metrics = Value::Object(out);
    report.emit(a.report.as_deref())?;
    Ok(Status::Ok)
}
