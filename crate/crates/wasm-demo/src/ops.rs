//! Demo operations on plain Rust types, so they run natively in tests too.

use lrtd::metrics::{dice, LabelVolume, DEFAULT_BINS};
use lrtd::multislice::{pooled_range, pooled_stats};
use lrtd::tsvd::avg_rank;
use lrtd::volume::{make_phantom, Phantom, PhantomSpec};
use lrtd::{ms_lrtd, shrink, tsvd, tsvt, Dims, Error, Lambda, Result, Tensor3, TpcpConfig, TransformKind, TransformSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const N1: usize = 32;
pub const N2: usize = 32;
pub const N3: usize = 12;
pub const VOLUMES: usize = 4;

pub fn transform_kind(name: &str) -> Result<TransformKind> {
    match name.parse::<TransformKind>() {
        Ok(TransformKind::Custom) | Err(_) => Err(Error::InvalidArgument(format!("unknown transform '{name}'"))),
        Ok(k) => Ok(k),
    }
}

fn phantom(seed: u64, drift: f64, sparse_fraction: f64) -> Result<Phantom> {
    make_phantom(&PhantomSpec {
        dims: Dims::new(N1, N2, N3)?,
        n_volumes: VOLUMES,
        slice_drift: drift,
        sparse_fraction,
        seed,
        ..PhantomSpec::default()
    })
}

fn to_f32(x: &Tensor3<f64>) -> Vec<f32> {
    x.data().iter().map(|&v| v as f32).collect()
}

fn rel(a: &Tensor3<f64>, b: &Tensor3<f64>) -> f64 {
    (a - b).fro_norm() / b.fro_norm().max(f64::MIN_POSITIVE)
}

/// Volume 0 of a decomposed phantom stack, slices stored one after another.
pub struct DecomposeOutput {
    pub observed: Vec<f32>,
    pub low_rank: Vec<f32>,
    pub sparse: Vec<f32>,
    pub truth_mask: Vec<f32>,
    pub support_dice: f64,
    pub low_rank_error: f64,
    pub mean_solve_ms: f64,
    pub iterations: usize,
    pub converged: bool,
    pub lambdas: Vec<f64>,
}

/// `lambda <= 0` picks the weight per segment automatically.
pub fn decompose_phantom(
    seed: u64,
    drift: f64,
    sparse_fraction: f64,
    segment_length: usize,
    lambda: f64,
    transform: &str,
) -> Result<DecomposeOutput> {
    let p = phantom(seed, drift, sparse_fraction)?;
    let cfg = TpcpConfig {
        lambda: if lambda > 0.0 { Lambda::Value(lambda) } else { Lambda::Auto },
        ..TpcpConfig::default().with_transform(transform_kind(transform)?)
    };
    let res = ms_lrtd(&p.volumes, segment_length, &cfg)?;
    let max_e = res.sparse_volumes.iter().map(|e| e.inf_norm()).fold(0.0, f64::max);
    let mut dcs = Vec::with_capacity(VOLUMES);
    for (e, truth) in res.sparse_volumes.iter().zip(&p.anomaly_masks) {
        let support = LabelVolume::from_tensor(e, [1.0; 3], |v| max_e > 0.0 && v.abs() > 0.5 * max_e)?;
        dcs.push(dice(&support, truth)?);
    }
    let err = res
        .low_rank_volumes
        .iter()
        .zip(&p.truth_low_rank)
        .map(|(a, b)| rel(a, b))
        .sum::<f64>()
        / VOLUMES as f64;
    Ok(DecomposeOutput {
        observed: to_f32(&p.volumes[0]),
        low_rank: to_f32(&res.low_rank_volumes[0]),
        sparse: to_f32(&res.sparse_volumes[0]),
        truth_mask: p.anomaly_masks[0].voxels().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        support_dice: dcs.iter().sum::<f64>() / dcs.len() as f64,
        low_rank_error: err,
        mean_solve_ms: res.mean_solve_seconds() * 1e3,
        iterations: res.per_segment.iter().map(|s| s.iterations).sum(),
        converged: res.all_converged(),
        lambdas: res.per_segment.iter().map(|s| s.lambda).collect(),
    })
}

/// A noisy phantom volume passed through t-SVT and through elementwise shrinkage.
pub struct ThresholdOutput {
    pub noisy: Vec<f32>,
    pub svt: Vec<f32>,
    pub shrunk: Vec<f32>,
    pub svt_error: f64,
    pub shrink_error: f64,
    pub noisy_error: f64,
    pub svt_tubal_rank: usize,
    pub svt_average_rank: f64,
    pub shrink_nonzeros: usize,
}

pub fn threshold(seed: u64, noise: f64, tau_svt: f64, tau_l1: f64, transform: &str) -> Result<ThresholdOutput> {
    let p = phantom(seed, 0.0, 0.0)?;
    let clean = &p.volumes[0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let noisy = clean.map(|&v| v + noise * rng.sample::<f64, _>(StandardNormal));
    let t = TransformSpec::build(transform_kind(transform)?, N3)?;
    let svt = if tau_svt > 0.0 { tsvt(&t, &noisy, tau_svt)? } else { noisy.clone() };
    let shrunk = shrink(&noisy, tau_l1.max(0.0));
    Ok(ThresholdOutput {
        noisy: to_f32(&noisy),
        svt: to_f32(&svt),
        shrunk: to_f32(&shrunk),
        svt_error: rel(&svt, clean),
        shrink_error: rel(&shrunk, clean),
        noisy_error: rel(&noisy, clean),
        svt_tubal_rank: tsvd(&t, &svt)?.tubal_rank(1e-6),
        svt_average_rank: avg_rank(&t, &svt, 1e-6)?,
        shrink_nonzeros: shrunk.l0_norm(),
    })
}

/// Masked statistics of the low-rank output under each transform, in the
/// order dct, fft, dwt4.
pub struct CompareOutput {
    pub raw_sigma: f64,
    pub raw_entropy: f64,
    pub sigma: Vec<f64>,
    pub entropy: Vec<f64>,
    pub mean_solve_ms: Vec<f64>,
}

pub fn compare_transforms(seed: u64, segment_length: usize) -> Result<CompareOutput> {
    let p = phantom(seed, 0.0, 0.03)?;
    let mask = LabelVolume::full(p.volumes[0].dims());
    let range = pooled_range(&p.volumes, &mask)?;
    let raw = pooled_stats(&p.volumes, &mask, DEFAULT_BINS, Some(range))?;
    let mut out = CompareOutput {
        raw_sigma: raw.sigma,
        raw_entropy: raw.entropy_bits,
        sigma: Vec::new(),
        entropy: Vec::new(),
        mean_solve_ms: Vec::new(),
    };
    for kind in [TransformKind::Dct, TransformKind::Dft, TransformKind::Dwt4] {
        let res = ms_lrtd(&p.volumes, segment_length, &TpcpConfig::default().with_transform(kind))?;
        let s = pooled_stats(&res.low_rank_volumes, &mask, DEFAULT_BINS, Some(range))?;
        out.sigma.push(s.sigma);
        out.entropy.push(s.entropy_bits);
        out.mean_solve_ms.push(res.mean_solve_seconds() * 1e3);
    }
    Ok(out)
}
