//! Volume files, intensity normalization and synthetic phantoms.
//!
//! Volumes are stored as a MetaImage-style pair: a text header (`.mhd`) with
//! `key = value` lines and a raw little-endian payload in frontal-slice-major
//! order (the first axis varies fastest). Recognised keys:
//!
//! ```text
//! ObjectType = Image
//! NDims = 3
//! DimSize = n1 n2 n3
//! ElementSpacing = sx sy sz
//! ElementType = MET_UCHAR | MET_SHORT | MET_FLOAT
//! ElementByteOrderMSB = False
//! IntensityOffset = 0
//! IntensityScale = 1
//! ElementDataFile = name.raw
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::LabelVolume;
use crate::tensor::{Dims, Tensor3};
use crate::transform::TransformSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementType {
    U8,
    I16,
    F32,
}

impl ElementType {
    pub fn met_name(&self) -> &'static str {
        match self {
            ElementType::U8 => "MET_UCHAR",
            ElementType::I16 => "MET_SHORT",
            ElementType::F32 => "MET_FLOAT",
        }
    }

    pub fn from_met(s: &str) -> Result<Self> {
        match s {
            "MET_UCHAR" => Ok(ElementType::U8),
            "MET_SHORT" => Ok(ElementType::I16),
            "MET_FLOAT" => Ok(ElementType::F32),
            other => Err(Error::Format(format!("unsupported element type {other}"))),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            ElementType::U8 => 1,
            ElementType::I16 => 2,
            ElementType::F32 => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeMeta {
    pub dims: Dims,
    /// Voxel spacing in millimetres.
    pub spacing: [f64; 3],
    pub element_type: ElementType,
    /// Normalization record: stored = (original - offset) / scale.
    pub intensity_offset: f64,
    pub intensity_scale: f64,
}

impl VolumeMeta {
    pub fn new(dims: Dims, element_type: ElementType) -> Self {
        Self {
            dims,
            spacing: [1.0; 3],
            element_type,
            intensity_offset: 0.0,
            intensity_scale: 1.0,
        }
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Self {
        self.spacing = spacing;
        self
    }
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Path of the raw payload that accompanies a header.
pub fn raw_path_for(header: &Path) -> PathBuf {
    header.with_extension("raw")
}

/// Writes `x` as a header/raw pair. Values are rounded and saturated when the
/// element type is an integer type.
pub fn write_volume(path: &Path, x: &Tensor3<f64>, meta: &VolumeMeta) -> Result<()> {
    if x.dims() != meta.dims {
        return Err(Error::Shape(format!(
            "tensor {} does not match header dims {}",
            x.dims(),
            meta.dims
        )));
    }
    if meta.spacing.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "voxel spacing must be positive, got {:?}",
            meta.spacing
        )));
    }
    let raw = raw_path_for(path);
    let raw_name = raw
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| format_err("header path has no file name"))?;
    let d = meta.dims;
    let [sx, sy, sz] = meta.spacing;
    let header = format!(
        "ObjectType = Image\nNDims = 3\nDimSize = {} {} {}\nElementSpacing = {sx} {sy} {sz}\n\
         ElementType = {}\nElementByteOrderMSB = False\nIntensityOffset = {}\nIntensityScale = {}\n\
         ElementDataFile = {raw_name}\n",
        d.n1,
        d.n2,
        d.n3,
        meta.element_type.met_name(),
        meta.intensity_offset,
        meta.intensity_scale,
    );
    let mut bytes = Vec::with_capacity(d.len() * meta.element_type.size());
    match meta.element_type {
        ElementType::U8 => bytes.extend(x.data().iter().map(|v| v.round() as u8)),
        ElementType::I16 => {
            for v in x.data() {
                bytes.extend_from_slice(&(v.round() as i16).to_le_bytes());
            }
        }
        ElementType::F32 => {
            for v in x.data() {
                bytes.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
    }
    fs::write(path, header)?;
    fs::write(raw, bytes)?;
    Ok(())
}

fn parse_triple<T: std::str::FromStr>(key: &str, v: &str) -> Result<[T; 3]> {
    let parts: Vec<T> = v
        .split_whitespace()
        .map(|p| p.parse::<T>().map_err(|_| format_err(format!("bad {key} value '{v}'"))))
        .collect::<Result<_>>()?;
    <[T; 3]>::try_from(parts).map_err(|_| format_err(format!("{key} needs three values, got '{v}'")))
}

/// Parses a header into its metadata and the raw payload path.
pub fn read_header(path: &Path) -> Result<(VolumeMeta, PathBuf)> {
    let text = fs::read_to_string(path)?;
    let mut kv = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format_err(format!("malformed header line '{line}'")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| kv.get(k).ok_or_else(|| format_err(format!("header lacks {k}")));

    if get("NDims")?.as_str() != "3" {
        return Err(format_err(format!("only 3-D volumes are supported, NDims = {}", get("NDims")?)));
    }
    for key in ["ElementByteOrderMSB", "BinaryDataByteOrderMSB"] {
        if let Some(v) = kv.get(key) {
            if !v.eq_ignore_ascii_case("false") {
                return Err(format_err("big-endian payloads are not supported"));
            }
        }
    }
    let [n1, n2, n3] = parse_triple::<usize>("DimSize", get("DimSize")?)?;
    let dims = Dims::new(n1, n2, n3).map_err(|e| format_err(e.to_string()))?;
    let spacing = match kv.get("ElementSpacing") {
        Some(v) => parse_triple::<f64>("ElementSpacing", v)?,
        None => [1.0; 3],
    };
    if spacing.iter().any(|s| !(*s > 0.0)) {
        return Err(format_err(format!("non-positive spacing {spacing:?}")));
    }
    let element_type = ElementType::from_met(get("ElementType")?)?;
    let scalar = |k: &str, default: f64| -> Result<f64> {
        kv.get(k)
            .map(|v| v.parse::<f64>().map_err(|_| format_err(format!("bad {k} value '{v}'"))))
            .unwrap_or(Ok(default))
    };
    let meta = VolumeMeta {
        dims,
        spacing,
        element_type,
        intensity_offset: scalar("IntensityOffset", 0.0)?,
        intensity_scale: scalar("IntensityScale", 1.0)?,
    };
    let data_file = get("ElementDataFile")?;
    let raw = path.parent().unwrap_or_else(|| Path::new(".")).join(data_file);
    Ok((meta, raw))
}

/// Reads a header/raw pair into an `f64` tensor (lossless for all element
/// types).
pub fn read_volume(path: &Path) -> Result<(Tensor3<f64>, VolumeMeta)> {
    let (meta, raw) = read_header(path)?;
    let bytes = fs::read(&raw)?;
    let n = meta.dims.len();
    let size = meta.element_type.size();
    if bytes.len() != n * size {
        return Err(format_err(format!(
            "payload {} holds {} bytes but the header implies {} ({} elements of {} bytes)",
            raw.display(),
            bytes.len(),
            n * size,
            n,
            size
        )));
    }
    let data: Vec<f64> = match meta.element_type {
        ElementType::U8 => bytes.iter().map(|&b| f64::from(b)).collect(),
        ElementType::I16 => bytes
            .chunks_exact(2)
            .map(|c| f64::from(i16::from_le_bytes([c[0], c[1]])))
            .collect(),
        ElementType::F32 => bytes
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect(),
    };
    Ok((Tensor3::from_vec(meta.dims, data)?, meta))
}

/// Reads a label volume; any nonzero voxel is foreground.
pub fn read_label(path: &Path) -> Result<LabelVolume> {
    let (x, meta) = read_volume(path)?;
    LabelVolume::from_tensor(&x, meta.spacing, |v| v != 0.0)
}

pub fn write_label(path: &Path, mask: &LabelVolume) -> Result<()> {
    let meta = VolumeMeta::new(mask.dims(), ElementType::U8).with_spacing(mask.spacing());
    write_volume(path, &mask.to_tensor(), &meta)
}

/// Affine intensity map recorded as `x = offset + scale * y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub offset: f64,
    pub scale: f64,
}

impl Normalization {
    /// Maps the overall minimum of `xs` to 0 and the maximum to 1. Constant
    /// data gets `offset = value`, `scale = 1`.
    pub fn fit(xs: &[&Tensor3<f64>]) -> Self {
        let (lo, hi) = xs
            .iter()
            .flat_map(|x| x.data().iter())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if !lo.is_finite() || !hi.is_finite() {
            return Self { offset: 0.0, scale: 1.0 };
        }
        let scale = if hi > lo { hi - lo } else { 1.0 };
        Self { offset: lo, scale }
    }

    pub fn apply(&self, x: &Tensor3<f64>) -> Tensor3<f64> {
        x.map(|v| (v - self.offset) / self.scale)
    }

    pub fn invert(&self, y: &Tensor3<f64>) -> Tensor3<f64> {
        y.map(|v| v * self.scale + self.offset)
    }

    /// Inverse for additive components that carry no offset.
    pub fn invert_scale(&self, y: &Tensor3<f64>) -> Tensor3<f64> {
        y.map(|v| v * self.scale)
    }
}

/// Min-max normalization of one volume to `[0, 1]`.
pub fn normalize(x: &Tensor3<f64>) -> (Tensor3<f64>, f64, f64) {
    let n = Normalization::fit(&[x]);
    (n.apply(x), n.offset, n.scale)
}

pub fn denormalize(y: &Tensor3<f64>, offset: f64, scale: f64) -> Tensor3<f64> {
    Normalization { offset, scale }.invert(y)
}

/// Synthetic stack of aligned volumes with known low-rank and sparse parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    /// Dimensions of each volume.
    pub dims: Dims,
    /// Rank of every background slice (and tubal rank when `slice_drift = 0`).
    pub rank: usize,
    pub n_volumes: usize,
    /// Fraction of voxels per volume covered by anomaly blobs.
    pub sparse_fraction: f64,
    /// Intensity offset added inside blobs.
    pub sparse_magnitude: f64,
    /// Rate at which the background's factor subspaces move along the slice
    /// axis, in anchor intervals per slice. 0 keeps them fixed.
    pub slice_drift: f64,
    /// Relative spread of the per-volume background gain.
    pub volume_gain_spread: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            dims: Dims { n1: 32, n2: 32, n3: 12 },
            rank: 3,
            n_volumes: 6,
            sparse_fraction: 0.03,
            sparse_magnitude: 1.0,
            slice_drift: 0.0,
            volume_gain_spread: 0.1,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        let d = self.dims;
        Dims::new(d.n1, d.n2, d.n3)?;
        if self.rank == 0 || self.rank > d.n1.min(d.n2) {
            return Err(Error::InvalidArgument(format!(
                "rank {} must lie in 1..={}",
                self.rank,
                d.n1.min(d.n2)
            )));
        }
        if self.n_volumes == 0 {
            return Err(Error::InvalidArgument("need at least one volume".into()));
        }
        if !(0.0..=1.0).contains(&self.sparse_fraction) {
            return Err(Error::InvalidArgument(format!(
                "sparse fraction {} outside [0, 1]",
                self.sparse_fraction
            )));
        }
        if !(self.slice_drift >= 0.0) || !self.sparse_magnitude.is_finite() || !(self.volume_gain_spread >= 0.0) {
            return Err(Error::InvalidArgument("drift, magnitude and gain spread must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Phantom {
    pub volumes: Vec<Tensor3<f64>>,
    pub truth_low_rank: Vec<Tensor3<f64>>,
    pub truth_sparse: Vec<Tensor3<f64>>,
    pub anomaly_masks: Vec<LabelVolume>,
}

/// Random smooth unit-scale profile of length `n`: a few low-frequency
/// cosines with random amplitudes and phases.
fn smooth_profile(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let terms: Vec<(f64, f64, f64)> = (1..=4)
        .map(|f| {
            let a: f64 = rng.sample(StandardNormal);
            (a / f as f64, f as f64, rng.random::<f64>() * std::f64::consts::TAU)
        })
        .collect();
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let t = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            terms.iter().map(|(a, f, p)| a * (f * t + p).cos()).sum()
        })
        .collect();
    let rms = (v.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        v.iter_mut().for_each(|x| *x /= rms);
    }
    v
}

/// Builds a phantom stack. The random stream is ChaCha8 seeded with
/// `spec.seed`, so phantoms are reproducible across platforms.
///
/// Every background slice `k` is `sum_q c_q(k) u_q(k) v_q(k)^T`. The factor profiles `u_q(k)`
/// and `v_q(k)` interpolate linearly between random smooth anchors placed
/// every `1 / slice_drift` slices. Volume `i` uses the background scaled by a
/// gain near 1, plus ellipsoidal blobs of intensity `sparse_magnitude`.
pub fn make_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let d = spec.dims;
    let r = spec.rank;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let last_anchor = (spec.slice_drift * (d.n3.saturating_sub(1)) as f64).floor() as usize + 1;
    let anchors_u: Vec<Vec<Vec<f64>>> = (0..=last_anchor)
        .map(|_| (0..r).map(|_| smooth_profile(&mut rng, d.n1)).collect())
        .collect();
    let anchors_v: Vec<Vec<Vec<f64>>> = (0..=last_anchor)
        .map(|_| (0..r).map(|_| smooth_profile(&mut rng, d.n2)).collect())
        .collect();
    // slowly varying component weights, decreasing with q
    let weights: Vec<(f64, f64, f64)> = (0..r)
        .map(|q| {
            let base = 1.0 / (q + 1) as f64;
            (base, 0.3 * rng.random::<f64>(), rng.random::<f64>() * std::f64::consts::TAU)
        })
        .collect();

    let mut background = Tensor3::zeros(d);
    for k in 0..d.n3 {
        let t = spec.slice_drift * k as f64;
        let m = t.floor() as usize;
        let f = t - m as f64;
        for q in 0..r {
            let (base, amp, phase) = weights[q];
            let c = base * (1.0 + amp * (0.7 * k as f64 + phase).sin());
            let u: Vec<f64> = (0..d.n1)
                .map(|i| (1.0 - f) * anchors_u[m][q][i] + f * anchors_u[m + 1][q][i])
                .collect();
            let v: Vec<f64> = (0..d.n2)
                .map(|j| (1.0 - f) * anchors_v[m][q][j] + f * anchors_v[m + 1][q][j])
                .collect();
            let mut s = background.frontal_slice_mut(k)?;
            for j in 0..d.n2 {
                for i in 0..d.n1 {
                    s[(i, j)] += c * u[i] * v[j];
                }
            }
        }
    }

    let mut phantom = Phantom {
        volumes: Vec::with_capacity(spec.n_volumes),
        truth_low_rank: Vec::with_capacity(spec.n_volumes),
        truth_sparse: Vec::with_capacity(spec.n_volumes),
        anomaly_masks: Vec::with_capacity(spec.n_volumes),
    };
    for _ in 0..spec.n_volumes {
        let z: f64 = rng.sample(StandardNormal);
        let gain = (1.0 + spec.volume_gain_spread * z).max(0.1);
        let low = background.scale(gain);
        let mask = ellipsoid_blobs(&mut rng, d, spec.sparse_fraction);
        let sparse = Tensor3::from_vec(
            d,
            mask.iter().map(|&m| if m { spec.sparse_magnitude } else { 0.0 }).collect(),
        )?;
        phantom.volumes.push(&low + &sparse);
        phantom.truth_low_rank.push(low);
        phantom.truth_sparse.push(sparse);
        phantom.anomaly_masks.push(LabelVolume::new(d, mask, [1.0; 3])?);
    }
    Ok(phantom)
}

/// Random tensor robust PCA instance `x = L + E`.
#[derive(Clone, Debug)]
pub struct RecoveryInstance {
    pub observed: Tensor3<f64>,
    pub low_rank: Tensor3<f64>,
    pub sparse: Tensor3<f64>,
}

/// `L = P * Q` under transform `t` with standard normal `P` (n1 x r x n3) and
/// `Q` (r x n2 x n3), so `L` has tubal rank `r` under `t`.
/// `E` holds independent random signs on a uniformly drawn `sparse_fraction`
/// of the entries. Uses ChaCha8 seeded with `seed`.
pub fn make_recovery_instance(
    dims: Dims,
    rank: usize,
    sparse_fraction: f64,
    t: &TransformSpec,
    seed: u64,
) -> Result<RecoveryInstance> {
    if rank == 0 || rank > dims.n1.min(dims.n2) {
        return Err(Error::InvalidArgument(format!("rank {rank} must lie in 1..={}", dims.n1.min(dims.n2))));
    }
    if !(0.0..=1.0).contains(&sparse_fraction) {
        return Err(Error::InvalidArgument(format!("sparse fraction {sparse_fraction} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = |d: Dims| Tensor3::from_fn(d, |_, _, _| rng.sample::<f64, _>(StandardNormal));
    let p = gauss(Dims::new(dims.n1, rank, dims.n3)?);
    let q = gauss(Dims::new(rank, dims.n2, dims.n3)?);
    let low_rank = t.mproduct(&p, &q)?;
    let n = dims.len();
    let m = (sparse_fraction * n as f64).round() as usize;
    let mut sparse = Tensor3::zeros(dims);
    for idx in rand::seq::index::sample(&mut rng, n, m) {
        sparse.data_mut()[idx] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    Ok(RecoveryInstance { observed: &low_rank + &sparse, low_rank, sparse })
}

fn ellipsoid_blobs(rng: &mut ChaCha8Rng, d: Dims, fraction: f64) -> Vec<bool> {
    let mut mask = vec![false; d.len()];
    let target = (fraction * d.len() as f64).round() as usize;
    let mut count = 0;
    let r_max = (d.n1.min(d.n2) as f64 / 10.0).max(2.0);
    let mut attempts = 0;
    while count < target && attempts < 10_000 {
        attempts += 1;
        let c = [
            rng.random::<f64>() * d.n1 as f64,
            rng.random::<f64>() * d.n2 as f64,
            rng.random::<f64>() * d.n3 as f64,
        ];
        let radii = [
            rng.random_range(1.0..=r_max),
            rng.random_range(1.0..=r_max),
            rng.random_range(0.8..=2.0_f64.min(d.n3 as f64)),
        ];
        let lo = |a: usize| (c[a] - radii[a]).floor().max(0.0) as usize;
        let hi = |a: usize, n: usize| ((c[a] + radii[a]).ceil() as usize).min(n - 1);
        for k in lo(2)..=hi(2, d.n3) {
            for j in lo(1)..=hi(1, d.n2) {
                for i in lo(0)..=hi(0, d.n1) {
                    let p = [i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5];
                    let s: f64 = (0..3).map(|a| ((p[a] - c[a]) / radii[a]).powi(2)).sum();
                    let idx = k * d.n1 * d.n2 + j * d.n1 + i;
                    if s <= 1.0 && !mask[idx] {
                        mask[idx] = true;
                        count += 1;
                    }
                }
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_integer_ramp() {
        let x = Tensor3::from_fn(Dims::new(101, 1, 1).unwrap(), |i, _, _| i as f64);
        let (y, offset, scale) = normalize(&x);
        assert_eq!((offset, scale), (0.0, 100.0));
        assert_eq!(y[(100, 0, 0)], 1.0);
        assert_eq!(y[(50, 0, 0)], 0.5);
    }

    #[test]
    fn normalize_constant() {
        let x = Tensor3::from_fn(Dims::new(2, 2, 2).unwrap(), |_, _, _| 4.5);
        let (y, offset, scale) = normalize(&x);
        assert_eq!(y.inf_norm(), 0.0);
        assert_eq!((offset, scale), (4.5, 1.0));
        assert_eq!(denormalize(&y, offset, scale), x);
    }

    #[test]
    fn zero_fraction_has_no_sparse_part() {
        let spec = PhantomSpec { sparse_fraction: 0.0, ..PhantomSpec::default() };
        let p = make_phantom(&spec).unwrap();
        assert!(p.truth_sparse.iter().all(|e| e.l0_norm() == 0));
        assert!(p.anomaly_masks.iter().all(|m| m.count() == 0));
    }

    #[test]
    fn blob_fraction_is_reached() {
        let spec = PhantomSpec::default();
        let p = make_phantom(&spec).unwrap();
        let n = spec.dims.len() as f64;
        for m in &p.anomaly_masks {
            let f = m.count() as f64 / n;
            assert!((0.03..0.06).contains(&f), "{f}");
        }
    }

    #[test]
    fn phantom_sums_exactly() {
        let p = make_phantom(&PhantomSpec::default()).unwrap();
        for i in 0..p.volumes.len() {
            assert_eq!(p.volumes[i], &p.truth_low_rank[i] + &p.truth_sparse[i]);
        }
    }

    #[test]
    fn invalid_rank_rejected() {
        let spec = PhantomSpec { rank: 40, ..PhantomSpec::default() };
        assert!(make_phantom(&spec).is_err());
        let spec = PhantomSpec { sparse_fraction: 1.5, ..PhantomSpec::default() };
        assert!(make_phantom(&spec).is_err());
    }

    #[test]
    fn unsupported_element_type() {
        assert!(ElementType::from_met("MET_DOUBLE").is_err());
    }
}
