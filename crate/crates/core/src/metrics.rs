//! Image quality and segmentation metrics.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::tensor::{Dims, Tensor3};

pub const DEFAULT_BINS: usize = 256;

/// Binary volume with physical voxel spacing in millimetres.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelVolume {
    dims: Dims,
    voxels: Vec<bool>,
    spacing: [f64; 3],
}

impl LabelVolume {
    pub fn new(dims: Dims, voxels: Vec<bool>, spacing: [f64; 3]) -> Result<Self> {
        if voxels.len() != dims.len() {
            return Err(shape_err(format!(
                "{} voxels given for dims {dims}",
                voxels.len()
            )));
        }
        if spacing.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "voxel spacing must be positive, got {spacing:?}"
            )));
        }
        Ok(Self { dims, voxels, spacing })
    }

    pub fn full(dims: Dims) -> Self {
        Self {
            dims,
            voxels: vec![true; dims.len()],
            spacing: [1.0; 3],
        }
    }

    pub fn empty(dims: Dims) -> Self {
        Self {
            dims,
            voxels: vec![false; dims.len()],
            spacing: [1.0; 3],
        }
    }

    /// Voxels where `f` holds.
    pub fn from_tensor(x: &Tensor3<f64>, spacing: [f64; 3], f: impl Fn(f64) -> bool) -> Result<Self> {
        Self::new(x.dims(), x.data().iter().map(|&v| f(v)).collect(), spacing)
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Result<Self> {
        self = Self::new(self.dims, self.voxels, spacing)?;
        Ok(self)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn voxels(&self) -> &[bool] {
        &self.voxels
    }

    pub fn count(&self) -> usize {
        self.voxels.iter().filter(|v| **v).count()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        let d = self.dims;
        self.voxels[k * d.n1 * d.n2 + j * d.n1 + i]
    }

    pub fn to_tensor(&self) -> Tensor3<f64> {
        Tensor3::from_vec(self.dims, self.voxels.iter().map(|&v| f64::from(u8::from(v))).collect())
            .expect("dims match")
    }

    /// Mask voxels with at least one 6-connected neighbour outside the mask;
    /// the region beyond the volume border counts as outside.
    pub fn surface(&self) -> Vec<(usize, usize, usize)> {
        let Dims { n1, n2, n3 } = self.dims;
        let mut out = Vec::new();
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    if !self.get(i, j, k) {
                        continue;
                    }
                    let boundary = i == 0
                        || j == 0
                        || k == 0
                        || i + 1 == n1
                        || j + 1 == n2
                        || k + 1 == n3
                        || !self.get(i - 1, j, k)
                        || !self.get(i + 1, j, k)
                        || !self.get(i, j - 1, k)
                        || !self.get(i, j + 1, k)
                        || !self.get(i, j, k - 1)
                        || !self.get(i, j, k + 1);
                    if boundary {
                        out.push((i, j, k));
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskedStats {
    /// Population standard deviation of the masked intensities.
    pub sigma: f64,
    /// Shannon entropy of the intensity histogram, in bits.
    pub entropy_bits: f64,
    pub voxel_count: usize,
    pub bin_count: usize,
}

fn masked_values(x: &Tensor3<f64>, mask: &LabelVolume) -> Result<Vec<f64>> {
    if x.dims() != mask.dims() {
        return Err(shape_err(format!(
            "image {} and mask {} differ",
            x.dims(),
            mask.dims()
        )));
    }
    let vals: Vec<f64> = x
        .data()
        .iter()
        .zip(mask.voxels())
        .filter_map(|(&v, &m)| m.then_some(v))
        .collect();
    if vals.is_empty() {
        return Err(Error::Undefined("mask is empty".into()));
    }
    Ok(vals)
}

/// Masked sigma and entropy with `bins` histogram bins spanning the masked
/// intensity range.
pub fn masked_stats(x: &Tensor3<f64>, mask: &LabelVolume, bins: usize) -> Result<MaskedStats> {
    let vals = masked_values(x, mask)?;
    let (lo, hi) = min_max(&vals);
    stats_of(&vals, bins, lo, hi)
}

/// Like [`masked_stats`] with fixed histogram edges `[lo, hi]`; values
/// outside the range fall into the end bins. Use this to compare two images
/// on common bins.
pub fn masked_stats_in_range(
    x: &Tensor3<f64>,
    mask: &LabelVolume,
    bins: usize,
    range: (f64, f64),
) -> Result<MaskedStats> {
    let vals = masked_values(x, mask)?;
    stats_of(&vals, bins, range.0, range.1)
}

/// Masked intensity range `(min, max)`.
pub fn masked_range(x: &Tensor3<f64>, mask: &LabelVolume) -> Result<(f64, f64)> {
    Ok(min_max(&masked_values(x, mask)?))
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn stats_of(vals: &[f64], bins: usize, lo: f64, hi: f64) -> Result<MaskedStats> {
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;

    let mut hist = vec![0usize; bins];
    let width = hi - lo;
    for &v in vals {
        let b = if width > 0.0 {
            (((v - lo) / width) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize
        } else {
            0
        };
        hist[b] += 1;
    }
    let entropy_bits = hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0);
    Ok(MaskedStats {
        sigma: var.sqrt(),
        entropy_bits,
        voxel_count: vals.len(),
        bin_count: bins,
    })
}

/// Normalized cross correlation over `region` (the whole volume if `None`).
pub fn ncc(a: &Tensor3<f64>, b: &Tensor3<f64>, region: Option<&LabelVolume>) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(shape_err(format!("images {} and {} differ", a.dims(), b.dims())));
    }
    let full;
    let region = match region {
        Some(r) => r,
        None => {
            full = LabelVolume::full(a.dims());
            &full
        }
    };
    let va = masked_values(a, region)?;
    let vb = masked_values(b, region)?;
    let n = va.len() as f64;
    let ma = va.iter().sum::<f64>() / n;
    let mb = vb.iter().sum::<f64>() / n;
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (x, y) in va.iter().zip(&vb) {
        let (p, q) = (x - ma, y - mb);
        num += p * q;
        da += p * p;
        db += q * q;
    }
    if da == 0.0 || db == 0.0 {
        return Err(Error::Undefined("image is constant on the region".into()));
    }
    Ok((num / (da.sqrt() * db.sqrt())).clamp(-1.0, 1.0))
}

fn check_pair(a: &LabelVolume, b: &LabelVolume) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(shape_err(format!("masks {} and {} differ", a.dims(), b.dims())));
    }
    Ok(())
}

fn overlap_counts(a: &LabelVolume, b: &LabelVolume) -> (usize, usize, usize) {
    let inter = a.voxels().iter().zip(b.voxels()).filter(|(x, y)| **x && **y).count();
    (a.count(), b.count(), inter)
}

/// Dice coefficient in percent; two empty masks score 100.
pub fn dice(a: &LabelVolume, b: &LabelVolume) -> Result<f64> {
    check_pair(a, b)?;
    let (na, nb, inter) = overlap_counts(a, b);
    if na + nb == 0 {
        return Ok(100.0);
    }
    Ok(100.0 * 2.0 * inter as f64 / (na + nb) as f64)
}

/// Jaccard index in percent; two empty masks score 100.
pub fn jaccard(a: &LabelVolume, b: &LabelVolume) -> Result<f64> {
    check_pair(a, b)?;
    let (na, nb, inter) = overlap_counts(a, b);
    let union = na + nb - inter;
    if union == 0 {
        return Ok(100.0);
    }
    Ok(100.0 * inter as f64 / union as f64)
}

/// Average symmetric surface distance in millimetres.
pub fn asd(a: &LabelVolume, b: &LabelVolume) -> Result<f64> {
    check_pair(a, b)?;
    if a.count() == 0 || b.count() == 0 {
        return Err(Error::Undefined("surface distance of an empty mask".into()));
    }
    let spacing = a.spacing();
    let sa = a.surface();
    let sb = b.surface();
    let da = squared_distance_to(&sb, a.dims(), spacing);
    let db = squared_distance_to(&sa, a.dims(), spacing);
    let d = a.dims();
    let at = |f: &[f64], (i, j, k): (usize, usize, usize)| f[k * d.n1 * d.n2 + j * d.n1 + i].sqrt();
    let total: f64 = sa.iter().map(|&p| at(&da, p)).sum::<f64>() + sb.iter().map(|&p| at(&db, p)).sum::<f64>();
    Ok(total / (sa.len() + sb.len()) as f64)
}

/// Exact squared Euclidean distance from every voxel centre to the nearest
/// seed voxel, with anisotropic spacing (separable lower-envelope transform).
pub fn squared_distance_to(seeds: &[(usize, usize, usize)], dims: Dims, spacing: [f64; 3]) -> Vec<f64> {
    let Dims { n1, n2, n3 } = dims;
    let mut f = vec![f64::INFINITY; dims.len()];
    for &(i, j, k) in seeds {
        f[k * n1 * n2 + j * n1 + i] = 0.0;
    }
    let mut line = Vec::new();
    let mut out = Vec::new();
    // axis 0 (stride 1)
    for k in 0..n3 {
        for j in 0..n2 {
            let base = k * n1 * n2 + j * n1;
            transform_line(&mut f, base, 1, n1, spacing[0], &mut line, &mut out);
        }
    }
    for k in 0..n3 {
        for i in 0..n1 {
            let base = k * n1 * n2 + i;
            transform_line(&mut f, base, n1, n2, spacing[1], &mut line, &mut out);
        }
    }
    for j in 0..n2 {
        for i in 0..n1 {
            let base = j * n1 + i;
            transform_line(&mut f, base, n1 * n2, n3, spacing[2], &mut line, &mut out);
        }
    }
    f
}

fn transform_line(
    f: &mut [f64],
    base: usize,
    stride: usize,
    n: usize,
    h: f64,
    line: &mut Vec<f64>,
    out: &mut Vec<f64>,
) {
    line.clear();
    line.extend((0..n).map(|p| f[base + p * stride]));
    out.clear();
    out.resize(n, f64::INFINITY);
    edt_1d(line, h, out);
    for p in 0..n {
        f[base + p * stride] = out[p];
    }
}

/// `d[p] = min_q f[q] + (h (p - q))^2`.
fn edt_1d(f: &[f64], h: f64, d: &mut [f64]) {
    let n = f.len();
    let finite: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if finite.is_empty() {
        return;
    }
    let h2 = h * h;
    let pos = |q: usize| q as f64;
    // intersection of parabolas rooted at q and r (q < r)
    let meet = |q: usize, r: usize| {
        ((f[r] + h2 * pos(r) * pos(r)) - (f[q] + h2 * pos(q) * pos(q))) / (2.0 * h2 * (pos(r) - pos(q)))
    };
    let mut v: Vec<usize> = Vec::with_capacity(finite.len());
    let mut z: Vec<f64> = Vec::with_capacity(finite.len() + 1);
    for &q in &finite {
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.clear();
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&last) => {
                    let s = meet(last, q);
                    if s <= *z.last().expect("z tracks v") {
                        v.pop();
                        z.pop();
                        if v.is_empty() {
                            continue;
                        }
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    let mut idx = 0;
    for (p, dp) in d.iter_mut().enumerate() {
        while idx + 1 < v.len() && z[idx + 1] < p as f64 {
            idx += 1;
        }
        let q = v[idx];
        let dx = h * (p as f64 - q as f64);
        *dp = f[q] + dx * dx;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(a: usize, b: usize, c: usize) -> Dims {
        Dims::new(a, b, c).unwrap()
    }

    #[test]
    fn constant_region_has_zero_spread() {
        let x = Tensor3::from_fn(dims(3, 3, 2), |_, _, _| 7.0);
        let s = masked_stats(&x, &LabelVolume::full(x.dims()), 256).unwrap();
        assert_eq!(s.sigma, 0.0);
        assert_eq!(s.entropy_bits, 0.0);
        assert_eq!(s.voxel_count, 18);
    }

    #[test]
    fn two_levels_give_one_bit() {
        let x = Tensor3::from_fn(dims(4, 1, 1), |i, _, _| if i < 2 { 0.0 } else { 5.0 });
        let s = masked_stats(&x, &LabelVolume::full(x.dims()), 2).unwrap();
        assert!((s.entropy_bits - 1.0).abs() < 1e-12);
        assert!((s.sigma - 2.5).abs() < 1e-12);
    }

    #[test]
    fn empty_mask_is_undefined() {
        let x = Tensor3::zeros(dims(2, 2, 2));
        assert!(matches!(
            masked_stats(&x, &LabelVolume::empty(x.dims()), 8),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn ncc_of_constant_is_undefined() {
        let x = Tensor3::from_fn(dims(2, 2, 2), |i, _, _| i as f64);
        let c = Tensor3::from_fn(dims(2, 2, 2), |_, _, _| 1.0);
        assert!(matches!(ncc(&x, &c, None), Err(Error::Undefined(_))));
    }

    #[test]
    fn dice_and_jaccard_arithmetic() {
        // |A| = |B| = 100, |A ∩ B| = 80
        let d = dims(120, 1, 1);
        let a = LabelVolume::new(d, (0..120).map(|i| i < 100).collect(), [1.0; 3]).unwrap();
        let b = LabelVolume::new(d, (0..120).map(|i| i >= 20).collect(), [1.0; 3]).unwrap();
        assert!((dice(&a, &b).unwrap() - 80.0).abs() < 1e-12);
        assert!((jaccard(&a, &b).unwrap() - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(dice(&a, &a).unwrap(), 100.0);
        assert_eq!(jaccard(&a, &a).unwrap(), 100.0);
        let e = LabelVolume::empty(d);
        assert_eq!(dice(&e, &e).unwrap(), 100.0);
        let c = LabelVolume::new(d, (0..120).map(|i| i >= 100).collect(), [1.0; 3]).unwrap();
        assert_eq!(dice(&a, &c).unwrap(), 0.0);
        assert_eq!(jaccard(&a, &c).unwrap(), 0.0);
    }

    #[test]
    fn asd_single_voxels_anisotropic() {
        let d = dims(4, 3, 3);
        let mut va = vec![false; d.len()];
        let mut vb = vec![false; d.len()];
        va[4 + 1] = true; // (1, 1, 0)
        vb[4 + 2] = true; // (2, 1, 0)
        let a = LabelVolume::new(d, va, [2.0, 1.0, 1.0]).unwrap();
        let b = LabelVolume::new(d, vb, [2.0, 1.0, 1.0]).unwrap();
        assert!((asd(&a, &b).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(asd(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn asd_empty_is_undefined() {
        let d = dims(2, 2, 2);
        assert!(asd(&LabelVolume::full(d), &LabelVolume::empty(d)).is_err());
    }

    #[test]
    fn surface_of_solid_cube_excludes_interior() {
        let d = dims(5, 5, 5);
        let m = LabelVolume::full(d);
        assert_eq!(m.surface().len(), 125 - 27);
    }

    #[test]
    fn spacing_must_be_positive() {
        assert!(LabelVolume::new(dims(1, 1, 1), vec![true], [1.0, 0.0, 1.0]).is_err());
    }
}
