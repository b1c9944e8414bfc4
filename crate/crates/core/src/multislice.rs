//! Multi-slice decomposition of a stack of aligned volumes.
//!
//! Each volume's slice axis is cut into consecutive segments of length `K`.
//! Segment `j` of every volume is padded by one neighbouring slice at each
//! interior end, and the padded pieces of all volumes are concatenated along
//! the third mode into one tensor `X_j`, which is decomposed independently by
//! TPCP. Results are split back per volume; core slices come from their own
//! segment and each overlap slice is the mean of the two segments covering it.
//! Segments at the volume boundary get no padding on the boundary side.

#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;

#[cfg(target_arch = "wasm32")]
use web_time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::metrics::{masked_range, masked_stats, masked_stats_in_range, LabelVolume, MaskedStats};
use crate::parallel::map_indices;
use crate::tensor::{Dims, Tensor3};
use crate::tpcp::{tpcp_solve, IterationRecord, TpcpConfig};

/// Slice ranges of one segment; `end` bounds are exclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub core_start: usize,
    pub core_end: usize,
    pub padded_start: usize,
    pub padded_end: usize,
}

impl Segment {
    pub fn padded_len(&self) -> usize {
        self.padded_end - self.padded_start
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub k: usize,
    pub n_slices: usize,
    pub segments: Vec<Segment>,
}

/// Cuts `d` slices into segments of length `k`. A one-slice remainder is
/// merged into the last full segment so every core has at least 2 slices.
pub fn plan_segments(d: usize, k: usize) -> Result<SegmentPlan> {
    if d < 2 || k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 slices and segment length >= 2, got d = {d}, K = {k}"
        )));
    }
    let mut cores = Vec::new();
    let mut start = 0;
    while start < d {
        let end = (start + k).min(d);
        cores.push((start, end));
        start = end;
    }
    if cores.len() > 1 {
        let (s, e) = cores[cores.len() - 1];
        if e - s == 1 {
            cores.pop();
            cores.last_mut().expect("more than one core").1 = e;
        }
    }
    let segments = cores
        .into_iter()
        .map(|(s, e)| Segment {
            core_start: s,
            core_end: e,
            padded_start: s.saturating_sub(1),
            padded_end: (e + 1).min(d),
        })
        .collect();
    Ok(SegmentPlan { k, n_slices: d, segments })
}

/// Solver outcome for one segment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub index: usize,
    pub segment: Segment,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_primal_residual: f64,
    /// Wall-clock time of the TPCP solve alone.
    pub solve_seconds: f64,
    pub trace: Vec<IterationRecord>,
}

#[derive(Clone, Debug)]
pub struct MultiSliceResult {
    pub low_rank_volumes: Vec<Tensor3<f64>>,
    pub sparse_volumes: Vec<Tensor3<f64>>,
    pub per_segment: Vec<SegmentSummary>,
}

impl MultiSliceResult {
    pub fn all_converged(&self) -> bool {
        self.per_segment.iter().all(|s| s.converged)
    }

    pub fn mean_solve_seconds(&self) -> f64 {
        if self.per_segment.is_empty() {
            return 0.0;
        }
        self.per_segment.iter().map(|s| s.solve_seconds).sum::<f64>() / self.per_segment.len() as f64
    }
}

fn common_dims(volumes: &[Tensor3<f64>]) -> Result<Dims> {
    let first = volumes
        .first()
        .ok_or_else(|| Error::InvalidArgument("no input volumes".into()))?
        .dims();
    for (i, v) in volumes.iter().enumerate() {
        if v.dims() != first {
            return Err(shape_err(format!(
                "volume {i} has dims {} but volume 0 has {first}",
                v.dims()
            )));
        }
    }
    Ok(first)
}

/// Multi-slice low-rank tensor decomposition of `volumes` with segment
/// length `k`. `cfg` is a template: `Lambda::Auto` is resolved separately for
/// every segment tensor.
pub fn ms_lrtd(volumes: &[Tensor3<f64>], k: usize, cfg: &TpcpConfig) -> Result<MultiSliceResult> {
    let dims = common_dims(volumes)?;
    cfg.validate()?;
    let plan = plan_segments(dims.n3, k)?;

    let solved = map_indices(plan.segments.len(), |j| {
        let seg = plan.segments[j];
        let pieces: Vec<Tensor3<f64>> = volumes
            .iter()
            .map(|v| v.slice_range_owned(seg.padded_start, seg.padded_end))
            .collect::<Result<_>>()?;
        let refs: Vec<&Tensor3<f64>> = pieces.iter().collect();
        let x = Tensor3::concat3(&refs)?;
        let started = Instant::now();
        let res = tpcp_solve(&x, cfg)?;
        Ok::<_, Error>((res, started.elapsed().as_secs_f64()))
    });

    let n_vol = volumes.len();
    let mut low_acc: Vec<Tensor3<f64>> = vec![Tensor3::zeros(dims); n_vol];
    let mut sparse_acc: Vec<Tensor3<f64>> = vec![Tensor3::zeros(dims); n_vol];
    let mut weight = vec![0u32; dims.n3];
    let mut per_segment = Vec::with_capacity(plan.segments.len());
    let slice_len = dims.slice_len();

    for (j, (seg, outcome)) in plan.segments.iter().zip(solved).enumerate() {
        let (res, secs) = outcome?;
        let p = seg.padded_len();
        weight[seg.padded_start..seg.padded_end].iter_mut().for_each(|w| *w += 1);
        for v in 0..n_vol {
            for (local, s) in (seg.padded_start..seg.padded_end).enumerate() {
                let src = (v * p + local) * slice_len;
                let dst = s * slice_len;
                let l = &res.low_rank.data()[src..src + slice_len];
                let e = &res.sparse.data()[src..src + slice_len];
                for (a, b) in low_acc[v].data_mut()[dst..dst + slice_len].iter_mut().zip(l) {
                    *a += b;
                }
                for (a, b) in sparse_acc[v].data_mut()[dst..dst + slice_len].iter_mut().zip(e) {
                    *a += b;
                }
            }
        }
        per_segment.push(SegmentSummary {
            index: j,
            segment: *seg,
            lambda: res.lambda,
            iterations: res.iterations,
            converged: res.converged,
            final_primal_residual: res.final_primal_residual(),
            solve_seconds: secs,
            trace: res.trace,
        });
    }

    for acc in low_acc.iter_mut().chain(sparse_acc.iter_mut()) {
        for (s, &w) in weight.iter().enumerate() {
            if w > 1 {
                let inv = 1.0 / f64::from(w);
                acc.data_mut()[s * slice_len..(s + 1) * slice_len]
                    .iter_mut()
                    .for_each(|v| *v *= inv);
            }
        }
    }

    Ok(MultiSliceResult {
        low_rank_volumes: low_acc,
        sparse_volumes: sparse_acc,
        per_segment,
    })
}

/// Masked statistics pooled over several same-shaped volumes.
pub fn pooled_stats(
    volumes: &[Tensor3<f64>],
    mask: &LabelVolume,
    bins: usize,
    range: Option<(f64, f64)>,
) -> Result<MaskedStats> {
    let (x, m) = pool(volumes, mask)?;
    match range {
        Some(r) => masked_stats_in_range(&x, &m, bins, r),
        None => masked_stats(&x, &m, bins),
    }
}

/// Masked intensity range pooled over several volumes.
pub fn pooled_range(volumes: &[Tensor3<f64>], mask: &LabelVolume) -> Result<(f64, f64)> {
    let (x, m) = pool(volumes, mask)?;
    masked_range(&x, &m)
}

fn pool(volumes: &[Tensor3<f64>], mask: &LabelVolume) -> Result<(Tensor3<f64>, LabelVolume)> {
    let dims = common_dims(volumes)?;
    if mask.dims() != dims {
        return Err(shape_err(format!("mask {} does not match volumes {dims}", mask.dims())));
    }
    let refs: Vec<&Tensor3<f64>> = volumes.iter().collect();
    let x = Tensor3::concat3(&refs)?;
    let voxels: Vec<bool> = (0..volumes.len()).flat_map(|_| mask.voxels().iter().copied()).collect();
    let m = LabelVolume::new(x.dims(), voxels, mask.spacing())?;
    Ok((x, m))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub sigma: f64,
    pub entropy_bits: f64,
    pub all_converged: bool,
    /// Resolved sparse weight of each segment.
    pub lambdas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    /// Statistics of the raw input.
    pub raw: MaskedStats,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// CSV with header `k,sigma,entropy_bits`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,sigma,entropy_bits\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.k, r.sigma, r.entropy_bits));
        }
        out
    }
}

/// Runs [`ms_lrtd`] for every `k` and reports masked sigma and entropy of the
/// pooled low-rank output. Entropy uses histogram edges fixed to the raw
/// input's masked range so all rows share bins with the raw statistics.
pub fn sweep_segment_length(
    volumes: &[Tensor3<f64>],
    k_values: &[usize],
    mask: &LabelVolume,
    cfg: &TpcpConfig,
    bins: usize,
) -> Result<SweepTable> {
    if let Some(&bad) = k_values.iter().find(|&&k| k < 2) {
        return Err(Error::InvalidArgument(format!("segment length {bad} is below 2")));
    }
    let range = pooled_range(volumes, mask)?;
    let raw = pooled_stats(volumes, mask, bins, Some(range))?;
    let mut rows = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let res = ms_lrtd(volumes, k, cfg)?;
        let s = pooled_stats(&res.low_rank_volumes, mask, bins, Some(range))?;
        rows.push(SweepRow {
            k,
            sigma: s.sigma,
            entropy_bits: s.entropy_bits,
            all_converged: res.all_converged(),
            lambdas: res.per_segment.iter().map(|p| p.lambda).collect(),
        });
    }
    Ok(SweepTable { raw, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranges(p: &SegmentPlan) -> Vec<((usize, usize), (usize, usize))> {
        p.segments
            .iter()
            .map(|s| ((s.core_start, s.core_end), (s.padded_start, s.padded_end)))
            .collect()
    }

    #[test]
    fn two_equal_segments() {
        let p = plan_segments(10, 5).unwrap();
        assert_eq!(ranges(&p), vec![((0, 5), (0, 6)), ((5, 10), (4, 10))]);
    }

    #[test]
    fn single_slice_remainder_merges() {
        let p = plan_segments(11, 5).unwrap();
        assert_eq!(ranges(&p), vec![((0, 5), (0, 6)), ((5, 11), (4, 11))]);
    }

    #[test]
    fn whole_volume_segment_is_unpadded() {
        let p = plan_segments(5, 5).unwrap();
        assert_eq!(ranges(&p), vec![((0, 5), (0, 5))]);
        let p = plan_segments(4, 9).unwrap();
        assert_eq!(ranges(&p), vec![((0, 4), (0, 4))]);
    }

    #[test]
    fn invalid_lengths() {
        assert!(plan_segments(1, 5).is_err());
        assert!(plan_segments(10, 1).is_err());
    }

    #[test]
    fn zero_volume_decomposes_to_zero() {
        let z = Tensor3::zeros(Dims::new(4, 4, 6).unwrap());
        let r = ms_lrtd(std::slice::from_ref(&z), 2, &TpcpConfig::default()).unwrap();
        assert_eq!(r.low_rank_volumes[0], z);
        assert_eq!(r.sparse_volumes[0], z);
        assert!(r.all_converged());
    }

    #[test]
    fn mismatched_volumes_rejected() {
        let a = Tensor3::zeros(Dims::new(4, 4, 6).unwrap());
        let b = Tensor3::zeros(Dims::new(4, 4, 5).unwrap());
        assert!(matches!(
            ms_lrtd(&[a, b], 2, &TpcpConfig::default()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn constant_volumes_sweep_to_zero_sigma() {
        let c = Tensor3::from_fn(Dims::new(4, 4, 6).unwrap(), |_, _, _| 0.5);
        let mask = LabelVolume::full(c.dims());
        let t = sweep_segment_length(&[c.clone(), c], &[2], &mask, &TpcpConfig::default(), 256).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.rows[0].sigma < 1e-9, "{}", t.rows[0].sigma);
        assert!(t.to_csv().starts_with("k,sigma,entropy_bits\n2,"));
    }

    #[test]
    fn sweep_rejects_short_segments() {
        let c = Tensor3::zeros(Dims::new(2, 2, 4).unwrap());
        let mask = LabelVolume::full(c.dims());
        assert!(sweep_segment_length(&[c], &[1], &mask, &TpcpConfig::default(), 8).is_err());
    }
}
