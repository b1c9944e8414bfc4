//! t-SVD under a [`TransformSpec`], tensor ranks, the tensor nuclear norm and
//! its proximal operator.
//!
//! Everything here works slice by slice in the transform domain. For the DFT
//! the transform of a real tensor is conjugate-symmetric (slice `n3 - k` is the
//! conjugate of slice `k`), so only `n3 / 2 + 1` slices are decomposed and the
//! rest are mirrored.
//!
//! Tubal and average rank follow the usual t-SVD conventions: tubal rank
//! counts the nonzero diagonal tubes of the f-diagonal core, average rank is
//! `(1/l) sum_k rank(X̄^(k))`. Both depend on the chosen tolerance.

use nalgebra::{ComplexField, DMatrix, DVector, Scalar, SVD};

use crate::error::{Error, Result};
use crate::parallel::map_indices;
use crate::tensor::{Complex, Dims, Tensor3};
use crate::transform::{Spectrum, TransformSpec};

/// Relative tolerance used when a rank tolerance of 0 is requested.
pub const DEFAULT_RANK_RTOL: f64 = 1e-8;

const SVD_MAX_ITERS: usize = 20_000;

/// `x = U ★ S ★ V*` with orthogonal `U`, `V` and f-diagonal `S`.
#[derive(Clone, Debug)]
pub struct TsvdFactors {
    pub u: Tensor3<f64>,
    pub s: Tensor3<f64>,
    pub v: Tensor3<f64>,
    /// Descending singular values of every transform-domain slice.
    pub singular_values: Vec<Vec<f64>>,
    pub transform: TransformSpec,
}

impl TsvdFactors {
    /// `U ★ S ★ V*`.
    pub fn reconstruct(&self) -> Result<Tensor3<f64>> {
        let t = &self.transform;
        let us = t.mproduct(&self.u, &self.s)?;
        t.mproduct(&us, &t.conj_transpose(&self.v)?)
    }

    /// Number of diagonal tubes `s(i, i, :)` whose largest magnitude exceeds
    /// `tol`. A `tol` of 0 means `1e-8` times the largest transform-domain
    /// singular value.
    pub fn tubal_rank(&self, tol: f64) -> usize {
        let tol = resolve_tol(tol, self.largest_singular_value());
        let d = self.s.dims();
        (0..d.n1.min(d.n2))
            .filter(|&i| (0..d.n3).any(|k| self.s[(i, i, k)].abs() > tol))
            .count()
    }

    pub fn largest_singular_value(&self) -> f64 {
        self.singular_values
            .iter()
            .flat_map(|s| s.first().copied())
            .fold(0.0, f64::max)
    }
}

/// Free-function form of [`TsvdFactors::tubal_rank`].
pub fn tubal_rank(f: &TsvdFactors, tol: f64) -> usize {
    f.tubal_rank(tol)
}

fn resolve_tol(tol: f64, largest: f64) -> f64 {
    if tol > 0.0 {
        tol
    } else {
        DEFAULT_RANK_RTOL * largest
    }
}

/// One transform-domain slice. Self-conjugate DFT slices of real tensors are
/// real and handled as such.
enum SliceMat {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex<f64>>),
}

impl SliceMat {
    fn into_complex(self) -> DMatrix<Complex<f64>> {
        match self {
            SliceMat::Real(m) => m.map(|v| Complex::new(v, 0.0)),
            SliceMat::Complex(m) => m,
        }
    }

    fn into_real(self) -> DMatrix<f64> {
        match self {
            SliceMat::Real(m) => m,
            SliceMat::Complex(m) => m.map(|v| v.re),
        }
    }
}

/// Transform-domain slices that must actually be processed, each with the
/// index of its conjugate mirror if there is one.
fn representatives(t: &TransformSpec, n3: usize) -> Vec<(usize, Option<usize>)> {
    (0..n3)
        .filter_map(|k| match t.conjugate_partner(k) {
            Some(p) if p < k => None,
            Some(p) if p > k => Some((k, Some(p))),
            _ => Some((k, None)),
        })
        .collect()
}

fn extract(xbar: &Spectrum, t: &TransformSpec, k: usize) -> SliceMat {
    match xbar {
        Spectrum::Real(x) => SliceMat::Real(x.frontal_slice(k).expect("in range").into_owned()),
        Spectrum::Complex(x) => {
            let s = x.frontal_slice(k).expect("in range");
            if t.conjugate_partner(k) == Some(k) {
                SliceMat::Real(s.map(|v| v.re))
            } else {
                SliceMat::Complex(s.into_owned())
            }
        }
    }
}

/// Reassembles per-representative slice results into a full spectrum,
/// filling conjugate mirrors.
fn assemble(
    n3: usize,
    complex: bool,
    parts: Vec<(usize, Option<usize>, SliceMat)>,
) -> Result<Spectrum> {
    if complex {
        let mut slices: Vec<Option<DMatrix<Complex<f64>>>> = vec![None; n3];
        for (k, mirror, m) in parts {
            let m = m.into_complex();
            if let Some(p) = mirror {
                slices[p] = Some(m.map(|v| v.conj()));
            }
            slices[k] = Some(m);
        }
        let slices: Vec<_> = slices.into_iter().map(|s| s.expect("every slice filled")).collect();
        Ok(Spectrum::Complex(Tensor3::from_slices(&slices)?))
    } else {
        let mut slices: Vec<Option<DMatrix<f64>>> = vec![None; n3];
        for (k, _, m) in parts {
            slices[k] = Some(m.into_real());
        }
        let slices: Vec<_> = slices.into_iter().map(|s| s.expect("every slice filled")).collect();
        Ok(Spectrum::Real(Tensor3::from_slices(&slices)?))
    }
}

fn checked_svd<T>(m: DMatrix<T>, slice: usize, vectors: bool) -> Result<SVD<T, nalgebra::Dyn, nalgebra::Dyn>>
where
    T: ComplexField<RealField = f64> + Scalar,
{
    if !m.iter().all(|v| v.clone().is_finite()) {
        return Err(Error::SvdFailed { slice });
    }
    SVD::try_new(m, vectors, vectors, f64::EPSILON, SVD_MAX_ITERS).ok_or(Error::SvdFailed { slice })
}

/// Extends the orthonormal columns of `q` (`n x r`) to an `n x n` unitary
/// matrix by orthogonalizing standard basis vectors against it.
fn complete_basis<T>(q: DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Scalar,
{
    let (n, r) = q.shape();
    if r >= n {
        return q;
    }
    let mut cols: Vec<DVector<T>> = q.column_iter().map(|c| c.into_owned()).collect();
    while cols.len() < n {
        let mut best: Option<(f64, DVector<T>)> = None;
        for i in 0..n {
            let mut e = DVector::<T>::zeros(n);
            e[i] = T::one();
            // two Gram-Schmidt passes
            for _ in 0..2 {
                for c in &cols {
                    let proj = c.dotc(&e);
                    e.axpy(-proj, c, T::one());
                }
            }
            let norm = e.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, e));
            }
        }
        let (norm, e) = best.expect("n > 0");
        cols.push(e.unscale(norm));
    }
    DMatrix::from_columns(&cols)
}

struct SliceFactors<T: Scalar> {
    u: DMatrix<T>,
    s: DMatrix<T>,
    v: DMatrix<T>,
    sigma: Vec<f64>,
}

fn slice_tsvd<T>(m: DMatrix<T>, slice: usize) -> Result<SliceFactors<T>>
where
    T: ComplexField<RealField = f64> + Scalar,
{
    let (n1, n2) = m.shape();
    let svd = checked_svd(m, slice, true)?;
    let u = complete_basis(svd.u.expect("requested"));
    let v = complete_basis(svd.v_t.expect("requested").adjoint());
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut s = DMatrix::<T>::zeros(n1, n2);
    for (i, &sv) in sigma.iter().enumerate() {
        s[(i, i)] = T::from_real(sv);
    }
    Ok(SliceFactors { u, s, v, sigma })
}

/// t-SVD: forward transform, full SVD of every slice, inverse transform.
pub fn tsvd(t: &TransformSpec, x: &Tensor3<f64>) -> Result<TsvdFactors> {
    let xbar = t.forward(x)?;
    let n3 = x.dims().n3;
    let reps = representatives(t, n3);
    let results = map_indices(reps.len(), |r| {
        let (k, _) = reps[r];
        match extract(&xbar, t, k) {
            SliceMat::Real(m) => slice_tsvd(m, k).map(|f| {
                (SliceMat::Real(f.u), SliceMat::Real(f.s), SliceMat::Real(f.v), f.sigma)
            }),
            SliceMat::Complex(m) => slice_tsvd(m, k).map(|f| {
                (SliceMat::Complex(f.u), SliceMat::Complex(f.s), SliceMat::Complex(f.v), f.sigma)
            }),
        }
    });
    let complex = matches!(xbar, Spectrum::Complex(_));
    let mut us = Vec::with_capacity(reps.len());
    let mut ss = Vec::with_capacity(reps.len());
    let mut vs = Vec::with_capacity(reps.len());
    let mut singular_values = vec![Vec::new(); n3];
    for (&(k, mirror), res) in reps.iter().zip(results) {
        let (u, s, v, sigma) = res?;
        if let Some(p) = mirror {
            singular_values[p] = sigma.clone();
        }
        singular_values[k] = sigma;
        us.push((k, mirror, u));
        ss.push((k, mirror, s));
        vs.push((k, mirror, v));
    }
    Ok(TsvdFactors {
        u: t.inverse(&assemble(n3, complex, us)?)?,
        s: t.inverse(&assemble(n3, complex, ss)?)?,
        v: t.inverse(&assemble(n3, complex, vs)?)?,
        singular_values,
        transform: t.clone(),
    })
}

/// Singular values of every transform-domain slice, descending.
pub fn transform_singular_values(t: &TransformSpec, x: &Tensor3<f64>) -> Result<Vec<Vec<f64>>> {
    let xbar = t.forward(x)?;
    let n3 = x.dims().n3;
    let reps = representatives(t, n3);
    let results = map_indices(reps.len(), |r| {
        let (k, _) = reps[r];
        let svd = match extract(&xbar, t, k) {
            SliceMat::Real(m) => checked_svd(m, k, false).map(|s| s.singular_values),
            SliceMat::Complex(m) => checked_svd(m, k, false).map(|s| s.singular_values),
        }?;
        Ok::<_, Error>(svd.iter().copied().collect::<Vec<f64>>())
    });
    let mut out = vec![Vec::new(); n3];
    for (&(k, mirror), res) in reps.iter().zip(results) {
        let sigma = res?;
        if let Some(p) = mirror {
            out[p] = sigma.clone();
        }
        out[k] = sigma;
    }
    Ok(out)
}

/// Tensor nuclear norm `(1/l) sum_k ||X̄^(k)||_*`.
pub fn tnn(t: &TransformSpec, x: &Tensor3<f64>) -> Result<f64> {
    let sv = transform_singular_values(t, x)?;
    Ok(sv.iter().flatten().sum::<f64>() / t.scaling())
}

/// Average rank `(1/l) sum_k rank(X̄^(k))`, counting singular values above
/// `tol` (0 selects `1e-8` times the largest singular value).
pub fn avg_rank(t: &TransformSpec, x: &Tensor3<f64>, tol: f64) -> Result<f64> {
    let sv = transform_singular_values(t, x)?;
    let largest = sv.iter().flat_map(|s| s.first().copied()).fold(0.0, f64::max);
    let tol = resolve_tol(tol, largest);
    let count = sv.iter().flatten().filter(|&&s| s > tol).count();
    Ok(count as f64 / t.scaling())
}

fn slice_svt<T>(m: DMatrix<T>, tau: f64, slice: usize) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Scalar,
{
    let (n1, n2) = m.shape();
    let svd = checked_svd(m, slice, true)?;
    let keep = svd.singular_values.iter().take_while(|&&s| s > tau).count();
    if keep == 0 {
        return Ok(DMatrix::zeros(n1, n2));
    }
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut left = u.columns(0, keep).into_owned();
    for (i, mut col) in left.column_iter_mut().enumerate() {
        col.scale_mut(svd.singular_values[i] - tau);
    }
    Ok(left * v_t.rows(0, keep))
}

/// Tensor singular value thresholding: the minimizer of
/// `tau ||X||_* + 1/2 ||X - W||_F^2`, obtained by soft-thresholding the
/// singular values of every transform-domain slice by `tau`.
pub fn tsvt(t: &TransformSpec, w: &Tensor3<f64>, tau: f64) -> Result<Tensor3<f64>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {tau}")));
    }
    let wbar = t.forward(w)?;
    let n3 = w.dims().n3;
    let reps = representatives(t, n3);
    let results = map_indices(reps.len(), |r| {
        let (k, _) = reps[r];
        match extract(&wbar, t, k) {
            SliceMat::Real(m) => slice_svt(m, tau, k).map(SliceMat::Real),
            SliceMat::Complex(m) => slice_svt(m, tau, k).map(SliceMat::Complex),
        }
    });
    let mut parts = Vec::with_capacity(reps.len());
    for (&(k, mirror), res) in reps.iter().zip(results) {
        parts.push((k, mirror, res?));
    }
    let complex = matches!(wbar, Spectrum::Complex(_));
    t.inverse(&assemble(n3, complex, parts)?)
}

/// Element-wise soft threshold `max(|w| - tau, 0) sgn(w)`.
pub fn shrink(w: &Tensor3<f64>, tau: f64) -> Tensor3<f64> {
    w.map(|&v| soft_threshold(v, tau))
}

#[inline]
pub fn soft_threshold(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// Checks the f-diagonal structure of `s` in the transform domain and returns
/// the largest off-diagonal magnitude.
pub fn off_diagonal_residual(t: &TransformSpec, s: &Tensor3<f64>) -> Result<f64> {
    let sbar = t.forward(s)?.to_complex();
    let Dims { n1, n2, .. } = s.dims();
    let mut worst: f64 = 0.0;
    for sl in sbar.slices() {
        for j in 0..n2 {
            for i in 0..n1 {
                if i != j {
                    worst = worst.max(sl[(i, j)].norm());
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::TransformKind;

    fn det_tensor(dims: Dims, seed: u64) -> Tensor3 {
        // small LCG; keeps the unit tests free of RNG plumbing
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        Tensor3::from_fn(dims, |_, _, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    const KINDS: [TransformKind; 3] = [TransformKind::Dft, TransformKind::Dct, TransformKind::Dwt4];

    #[test]
    fn zero_tensor_factors() {
        let dims = Dims::new(3, 4, 4).unwrap();
        for kind in KINDS {
            let t = TransformSpec::build(kind, 4).unwrap();
            let z = Tensor3::zeros(dims);
            let f = tsvd(&t, &z).unwrap();
            assert_eq!(f.s.inf_norm(), 0.0);
            assert_eq!(f.reconstruct().unwrap().inf_norm(), 0.0);
            assert_eq!(f.tubal_rank(0.0), 0);
            assert_eq!(avg_rank(&t, &z, 0.0).unwrap(), 0.0);
            assert_eq!(tnn(&t, &z).unwrap(), 0.0);
        }
    }

    #[test]
    fn identity_factors() {
        for kind in KINDS {
            let t = TransformSpec::build(kind, 4).unwrap();
            let id = t.identity(3).unwrap();
            let f = tsvd(&t, &id).unwrap();
            assert!(f.s.max_abs_diff(&id).unwrap() < 1e-12, "{kind}");
            assert_eq!(f.tubal_rank(1e-8), 3);
        }
    }

    #[test]
    fn identity_nuclear_norm_and_avg_rank_under_dct() {
        let t = TransformSpec::build(TransformKind::Dct, 5).unwrap();
        let id = t.identity(4).unwrap();
        assert!((tnn(&t, &id).unwrap() - 20.0).abs() < 1e-10);
        assert_eq!(avg_rank(&t, &id, 1e-8).unwrap(), 20.0);
    }

    #[test]
    fn dft_avg_rank_divides_by_n3() {
        let t = TransformSpec::build(TransformKind::Dft, 5).unwrap();
        let id = t.identity(4).unwrap();
        assert!((avg_rank(&t, &id, 1e-8).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rectangular_reconstruction() {
        for kind in KINDS {
            for (n1, n2) in [(6, 5), (3, 7)] {
                let t = TransformSpec::build(kind, 4).unwrap();
                let x = det_tensor(Dims::new(n1, n2, 4).unwrap(), 7);
                let f = tsvd(&t, &x).unwrap();
                assert_eq!(f.u.dims().as_tuple(), (n1, n1, 4));
                assert_eq!(f.v.dims().as_tuple(), (n2, n2, 4));
                let err = (&f.reconstruct().unwrap() - &x).fro_norm() / x.fro_norm();
                assert!(err < 1e-10, "{kind} ({n1},{n2}): {err}");
                assert!(off_diagonal_residual(&t, &f.s).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn odd_length_dft_uses_mirrors() {
        let t = TransformSpec::build(TransformKind::Dft, 5).unwrap();
        let x = det_tensor(Dims::new(4, 4, 5).unwrap(), 3);
        let sv = transform_singular_values(&t, &x).unwrap();
        assert_eq!(sv[1], sv[4]);
        assert_eq!(sv[2], sv[3]);
    }

    #[test]
    fn full_shrinkage_gives_zero() {
        let t = TransformSpec::build(TransformKind::Dct, 4).unwrap();
        let w = det_tensor(Dims::new(5, 5, 4).unwrap(), 11);
        let top = transform_singular_values(&t, &w)
            .unwrap()
            .iter()
            .map(|s| s[0])
            .fold(0.0, f64::max);
        assert_eq!(tsvt(&t, &w, top).unwrap().inf_norm(), 0.0);
    }

    #[test]
    fn tiny_threshold_is_identity() {
        for kind in KINDS {
            let t = TransformSpec::build(kind, 6).unwrap();
            let w = det_tensor(Dims::new(5, 4, 6).unwrap(), 5);
            let out = tsvt(&t, &w, 1e-15).unwrap();
            assert!(out.max_abs_diff(&w).unwrap() < 1e-9, "{kind}");
        }
    }

    #[test]
    fn nonpositive_threshold_rejected() {
        let t = TransformSpec::build(TransformKind::Dct, 2).unwrap();
        let w = Tensor3::zeros(Dims::new(2, 2, 2).unwrap());
        assert!(tsvt(&t, &w, 0.0).is_err());
    }

    #[test]
    fn shrink_formula() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        let z = Tensor3::zeros(Dims::new(2, 2, 2).unwrap());
        assert_eq!(shrink(&z, 0.3), z);
    }

    #[test]
    fn svd_failure_names_slice() {
        let t = TransformSpec::build(TransformKind::Dct, 3).unwrap();
        let mut x = Tensor3::zeros(Dims::new(2, 2, 3).unwrap());
        x[(0, 0, 1)] = f64::NAN;
        assert!(matches!(tsvd(&t, &x), Err(Error::SvdFailed { .. })));
    }
}
