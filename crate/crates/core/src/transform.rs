//! Invertible mode-3 transforms and the transformed tensor product.
//!
//! A [`TransformSpec`] wraps an `n3 x n3` matrix `M` with `M* M = M M* = l I`
//! for some `l > 0`. The product of `x` (`n1 x n2 x n3`) and `y`
//! (`n2 x m x n3`) is computed by moving both into the transform domain
//! (`x ×₃ M`), multiplying matching frontal slices, and mapping back with
//! `M⁻¹`. With `M` the DFT matrix this is the classical t-product.

use std::f64::consts::PI;

use nalgebra::{ComplexField, DMatrix, Scalar};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::tensor::{mode3_product, Complex, ComplexTensor3, Dims, Tensor3};

/// Tolerance for the `M* M = l I` check.
pub const SCALING_TOL: f64 = 1e-8;
/// Tolerance for `M M⁻¹ = I`.
pub const INVERSE_TOL: f64 = 1e-10;
/// Largest accepted imaginary residue, relative to the result norm, when a
/// complex transform-domain tensor is mapped back to a real tensor.
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    /// Discrete Fourier transform, `l = n3`.
    Dft,
    /// Orthonormal DCT-II, `l = 1`.
    Dct,
    /// Single-level periodized 4-tap Daubechies wavelet, `l = 1`.
    Dwt4,
    /// User-supplied real matrix.
    Custom,
}

impl TransformKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::Dft => "fft",
            TransformKind::Dct => "dct",
            TransformKind::Dwt4 => "dwt4",
            TransformKind::Custom => "custom",
        }
    }
}

impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fft" | "dft" => Ok(TransformKind::Dft),
            "dct" => Ok(TransformKind::Dct),
            "dwt4" | "dwt" | "db4" => Ok(TransformKind::Dwt4),
            other => Err(Error::InvalidArgument(format!(
                "unknown transform '{other}' (expected dct, fft or dwt4)"
            ))),
        }
    }
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TransformMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex<f64>>),
}

impl TransformMatrix {
    pub fn to_complex(&self) -> DMatrix<Complex<f64>> {
        match self {
            TransformMatrix::Real(m) => m.map(|v| Complex::new(v, 0.0)),
            TransformMatrix::Complex(m) => m.clone(),
        }
    }
}

/// A tensor in the transform domain. Real transforms keep real tensors real.
#[derive(Clone, Debug, PartialEq)]
pub enum Spectrum {
    Real(Tensor3<f64>),
    Complex(ComplexTensor3),
}

impl Spectrum {
    pub fn dims(&self) -> Dims {
        match self {
            Spectrum::Real(t) => t.dims(),
            Spectrum::Complex(t) => t.dims(),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        match self {
            Spectrum::Real(t) => t.fro_norm(),
            Spectrum::Complex(t) => t.fro_norm(),
        }
    }

    /// Slice-wise product `self^(k) · other^(k)`.
    pub fn facewise_mul(&self, other: &Spectrum) -> Result<Spectrum> {
        match (self, other) {
            (Spectrum::Real(a), Spectrum::Real(b)) => facewise(a, b).map(Spectrum::Real),
            (Spectrum::Complex(a), Spectrum::Complex(b)) => facewise(a, b).map(Spectrum::Complex),
            (a, b) => facewise(&a.to_complex(), &b.to_complex()).map(Spectrum::Complex),
        }
    }

    /// Conjugate transpose of every frontal slice.
    pub fn slice_adjoint(&self) -> Spectrum {
        match self {
            Spectrum::Real(a) => Spectrum::Real(map_slices(a, |s| s.transpose())),
            Spectrum::Complex(a) => Spectrum::Complex(map_slices(a, |s| s.adjoint())),
        }
    }

    pub fn to_complex(&self) -> ComplexTensor3 {
        match self {
            Spectrum::Real(t) => t.to_complex(),
            Spectrum::Complex(t) => t.clone(),
        }
    }
}

fn map_slices<T: Scalar + ComplexField>(
    x: &Tensor3<T>,
    f: impl Fn(DMatrix<T>) -> DMatrix<T>,
) -> Tensor3<T> {
    let slices: Vec<DMatrix<T>> = x.slices().map(|s| f(s.into_owned())).collect();
    Tensor3::from_slices(&slices).expect("at least one slice")
}

fn facewise<T: Scalar + ComplexField>(a: &Tensor3<T>, b: &Tensor3<T>) -> Result<Tensor3<T>> {
    let (da, db) = (a.dims(), b.dims());
    if da.n2 != db.n1 || da.n3 != db.n3 {
        return Err(shape_err(format!("cannot multiply {da} by {db} face-wise")));
    }
    let slices: Vec<DMatrix<T>> = a.slices().zip(b.slices()).map(|(x, y)| x * y).collect();
    Tensor3::from_slices(&slices)
}

/// An invertible mode-3 transform with its scaling constant `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformSpec {
    kind: TransformKind,
    n3: usize,
    l: f64,
    m: TransformMatrix,
    m_inv: TransformMatrix,
}

impl TransformSpec {
    /// Builds and validates one of the standard transforms of length `n3`.
    pub fn build(kind: TransformKind, n3: usize) -> Result<Self> {
        if n3 == 0 {
            return Err(Error::InvalidArgument("transform length must be positive".into()));
        }
        let spec = match kind {
            TransformKind::Dft => {
                let m = dft_matrix(n3);
                let m_inv = m.adjoint() / Complex::new(n3 as f64, 0.0);
                Self {
                    kind,
                    n3,
                    l: n3 as f64,
                    m: TransformMatrix::Complex(m),
                    m_inv: TransformMatrix::Complex(m_inv),
                }
            }
            TransformKind::Dct => {
                let m = dct2_matrix(n3);
                Self {
                    kind,
                    n3,
                    l: 1.0,
                    m_inv: TransformMatrix::Real(m.transpose()),
                    m: TransformMatrix::Real(m),
                }
            }
            TransformKind::Dwt4 => {
                if !n3.is_multiple_of(2) {
                    return Err(Error::UnsupportedLength { kind: "dwt4", n3 });
                }
                let m = daubechies4_matrix(n3);
                Self {
                    kind,
                    n3,
                    l: 1.0,
                    m_inv: TransformMatrix::Real(m.transpose()),
                    m: TransformMatrix::Real(m),
                }
            }
            TransformKind::Custom => {
                return Err(Error::InvalidArgument(
                    "use TransformSpec::custom for user-supplied matrices".into(),
                ))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Accepts a real matrix satisfying `M* M = M M* = l I`, with `l`
    /// estimated as the mean diagonal of `M* M`.
    pub fn custom(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidTransform(format!(
                "transform matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let gram = m.transpose() * &m;
        let l = gram.diagonal().mean();
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidTransform(format!("scaling constant {l} is not positive")));
        }
        let spec = Self {
            kind: TransformKind::Custom,
            n3: m.nrows(),
            l,
            m_inv: TransformMatrix::Real(m.transpose() / l),
            m: TransformMatrix::Real(m),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Re-checks `M* M = M M* = l I` and `M M⁻¹ = I`.
    pub fn validate(&self) -> Result<()> {
        let m = self.m.to_complex();
        let m_inv = self.m_inv.to_complex();
        let n = self.n3;
        let target = DMatrix::<Complex<f64>>::identity(n, n) * Complex::new(self.l, 0.0);
        let scale = self.l.max(1.0);
        let left = max_modulus(&(m.adjoint() * &m - &target)) / scale;
        let right = max_modulus(&(&m * m.adjoint() - &target)) / scale;
        if left > SCALING_TOL || right > SCALING_TOL {
            return Err(Error::InvalidTransform(format!(
                "M*M = lI violated by {:.3e} (l = {})",
                left.max(right),
                self.l
            )));
        }
        let inv = max_modulus(&(&m * &m_inv - DMatrix::identity(n, n)));
        if inv > INVERSE_TOL {
            return Err(Error::InvalidTransform(format!(
                "M M^-1 deviates from identity by {inv:.3e}"
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn n3(&self) -> usize {
        self.n3
    }

    /// The constant `l` in `M* M = l I`.
    pub fn scaling(&self) -> f64 {
        self.l
    }

    pub fn matrix(&self) -> &TransformMatrix {
        &self.m
    }

    pub fn inverse_matrix(&self) -> &TransformMatrix {
        &self.m_inv
    }

    pub fn is_real(&self) -> bool {
        matches!(self.m, TransformMatrix::Real(_))
    }

    /// For the DFT, transform-domain slices `k` and `n3 - k` of a real tensor
    /// are complex conjugates. Returns the partner of `k` when that symmetry
    /// holds.
    pub fn conjugate_partner(&self, k: usize) -> Option<usize> {
        (self.kind == TransformKind::Dft).then(|| (self.n3 - k) % self.n3)
    }

    fn check_len(&self, dims: Dims) -> Result<()> {
        if dims.n3 != self.n3 {
            return Err(shape_err(format!(
                "tensor has {} frontal slices but the transform has length {}",
                dims.n3, self.n3
            )));
        }
        Ok(())
    }

    /// `x ×₃ M`.
    pub fn forward(&self, x: &Tensor3<f64>) -> Result<Spectrum> {
        self.check_len(x.dims())?;
        Ok(match &self.m {
            TransformMatrix::Real(m) => Spectrum::Real(mode3_product(x, m)?),
            TransformMatrix::Complex(m) => Spectrum::Complex(mode3_product(&x.to_complex(), m)?),
        })
    }

    /// `x̄ ×₃ M⁻¹` without dropping any imaginary part.
    pub fn inverse_spectrum(&self, xbar: &Spectrum) -> Result<Spectrum> {
        self.check_len(xbar.dims())?;
        Ok(match (&self.m_inv, xbar) {
            (TransformMatrix::Real(mi), Spectrum::Real(t)) => Spectrum::Real(mode3_product(t, mi)?),
            (mi, t) => Spectrum::Complex(mode3_product(&t.to_complex(), &mi.to_complex())?),
        })
    }

    /// `x̄ ×₃ M⁻¹` as a real tensor. A complex result is accepted only when
    /// its imaginary part is below `1e-8` times the result norm.
    pub fn inverse(&self, xbar: &Spectrum) -> Result<Tensor3<f64>> {
        match self.inverse_spectrum(xbar)? {
            Spectrum::Real(t) => Ok(t),
            Spectrum::Complex(c) => {
                let re = c.re();
                let imag = c.im().fro_norm();
                let reference = re.fro_norm().max(xbar.fro_norm() / self.l.sqrt());
                if imag > IMAG_RESIDUE_TOL * reference {
                    return Err(Error::NumericIntegrity(format!(
                        "imaginary residue {imag:.3e} exceeds {IMAG_RESIDUE_TOL:e} x {reference:.3e}"
                    )));
                }
                Ok(re)
            }
        }
    }

    /// The transformed product of `x` (`n1 x n2 x n3`) and `y` (`n2 x m x n3`).
    pub fn mproduct(&self, x: &Tensor3<f64>, y: &Tensor3<f64>) -> Result<Tensor3<f64>> {
        let (dx, dy) = (x.dims(), y.dims());
        if dx.n2 != dy.n1 || dx.n3 != dy.n3 {
            return Err(shape_err(format!("cannot multiply {dx} by {dy}")));
        }
        let z = self.forward(x)?.facewise_mul(&self.forward(y)?)?;
        self.inverse(&z)
    }

    /// The tensor whose transform-domain slices are conjugate transposes of
    /// those of `x`.
    pub fn conj_transpose(&self, x: &Tensor3<f64>) -> Result<Tensor3<f64>> {
        self.inverse(&self.forward(x)?.slice_adjoint())
    }

    /// Identity of the transformed product: every transform-domain slice is
    /// the `n x n` identity.
    pub fn identity(&self, n: usize) -> Result<Tensor3<f64>> {
        let eye = Tensor3::<f64>::identity_slices(n, self.n3);
        self.inverse(&Spectrum::Real(eye))
    }
}

fn max_modulus(m: &DMatrix<Complex<f64>>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.norm()))
}

/// `F[j, k] = exp(-2 pi i j k / n)`.
pub fn dft_matrix(n: usize) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(n, n, |j, k| {
        // reduce the exponent first so large n keeps full precision
        let p = (j * k) % n;
        Complex::from_polar(1.0, -2.0 * PI * p as f64 / n as f64)
    })
}

/// Orthonormal DCT-II: `C[k, j] = a_k cos(pi (2j + 1) k / 2n)`.
pub fn dct2_matrix(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    DMatrix::from_fn(n, n, |k, j| {
        let a = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        a * (PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf)).cos()
    })
}

/// Daubechies 4-tap scaling filter.
pub fn daubechies4_filter() -> [f64; 4] {
    let s3 = 3f64.sqrt();
    let d = 4.0 * 2f64.sqrt();
    [(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
}

/// Single-level periodized Daubechies-4 analysis matrix for even `n`: the
/// first `n/2` rows are the low-pass outputs, the rest the high-pass outputs.
pub fn daubechies4_matrix(n: usize) -> DMatrix<f64> {
    assert!(n.is_multiple_of(2) && n > 0, "periodized DWT needs an even length");
    let h = daubechies4_filter();
    let g = [h[3], -h[2], h[1], -h[0]];
    let half = n / 2;
    let mut w = DMatrix::zeros(n, n);
    for r in 0..half {
        for t in 0..4 {
            let c = (2 * r + t) % n;
            w[(r, c)] += h[t];
            w[(half + r, c)] += g[t];
        }
    }
    w
}
