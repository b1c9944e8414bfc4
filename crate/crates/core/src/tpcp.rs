//! Tensor principal component pursuit solved by ADMM.
//!
//! Splits `x` into a low-rank part `L` and a sparse part `E` by minimizing
//! `||L||_* + lambda ||E||_1` subject to `x = L + E`. Each iteration takes a
//! t-SVT step on `L`, a soft-threshold step on `E`, a dual ascent step on the
//! multiplier `Y`, and grows the penalty `mu` geometrically up to `mu_max`.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::tensor::{Dims, Tensor3};
use crate::transform::{TransformKind, TransformSpec};
use crate::tsvd::{soft_threshold, tnn, tsvt};

/// Weight of the sparse term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lambda {
    /// [`auto_lambda`] for the tensor and transform being solved.
    Auto,
    Value(f64),
}

impl Lambda {
    /// `scaling` is the transform constant `l` with `M^T M = l I`.
    pub fn resolve(&self, dims: Dims, scaling: f64) -> f64 {
        match *self {
            Lambda::Auto => auto_lambda(dims, scaling),
            Lambda::Value(v) => v,
        }
    }
}

impl std::str::FromStr for Lambda {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Lambda::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Lambda::Value(v)),
            _ => Err(Error::InvalidArgument(format!(
                "lambda must be 'auto' or a positive number, got '{s}'"
            ))),
        }
    }
}

/// `1 / sqrt(max(n1, n2) n3)`.
pub fn default_lambda(dims: Dims) -> f64 {
    1.0 / ((dims.n1.max(dims.n2) * dims.n3) as f64).sqrt()
}

/// `1 / sqrt(max(n1, n2) l)`. Equal to [`default_lambda`] for the DFT
/// (`l = n3`). Orthonormal transforms (`l = 1`) make the nuclear norm about
/// `sqrt(n3)` times larger than the DFT one for the same tensor, and the
/// weight follows.
pub fn auto_lambda(dims: Dims, scaling: f64) -> f64 {
    1.0 / (dims.n1.max(dims.n2) as f64 * scaling).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TpcpConfig {
    pub lambda: Lambda,
    pub mu0: f64,
    pub mu_max: f64,
    pub rho: f64,
    /// Absolute tolerance on the three sup-norm residuals.
    pub eps: f64,
    pub max_iters: usize,
    /// The transform is built for the third dimension of each solved tensor.
    pub transform: TransformKind,
}

impl Default for TpcpConfig {
    fn default() -> Self {
        Self {
            lambda: Lambda::Auto,
            mu0: 1e-3,
            mu_max: 1e10,
            rho: 1.1,
            eps: 1e-8,
            max_iters: 500,
            transform: TransformKind::Dct,
        }
    }
}

impl TpcpConfig {
    pub fn with_transform(mut self, kind: TransformKind) -> Self {
        self.transform = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if let Lambda::Value(v) = self.lambda {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("lambda must be positive, got {v}"));
            }
        }
        if !(self.mu0 > 0.0) || !(self.mu0 <= self.mu_max) || !self.mu_max.is_finite() {
            return bad(format!(
                "need 0 < mu0 <= mu_max, got mu0 = {}, mu_max = {}",
                self.mu0, self.mu_max
            ));
        }
        if !(self.rho > 1.0) {
            return bad(format!("rho must exceed 1, got {}", self.rho));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        Ok(())
    }
}

/// Residuals recorded after one ADMM iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// `||x - L - E||_inf`
    pub primal: f64,
    /// `||L_{k+1} - L_k||_inf`
    pub delta_low_rank: f64,
    /// `||E_{k+1} - E_k||_inf`
    pub delta_sparse: f64,
    /// Penalty used in this iteration.
    pub mu: f64,
}

#[derive(Clone, Debug)]
pub struct TpcpResult {
    pub low_rank: Tensor3<f64>,
    pub sparse: Tensor3<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The weight actually used.
    pub lambda: f64,
    pub trace: Vec<IterationRecord>,
}

impl TpcpResult {
    pub fn final_primal_residual(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.primal)
    }
}

/// Solves TPCP for `x` with the transform named in `cfg`.
pub fn tpcp_solve(x: &Tensor3<f64>, cfg: &TpcpConfig) -> Result<TpcpResult> {
    let t = TransformSpec::build(cfg.transform, x.dims().n3)?;
    tpcp_solve_with(x, cfg, &t)
}

/// Solves TPCP with an explicit transform, ignoring `cfg.transform`.
pub fn tpcp_solve_with(x: &Tensor3<f64>, cfg: &TpcpConfig, t: &TransformSpec) -> Result<TpcpResult> {
    cfg.validate()?;
    let dims = x.dims();
    if dims.n3 != t.n3() {
        return Err(shape_err(format!(
            "tensor has {} slices but the transform has length {}",
            dims.n3,
            t.n3()
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let lambda = cfg.lambda.resolve(dims, t.scaling());
    let xs = x.data();
    let n = xs.len();

    let mut low: Tensor3<f64> = Tensor3::zeros(dims);
    let mut sparse: Tensor3<f64> = Tensor3::zeros(dims);
    let mut dual = vec![0.0; n];
    let mut mu = cfg.mu0;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut work: Tensor3<f64> = Tensor3::zeros(dims);

    for iter in 1..=cfg.max_iters {
        let inv_mu = 1.0 / mu;

        // L update: t-SVT of x - E + Y/mu at 1/mu
        for (((w, &xv), &ev), &yv) in work.data_mut().iter_mut().zip(xs).zip(sparse.data()).zip(&dual) {
            *w = xv - ev + yv * inv_mu;
        }
        let new_low = tsvt(t, &work, inv_mu)?;

        // E update: shrink x - L + Y/mu at lambda/mu
        let tau = lambda * inv_mu;
        let mut delta_sparse: f64 = 0.0;
        let mut delta_low: f64 = 0.0;
        let mut primal: f64 = 0.0;
        let mut finite = true;
        {
            let e = sparse.data_mut();
            let l_old = low.data();
            let l_new = new_low.data();
            for i in 0..n {
                let e_new = soft_threshold(xs[i] - l_new[i] + dual[i] * inv_mu, tau);
                delta_sparse = delta_sparse.max((e_new - e[i]).abs());
                delta_low = delta_low.max((l_new[i] - l_old[i]).abs());
                e[i] = e_new;
                let r = xs[i] - l_new[i] - e_new;
                primal = primal.max(r.abs());
                finite &= r.is_finite();
            }
        }
        low = new_low;
        if !finite {
            return Err(Error::NonFinite { iteration: iter });
        }
        trace.push(IterationRecord {
            primal,
            delta_low_rank: delta_low,
            delta_sparse,
            mu,
        });
        if delta_low < cfg.eps && delta_sparse < cfg.eps && primal < cfg.eps {
            converged = true;
            break;
        }

        // dual ascent and penalty growth
        let (l, e) = (low.data(), sparse.data());
        for i in 0..n {
            dual[i] += mu * (xs[i] - l[i] - e[i]);
        }
        mu = (cfg.rho * mu).min(cfg.mu_max);
    }

    Ok(TpcpResult {
        low_rank: low,
        sparse,
        iterations: trace.len(),
        converged,
        lambda,
        trace,
    })
}

/// `||L||_* + lambda ||E||_1`.
pub fn tpcp_objective(t: &TransformSpec, low: &Tensor3<f64>, sparse: &Tensor3<f64>, lambda: f64) -> Result<f64> {
    Ok(tnn(t, low)? + lambda * sparse.l1_norm())
}
