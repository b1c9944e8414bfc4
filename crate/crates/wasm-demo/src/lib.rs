//! wasm-bindgen bindings for the browser demo in `www/`.

pub mod ops;

use wasm_bindgen::prelude::*;

fn js(e: lrtd::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn dims() -> Vec<u32> {
    vec![ops::N1 as u32, ops::N2 as u32, ops::N3 as u32]
}

#[wasm_bindgen(getter_with_clone)]
pub struct Decomposition {
    pub observed: Vec<f32>,
    pub low_rank: Vec<f32>,
    pub sparse: Vec<f32>,
    pub truth_mask: Vec<f32>,
    pub support_dice: f64,
    pub low_rank_error: f64,
    pub mean_solve_ms: f64,
    pub iterations: u32,
    pub converged: bool,
    pub lambdas: Vec<f64>,
}

/// Decomposes a 4-volume phantom stack; returns volume 0 and summary numbers.
#[wasm_bindgen]
pub fn decompose_phantom(
    seed: u32,
    drift: f64,
    sparse_fraction: f64,
    segment_length: u32,
    lambda: f64,
    transform: &str,
) -> Result<Decomposition, JsError> {
    let o = ops::decompose_phantom(u64::from(seed), drift, sparse_fraction, segment_length as usize, lambda, transform)
        .map_err(js)?;
    Ok(Decomposition {
        observed: o.observed,
        low_rank: o.low_rank,
        sparse: o.sparse,
        truth_mask: o.truth_mask,
        support_dice: o.support_dice,
        low_rank_error: o.low_rank_error,
        mean_solve_ms: o.mean_solve_ms,
        iterations: o.iterations as u32,
        converged: o.converged,
        lambdas: o.lambdas,
    })
}

#[wasm_bindgen(getter_with_clone)]
pub struct Thresholding {
    pub noisy: Vec<f32>,
    pub svt: Vec<f32>,
    pub shrunk: Vec<f32>,
    pub svt_error: f64,
    pub shrink_error: f64,
    pub noisy_error: f64,
    pub svt_tubal_rank: u32,
    pub svt_average_rank: f64,
    pub shrink_nonzeros: u32,
}

#[wasm_bindgen]
pub fn threshold(seed: u32, noise: f64, tau_svt: f64, tau_l1: f64, transform: &str) -> Result<Thresholding, JsError> {
    let o = ops::threshold(u64::from(seed), noise, tau_svt, tau_l1, transform).map_err(js)?;
    Ok(Thresholding {
        noisy: o.noisy,
        svt: o.svt,
        shrunk: o.shrunk,
        svt_error: o.svt_error,
        shrink_error: o.shrink_error,
        noisy_error: o.noisy_error,
        svt_tubal_rank: o.svt_tubal_rank as u32,
        svt_average_rank: o.svt_average_rank,
        shrink_nonzeros: o.shrink_nonzeros as u32,
    })
}

#[wasm_bindgen(getter_with_clone)]
pub struct Comparison {
    pub raw_sigma: f64,
    pub raw_entropy: f64,
    /// dct, fft, dwt4
    pub sigma: Vec<f64>,
    pub entropy: Vec<f64>,
    pub mean_solve_ms: Vec<f64>,
}

#[wasm_bindgen]
pub fn compare_transforms(seed: u32, segment_length: u32) -> Result<Comparison, JsError> {
    let o = ops::compare_transforms(u64::from(seed), segment_length as usize).map_err(js)?;
    Ok(Comparison {
        raw_sigma: o.raw_sigma,
        raw_entropy: o.raw_entropy,
        sigma: o.sigma,
        entropy: o.entropy,
        mean_solve_ms: o.mean_solve_ms,
    })
}
