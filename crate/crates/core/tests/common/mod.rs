#![allow(dead_code)]

use lrtd::{Dims, Tensor3, TransformKind, TransformSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const KINDS: [TransformKind; 3] = [TransformKind::Dct, TransformKind::Dft, TransformKind::Dwt4];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dims(n1: usize, n2: usize, n3: usize) -> Dims {
    Dims::new(n1, n2, n3).unwrap()
}

pub fn gaussian(rng: &mut ChaCha8Rng, d: Dims) -> Tensor3<f64> {
    Tensor3::from_fn(d, |_, _, _| rng.sample(StandardNormal))
}

pub fn spec(kind: TransformKind, n3: usize) -> TransformSpec {
    TransformSpec::build(kind, n3).unwrap()
}

pub fn rel_err(a: &Tensor3<f64>, b: &Tensor3<f64>) -> f64 {
    (a - b).fro_norm() / b.fro_norm().max(f64::MIN_POSITIVE)
}
