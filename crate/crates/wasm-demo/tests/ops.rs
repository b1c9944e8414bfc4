use lrtd_wasm_demo::ops::{compare_transforms, decompose_phantom, threshold, N1, N2, N3};

const LEN: usize = N1 * N2 * N3;

#[test]
fn decomposition_finds_blobs() {
    let o = decompose_phantom(1, 0.0, 0.03, 5, 0.0, "dct").unwrap();
    assert_eq!(o.observed.len(), LEN);
    assert_eq!(o.low_rank.len(), LEN);
    assert!(o.converged);
    assert!(o.support_dice > 80.0, "{}", o.support_dice);
    assert!(o.low_rank_error < 0.1, "{}", o.low_rank_error);
    assert_eq!(o.lambdas.len(), 3);
    let sum: Vec<f32> = o.low_rank.iter().zip(&o.sparse).map(|(a, b)| a + b).collect();
    let gap = sum.iter().zip(&o.observed).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
    assert!(gap < 1e-4, "{gap}");
}

#[test]
fn huge_lambda_leaves_sparse_part_empty() {
    let o = decompose_phantom(1, 0.0, 0.03, 12, 1e3, "fft").unwrap();
    assert!(o.sparse.iter().all(|&v| v.abs() < 1e-6));
    assert_eq!(o.lambdas, vec![1e3]);
}

#[test]
fn bad_arguments_are_errors() {
    assert!(decompose_phantom(1, 0.0, 0.03, 1, 0.0, "dct").is_err());
    assert!(decompose_phantom(1, 0.0, 0.03, 5, 0.0, "wavelet").is_err());
    assert!(threshold(1, 0.1, 1.0, 0.1, "custom").is_err());
}

#[test]
fn low_rank_thresholding_beats_elementwise_on_noise() {
    let o = threshold(2, 0.1, 1.5, 0.05, "dct").unwrap();
    assert!(o.svt_error < o.noisy_error);
    assert!(o.svt_error < o.shrink_error);
    assert!(o.svt_tubal_rank < N1);
    assert!(o.shrink_nonzeros < LEN);

    let same = threshold(2, 0.1, 0.0, 0.0, "dct").unwrap();
    assert_eq!(same.svt, same.noisy);
    assert_eq!(same.shrunk, same.noisy);
}

#[test]
fn comparison_rows_reduce_spread() {
    let o = compare_transforms(0, 5).unwrap();
    assert_eq!(o.sigma.len(), 3);
    for (s, h) in o.sigma.iter().zip(&o.entropy) {
        assert!(*s < o.raw_sigma && *h < o.raw_entropy);
    }
}
