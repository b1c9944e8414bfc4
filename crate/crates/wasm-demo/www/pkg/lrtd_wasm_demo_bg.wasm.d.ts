/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_comparison_free: (a: number, b: number) => void;
export const __wbg_decomposition_free: (a: number, b: number) => void;
export const __wbg_get_comparison_entropy: (a: number) => [number, number];
export const __wbg_get_comparison_mean_solve_ms: (a: number) => [number, number];
export const __wbg_get_comparison_raw_entropy: (a: number) => number;
export const __wbg_get_comparison_raw_sigma: (a: number) => number;
export const __wbg_get_comparison_sigma: (a: number) => [number, number];
export const __wbg_get_decomposition_converged: (a: number) => number;
export const __wbg_get_decomposition_iterations: (a: number) => number;
export const __wbg_get_decomposition_lambdas: (a: number) => [number, number];
export const __wbg_get_decomposition_low_rank: (a: number) => [number, number];
export const __wbg_get_decomposition_low_rank_error: (a: number) => number;
export const __wbg_get_decomposition_mean_solve_ms: (a: number) => number;
export const __wbg_get_decomposition_observed: (a: number) => [number, number];
export const __wbg_get_decomposition_sparse: (a: number) => [number, number];
export const __wbg_get_decomposition_support_dice: (a: number) => number;
export const __wbg_get_decomposition_truth_mask: (a: number) => [number, number];
export const __wbg_get_thresholding_noisy: (a: number) => [number, number];
export const __wbg_get_thresholding_noisy_error: (a: number) => number;
export const __wbg_get_thresholding_shrink_error: (a: number) => number;
export const __wbg_get_thresholding_shrink_nonzeros: (a: number) => number;
export const __wbg_get_thresholding_shrunk: (a: number) => [number, number];
export const __wbg_get_thresholding_svt: (a: number) => [number, number];
export const __wbg_get_thresholding_svt_average_rank: (a: number) => number;
export const __wbg_get_thresholding_svt_error: (a: number) => number;
export const __wbg_get_thresholding_svt_tubal_rank: (a: number) => number;
export const __wbg_set_comparison_entropy: (a: number, b: number, c: number) => void;
export const __wbg_set_comparison_mean_solve_ms: (a: number, b: number, c: number) => void;
export const __wbg_set_comparison_raw_entropy: (a: number, b: number) => void;
export const __wbg_set_comparison_raw_sigma: (a: number, b: number) => void;
export const __wbg_set_comparison_sigma: (a: number, b: number, c: number) => void;
export const __wbg_set_decomposition_converged: (a: number, b: number) => void;
export const __wbg_set_decomposition_iterations: (a: number, b: number) => void;
export const __wbg_set_decomposition_lambdas: (a: number, b: number, c: number) => void;
export const __wbg_set_decomposition_low_rank: (a: number, b: number, c: number) => void;
export const __wbg_set_decomposition_low_rank_error: (a: number, b: number) => void;
export const __wbg_set_decomposition_mean_solve_ms: (a: number, b: number) => void;
export const __wbg_set_decomposition_observed: (a: number, b: number, c: number) => void;
export const __wbg_set_decomposition_sparse: (a: number, b: number, c: number) => void;
export const __wbg_set_decomposition_support_dice: (a: number, b: number) => void;
export const __wbg_set_decomposition_truth_mask: (a: number, b: number, c: number) => void;
export const __wbg_set_thresholding_noisy: (a: number, b: number, c: number) => void;
export const __wbg_set_thresholding_noisy_error: (a: number, b: number) => void;
export const __wbg_set_thresholding_shrink_error: (a: number, b: number) => void;
export const __wbg_set_thresholding_shrink_nonzeros: (a: number, b: number) => void;
export const __wbg_set_thresholding_shrunk: (a: number, b: number, c: number) => void;
export const __wbg_set_thresholding_svt: (a: number, b: number, c: number) => void;
export const __wbg_set_thresholding_svt_average_rank: (a: number, b: number) => void;
export const __wbg_set_thresholding_svt_error: (a: number, b: number) => void;
export const __wbg_set_thresholding_svt_tubal_rank: (a: number, b: number) => void;
export const __wbg_thresholding_free: (a: number, b: number) => void;
export const compare_transforms: (a: number, b: number) => [number, number, number];
export const decompose_phantom: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const dims: () => [number, number];
export const threshold: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const __externref_table_alloc: () => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
