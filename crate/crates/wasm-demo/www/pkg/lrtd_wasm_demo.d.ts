/* tslint:disable */
/* eslint-disable */

export class Comparison {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    entropy: Float64Array;
    mean_solve_ms: Float64Array;
    raw_entropy: number;
    raw_sigma: number;
    /**
     * dct, fft, dwt4
     */
    sigma: Float64Array;
}

export class Decomposition {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    converged: boolean;
    iterations: number;
    lambdas: Float64Array;
    low_rank_error: number;
    low_rank: Float32Array;
    mean_solve_ms: number;
    observed: Float32Array;
    sparse: Float32Array;
    support_dice: number;
    truth_mask: Float32Array;
}

export class Thresholding {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    noisy_error: number;
    noisy: Float32Array;
    shrink_error: number;
    shrink_nonzeros: number;
    shrunk: Float32Array;
    svt_average_rank: number;
    svt_error: number;
    svt_tubal_rank: number;
    svt: Float32Array;
}

export function compare_transforms(seed: number, segment_length: number): Comparison;

/**
 * Decomposes a 4-volume phantom stack; returns volume 0 and summary numbers.
 */
export function decompose_phantom(seed: number, drift: number, sparse_fraction: number, segment_length: number, lambda: number, transform: string): Decomposition;

export function dims(): Uint32Array;

export function threshold(seed: number, noise: number, tau_svt: number, tau_l1: number, transform: string): Thresholding;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_comparison_free: (a: number, b: number) => void;
    readonly __wbg_decomposition_free: (a: number, b: number) => void;
    readonly __wbg_get_comparison_entropy: (a: number) => [number, number];
    readonly __wbg_get_comparison_mean_solve_ms: (a: number) => [number, number];
    readonly __wbg_get_comparison_raw_entropy: (a: number) => number;
    readonly __wbg_get_comparison_raw_sigma: (a: number) => number;
    readonly __wbg_get_comparison_sigma: (a: number) => [number, number];
    readonly __wbg_get_decomposition_converged: (a: number) => number;
    readonly __wbg_get_decomposition_iterations: (a: number) => number;
    readonly __wbg_get_decomposition_lambdas: (a: number) => [number, number];
    readonly __wbg_get_decomposition_low_rank: (a: number) => [number, number];
    readonly __wbg_get_decomposition_low_rank_error: (a: number) => number;
    readonly __wbg_get_decomposition_mean_solve_ms: (a: number) => number;
    readonly __wbg_get_decomposition_observed: (a: number) => [number, number];
    readonly __wbg_get_decomposition_sparse: (a: number) => [number, number];
    readonly __wbg_get_decomposition_support_dice: (a: number) => number;
    readonly __wbg_get_decomposition_truth_mask: (a: number) => [number, number];
    readonly __wbg_get_thresholding_noisy: (a: number) => [number, number];
    readonly __wbg_get_thresholding_noisy_error: (a: number) => number;
    readonly __wbg_get_thresholding_shrink_error: (a: number) => number;
    readonly __wbg_get_thresholding_shrink_nonzeros: (a: number) => number;
    readonly __wbg_get_thresholding_shrunk: (a: number) => [number, number];
    readonly __wbg_get_thresholding_svt: (a: number) => [number, number];
    readonly __wbg_get_thresholding_svt_average_rank: (a: number) => number;
    readonly __wbg_get_thresholding_svt_error: (a: number) => number;
    readonly __wbg_get_thresholding_svt_tubal_rank: (a: number) => number;
    readonly __wbg_set_comparison_entropy: (a: number, b: number, c: number) => void;
    readonly __wbg_set_comparison_mean_solve_ms: (a: number, b: number, c: number) => void;
    readonly __wbg_set_comparison_raw_entropy: (a: number, b: number) => void;
    readonly __wbg_set_comparison_raw_sigma: (a: number, b: number) => void;
    readonly __wbg_set_comparison_sigma: (a: number, b: number, c: number) => void;
    readonly __wbg_set_decomposition_converged: (a: number, b: number) => void;
    readonly __wbg_set_decomposition_iterations: (a: number, b: number) => void;
    readonly __wbg_set_decomposition_lambdas: (a: number, b: number, c: number) => void;
    readonly __wbg_set_decomposition_low_rank: (a: number, b: number, c: number) => void;
    readonly __wbg_set_decomposition_low_rank_error: (a: number, b: number) => void;
    readonly __wbg_set_decomposition_mean_solve_ms: (a: number, b: number) => void;
    readonly __wbg_set_decomposition_observed: (a: number, b: number, c: number) => void;
    readonly __wbg_set_decomposition_sparse: (a: number, b: number, c: number) => void;
    readonly __wbg_set_decomposition_support_dice: (a: number, b: number) => void;
    readonly __wbg_set_decomposition_truth_mask: (a: number, b: number, c: number) => void;
    readonly __wbg_set_thresholding_noisy: (a: number, b: number, c: number) => void;
    readonly __wbg_set_thresholding_noisy_error: (a: number, b: number) => void;
    readonly __wbg_set_thresholding_shrink_error: (a: number, b: number) => void;
    readonly __wbg_set_thresholding_shrink_nonzeros: (a: number, b: number) => void;
    readonly __wbg_set_thresholding_shrunk: (a: number, b: number, c: number) => void;
    readonly __wbg_set_thresholding_svt: (a: number, b: number, c: number) => void;
    readonly __wbg_set_thresholding_svt_average_rank: (a: number, b: number) => void;
    readonly __wbg_set_thresholding_svt_error: (a: number, b: number) => void;
    readonly __wbg_set_thresholding_svt_tubal_rank: (a: number, b: number) => void;
    readonly __wbg_thresholding_free: (a: number, b: number) => void;
    readonly compare_transforms: (a: number, b: number) => [number, number, number];
    readonly decompose_phantom: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly dims: () => [number, number];
    readonly threshold: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly __externref_table_alloc: () => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
