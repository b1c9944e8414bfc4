/* @ts-self-types="./lrtd_wasm_demo.d.ts" */

export class Comparison {
    static __wrap(ptr) {
        const obj = Object.create(Comparison.prototype);
        obj.__wbg_ptr = ptr;
        ComparisonFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        ComparisonFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_comparison_free(ptr, 0);
    }
    /**
     * @returns {Float64Array}
     */
    get entropy() {
        const ret = wasm.__wbg_get_comparison_entropy(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get mean_solve_ms() {
        const ret = wasm.__wbg_get_comparison_mean_solve_ms(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {number}
     */
    get raw_entropy() {
        const ret = wasm.__wbg_get_comparison_raw_entropy(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get raw_sigma() {
        const ret = wasm.__wbg_get_comparison_raw_sigma(this.__wbg_ptr);
        return ret;
    }
    /**
     * dct, fft, dwt4
     * @returns {Float64Array}
     */
    get sigma() {
        const ret = wasm.__wbg_get_comparison_sigma(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @param {Float64Array} arg0
     */
    set entropy(arg0) {
        const ptr0 = passArrayF64ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_comparison_entropy(this.__wbg_ptr, ptr0, len0);
    }
    /**
     * @param {Float64Array} arg0
     */
    set mean_solve_ms(arg0) {
        const ptr0 = passArrayF64ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_comparison_mean_solve_ms(this.__wbg_ptr, ptr0, len0);
    }
    /**
     * @param {number} arg0
     */
    set raw_entropy(arg0) {
        wasm.__wbg_set_comparison_raw_entropy(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set raw_sigma(arg0) {
        wasm.__wbg_set_comparison_raw_sigma(this.__wbg_ptr, arg0);
    }
    /**
     * dct, fft, dwt4
     * @param {Float64Array} arg0
     */
    set sigma(arg0) {
        const ptr0 = passArrayF64ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_comparison_sigma(this.__wbg_ptr, ptr0, len0);
    }
}
if (Symbol.dispose) Comparison.prototype[Symbol.dispose] = Comparison.prototype.free;

export class Decomposition {
    static __wrap(ptr) {
        const obj = Object.create(Decomposition.prototype);
        obj.__wbg_ptr = ptr;
        DecompositionFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        DecompositionFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_decomposition_free(ptr, 0);
    }
    /**
     * @returns {boolean}
     */
    get converged() {
        const ret = wasm.__wbg_get_decomposition_converged(this.__wbg_ptr);
        return ret !== 0;
    }
    /**
     * @returns {number}
     */
    get iterations() {
        const ret = wasm.__wbg_get_decomposition_iterations(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {Float64Array}
     */
    get lambdas() {
        const ret = wasm.__wbg_get_decomposition_lambdas(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {number}
     */
    get low_rank_error() {
        const ret = wasm.__wbg_get_decomposition_low_rank_error(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {Float32Array}
     */
    get low_rank() {
        const ret = wasm.__wbg_get_decomposition_low_rank(this.__wbg_ptr);
        var v1 = getArrayF32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
    /**
     * @returns {number}
     */
    get mean_solve_ms() {
        const ret = wasm.__wbg_get_decomposition_mean_solve_ms(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {Float32Array}
     */
    get observed() {
        const ret = wasm.__wbg_get_decomposition_observed(this.__wbg_ptr);
        var v1 = getArrayF32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
    /**
     * @returns {Float32Array}
     */
    get sparse() {
        const ret = wasm.__wbg_get_decomposition_sparse(this.__wbg_ptr);
        var v1 = getArrayF32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
    /**
     * @returns {number}
     */
    get support_dice() {
        const ret = wasm.__wbg_get_decomposition_support_dice(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {Float32Array}
     */
    get truth_mask() {
        const ret = wasm.__wbg_get_decomposition_truth_mask(this.__wbg_ptr);
        var v1 = getArrayF32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
    /**
     * @param {boolean} arg0
     */
    set converged(arg0) {
        wasm.__wbg_set_decomposition_converged(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set iterations(arg0) {
        wasm.__wbg_set_decomposition_iterations(this.__wbg_ptr, arg0);
    }
    /**
     * @param {Float64Array} arg0
     */
    set lambdas(arg0) {
        const ptr0 = passArrayF64ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_decomposition_lambdas(this.__wbg_ptr, ptr0, len0);
    }
    /**
     * @param {number} arg0
     */
    set low_rank_error(arg0) {
        wasm.__wbg_set_decomposition_low_rank_error(this.__wbg_ptr, arg0);
    }
    /**
     * @param {Float32Array} arg0
     */
    set low_rank(arg0) {
        const ptr0 = passArrayF32ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_decomposition_low_rank(this.__wbg_ptr, ptr0, len0);
    }
    /**
     * @param {number} arg0
     */
    set mean_solve_ms(arg0) {
        wasm.__wbg_set_decomposition_mean_solve_ms(this.__wbg_ptr, arg0);
    }
    /**
     * @param {Float32Array} arg0
     */
    set observed(arg0) {
        const ptr0 = passArrayF32ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_decomposition_observed(this.__wbg_ptr, ptr0, len0);
    }
    /**
     * @param {Float32Array} arg0
     */
    set sparse(arg0) {
        const ptr0 = passArrayF32ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_decomposition_sparse(this.__wbg_ptr, ptr0, len0);
    }
    /**
     * @param {number} arg0
     */
    set support_dice(arg0) {
        wasm.__wbg_set_decomposition_support_dice(this.__wbg_ptr, arg0);
    }
    /**
     * @param {Float32Array} arg0
     */
    set truth_mask(arg0) {
        const ptr0 = passArrayF32ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_decomposition_truth_mask(this.__wbg_ptr, ptr0, len0);
    }
}
if (Symbol.dispose) Decomposition.prototype[Symbol.dispose] = Decomposition.prototype.free;

export class Thresholding {
    static __wrap(ptr) {
        const obj = Object.create(Thresholding.prototype);
        obj.__wbg_ptr = ptr;
        ThresholdingFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        ThresholdingFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_thresholding_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get noisy_error() {
        const ret = wasm.__wbg_get_thresholding_noisy_error(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {Float32Array}
     */
    get noisy() {
        const ret = wasm.__wbg_get_thresholding_noisy(this.__wbg_ptr);
        var v1 = getArrayF32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
    /**
     * @returns {number}
     */
    get shrink_error() {
        const ret = wasm.__wbg_get_thresholding_shrink_error(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get shrink_nonzeros() {
        const ret = wasm.__wbg_get_thresholding_shrink_nonzeros(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {Float32Array}
     */
    get shrunk() {
        const ret = wasm.__wbg_get_thresholding_shrunk(this.__wbg_ptr);
        var v1 = getArrayF32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
    /**
     * @returns {number}
     */
    get svt_average_rank() {
        const ret = wasm.__wbg_get_thresholding_svt_average_rank(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get svt_error() {
        const ret = wasm.__wbg_get_thresholding_svt_error(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get svt_tubal_rank() {
        const ret = wasm.__wbg_get_thresholding_svt_tubal_rank(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {Float32Array}
     */
    get svt() {
        const ret = wasm.__wbg_get_thresholding_svt(this.__wbg_ptr);
        var v1 = getArrayF32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
    /**
     * @param {number} arg0
     */
    set noisy_error(arg0) {
        wasm.__wbg_set_thresholding_noisy_error(this.__wbg_ptr, arg0);
    }
    /**
     * @param {Float32Array} arg0
     */
    set noisy(arg0) {
        const ptr0 = passArrayF32ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_thresholding_noisy(this.__wbg_ptr, ptr0, len0);
    }
    /**
     * @param {number} arg0
     */
    set shrink_error(arg0) {
        wasm.__wbg_set_thresholding_shrink_error(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set shrink_nonzeros(arg0) {
        wasm.__wbg_set_thresholding_shrink_nonzeros(this.__wbg_ptr, arg0);
    }
    /**
     * @param {Float32Array} arg0
     */
    set shrunk(arg0) {
        const ptr0 = passArrayF32ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_thresholding_shrunk(this.__wbg_ptr, ptr0, len0);
    }
    /**
     * @param {number} arg0
     */
    set svt_average_rank(arg0) {
        wasm.__wbg_set_thresholding_svt_average_rank(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set svt_error(arg0) {
        wasm.__wbg_set_thresholding_svt_error(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set svt_tubal_rank(arg0) {
        wasm.__wbg_set_thresholding_svt_tubal_rank(this.__wbg_ptr, arg0);
    }
    /**
     * @param {Float32Array} arg0
     */
    set svt(arg0) {
        const ptr0 = passArrayF32ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_thresholding_svt(this.__wbg_ptr, ptr0, len0);
    }
}
if (Symbol.dispose) Thresholding.prototype[Symbol.dispose] = Thresholding.prototype.free;

/**
 * @param {number} seed
 * @param {number} segment_length
 * @returns {Comparison}
 */
export function compare_transforms(seed, segment_length) {
    const ret = wasm.compare_transforms(seed, segment_length);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return Comparison.__wrap(ret[0]);
}

/**
 * Decomposes a 4-volume phantom stack; returns volume 0 and summary numbers.
 * @param {number} seed
 * @param {number} drift
 * @param {number} sparse_fraction
 * @param {number} segment_length
 * @param {number} lambda
 * @param {string} transform
 * @returns {Decomposition}
 */
export function decompose_phantom(seed, drift, sparse_fraction, segment_length, lambda, transform) {
    const ptr0 = passStringToWasm0(transform, wasm.__wbindgen_malloc, wasm.__wbindgen_realloc);
    const len0 = WASM_VECTOR_LEN;
    const ret = wasm.decompose_phantom(seed, drift, sparse_fraction, segment_length, lambda, ptr0, len0);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return Decomposition.__wrap(ret[0]);
}

/**
 * @returns {Uint32Array}
 */
export function dims() {
    const ret = wasm.dims();
    var v1 = getArrayU32FromWasm0(ret[0], ret[1]).slice();
    wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
    return v1;
}

/**
 * @param {number} seed
 * @param {number} noise
 * @param {number} tau_svt
 * @param {number} tau_l1
 * @param {string} transform
 * @returns {Thresholding}
 */
export function threshold(seed, noise, tau_svt, tau_l1, transform) {
    const ptr0 = passStringToWasm0(transform, wasm.__wbindgen_malloc, wasm.__wbindgen_realloc);
    const len0 = WASM_VECTOR_LEN;
    const ret = wasm.threshold(seed, noise, tau_svt, tau_l1, ptr0, len0);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return Thresholding.__wrap(ret[0]);
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg_Error_30c8987f7c2ed4e2: function(arg0, arg1) {
            const ret = Error(getStringFromWasm0(arg0, arg1));
            return ret;
        },
        __wbg___wbindgen_is_undefined_8865fb403f8fe9d8: function(arg0) {
            const ret = arg0 === undefined;
            return ret;
        },
        __wbg___wbindgen_throw_41e9ee4f547fc59a: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbg_now_e7c6795a7f81e10f: function(arg0) {
            const ret = arg0.now();
            return ret;
        },
        __wbg_performance_3fcf6e32a7e1ed0a: function(arg0) {
            const ret = arg0.performance;
            return ret;
        },
        __wbg_static_accessor_GLOBAL_266715b9d96ba635: function() {
            const ret = typeof global === 'undefined' ? null : global;
            return isLikeNone(ret) ? 0 : addToExternrefTable0(ret);
        },
        __wbg_static_accessor_GLOBAL_THIS_10fb7dc1ae063179: function() {
            const ret = typeof globalThis === 'undefined' ? null : globalThis;
            return isLikeNone(ret) ? 0 : addToExternrefTable0(ret);
        },
        __wbg_static_accessor_SELF_0b583911f537483a: function() {
            const ret = typeof self === 'undefined' ? null : self;
            return isLikeNone(ret) ? 0 : addToExternrefTable0(ret);
        },
        __wbg_static_accessor_WINDOW_d7f903d1508cbdc4: function() {
            const ret = typeof window === 'undefined' ? null : window;
            return isLikeNone(ret) ? 0 : addToExternrefTable0(ret);
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./lrtd_wasm_demo_bg.js": import0,
    };
}

const ComparisonFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_comparison_free(ptr, 1));
const DecompositionFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_decomposition_free(ptr, 1));
const ThresholdingFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_thresholding_free(ptr, 1));

function addToExternrefTable0(obj) {
    const idx = wasm.__externref_table_alloc();
    wasm.__wbindgen_externrefs.set(idx, obj);
    return idx;
}

function getArrayF32FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat32ArrayMemory0().subarray(ptr / 4, ptr / 4 + len);
}

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

function getArrayU32FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getUint32ArrayMemory0().subarray(ptr / 4, ptr / 4 + len);
}

let cachedFloat32ArrayMemory0 = null;
function getFloat32ArrayMemory0() {
    if (cachedFloat32ArrayMemory0 === null || cachedFloat32ArrayMemory0.byteLength === 0) {
        cachedFloat32ArrayMemory0 = new Float32Array(wasm.memory.buffer);
    }
    return cachedFloat32ArrayMemory0;
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint32ArrayMemory0 = null;
function getUint32ArrayMemory0() {
    if (cachedUint32ArrayMemory0 === null || cachedUint32ArrayMemory0.byteLength === 0) {
        cachedUint32ArrayMemory0 = new Uint32Array(wasm.memory.buffer);
    }
    return cachedUint32ArrayMemory0;
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function isLikeNone(x) {
    return x === undefined || x === null;
}

function passArrayF32ToWasm0(arg, malloc) {
    const ptr = malloc(arg.length * 4, 4) >>> 0;
    getFloat32ArrayMemory0().set(arg, ptr / 4);
    WASM_VECTOR_LEN = arg.length;
    return ptr;
}

function passArrayF64ToWasm0(arg, malloc) {
    const ptr = malloc(arg.length * 8, 8) >>> 0;
    getFloat64ArrayMemory0().set(arg, ptr / 8);
    WASM_VECTOR_LEN = arg.length;
    return ptr;
}

function passStringToWasm0(arg, malloc, realloc) {
    if (realloc === undefined) {
        const buf = cachedTextEncoder.encode(arg);
        const ptr = malloc(buf.length, 1) >>> 0;
        getUint8ArrayMemory0().subarray(ptr, ptr + buf.length).set(buf);
        WASM_VECTOR_LEN = buf.length;
        return ptr;
    }

    let len = arg.length;
    let ptr = malloc(len, 1) >>> 0;

    const mem = getUint8ArrayMemory0();

    let offset = 0;

    for (; offset < len; offset++) {
        const code = arg.charCodeAt(offset);
        if (code > 0x7F) break;
        mem[ptr + offset] = code;
    }
    if (offset !== len) {
        if (offset !== 0) {
            arg = arg.slice(offset);
        }
        ptr = realloc(ptr, len, len = offset + arg.length * 3, 1) >>> 0;
        const view = getUint8ArrayMemory0().subarray(ptr + offset, ptr + len);
        const ret = cachedTextEncoder.encodeInto(arg, view);

        offset += ret.written;
        ptr = realloc(ptr, len, offset, 1) >>> 0;
    }

    WASM_VECTOR_LEN = offset;
    return ptr;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

const cachedTextEncoder = new TextEncoder();

if (!('encodeInto' in cachedTextEncoder)) {
    cachedTextEncoder.encodeInto = function (arg, view) {
        const buf = cachedTextEncoder.encode(arg);
        view.set(buf);
        return {
            read: arg.length,
            written: buf.length
        };
    };
}

let WASM_VECTOR_LEN = 0;

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat32ArrayMemory0 = null;
    cachedFloat64ArrayMemory0 = null;
    cachedUint32ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('lrtd_wasm_demo_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
