/* tslint:disable */
/* eslint-disable */

/**
 * Embeds `n` synthetic digits; returns `[x0, y0, x1, y1, ...]`.
 */
export function embed_digits(method: string, n: number, data_seed: bigint, seed: bigint): Float64Array;

/**
 * Pixels of digit `index` after Gaussian noise with standard deviation
 * `sigma` on the `[0, 1]` scale, clamped back into range.
 */
export function noisy_digit(index: number, sigma: number, noise_seed: bigint, data_seed: bigint): Float64Array;

/**
 * Position of digit 0 across `runs` reducer seeds; `[x, y]` per run.
 */
export function seed_spread(method: string, n: number, runs: number, data_seed: bigint): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly embed_digits: (a: number, b: number, c: number, d: bigint, e: bigint) => [number, number, number, number];
    readonly noisy_digit: (a: number, b: number, c: bigint, d: bigint) => [number, number, number, number];
    readonly seed_spread: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
