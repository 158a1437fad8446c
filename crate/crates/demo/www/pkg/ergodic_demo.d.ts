/* tslint:disable */
/* eslint-disable */

/**
 * Greedy decomposition of the orbit of point `x` of a finite system file,
 * with its certificate and tail bound. `lambda` is one rational or a comma list.
 */
export function decompose_system(system_json: string, x: number, n: number, m: number, lambda: string): string;

/**
 * Monte Carlo `∫_{f*_N > λ} (f - λ)` for `cos 2πx` under the rotation by `alpha`.
 */
export function maximal_mc(alpha: number, lambda: number, n: number, samples: number, seed: bigint): string;

/**
 * `A_k cos 2πx (x0)` for the rotation by `alpha`, sampled at up to `points`
 * log-spaced `k`, with the envelope `1 / (k sin πα)`.
 */
export function rotation_series(alpha: number, x0: number, k_max: number, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly decompose_system: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly maximal_mc: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly rotation_series: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
