/* tslint:disable */
/* eslint-disable */

/**
 * Simulate BTL comparisons on a complete graph and release a private top-k.
 * Returns `{tau1, refused}` instead when the graph is not rho-constrained.
 */
export function private_rank(omega: string, comparisons: number, k: number, epsilon: number, delta: number, rho: number, seed: number): string;

/**
 * `{sets, exact, empirical}` for the oneshot mechanism on comma-separated counts.
 */
export function selection_distribution(x: string, k: number, lambda: number, trials: number, seed: number): string;

/**
 * `{gaps, p}`: the exact-recovery lower bound over `points` gaps in [0, max_gap].
 */
export function utility_curve(m: number, lambda: number, max_gap: number, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly private_rank: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly selection_distribution: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly utility_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
