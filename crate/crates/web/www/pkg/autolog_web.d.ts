/* tslint:disable */
/* eslint-disable */

export class Session {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Rolling evaluation over the last `holdout` slices, reusing the grid
     * of the last `fit_path` call.
     */
    evaluate(holdout: number): string;
    /**
     * Fits `count` log-spaced penalties from `lambda_max / 20` up to
     * `lambda_max` and keeps the BIC choice.
     */
    fit_path(count: number): string;
    /**
     * Simulates `slices` networks on `n` nodes.
     */
    constructor(n: number, slices: number, seed: bigint);
    series(): string;
    /**
     * Nonzero slope count per pair at the selected penalty, against the
     * true count.
     */
    sparsity(): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_session_free: (a: number, b: number) => void;
    readonly session_evaluate: (a: number, b: number) => [number, number, number, number];
    readonly session_fit_path: (a: number, b: number) => [number, number, number, number];
    readonly session_new: (a: number, b: number, c: bigint) => [number, number, number];
    readonly session_series: (a: number) => [number, number, number, number];
    readonly session_sparsity: (a: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
