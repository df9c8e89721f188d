/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_session_free: (a: number, b: number) => void;
export const session_evaluate: (a: number, b: number) => [number, number, number, number];
export const session_fit_path: (a: number, b: number) => [number, number, number, number];
export const session_new: (a: number, b: number, c: bigint) => [number, number, number];
export const session_series: (a: number) => [number, number, number, number];
export const session_sparsity: (a: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
