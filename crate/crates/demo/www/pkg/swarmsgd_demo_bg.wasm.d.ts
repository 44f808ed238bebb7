/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const bound_scan_json: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const graph_json: (a: number, b: number, c: number) => [number, number];
export const race_json: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const __externref_table_alloc: () => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
