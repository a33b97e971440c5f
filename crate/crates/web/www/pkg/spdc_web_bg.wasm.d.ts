/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const angular_profile: (a: number, b: number, c: number) => [number, number, number, number];
export const pair_state: (a: number) => [number, number, number, number];
export const shg_pattern: (a: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
