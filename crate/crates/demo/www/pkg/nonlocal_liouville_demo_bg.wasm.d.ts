/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_front_free: (a: number, b: number) => void;
export const __wbg_scene_free: (a: number, b: number) => void;
export const front: (a: number, b: number) => [number, number, number];
export const front_pin: (a: number) => number;
export const front_spacing: (a: number) => number;
export const front_speed: (a: number) => number;
export const front_values: (a: number) => [number, number];
export const scene_convex: (a: number) => number;
export const scene_field: (a: number) => [number, number];
export const scene_height: (a: number) => number;
export const scene_mass_map: (a: number) => [number, number];
export const scene_min_mass: (a: number) => number;
export const scene_min_u: (a: number) => number;
export const scene_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const scene_relax: (a: number, b: number) => [number, number, number];
export const scene_steps: (a: number) => number;
export const scene_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
