/* tslint:disable */
/* eslint-disable */

/**
 * Monotone front of the marginal kernel.
 */
export class Front {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Index of the cell where `φ = θ`.
     */
    pin(): number;
    spacing(): number;
    speed(): number;
    values(): Float64Array;
}

/**
 * A two-dimensional problem and a field being relaxed on it.
 */
export class Scene {
    free(): void;
    [Symbol.dispose](): void;
    convex(): boolean;
    /**
     * Current field, NaN on the obstacle.
     */
    field(): Float64Array;
    /**
     * Cells along the second axis.
     */
    height(): number;
    /**
     * `𝒥(x)`, NaN on the obstacle.
     */
    mass_map(): Float64Array;
    min_mass(): number;
    min_u(): number;
    /**
     * Builds the problem from INI text; `initial` is `hostile`, `ones` or `counterexample`.
     */
    constructor(config: string, initial: string);
    /**
     * Advances `n` explicit steps and returns the residual before the last one.
     */
    relax(n: number): number;
    steps(): number;
    /**
     * Cells along the first axis.
     */
    width(): number;
}

export function front(config: string): Front;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_front_free: (a: number, b: number) => void;
    readonly __wbg_scene_free: (a: number, b: number) => void;
    readonly front: (a: number, b: number) => [number, number, number];
    readonly front_pin: (a: number) => number;
    readonly front_spacing: (a: number) => number;
    readonly front_speed: (a: number) => number;
    readonly front_values: (a: number) => [number, number];
    readonly scene_convex: (a: number) => number;
    readonly scene_field: (a: number) => [number, number];
    readonly scene_height: (a: number) => number;
    readonly scene_mass_map: (a: number) => [number, number];
    readonly scene_min_mass: (a: number) => number;
    readonly scene_min_u: (a: number) => number;
    readonly scene_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly scene_relax: (a: number, b: number) => [number, number, number];
    readonly scene_steps: (a: number) => number;
    readonly scene_width: (a: number) => number;
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
