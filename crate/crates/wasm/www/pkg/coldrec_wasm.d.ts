/* tslint:disable */
/* eslint-disable */

export class Playground {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Fitted interaction matrix, tags × questions, row-major.
     */
    fitted_interactions(lambda: number): Float64Array;
    /**
     * Training game IDs, in the order `mvn_scores` uses.
     */
    game_ids(): string[];
    /**
     * nDCG on new players and new games for each ridge penalty.
     */
    lambda_sweep(lambdas: Float64Array): Float64Array;
    /**
     * Conditional mean of every training game given the liked ones.
     */
    mvn_scores(liked: Uint32Array): Float64Array;
    /**
     * Generates a dataset and splits it with the default fractions.
     */
    constructor(n: number, m: number, r: number, s: number, density: number, rank: number, noise: number, seed: bigint);
    /**
     * Planted interaction matrix, tags × questions, row-major.
     */
    planted_interactions(): Float64Array;
    /**
     * nDCG of the random baseline on new players and new games.
     */
    random_ndcg(): number;
    readonly like_count: number;
    readonly question_count: number;
    readonly tag_count: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_playground_free: (a: number, b: number) => void;
    readonly playground_fitted_interactions: (a: number, b: number) => [number, number, number, number];
    readonly playground_game_ids: (a: number) => [number, number];
    readonly playground_lambda_sweep: (a: number, b: number, c: number) => [number, number, number, number];
    readonly playground_like_count: (a: number) => number;
    readonly playground_mvn_scores: (a: number, b: number, c: number) => [number, number, number, number];
    readonly playground_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: bigint) => [number, number, number];
    readonly playground_planted_interactions: (a: number) => [number, number];
    readonly playground_question_count: (a: number) => number;
    readonly playground_random_ndcg: (a: number) => [number, number, number];
    readonly playground_tag_count: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
