/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_playground_free: (a: number, b: number) => void;
export const playground_fitted_interactions: (a: number, b: number) => [number, number, number, number];
export const playground_game_ids: (a: number) => [number, number];
export const playground_lambda_sweep: (a: number, b: number, c: number) => [number, number, number, number];
export const playground_like_count: (a: number) => number;
export const playground_mvn_scores: (a: number, b: number, c: number) => [number, number, number, number];
export const playground_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: bigint) => [number, number, number];
export const playground_planted_interactions: (a: number) => [number, number];
export const playground_question_count: (a: number) => number;
export const playground_random_ndcg: (a: number) => [number, number, number];
export const playground_tag_count: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
