export * from './types.ts';
export * from './client.ts';
export * from './render.ts';
export * from './compare.ts';
export * from './workbench.ts';
