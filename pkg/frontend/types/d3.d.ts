// Local typings for the two d3 modules in use; the runtime packages ship
// none, and only the surface below is called.
declare module "d3-scale" {
  export interface ScaleLinear<R, O> {
    (value: number): O;
    domain(d: number[]): this;
    domain(): number[];
    range(r: R[]): this;
    range(): R[];
    ticks(count?: number): number[];
  }
  export function scaleLinear(): ScaleLinear<number, number>;
}

declare module "d3-shape" {
  export interface Line<D> {
    (data: Iterable<D>): string | null;
    x(fn: (d: D) => number): this;
    y(fn: (d: D) => number): this;
    curve(c: unknown): this;
  }
  export function line<D = [number, number]>(): Line<D>;
  export const curveStepAfter: unknown;
}
