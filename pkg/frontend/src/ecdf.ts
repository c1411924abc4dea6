/**
 * Weighted empirical CDFs and the two-sample KS distance.
 *
 * The overlay figure annotates its two curves with their KS distance;
 * that number is the overlay's own caption, computed from the two input
 * files, never a re-derivation of anything the simulator wrote.
 */

export interface StepCurve {
  /** Sorted jump locations. */
  x: number[];
  /** CDF value just after each jump; last entry is 1. */
  F: number[];
}

/** Right-continuous weighted ECDF as a step curve, ties merged. */
export function ecdf(values: number[], weights?: number[]): StepCurve {
  const n = values.length;
  if (n === 0) throw new Error("ecdf of an empty sample");
  const w = weights ?? values.map(() => 1);
  if (w.length !== n) throw new Error("one weight per value");
  const idx = values.map((_, i) => i).sort((a, b) => values[a] - values[b]);
  let total = 0;
  for (const wi of w) {
    if (!(wi >= 0)) throw new Error("weights must be nonnegative");
    total += wi;
  }
  if (total <= 0) throw new Error("weights sum to zero");
  const x: number[] = [];
  const F: number[] = [];
  let acc = 0;
  for (const i of idx) {
    acc += w[i];
    const v = values[i];
    if (x.length > 0 && x[x.length - 1] === v) {
      F[F.length - 1] = acc / total;
    } else {
      x.push(v);
      F.push(acc / total);
    }
  }
  F[F.length - 1] = 1;
  return { x, F };
}

function valueAt(curve: StepCurve, t: number): number {
  // rightmost jump location <= t, by binary search
  let lo = 0;
  let hi = curve.x.length;
  while (lo < hi) {
    const mid = (lo + hi) >> 1;
    if (curve.x[mid] <= t) lo = mid + 1;
    else hi = mid;
  }
  return lo === 0 ? 0 : curve.F[lo - 1];
}

/** sup |F_a - F_b| over the union of jump locations. */
export function ksDistance(a: StepCurve, b: StepCurve): number {
  let ks = 0;
  for (const t of a.x) ks = Math.max(ks, Math.abs(valueAt(a, t) - valueAt(b, t)));
  for (const t of b.x) ks = Math.max(ks, Math.abs(valueAt(a, t) - valueAt(b, t)));
  return ks;
}
