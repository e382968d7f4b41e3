/** Thin a series to at most maxPoints for drawing. Keeps the first and
 *  last points and samples evenly in between, so the drawn shape spans the
 *  same x-range as the data; exports elsewhere stay full resolution. */
export function decimate<T>(points: readonly T[], maxPoints: number): T[] {
  if (maxPoints < 2) {
    throw new Error("maxPoints must be at least 2");
  }
  const n = points.length;
  if (n <= maxPoints) {
    return points.slice();
  }
  const out: T[] = new Array(maxPoints);
  const step = (n - 1) / (maxPoints - 1);
  for (let i = 0; i < maxPoints; i++) {
    out[i] = points[Math.round(i * step)] as T;
  }
  out[maxPoints - 1] = points[n - 1] as T;
  return out;
}
