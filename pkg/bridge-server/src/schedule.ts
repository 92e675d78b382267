/** Variance schedule shared with the client during INIT. */

export interface Schedule {
  T: number;
  /** beta[t] for t = 1..T (length T; no boundary row here). */
  beta: Float64Array;
  /** alphaBar[t] for t = 0..T, with alphaBar[0] = 1. */
  alphaBar: Float64Array;
}

export function linearSchedule(T: number, betaStart = 1e-4, betaEnd = 0.02): Schedule {
  if (!Number.isInteger(T) || T < 1) throw new RangeError(`T must be a positive integer, got ${T}`);
  if (!(betaStart > 0 && betaStart <= betaEnd && betaEnd < 1)) {
    throw new RangeError(`need 0 < betaStart <= betaEnd < 1, got (${betaStart}, ${betaEnd})`);
  }
  const beta = new Float64Array(T);
  for (let i = 0; i < T; i++) {
    beta[i] = T === 1 ? betaStart : betaStart + ((betaEnd - betaStart) * i) / (T - 1);
  }
  const alphaBar = new Float64Array(T + 1);
  alphaBar[0] = 1;
  for (let t = 1; t <= T; t++) alphaBar[t] = alphaBar[t - 1] * (1 - beta[t - 1]);
  return { T, beta, alphaBar };
}
