/** Linear and log10 axis scales with deterministic tick placement. */

export interface Scale {
  map(value: number): number;
  ticks(): number[];
  domain: [number, number];
}

function niceStep(span: number, target: number): number {
  const raw = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
}

export function linearScale(
  lo: number,
  hi: number,
  rangeLo: number,
  rangeHi: number,
): Scale {
  if (!(hi > lo)) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * 0.1;
    hi = lo + pad;
    lo = lo - pad;
  }
  const step = niceStep(hi - lo, 6);
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-12 * step; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return {
    domain: [lo, hi],
    map: (v) => rangeLo + ((v - lo) / (hi - lo)) * (rangeHi - rangeLo),
    ticks: () => ticks,
  };
}

export function logScale(
  lo: number,
  hi: number,
  rangeLo: number,
  rangeHi: number,
): Scale {
  if (!(lo > 0)) throw new Error(`log scale needs positive domain, got ${lo}`);
  if (!(hi > lo)) hi = lo * 10;
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const ticks: number[] = [];
  const first = Math.ceil(llo - 1e-12);
  for (let e = first; e <= lhi + 1e-12; e++) {
    ticks.push(Math.pow(10, e));
  }
  if (ticks.length < 2) {
    // less than one decade: fall back to 1-2-5 mantissa ticks
    ticks.length = 0;
    for (let e = Math.floor(llo); e <= Math.ceil(lhi); e++) {
      for (const m of [1, 2, 5]) {
        const v = m * Math.pow(10, e);
        if (v >= lo && v <= hi) ticks.push(v);
      }
    }
  }
  return {
    domain: [lo, hi],
    map: (v) => rangeLo + ((Math.log10(v) - llo) / (lhi - llo)) * (rangeHi - rangeLo),
    ticks: () => ticks,
  };
}

export function tickLabel(value: number): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1e4 || abs < 1e-3) {
    return value.toExponential(0).replace("+", "");
  }
  const text = value.toPrecision(6);
  return text.includes(".") ? text.replace(/\.?0+$/, "") : text;
}
