/** Spectrum chart model: port-to-port transmission in dB over wavelength. */

import { SpectrumDoc, spectrumSchema } from "./types.js";

export interface Series {
  label: string; // "C1:o1 -> C1:o3"
  wavelengths: number[];
  magDb: number[];
}

export function parseSpectrum(doc: unknown): SpectrumDoc {
  return spectrumSchema.parse(doc);
}

const FLOOR_DB = -120;

export function toSeries(doc: SpectrumDoc): Series[] {
  const series: Series[] = [];
  for (const [pair, resp] of Object.entries(doc.responses).sort()) {
    const [from, to] = pair.split("->");
    if (from === to) continue; // reflections stay out of the default chart
    const magDb = resp.real.map((re, i) => {
      const mag = Math.hypot(re, resp.imag[i]!);
      return mag > 0 ? Math.max(20 * Math.log10(mag), FLOOR_DB) : FLOOR_DB;
    });
    series.push({
      label: `${from} -> ${to}`,
      wavelengths: doc.wavelengths_um,
      magDb,
    });
  }
  return series;
}

/** Round-number axis ticks covering [min, max] with about `count` steps. */
export function niceTicks(min: number, max: number, count = 5): number[] {
  if (!(max > min)) return [min];
  const rawStep = (max - min) / count;
  const magnitude = 10 ** Math.floor(Math.log10(rawStep));
  const residual = rawStep / magnitude;
  const step = (residual >= 5 ? 5 : residual >= 2 ? 2 : 1) * magnitude;
  const start = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= max + 1e-12; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

/** Map one series into polyline pixel coordinates for a w x h chart area. */
export function seriesToPolyline(
  s: Series,
  width: number,
  height: number,
  dbMin = -60,
  dbMax = 0,
): Array<[number, number]> {
  const lamMin = Math.min(...s.wavelengths);
  const lamMax = Math.max(...s.wavelengths);
  const spanLam = Math.max(lamMax - lamMin, 1e-12);
  const spanDb = Math.max(dbMax - dbMin, 1e-12);
  return s.wavelengths.map((lam, i) => {
    const x = ((lam - lamMin) / spanLam) * width;
    const clamped = Math.min(Math.max(s.magDb[i]!, dbMin), dbMax);
    const y = height - ((clamped - dbMin) / spanDb) * height;
    return [x, y];
  });
}
