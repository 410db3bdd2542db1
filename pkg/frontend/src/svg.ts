/** Minimal deterministic SVG chart primitives (no DOM, no canvas). */

export interface Scale {
  (value: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  return fn;
}

export function extent(values: number[], pad = 0.05): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const margin = (hi - lo) * pad;
  return [lo - margin, hi + margin];
}

export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  const rawStep = (hi - lo) / count;
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const step = [1, 2, 5, 10].map((m) => m * power).find((s) => (hi - lo) / s <= count) ?? rawStep;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += step) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

function fmt(value: number): string {
  if (Math.abs(value) >= 1000 || (value !== 0 && Math.abs(value) < 0.01)) {
    return value.toExponential(1);
  }
  return Number(value.toPrecision(4)).toString();
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

export interface Panel {
  x0: number;
  y0: number;
  width: number;
  height: number;
  xScale: Scale;
  yScale: Scale;
}

export function panel(x0: number, y0: number, width: number, height: number, xDomain: [number, number], yDomain: [number, number]): Panel {
  return {
    x0,
    y0,
    width,
    height,
    xScale: linearScale(xDomain, [x0, x0 + width]),
    yScale: linearScale(yDomain, [y0 + height, y0]),
  };
}

export function axes(p: Panel, xLabel: string, yLabel: string): string {
  const parts: string[] = [];
  parts.push(`<rect x="${p.x0}" y="${p.y0}" width="${p.width}" height="${p.height}" fill="none" stroke="#333"/>`);
  for (const t of ticks(p.xScale.domain)) {
    const x = p.xScale(t);
    parts.push(`<line x1="${x.toFixed(2)}" y1="${p.y0 + p.height}" x2="${x.toFixed(2)}" y2="${p.y0 + p.height + 5}" stroke="#333"/>`);
    parts.push(`<text x="${x.toFixed(2)}" y="${p.y0 + p.height + 18}" font-size="11" text-anchor="middle">${fmt(t)}</text>`);
  }
  for (const t of ticks(p.yScale.domain)) {
    const y = p.yScale(t);
    parts.push(`<line x1="${p.x0 - 5}" y1="${y.toFixed(2)}" x2="${p.x0}" y2="${y.toFixed(2)}" stroke="#333"/>`);
    parts.push(`<text x="${p.x0 - 8}" y="${(y + 4).toFixed(2)}" font-size="11" text-anchor="end">${fmt(t)}</text>`);
    parts.push(`<line x1="${p.x0}" y1="${y.toFixed(2)}" x2="${p.x0 + p.width}" y2="${y.toFixed(2)}" stroke="#ddd" stroke-dasharray="3,3"/>`);
  }
  parts.push(
    `<text x="${p.x0 + p.width / 2}" y="${p.y0 + p.height + 36}" font-size="13" text-anchor="middle">${xLabel}</text>`,
  );
  parts.push(
    `<text x="${p.x0 - 48}" y="${p.y0 + p.height / 2}" font-size="13" text-anchor="middle" transform="rotate(-90 ${p.x0 - 48} ${p.y0 + p.height / 2})">${yLabel}</text>`,
  );
  return parts.join("\n");
}

export function polyline(p: Panel, xs: number[], ys: number[], color: string, width = 1.5): string {
  const points = xs.map((x, i) => `${p.xScale(x).toFixed(2)},${p.yScale(ys[i]).toFixed(2)}`).join(" ");
  return `<polyline points="${points}" fill="none" stroke="${color}" stroke-width="${width}"/>`;
}

export function markers(p: Panel, xs: number[], ys: number[], color: string, r = 3): string {
  return xs
    .map((x, i) => `<circle cx="${p.xScale(x).toFixed(2)}" cy="${p.yScale(ys[i]).toFixed(2)}" r="${r}" fill="${color}"/>`)
    .join("\n");
}

export function legend(x: number, y: number, entries: [string, string][]): string {
  return entries
    .map(([label, color], i) => {
      const yy = y + i * 18;
      return (
        `<line x1="${x}" y1="${yy}" x2="${x + 24}" y2="${yy}" stroke="${color}" stroke-width="2"/>` +
        `<text x="${x + 30}" y="${yy + 4}" font-size="12">${label}</text>`
      );
    })
    .join("\n");
}

export function document(width: number, height: number, title: string, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    `<text x="${width / 2}" y="20" font-size="14" text-anchor="middle" font-weight="bold">${title}</text>`,
    body,
    "</svg>",
    "",
  ].join("\n");
}
