import { CsvContractError, loadCsv, numeric, Table } from "./csv";
import { axes, document, extent, legend, markers, PALETTE, panel, polyline } from "./svg";

export type FigureKind = "trajectories" | "roa_vs_mass" | "time_and_roa_vs_grid" | "roa_regions";

export const KINDS: FigureKind[] = ["trajectories", "roa_vs_mass", "time_and_roa_vs_grid", "roa_regions"];

// Fixed output dimensions per figure kind.
const SIZES: Record<FigureKind, [number, number]> = {
  trajectories: [800, 500],
  roa_vs_mass: [700, 450],
  time_and_roa_vs_grid: [1200, 450],
  roa_regions: [700, 560],
};

function groupBy(table: Table, column: string): Map<string, number[]> {
  const groups = new Map<string, number[]>();
  table.rows.forEach((row, i) => {
    const key = row[column];
    if (!groups.has(key)) {
      groups.set(key, []);
    }
    groups.get(key)!.push(i);
  });
  return groups;
}

function renderTrajectories(path: string): string {
  const table = loadCsv(path, ["time_s", "state_*", "input", "controller"]);
  const [width, height] = SIZES.trajectories;
  const t = numeric(table, "time_s");
  const angle = numeric(table, "state_0");
  const p = panel(70, 40, width - 110, height - 110, extent(t, 0), extent(angle));
  const groups = [...groupBy(table, "controller").entries()];
  const curves = groups
    .map(([label, idx], i) =>
      polyline(
        p,
        idx.map((j) => t[j]),
        idx.map((j) => angle[j]),
        PALETTE[i % PALETTE.length],
      ),
    )
    .join("\n");
  const key = legend(
    p.x0 + p.width - 120,
    p.y0 + 16,
    groups.map(([label], i) => [label, PALETTE[i % PALETTE.length]] as [string, string]),
  );
  const body = axes(p, "time [s]", "angular position [rad]") + "\n" + curves + "\n" + key;
  return document(width, height, "Closed-loop recovery trajectories", body);
}

function renderRoaVsMass(path: string): string {
  const table = loadCsv(path, ["mass_kg", "roa_cells"]);
  const [width, height] = SIZES.roa_vs_mass;
  const mass = numeric(table, "mass_kg");
  const cells = numeric(table, "roa_cells");
  const p = panel(80, 40, width - 120, height - 110, extent(mass), extent(cells));
  const body =
    axes(p, "pendulum mass [kg]", "certified ROA [cells]") +
    "\n" +
    polyline(p, mass, cells, PALETTE[0]) +
    "\n" +
    markers(p, mass, cells, PALETTE[0]);
  return document(width, height, "Certified ROA versus pendulum mass", body);
}

function renderGridSweep(path: string): string {
  const table = loadCsv(path, ["points_per_dim", "roa_cells", "seconds"]);
  const [width, height] = SIZES.time_and_roa_vs_grid;
  const points = numeric(table, "points_per_dim");
  const cells = numeric(table, "roa_cells");
  const seconds = numeric(table, "seconds");
  const left = panel(80, 40, width / 2 - 140, height - 110, extent(points), extent(seconds));
  const right = panel(width / 2 + 80, 40, width / 2 - 140, height - 110, extent(points), extent(cells));
  const body = [
    axes(left, "grid points per dimension", "certification time [s]"),
    polyline(left, points, seconds, PALETTE[1]),
    markers(left, points, seconds, PALETTE[1]),
    axes(right, "grid points per dimension", "certified ROA [cells]"),
    polyline(right, points, cells, PALETTE[0]),
    markers(right, points, cells, PALETTE[0]),
  ].join("\n");
  return document(width, height, "Certification cost and certified size versus grid resolution", body);
}

function renderRoaRegions(path: string): string {
  const table = loadCsv(path, ["controller", "state_*", "certified"]);
  if ("state_2" in table.rows[0]) {
    throw new CsvContractError(`${path}: region plots need a 2-D state space, found column 'state_2'`);
  }
  const [width, height] = SIZES.roa_regions;
  const x = numeric(table, "state_0");
  const y = numeric(table, "state_1");
  const certified = numeric(table, "certified");
  const p = panel(80, 40, width - 120, height - 130, extent(x, 0.02), extent(y, 0.02));

  // cell size from the lattice spacing
  const spacing = (values: number[]) => {
    const uniq = [...new Set(values)].sort((a, b) => a - b);
    return uniq.length > 1 ? uniq[1] - uniq[0] : 1;
  };
  const dx = Math.abs(p.xScale(spacing(x)) - p.xScale(0));
  const dy = Math.abs(p.yScale(spacing(y)) - p.yScale(0));

  const groups = [...groupBy(table, "controller").entries()];
  const cellsMarkup = groups
    .map(([label, idx], g) => {
      const color = PALETTE[g % PALETTE.length];
      const rects = idx
        .filter((j) => certified[j] > 0)
        .map((j) => {
          const cx = p.xScale(x[j]) - dx / 2;
          const cy = p.yScale(y[j]) - dy / 2;
          return `<rect x="${cx.toFixed(2)}" y="${cy.toFixed(2)}" width="${dx.toFixed(2)}" height="${dy.toFixed(2)}" fill="${color}" fill-opacity="0.5"/>`;
        })
        .join("\n");
      return rects;
    })
    .join("\n");
  const key = legend(
    p.x0,
    p.y0 + p.height + 52,
    groups.map(([label], g) => [label, PALETTE[g % PALETTE.length]] as [string, string]),
  );
  const body = cellsMarkup + "\n" + axes(p, "state 0", "state 1") + "\n" + key;
  return document(width, height, "Certified region of attraction", body);
}

const RENDERERS: Record<FigureKind, (path: string) => string> = {
  trajectories: renderTrajectories,
  roa_vs_mass: renderRoaVsMass,
  time_and_roa_vs_grid: renderGridSweep,
  roa_regions: renderRoaRegions,
};

export function render(kind: FigureKind, inputPath: string): string {
  const renderer = RENDERERS[kind];
  if (!renderer) {
    throw new CsvContractError(`unknown figure kind '${kind}'; choose from ${KINDS.join(", ")}`);
  }
  return renderer(inputPath);
}

export function expectedSize(kind: FigureKind): [number, number] {
  return SIZES[kind];
}
