import { mkdtempSync, readFileSync, writeFileSync, existsSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { CsvContractError } from "../src/csv";
import { expectedSize, FigureKind, KINDS, render } from "../src/figures";
import { main } from "../src/cli";

const GOLDEN: Record<FigureKind, string> = {
  trajectories: "trajectories.csv",
  roa_vs_mass: "mass_sweep.csv",
  time_and_roa_vs_grid: "grid_sweep.csv",
  roa_regions: "roa.csv",
};

const testdata = (name: string) => join(__dirname, "..", "testdata", name);

function permuteHeader(source: string, dir: string): string {
  const lines = readFileSync(source, "utf8").replace(/\r/g, "").split("\n");
  const columns = lines[0].split(",");
  lines[0] = [...columns.slice(1), columns[0]].join(",");
  const out = join(dir, "permuted.csv");
  writeFileSync(out, lines.join("\n"));
  return out;
}

describe.each(KINDS)("figure kind %s", (kind) => {
  it("renders its golden CSV to a deterministic SVG", () => {
    const svg = render(kind, testdata(GOLDEN[kind]));
    const [width, height] = expectedSize(kind);
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(svg).toContain(`width="${width}"`);
    expect(svg).toContain(`height="${height}"`);
    expect(render(kind, testdata(GOLDEN[kind]))).toEqual(svg);
  });

  it("fails loudly on a permuted header, naming the column", () => {
    const dir = mkdtempSync(join(tmpdir(), "roaforge-plots-"));
    const permuted = permuteHeader(testdata(GOLDEN[kind]), dir);
    expect(() => render(kind, permuted)).toThrowError(CsvContractError);
    expect(() => render(kind, permuted)).toThrowError(/column '/);
  });
});

describe("legend content", () => {
  it("labels each controller once on the trajectory overlay", () => {
    const svg = render("trajectories", testdata("trajectories.csv"));
    for (const label of ["K_LQR", "K_O", "K_max"]) {
      expect(svg.split(`>${label}<`).length).toBe(2);
    }
  });

  it("draws one marker per mass row", () => {
    const svg = render("roa_vs_mass", testdata("mass_sweep.csv"));
    expect(svg.match(/<circle /g)?.length).toBe(4);
  });
});

describe("cli entry", () => {
  it("writes an image and returns zero on the happy path", () => {
    const dir = mkdtempSync(join(tmpdir(), "roaforge-plots-"));
    const out = join(dir, "figure.svg");
    const code = main(["--kind", "roa_vs_mass", "--in", testdata("mass_sweep.csv"), "--out", out]);
    expect(code).toBe(0);
    expect(existsSync(out)).toBe(true);
  });

  it("exits nonzero without writing on a header-only CSV", () => {
    const dir = mkdtempSync(join(tmpdir(), "roaforge-plots-"));
    const empty = join(dir, "empty.csv");
    writeFileSync(empty, "mass_kg,roa_cells\n");
    const out = join(dir, "never.svg");
    const code = main(["--kind", "roa_vs_mass", "--in", empty, "--out", out]);
    expect(code).toBe(1);
    expect(existsSync(out)).toBe(false);
  });

  it("rejects unknown kinds", () => {
    const code = main(["--kind", "pie", "--in", testdata("mass_sweep.csv"), "--out", "x.svg"]);
    expect(code).toBe(1);
  });

  it("rejects a missing input file", () => {
    const code = main(["--kind", "roa_vs_mass", "--in", "no-such.csv", "--out", "x.svg"]);
    expect(code).toBe(1);
  });

  it("rejects a 3-D region CSV naming the extra column", () => {
    const dir = mkdtempSync(join(tmpdir(), "roaforge-plots-"));
    const path = join(dir, "roa3d.csv");
    writeFileSync(path, "controller,state_0,state_1,state_2,certified\nK_LQR,0,0,0,1\n");
    const code = main(["--kind", "roa_regions", "--in", path, "--out", join(dir, "x.svg")]);
    expect(code).toBe(1);
  });
});
