import { execFileSync, spawnSync } from "child_process";
import { mkdtempSync, readFileSync, statSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { beforeAll, describe, expect, it } from "vitest";

import { FIGURE_KINDS } from "../src/figures.js";

let dir: string;

beforeAll(() => {
  execFileSync("npx", ["tsc"], { cwd: "." });
  dir = mkdtempSync(join(tmpdir(), "figures-"));
});

function run(args: string[]) {
  return spawnSync("node", ["dist/cli.js", ...args], { encoding: "utf8" });
}

describe("render CLI", () => {
  it("emits every figure kind with nonzero size", () => {
    for (const kind of FIGURE_KINDS) {
      const input = kind === "trace"
        ? "fixtures/trace.csv"
        : kind.includes("tau") ? "fixtures/metrics_tests.csv"
          : "fixtures/metrics_fwcid.csv";
      const out = join(dir, `${kind}.svg`);
      const res = run(["--kind", kind, "--in", input, "--out", out]);
      expect(res.status, res.stderr).toBe(0);
      expect(statSync(out).size).toBeGreaterThan(500);
    }
  });

  it("schema mismatch exits 1 with column diagnostics", () => {
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "a,b,c\n1,2,3\n");
    const res = run(["--kind", "coverage_vs_d", "--in", bad,
                     "--out", join(dir, "x.svg")]);
    expect(res.status).toBe(1);
    expect(res.stderr).toContain("missing column");
    expect(res.stderr).toContain("dgp");
  });

  it("usage errors exit 2", () => {
    expect(run([]).status).toBe(2);
    expect(run(["--kind", "pie_chart", "--in", "fixtures/trace.csv",
                "--out", join(dir, "x.svg")]).status).toBe(2);
    expect(run(["--kind", "trace", "--in", join(dir, "missing.csv"),
                "--out", join(dir, "x.svg")]).status).toBe(2);
  });

  it("reproduces the checked-in trace fixture byte for byte", () => {
    const out = join(dir, "trace_regen.svg");
    const res = run(["--kind", "trace", "--in", "fixtures/trace.csv",
                     "--out", out, "--threshold", "0.0234285994464"]);
    expect(res.status).toBe(0);
    expect(readFileSync(out, "utf8"))
      .toBe(readFileSync("fixtures/trace_expected.svg", "utf8"));
  });
});
