"""Reproducible Monte Carlo replication engine.

Each replication owns an rng seeded from (base_seed, dgp, grid point,
replication index), so results are independent of worker scheduling: the
per-replication outputs land in index-addressed arrays and are aggregated in
replication order with compensated summation. Identical configs produce
byte-identical CSV output at any parallelism level.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import _kernels, confseq, rules
from .dgp import DgpSpec, DgpStream, standard_dgp
from .errors import ConfigError
from .gst import GstPlan, compute_boundaries, default_looks, every_n_looks
from .rules import StoppingRuleSpec, reference_sample_size
from .streaming import ExperimentState

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_NO_LOOKS = np.empty(0, dtype=np.int64)
_NO_BOUNDS = np.empty(0, dtype=np.float64)

FWCID_SAFETY_MULT = 100  # emergency cap on fixed-width runs, hits must be 0


def _mix64(x: int) -> int:
    """splitmix64 finalizer."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, dgp_id: int, grid_index: int,
                replication_index: int) -> int:
    """Avalanche-quality 64-bit seed for one replication.

    Chains the splitmix64 finalizer over the three coordinates starting from
    base_seed; stable across versions by construction.
    """
    h = base_seed & _MASK64
    for v in (dgp_id, grid_index, replication_index):
        h = _mix64((h + _GAMMA + (v & _MASK64)) & _MASK64)
    return h


@dataclass(frozen=True)
class ReplicationResult:
    n_stop: int
    tau_hat: float
    covered: bool
    rejected: Optional[bool]
    hit_nmax: bool


def run_replication(dgp: DgpSpec, spec: StoppingRuleSpec, seed: int,
                    nbar: Optional[int] = None,
                    gst_plan: Optional[GstPlan] = None) -> ReplicationResult:
    """Stream one replication through the rule until it stops.

    The rule is checked after every observation (GST only at its looks).
    ``spec`` must carry concrete rho for confidence-sequence kinds; fixed-width
    kinds without an explicit n_max get the safety cap of 100 reference sizes.
    """
    if spec.kind == rules.GST and gst_plan is None:
        raise ConfigError("gst replications need a precomputed GstPlan")
    n_max = spec.n_max
    if n_max is None:
        if spec.kind not in rules.FWCID_KINDS:
            raise ConfigError(f"{spec.kind} requires an explicit n_max")
        if nbar is None:
            nbar = reference_sample_size("fwcid", spec.d, spec.alpha, p=dgp.p)
        n_max = FWCID_SAFETY_MULT * nbar

    kind, thr, rho, alpha_cs, tau_h0, direction = rules._kernel_args(spec)
    looks = gst_plan.looks if gst_plan is not None else _NO_LOOKS
    bounds = gst_plan.boundaries if gst_plan is not None else _NO_BOUNDS

    state = ExperimentState()
    stream = DgpStream(dgp, np.random.Generator(np.random.PCG64(seed)))
    # Deterministic batch schedule: a function of (nbar, n_max) only.
    batch = max(64, int(1.25 * nbar) if nbar else 256)
    look_ptr = 0
    reason_code = _kernels.REASON_NONE
    remaining = n_max
    while remaining > 0:
        size = min(batch, remaining)
        ws, ys = stream.draw_batch(size)
        idx, reason_code, look_ptr = _kernels.consume(
            state.data, ws, ys, kind, thr, rho, alpha_cs, tau_h0, direction,
            float(n_max), float(spec.min_per_arm), looks, bounds, look_ptr)
        if idx >= 0:
            break
        remaining = n_max - state.n
        batch *= 2
    if reason_code == _kernels.REASON_NONE:
        # Exhausting the budget without the kernel flagging n_max can only
        # happen for n_max=0 configs, which validation already rejects.
        raise RuntimeError("replication ended without a stop reason")
    reason = rules.STOP_THRESHOLD if reason_code == _kernels.REASON_THRESHOLD \
        else rules.STOP_NMAX
    report = rules.final_report(spec, state, reason)
    covered = report.ci_lo < dgp.tau < report.ci_hi
    return ReplicationResult(n_stop=report.n_stop, tau_hat=report.tau_hat,
                             covered=covered, rejected=report.rejected,
                             hit_nmax=reason == rules.STOP_NMAX)


@dataclass(frozen=True)
class MetricsRow:
    """Aggregated replication results for one (DGP, rule, grid, n_max) cell."""
    dgp_id: int
    rule_kind: str
    grid_value: float
    n_max: int
    replications: int
    bias: float
    mcse_bias: float
    coverage: float
    mean_n_ratio: float
    rejection_rate: float
    frac_hit_nmax: float


@dataclass(frozen=True)
class SimulationConfig:
    """Grid description for run_grid.

    ``rules`` holds rule templates as plain dicts ({"kind": ..., "alpha": ...,
    ...}); the grid supplies d for fixed-width kinds and tau_h1 for the test
    kinds (whose templates then need tau_h0 and beta). Templates without rho
    get it tuned per cell at the reference sample size.
    """
    dgp_ids: tuple
    rules: tuple
    grid: tuple
    replications: int
    base_seed: int
    n_max_multipliers: tuple = (2.0,)
    parallelism: int = 1
    gst_max_looks: int = 50
    gst_every_n: bool = False

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not self.grid:
            raise ConfigError("grid must be nonempty")
        if not self.dgp_ids or not self.rules:
            raise ConfigError("dgp_ids and rules must be nonempty")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "SimulationConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        missing = {"dgp_ids", "rules", "grid", "replications"} - set(raw)
        if missing:
            raise ConfigError(f"missing config fields: {sorted(missing)}")
        raw = dict(raw)
        raw.setdefault("base_seed", None)
        if raw["base_seed"] is None:
            raise ConfigError("base_seed is required (no silent nondeterminism)")
        for key in ("dgp_ids", "grid", "n_max_multipliers"):
            if key in raw:
                raw[key] = tuple(raw[key])
        raw["rules"] = tuple(dict(r) for r in raw["rules"])
        return cls(**raw)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("dgp_ids", "grid", "n_max_multipliers"):
            out[key] = list(out[key])
        out["rules"] = [dict(r) for r in out["rules"]]
        return out


def _is_test_kind(kind: str) -> bool:
    return kind in (*rules.FPD_KINDS, rules.AV_TEST, rules.GST)


def build_cell_spec(template: dict, grid_value: float, dgp: DgpSpec,
                    n_max_mult: Optional[float],
                    gst_max_looks: int = 50, gst_every_n: bool = False):
    """Resolve one rule template at one grid point.

    Returns (spec, nbar, gst_plan). Grid value is d for fixed-width kinds and
    tau_h1 for test kinds; rho is tuned at the reference size when absent.
    """
    template = dict(template)
    kind = template.get("kind")
    if kind not in rules.ALL_KINDS:
        raise ConfigError(f"unknown rule kind in template: {kind!r}")
    alpha = template.get("alpha")
    if alpha is None:
        raise ConfigError(f"{kind} template requires alpha")
    if _is_test_kind(kind):
        template.setdefault("tau_h0", 0.0)
        template["tau_h1"] = grid_value
        beta = template.get("beta")
        if beta is None:
            raise ConfigError(f"{kind} template requires beta (sets the n_max cap)")
        tau_d = grid_value - template["tau_h0"]
        nbar = reference_sample_size("fpd", abs(tau_d), alpha, beta, dgp.p)
        if template.get("n_max") is None:
            mult = 1.0 if n_max_mult is None else n_max_mult
            template["n_max"] = max(int(round(mult * nbar)), 4)
    else:
        template["d"] = grid_value
        nbar = reference_sample_size("fwcid", grid_value, alpha, p=dgp.p)
        if template.get("n_max") is None:
            template["n_max"] = FWCID_SAFETY_MULT * nbar
    if template.get("rho") is None and kind in rules.CS_KINDS:
        if kind == rules.FWCID_ALWAYS_VALID:
            template["rho"] = confseq.tune_rho(nbar, alpha, "two_sided")
        elif kind == rules.AV_TEST:
            template["rho"] = confseq.tune_rho(nbar, alpha, "one_sided")
        else:
            level = template.get("alpha_c")
            if level is None:
                raise ConfigError(f"{kind} template requires alpha_c")
            template["rho"] = confseq.tune_rho(nbar, level, "one_sided")
    spec = StoppingRuleSpec(**template)
    plan = None
    if kind == rules.GST:
        looks = every_n_looks(spec.n_max) if gst_every_n \
            else default_looks(spec.n_max, gst_max_looks)
        plan = compute_boundaries(looks, spec.n_max, alpha)
    return spec, nbar, plan


def run_cell(dgp: DgpSpec, spec: StoppingRuleSpec, nbar: int, grid_index: int,
             replications: int, base_seed: int, parallelism: int = 1,
             gst_plan: Optional[GstPlan] = None,
             grid_value: Optional[float] = None) -> MetricsRow:
    """All replications of one cell, aggregated in replication order."""
    n_stop = np.empty(replications, dtype=np.int64)
    tau = np.empty(replications, dtype=np.float64)
    cov = np.empty(replications, dtype=bool)
    rej = np.empty(replications, dtype=bool)
    hit = np.empty(replications, dtype=bool)

    def work(lo: int, hi: int) -> None:
        for r in range(lo, hi):
            seed = derive_seed(base_seed, dgp.id, grid_index, r)
            res = run_replication(dgp, spec, seed, nbar=nbar, gst_plan=gst_plan)
            n_stop[r] = res.n_stop
            tau[r] = res.tau_hat
            cov[r] = res.covered
            rej[r] = bool(res.rejected)
            hit[r] = res.hit_nmax

    if parallelism <= 1 or replications < 2 * parallelism:
        work(0, replications)
    else:
        bounds = np.linspace(0, replications, parallelism + 1).astype(int)
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(work, int(lo), int(hi))
                       for lo, hi in zip(bounds[:-1], bounds[1:])]
            for f in futures:
                f.result()

    r = replications
    mean_tau = math.fsum(tau) / r
    if r > 1:
        var_tau = math.fsum((t - mean_tau) ** 2 for t in tau) / (r - 1)
        mcse = math.sqrt(var_tau / r)
    else:
        mcse = math.nan
    if grid_value is None:
        grid_value = spec.d if spec.kind in rules.FWCID_KINDS else spec.tau_h1
    return MetricsRow(
        dgp_id=dgp.id, rule_kind=spec.kind, grid_value=float(grid_value),
        n_max=int(spec.n_max), replications=r,
        bias=mean_tau - dgp.tau, mcse_bias=mcse,
        coverage=int(cov.sum()) / r,
        mean_n_ratio=int(n_stop.sum()) / r / nbar,
        rejection_rate=int(rej.sum()) / r,
        frac_hit_nmax=int(hit.sum()) / r)


def run_grid(config: SimulationConfig) -> list[MetricsRow]:
    """Every (DGP, rule, grid point, n_max multiplier) cell of the config."""
    out = []
    for dgp_id in config.dgp_ids:
        dgp = standard_dgp(dgp_id)
        for template in config.rules:
            mults = config.n_max_multipliers if _is_test_kind(template["kind"]) \
                else (None,)
            for grid_index, grid_value in enumerate(config.grid):
                for mult in mults:
                    spec, nbar, plan = build_cell_spec(
                        template, grid_value, dgp, mult,
                        config.gst_max_looks, config.gst_every_n)
                    out.append(run_cell(
                        dgp, spec, nbar, grid_index, config.replications,
                        config.base_seed, config.parallelism, plan, grid_value))
    return out


CSV_HEADER = ("dgp,rule,grid,n_max,reps,bias,mcse_bias,coverage,"
              "mean_n_ratio,rejection_rate,frac_hit_nmax")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def metrics_csv(rows: list[MetricsRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            str(r.dgp_id), r.rule_kind, _fmt(r.grid_value), str(r.n_max),
            str(r.replications), _fmt(r.bias), _fmt(r.mcse_bias),
            _fmt(r.coverage), _fmt(r.mean_n_ratio), _fmt(r.rejection_rate),
            _fmt(r.frac_hit_nmax)]))
    return "\n".join(lines) + "\n"


def config_digest(config: SimulationConfig) -> str:
    canon = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def run_manifest(config: SimulationConfig, command: str, version: str,
                 started: str, ended: str) -> dict:
    return {
        "command": command,
        "config": config.to_dict(),
        "config_digest": config_digest(config),
        "base_seed": config.base_seed,
        "version": version,
        "started": started,
        "ended": ended,
    }
