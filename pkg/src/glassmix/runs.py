"""Experiment runners behind the five service endpoints.

Each runner consumes a validated config model and returns a RunResult:
a JSON-able summary plus named text artifacts (CSV/JSON) ready to be
written to disk verbatim by whichever client asked.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import SCHEMA_VERSION
from .bottleneck import ball_scan, default_radii
from .constants import BETA_C
from .errors import CapacityExceeded, ConfigError, NoValidSet, NumericGateFailed
from .exact import (
    MixingKind,
    build_kernel,
    exact_mixing_time,
    gibbs_distribution,
    spectral_gap,
    spectral_sandwich,
    verify_detailed_balance,
)
from .geometry import ball_volume
from .landscape import check_event, deep_states, ensemble_seeds, union_bound_rhs
from .model import (
    STREAM_TRAJECTORY,
    ModelParams,
    Repr,
    SpinConfiguration,
    energy_table,
    sample_disorder,
    substream,
)
from .persist import csv_text, json_text
from .schemas import (
    ArtifactPayload,
    CertifyConfig,
    LandscapeConfig,
    RunResponse,
    SimulateConfig,
    SpectrumConfig,
    TheoryConfig,
)
from .stats import bootstrap_ratio_ci, wilson_interval
from . import theory
from .dynamics import simulate


@dataclass
class RunResult:
    command: str
    summary: dict
    artifacts: list = field(default_factory=list)  # (name, text) pairs

    def to_response(self) -> RunResponse:
        return RunResponse(
            schema_version=SCHEMA_VERSION,
            command=self.command,
            summary=self.summary,
            artifacts=[ArtifactPayload(name=n, content=c) for n, c in self.artifacts],
        )


def parallel_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def pick_repr(n: int, p: int, requested) -> Repr:
    """Requested layout, else full tuples when they fit, else the multiset
    collapse, else the parity collapse."""
    if requested is not None:
        return Repr(requested)
    if (2 * n) ** p <= 10**6:
        return Repr.FULL_ORDERED
    if math.comb(2 * n + p - 1, p) <= 10**5:
        return Repr.COLLAPSED_MULTISET
    return Repr.PARITY


def _trajectory_seed(master_seed: int, index: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master_seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(STREAM_TRAJECTORY, index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_simulate(cfg: SimulateConfig) -> RunResult:
    params = ModelParams(n=cfg.n, p=cfg.p, beta=cfg.beta)
    inst = sample_disorder(params, cfg.instance_seed, repr=pick_repr(cfg.n, cfg.p, cfg.repr))

    def one(i: int):
        seed = _trajectory_seed(cfg.master_seed, i)
        if cfg.start == "all_plus":
            start = SpinConfiguration.all_plus(cfg.n)
        elif cfg.start == "all_minus":
            start = SpinConfiguration.all_minus(cfg.n)
        else:
            start_bits = int(substream(seed, STREAM_TRAJECTORY, 1).integers(0, 1 << cfg.n))
            start = SpinConfiguration(bits=start_bits, n=cfg.n)
        return seed, simulate(inst, cfg.beta, start, cfg.horizon, cfg.subsample, seed=seed)

    runs = parallel_map(one, list(range(cfg.trajectories)), cfg.threads)
    artifacts = []
    traj_meta = []
    for i, (seed, summary) in enumerate(runs):
        rows = [(int(t * cfg.subsample), float(e))
                for t, e in enumerate(summary.energy_series)]
        artifacts.append((f"trajectory_{i:03d}.csv", csv_text(("step", "energy"), rows)))
        traj_meta.append({
            "trajectory_seed": seed,
            "final_state": summary.final_state.bits,
            "final_energy": summary.energy_series[-1],
            "steps": summary.steps,
        })
    summary = {
        "schema": SCHEMA_VERSION,
        "instance_seed": cfg.instance_seed,
        "beta": cfg.beta,
        "horizon": cfg.horizon,
        "subsample": cfg.subsample,
        "n": cfg.n,
        "p": cfg.p,
        "repr": inst.repr.value,
        "trajectories": traj_meta,
    }
    if cfg.uniformity_check:
        summary["uniformity_check"] = _uniformity_check(cfg, runs)
    artifacts.append(("simulate_summary.json", json_text(summary)))
    return RunResult("simulate", summary, artifacts)


def _uniformity_check(cfg: SimulateConfig, runs) -> dict:
    """At beta=0 the time-averaged magnetization is 0 +- 4 sigma, where each
    spin is an independent two-state chain with switch probability 1/(2n):
    var(mean m) = (1/n)(2n-1)/T."""
    if cfg.beta != 0.0:
        raise ConfigError("uniformity check requires beta = 0")
    if cfg.horizon < 1000:
        raise ConfigError("uniformity check needs horizon >= 1000")
    n = cfg.n
    devs = []
    for seed, summary in runs:
        inst_mag = _magnetization_time_average(cfg, seed)
        devs.append(inst_mag)
    sigma = math.sqrt((2 * n - 1) / (n * cfg.horizon))
    worst = max(abs(d) for d in devs)
    passed = worst <= 4.0 * sigma
    if not passed:
        raise NumericGateFailed(
            f"uniformity check failed: |mean magnetization| {worst:.4g} > 4 sigma "
            f"({4 * sigma:.4g})")
    return {"passed": True, "worst_abs_magnetization": worst, "four_sigma": 4.0 * sigma}


def _magnetization_time_average(cfg: SimulateConfig, seed: int) -> float:
    """Re-run the trajectory accumulating magnetization (beta = 0 is cheap)."""
    rng = substream(seed, STREAM_TRAJECTORY)
    n = cfg.n
    bits = (1 << n) - 1 if cfg.start == "all_plus" else 0
    if cfg.start == "random":
        bits = int(substream(seed, STREAM_TRAJECTORY, 1).integers(0, 1 << n))
    chunk = 1 << 16
    total = 0.0
    done = 0
    pop = bits.bit_count()
    while done < cfg.horizon:
        m = min(chunk, cfg.horizon - done)
        sites = rng.integers(0, n, size=chunk)[:m]
        us = rng.random(chunk)[:m]
        for s, u in zip(sites, us):
            if u < 0.5:
                was = (bits >> s) & 1
                bits ^= 1 << int(s)
                pop += 1 - 2 * was
            total += 2 * pop - n
        done += m
    return total / (cfg.horizon * n)


def run_spectrum(cfg: SpectrumConfig) -> RunResult:
    params = ModelParams(n=cfg.n, p=cfg.p, beta=cfg.beta)
    inst = sample_disorder(params, cfg.seed, repr=pick_repr(cfg.n, cfg.p, cfg.repr))
    kernel = build_kernel(inst, cfg.beta)
    pi = gibbs_distribution(inst, cfg.beta)
    lambda2, gap = spectral_gap(kernel, pi)
    tv_lower, tv_upper = spectral_sandwich(gap, pi)
    tmix_kind = "skipped"
    tmix = None
    tv_at_t = None
    try:
        result = exact_mixing_time(kernel, pi, cap=cfg.cap)
        tmix_kind = result.kind.value
        tmix = result.t_mix
        tv_at_t = result.tv_at_t
    except CapacityExceeded:
        pass  # gap and sandwich still reported
    report = {
        "schema": SCHEMA_VERSION,
        "n": cfg.n,
        "p": cfg.p,
        "beta": cfg.beta,
        "seed": cfg.seed,
        "lambda2": lambda2,
        "gap": gap,
        "tmix_kind": tmix_kind,
        "tmix": tmix,
        "tv_at_t": tv_at_t,
        "tv_lower": tv_lower,
        "tv_upper": tv_upper,
        "detailed_balance_residual": verify_detailed_balance(kernel, pi),
    }
    return RunResult("spectrum", report, [("spectrum.json", json_text(report))])


def run_certify(cfg: CertifyConfig) -> RunResult:
    params = ModelParams(n=cfg.n, p=cfg.p, beta=cfg.beta)
    radii = cfg.radii if cfg.radii is not None else default_radii(cfg.n, cfg.extended_radii)
    with_exact = cfg.with_exact if cfg.with_exact is not None else cfg.n <= 12
    artifacts = []
    entries = []
    empty = 0
    for j in range(cfg.count):
        seed = cfg.seed + j
        inst = sample_disorder(params, seed, repr=pick_repr(cfg.n, cfg.p, cfg.repr))
        table = energy_table(inst)
        deep = deep_states(inst, cfg.eps, table=table)
        if deep.size == 0:
            empty += 1
            entries.append({"seed": seed, "status": "no_deep_centers"})
            continue
        centers = deep.members[np.argsort(deep.energies, kind="stable")]
        if cfg.max_centers is not None:
            centers = centers[:cfg.max_centers]
        kernel = build_kernel(inst, cfg.beta)
        pi = gibbs_distribution(inst, cfg.beta)
        try:
            cert = ball_scan(inst, cfg.beta, centers.tolist(), radii,
                             kernel=kernel, pi=pi)
        except NoValidSet:
            empty += 1
            entries.append({"seed": seed, "status": "no_valid_ball"})
            continue
        payload = cert.to_payload()
        payload.update({"schema": SCHEMA_VERSION, "seed": seed, "n": cfg.n,
                        "p": cfg.p, "beta": cfg.beta, "eps": cfg.eps})
        if with_exact:
            result = exact_mixing_time(kernel, pi, cap=cfg.cap)
            payload["tmix_kind"] = result.kind.value
            payload["tmix"] = result.t_mix
            if result.kind is MixingKind.EXACT:
                payload["verdict"] = ("valid" if result.t_mix >= cert.tmix_lower
                                      else "violated")
            else:
                payload["verdict"] = "capped"
        else:
            payload["tmix_kind"] = "skipped"
            payload["tmix"] = None
            payload["verdict"] = "not_checked"
        artifacts.append((f"certificate_{seed}.json", json_text(payload)))
        entries.append({"seed": seed, "status": "ok", "center": cert.center,
                        "k": cert.k, "ratio": cert.ratio,
                        "tmix_lower": cert.tmix_lower,
                        "log_tmix_lower": cert.log_tmix_lower,
                        "verdict": payload["verdict"]})
    if not artifacts:
        raise NoValidSet("no disorder draw produced a valid bottleneck ball")
    summary = {
        "schema": SCHEMA_VERSION,
        "n": cfg.n, "p": cfg.p, "beta": cfg.beta, "eps": cfg.eps,
        "count": cfg.count, "empty": empty,
        "entries": entries,
        "violations": sum(1 for e in entries if e.get("verdict") == "violated"),
    }
    artifacts.append(("certify_summary.json", json_text(summary)))
    return RunResult("certify", summary, artifacts)


def run_landscape(cfg: LandscapeConfig) -> RunResult:
    params = ModelParams(n=cfg.n, p=cfg.p)
    seeds = ensemble_seeds(cfg.seed, cfg.samples)

    def one(s):
        inst = sample_disorder(params, int(s), repr=Repr(cfg.repr))
        table = energy_table(inst)
        rep = check_event(inst, cfg.eps, cfg.delta, cfg.k, table=table)
        return rep

    reports = parallel_map(one, list(seeds), cfg.threads)
    rows = []
    counts = np.empty(len(reports))
    for i, (s, rep) in enumerate(zip(seeds, reports)):
        rows.append((int(s), cfg.n, cfg.p, float(cfg.eps), float(cfg.delta), cfg.k,
                     int(rep.part1), int(rep.part2), rep.min_g, rep.deep_count))
        counts[i] = rep.deep_count
    event_hits = sum(r.holds for r in reports)
    part1_hits = sum(r.part1 for r in reports)
    part2_viol = sum(not r.part2 for r in reports)
    nsamp = len(reports)
    ev_lo, ev_hi = wilson_interval(event_hits, nsamp)
    p1_lo, p1_hi = wilson_interval(part1_hits, nsamp)
    viol_lo, viol_hi = wilson_interval(part2_viol, nsamp)
    bound = union_bound_rhs(cfg.n, cfg.p, cfg.eps, cfg.delta, cfg.k / cfg.n)
    m2 = float((counts ** 2).mean())
    if m2 > 0:
        sm_ratio = float(counts.mean() ** 2 / m2)
        boot_rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(entropy=int(cfg.seed) & 0xFFFFFFFFFFFFFFFF,
                                   spawn_key=(0xB007,))))
        sm_lo, sm_hi = bootstrap_ratio_ci(counts, boot_rng, cfg.bootstrap_resamples)
    else:
        sm_ratio, sm_lo, sm_hi = math.nan, math.nan, math.nan
    th = theory.theta(cfg.n, cfg.eps, cfg.k)
    theta_hat = (ball_volume(cfg.n, 2 * cfg.k) / counts.mean()
                 if counts.mean() > 0 else math.nan)
    pz_lower = ((1.0 - theta_hat) ** 2 * sm_ratio
                if math.isfinite(theta_hat) and 0 <= theta_hat < 1 and math.isfinite(sm_ratio)
                else math.nan)
    summary = {
        "schema": SCHEMA_VERSION,
        "n": cfg.n, "p": cfg.p, "eps": cfg.eps, "delta": cfg.delta, "k": cfg.k,
        "samples": nsamp,
        "event_estimate": event_hits / nsamp,
        "event_wilson": [ev_lo, ev_hi],
        "part1_estimate": part1_hits / nsamp,
        "part1_wilson": [p1_lo, p1_hi],
        "part2_violation_estimate": part2_viol / nsamp,
        "part2_violation_wilson": [viol_lo, viol_hi],
        "union_bound": bound.bound,
        "union_bound_log": bound.log_bound,
        "union_bound_dominates": (part2_viol / nsamp) <= min(bound.bound, 1.0) + (viol_hi - part2_viol / nsamp),
        "mean_deep_count": float(counts.mean()),
        "second_moment_ratio": sm_ratio,
        "second_moment_ci": [sm_lo, sm_hi],
        "theta_exact": th.value,
        "theta_hat": theta_hat,
        "paley_zygmund_lower": pz_lower,
        "paley_zygmund_consistent": (part1_hits / nsamp) >= pz_lower - (p1_hi - p1_lo)
        if math.isfinite(pz_lower) else None,
    }
    header = ("seed", "n", "p", "eps", "delta", "k", "part1", "part2", "min_G", "deep_count")
    artifacts = [
        ("event_study.csv", csv_text(header, rows)),
        ("landscape_summary.json", json_text(summary)),
    ]
    return RunResult("landscape", summary, artifacts)


def run_theory(cfg: TheoryConfig) -> RunResult:
    x = theory.x_param(cfg.eps, cfg.delta)
    if x >= 1.0:
        raise ConfigError(f"x >= 1 at eps={cfg.eps}, delta={cfg.delta} (x={x:.6g})")
    p_adm = theory.admissible_p(cfg.eps, cfg.delta)
    c_const = theory.asymptotic_constant(cfg.eps, cfg.delta)
    opt = theory.optimize_constant(cfg.eps)
    rows = []
    for p in sorted(cfg.p_values):
        temps = theory.reference_temperatures(p)
        r = theory.radius(cfg.eps, cfg.delta, p)
        cut = theory.beta_cutoff(cfg.eps, cfg.delta, p) if p >= p_adm else math.nan
        rows.append((p, temps.beta_c, temps.beta_sh, cut, c_const, r))
    constants = {
        "schema": SCHEMA_VERSION,
        "eps": cfg.eps,
        "delta": cfg.delta,
        "x": x,
        "admissible_p": p_adm,
        "asymptotic_constant": c_const,
        "beta_cutoff_at_max_p": rows[-1][3],
        "radius_at_max_p": rows[-1][5],
        "delta_prescribed": opt.delta_prescribed,
        "c_prescribed": opt.c_prescribed,
        "delta_refined": opt.delta_refined,
        "c_refined": opt.c_refined,
    }
    header = ("p", "beta_c", "beta_sh", "beta_cutoff", "C_eps_delta", "r_eps_delta")
    artifacts = [
        ("threshold_curve.csv", csv_text(header, rows)),
        ("theory_constants.json", json_text(constants)),
    ]
    return RunResult("theory", constants, artifacts)
