"""Command-line runner.

    tddm run config.json [--override key=value ...] [--out DIR]
    tddm tables [--desk | --full] [--steps N] [--out FILE]
    tddm validate-kernel

Units: lengths in l0, time in 1/(M_p mu), stress in mu b / l0; on the
[-pi, pi]^2 domain b = 2 pi / 157.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from tddm.correction import SimParams
from tddm.field import PhaseField, extract_contours, write_csv, write_pgm
from tddm.measure import (
    FrontTracker,
    MeasurementError,
    RadiusRecord,
    measure_loop_radius,
    numerical_velocity,
    oracle_edge_velocity,
    oracle_radius_at,
    write_contours_csv,
    write_radius_csv,
    write_velocity_csv,
)
from tddm.scenario import SCENARIOS, build_scenario
from tddm.stepper import NonFiniteFieldError, Simulation

UNITS = ("units: length l0, time 1/(M_p mu), stress mu b / l0; "
         "b = 2 pi / 157 on the [-pi, pi]^2 domain")

# Velocity tables: v-bar (front displacement per dt) against sigma (dimensionless) and beta.
TABLE_SIGMAS = (0.02, 0.05, 0.1, 0.15, 0.2)
TABLE_BETAS = (1, 4, 10)
PUBLISHED_TABLES = {
    2048: {0.02: (0.0, 0.0192, 0.0575), 0.05: (0.0197, 0.0575, 0.1150),
           0.1: (0.0197, 0.0959, 0.2493), 0.15: (0.0383, 0.1534, 0.3643),
           0.2: (0.0575, 0.1917, 0.4985)},
    4096: {0.02: (0.0096, 0.0192, 0.0497), 0.05: (0.0096, 0.0479, 0.1246),
           0.1: (0.0288, 0.0959, 0.2493), 0.15: (0.0383, 0.1534, 0.3739),
           0.2: (0.0479, 0.2013, 0.4985)},
}

# Command-line shorthands for common config keys.
SHORTCUTS = {"n": "n", "steps": "steps", "sigma": "sigma_app", "beta": "beta", "nu": "nu", "dt": "dt"}

EXIT_CONFIG = 2
EXIT_BLOWUP = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str = "straight_edge"
    n: int | None = None
    domain_half_length: float | None = None
    dt: float = 0.16
    beta: float = 1.0
    nu: float = 1.0 / 3.0
    sigma_app: float | None = None
    burgers: list = field(default_factory=lambda: [1.0, 0.0])
    steps: int = 100
    snapshot_every: int = 0
    correction: bool = True
    geometry_from: str = "previous"
    out_dir: str = "tddm_out"
    front_x: float | None = None
    particle: dict | None = None
    frank_read: dict | None = None
    loops: dict | None = None

    def scenario_config(self) -> dict[str, Any]:
        """Keys handed to ``build_scenario``; unset values fall back to scenario defaults."""
        skip = {"scenario", "steps", "snapshot_every", "correction", "out_dir"}
        out = {k: v for k, v in dataclasses.asdict(self).items() if k not in skip and v is not None}
        out["steps"] = self.steps
        return out


def _key_line(text: str, key: str) -> str:
    for i, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return f"line {i}: "
    return ""


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _set_path(target: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    for p in parts[:-1]:
        node = target.get(p)
        if not isinstance(node, dict):
            node = {}
            target[p] = node
        target = node
    target[parts[-1]] = value


def load_config(path: str | Path | None, overrides: list[str] = ()) -> RunConfig:
    """Read a JSON config, apply ``key=value`` overrides (dotted keys reach nested blocks)."""
    text = ""
    data: dict[str, Any] = {}
    if path is not None:
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        _set_path(data, key.strip(), _parse_value(raw.strip()))

    known = {f.name for f in dataclasses.fields(RunConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{path or 'overrides'}: {_key_line(text, key)}unknown key {key!r}")
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    where = f"{path or 'overrides'}: "
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"{where}{_key_line(text, 'scenario')}scenario must be one of {SCENARIOS}")
    if not isinstance(cfg.steps, int) or cfg.steps < 0:
        raise ConfigError(f"{where}{_key_line(text, 'steps')}steps must be a non-negative integer")
    if not isinstance(cfg.snapshot_every, int) or cfg.snapshot_every < 0:
        raise ConfigError(f"{where}{_key_line(text, 'snapshot_every')}snapshot_every must be >= 0")
    try:
        build_params(cfg)
    except ValueError as exc:
        raise ConfigError(f"{where}{exc}") from exc
    return cfg


def build_params(cfg: RunConfig) -> SimParams:
    return SimParams(dt=cfg.dt, beta=cfg.beta, nu=cfg.nu, n_steps=cfg.steps,
                     geometry_from=cfg.geometry_from)


def _snapshot(out: Path, f: PhaseField, step: int) -> None:
    tag = f"{step:06d}"
    write_pgm(f, out / f"field_{tag}.pgm")
    write_csv(f, out / f"field_{tag}.csv")
    write_contours_csv(extract_contours(f, 0.5), out / f"contours_{tag}.csv")


def _count_contours(f: PhaseField) -> tuple[int, int]:
    total = closed = 0
    for k in range(max(f.max_level(), 1)):
        cs = extract_contours(f, k + 0.5)
        total += len(cs)
        closed += sum(c.closed for c in cs)
    return total, closed


def run(cfg: RunConfig, log=print) -> int:
    """Execute one configured run and write its artifacts into ``cfg.out_dir``."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        u0, stress, params, kspec = build_scenario(cfg.scenario, cfg.scenario_config())
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"scenario {cfg.scenario}: {exc}") from exc
    effective = dataclasses.asdict(cfg)
    effective.update(n=u0.grid.n, domain_half_length=u0.grid.domain_half_length,
                     sigma_app=params.sigma_app)
    (out / "config_effective.json").write_text(json.dumps(effective, indent=2, sort_keys=True) + "\n")

    sim = Simulation(u0, kspec.build(u0.grid), stress, params, corrected=cfg.correction)
    tracker = FrontTracker(params, cfg.correction) if cfg.scenario == "straight_edge" else None
    radii: list[RadiusRecord] = []
    diag_rows = []

    def observe():
        f, step = sim.field, sim.step_index
        total, closed = _count_contours(f)
        diag_rows.append([step, repr(sim.time), repr(float(f.u.mean())), f.max_level(), total, closed])
        if tracker is not None:
            tracker.update(step, f)
        if cfg.scenario == "shrink_loop" and (not radii or radii[-1] is not None):
            try:
                radii.append(measure_loop_radius(f, step, sim.time))
            except MeasurementError:
                radii.append(None)
        if cfg.snapshot_every and step % cfg.snapshot_every == 0:
            _snapshot(out, f, step)

    if cfg.snapshot_every == 0:
        _snapshot(out, sim.field, 0)
    observe()
    status = 0
    blowup = None
    for _ in range(cfg.steps):
        try:
            sim.step()
        except NonFiniteFieldError as exc:
            blowup = exc
            status = EXIT_BLOWUP
            break
        observe()
    if cfg.snapshot_every == 0 and sim.step_index > 0:
        _snapshot(out, sim.field, sim.step_index)

    with open(out / "diagnostics.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "time", "field_mean", "max_level", "contours", "closed_contours"])
        w.writerows(diag_rows)
    lines = [f"scenario: {cfg.scenario}", UNITS,
             f"grid n={u0.grid.n} L={u0.grid.domain_half_length!r} dx={u0.grid.dx!r}",
             f"dt={params.dt} beta={params.beta} nu={params.nu!r} sigma_app={params.sigma_app}",
             f"scheme: {'corrected' if cfg.correction else 'basic'}; steps run: {sim.step_index}"]
    if blowup is not None:
        lines.append(f"aborted: {blowup}")
    if tracker is not None:
        write_velocity_csv(tracker.records, out / "velocity.csv")
        if len(tracker.records) > 1:
            vbar = numerical_velocity(tracker.records, params.beta if cfg.correction else 1.0)
            target = oracle_edge_velocity(params.sigma_app, params.dt, params.nu, cfg.correction)
            phys = tracker.records[-1].running_mean_velocity
            lines += [f"front displacement per dt (v-bar): {vbar:.4f}",
                      f"physical velocity: {phys:.5f}; closed-form: {target:.5f}; "
                      f"ratio {phys / target:.4f}" if target else f"physical velocity: {phys:.5f}",
                      f"velocity quantum dx/dt: {u0.grid.dx / params.dt:.4f}"]
    if cfg.scenario == "shrink_loop":
        recs = [r for r in radii if r is not None]
        write_radius_csv(recs, out / "radius.csv")
        if recs:
            t = np.array([r.time for r in recs])
            R = np.array([r.radius_area for r in recs])
            ref = oracle_radius_at(t, R[0], params.dt)
            ok = np.isfinite(ref)
            rel = np.abs(R[ok] - ref[ok]) / ref[ok]
            lines.append(f"loop radius: R0={R[0]:.4f}, last R={R[-1]:.4f} at t={t[-1]:.3f}; "
                         f"max relative deviation from the shrink-rate ODE {rel.max():.4f}")
            vanished = len(recs) < len(radii)
            lines.append("loop vanished" if vanished else "loop still present at end of run")
    if diag_rows:
        lines.append(f"final: max level {diag_rows[-1][3]}, contours {diag_rows[-1][4]}, "
                     f"closed {diag_rows[-1][5]}")
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    for line in lines:
        log(line)
    return status


# ---------------------------------------------------------------- tables

def edge_velocity(n: int, sigma: float, beta: float, steps: int = 10, skip: int = 1,
                  nu: float = 1.0 / 3.0, dt: float = 0.16, corrected: bool = True) -> float:
    """Measured v-bar of the straight edge: mean front displacement per ``dt``."""
    u0, stress, params, kspec = build_scenario("straight_edge", {
        "n": n, "sigma_app": sigma, "beta": beta, "nu": nu, "dt": dt})
    sim = Simulation(u0, kspec.build(u0.grid), stress, params, corrected=corrected)
    tracker = FrontTracker(params, corrected)
    tracker.update(0, sim.field)
    for _ in range(steps):
        sim.step()
        tracker.update(sim.step_index, sim.field)
    return numerical_velocity(tracker.records, beta if corrected else 1.0, skip=skip)


def _table_job(args):
    n, sigma, beta, steps = args
    return edge_velocity(n, sigma, beta, steps)


def reproduce_tables(mode: str = "desk", steps: int = 10, jobs: int = 1, log=print) -> str:
    """Markdown table of measured v-bar next to the published values with pass/fail.

    ``desk`` runs n=1024 against the n=2048 values with the coarser quantum
    ``dx/dt``; ``full`` runs n=2048 and n=4096 against their own tables.
    """
    if mode == "desk":
        plan = [(1024, 2048)]
    elif mode == "full":
        plan = [(2048, 2048), (4096, 4096)]
    else:
        raise ValueError("mode must be 'desk' or 'full'")
    jobs_list = [(n, s, b, steps) for n, _ in plan for s in TABLE_SIGMAS for b in TABLE_BETAS]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            values = list(pool.map(_table_job, jobs_list))
    else:
        values = [_table_job(j) for j in jobs_list]
    measured = dict(zip(jobs_list, values))

    lines = [f"# Straight edge velocity v-bar ({mode}, {steps} steps, dt=0.16, nu=1/3)", "",
             UNITS, ""]
    n_fail = 0
    for n, ref_n in plan:
        quantum = 2.0 * math.pi / n / 0.16
        lines += [f"## n={n} (reference values from the n={ref_n} table; tolerance dx/dt = {quantum:.4f})",
                  "", "| sigma | v | beta | measured | published | diff | result |",
                  "|---|---|---|---|---|---|---|"]
        for s in TABLE_SIGMAS:
            v = oracle_edge_velocity(s, 0.16, 1.0 / 3.0, True)
            for k, b in enumerate(TABLE_BETAS):
                got = measured[(n, s, b, steps)]
                ref = PUBLISHED_TABLES[ref_n][s][k]
                diff = abs(got - ref)
                ok = diff <= quantum
                n_fail += not ok
                lines.append(f"| {s} | {v:.4f} | {b} | {got:.4f} | {ref:.4f} | {diff:.4f} | "
                             f"{'PASS' if ok else 'FAIL'} |")
        lines.append("")
    lines.append(f"{len(jobs_list) - n_fail} of {len(jobs_list)} entries within tolerance")
    text = "\n".join(lines) + "\n"
    log(text)
    return text


# ---------------------------------------------------------------- kernel checks

def validate_kernel(log=print) -> bool:
    """Mean preservation and the closed-form isotropic kernel check."""
    from tddm.field import PhaseField
    from tddm.kernel import build_kernel, real_space_kernel_nu0, sample_real_space
    from tddm.spectral import make_grid
    from tddm.stepper import convolve

    g = make_grid(512, math.pi)
    rng = np.random.default_rng(0)
    f = PhaseField(g, rng.integers(-3, 4, g.shape).astype(float))
    err_mean = abs(convolve(f, build_kernel(g, 1.0 / 3.0, 0.16)).u.mean() - f.u.mean())
    ok1 = err_mean < 1e-12
    log(f"mean preservation: |change| = {err_mean:.2e} {'PASS' if ok1 else 'FAIL'}")

    k = sample_real_space(build_kernel(g, 0.0, 0.16)).values
    x, y = g.mesh()
    exact = real_space_kernel_nu0(x, y, 0.16)
    region = np.hypot(x, y) <= g.domain_half_length / 2
    rel = np.abs(k - exact)[region].max() / exact[region].max()
    ok2 = rel < 0.05
    log(f"isotropic kernel vs closed form: relative max error {rel:.4f} {'PASS' if ok2 else 'FAIL'}")
    return ok1 and ok2


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="tddm", description="Dislocation glide by convolution and thresholding")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured simulation")
    p_run.add_argument("config", nargs="?", help="JSON config file or a scenario name")
    p_run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (dotted keys reach nested blocks)")
    p_run.add_argument("--out", help="output directory (overrides out_dir)")
    for flag, key in SHORTCUTS.items():
        p_run.add_argument(f"--{flag}", dest=key, metavar=key.upper(), help=f"shorthand for --override {key}=...")

    p_tab = sub.add_parser("tables", help="reproduce the straight-edge velocity tables")
    grp = p_tab.add_mutually_exclusive_group()
    grp.add_argument("--desk", dest="mode", action="store_const", const="desk")
    grp.add_argument("--full", dest="mode", action="store_const", const="full")
    p_tab.add_argument("--steps", type=int, default=10)
    p_tab.add_argument("--jobs", type=int, default=1)
    p_tab.add_argument("--out", default="tables.md")

    sub.add_parser("validate-kernel", help="check the spectral kernel against closed forms")
    args = parser.parse_args(argv)

    if args.command == "run":
        config = args.config
        overrides = []
        if config in SCENARIOS and not Path(config).exists():
            overrides.append(f"scenario={json.dumps(config)}")
            config = None
        overrides += [f"{key}={getattr(args, key)}" for key in SHORTCUTS.values()
                      if getattr(args, key) is not None]
        overrides += list(args.override)
        if args.out:
            overrides.append(f"out_dir={json.dumps(args.out)}")
        try:
            cfg = load_config(config, overrides)
            t0 = time.perf_counter()
            status = run(cfg)
        except (ConfigError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"wall time {time.perf_counter() - t0:.1f} s", file=sys.stderr)
        if status == EXIT_BLOWUP:
            print("run aborted: field became non-finite", file=sys.stderr)
        return status
    if args.command == "tables":
        text = reproduce_tables(args.mode or "desk", args.steps, args.jobs, log=lambda s: None)
        Path(args.out).write_text(text)
        print(text)
        return 0
    return 0 if validate_kernel() else 1


if __name__ == "__main__":
    sys.exit(main())
