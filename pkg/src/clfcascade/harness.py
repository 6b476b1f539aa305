"""Scenario files, experiment runner and trajectory export.

A scenario is a YAML mapping::

    name: baseline
    aircraft: {xp: -0.5}            # overrides on NOMINAL (optional)
    program: {theta_m: 0.015, omega: 0.3, pitch_target: 0.347}
    gains: {a1: -0.5, a2: -1.0, a3: -2.0, a4: -1.0}
    thrust: [[0.0, 36718.0], [5.0, 22031.0]]   # (t_break, P) pairs
    initial:                        # explicit state, delta_p defaults to 0 ...
      {v: 90.0, theta: 0.015, alpha: 0.33, q: 0.0, h: 3000.0}
    # ... or placed on the intermediate manifolds with given tracking errors:
    #   {on_manifold: true, v: 90.0, h: 3000.0, theta_err: 0.05, pitch_err: 0.0}
    plant: simplified               # or full
    density_scale: 1.0
    dt: 0.001
    t_final: 30.0
    derivatives: backward           # or analytic
    final_error: 0.05               # pass threshold on final tracking errors
    robustness: {limits: {theta: 0.02, ...}, final_error: 0.05}   # optional
    sweep: {param: gains.a1, values: [-0.3, -0.5]}                # optional
    seed: 0

Everything except ``program``, ``gains``, ``thrust`` and ``initial`` has a
default. A scenario with a ``robustness`` section is also run on the
simplified plant and the two runs are compared.
"""

from __future__ import annotations

import csv
import math
import os
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import yaml

from clfcascade.aero_env import NOMINAL, AircraftParams
from clfcascade.alpha_manifold import Gains, ManeuverProgram
from clfcascade.analysis import RobustnessTolerances, RunMetrics, compute_metrics, robustness_compare
from clfcascade.closed_loop import (
    LOG_COLUMNS,
    ExtendedState,
    ThrustSchedule,
    TrajectoryLog,
    on_manifold_state,
    simulate,
)
from clfcascade.errors import ScenarioError

CSV_COLUMNS = LOG_COLUMNS[:14]
OUTPUT_ENV = "CLFCASCADE_OUTPUT_DIR"
PRESETS = ("baseline", "robustness", "engine_failure", "density", "gain_sweep", "demo2d")

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


@dataclass(frozen=True)
class InitialCondition:
    """Either an explicit extended state or an on-manifold placement."""

    on_manifold: bool
    v: float
    h: float
    theta: float = 0.0
    alpha: float = 0.0
    q: float = 0.0
    delta_p: float = 0.0
    theta_err: float = 0.0
    pitch_err: float = 0.0

    def resolve(self, p: AircraftParams, prog: ManeuverProgram, gains: Gains, P0: float) -> ExtendedState:
        if self.on_manifold:
            return on_manifold_state(p, prog, gains, P0, self.v, self.h, self.theta_err, self.pitch_err)
        return ExtendedState(self.v, self.theta, self.alpha, self.q, self.h, self.delta_p)

    def to_dict(self) -> dict:
        if self.on_manifold:
            return {"on_manifold": True, "v": self.v, "h": self.h, "theta_err": self.theta_err, "pitch_err": self.pitch_err}
        return {"v": self.v, "theta": self.theta, "alpha": self.alpha, "q": self.q, "h": self.h, "delta_p": self.delta_p}


@dataclass(frozen=True)
class Sweep:
    param: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class Scenario:
    name: str
    aircraft: AircraftParams
    program: ManeuverProgram
    gains: Gains
    thrust: ThrustSchedule
    initial: InitialCondition
    plant: str = "simplified"
    density_scale: float = 1.0
    dt: float = 1e-3
    t_final: float = 30.0
    derivatives: str = "backward"
    final_error: float = 0.05
    robustness: RobustnessTolerances | None = None
    sweep: Sweep | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ScenarioError("dt must be positive")
        if not self.t_final > self.dt:
            raise ScenarioError("t_final must exceed dt")
        if not self.density_scale > 0:
            raise ScenarioError("density_scale must be positive")
        if self.plant not in ("simplified", "full"):
            raise ScenarioError(f"plant must be 'simplified' or 'full', got {self.plant!r}")
        if self.derivatives not in ("backward", "analytic"):
            raise ScenarioError(f"derivatives must be 'backward' or 'analytic', got {self.derivatives!r}")
        if not self.final_error > 0:
            raise ScenarioError("final_error must be positive")
        try:
            self.thrust.check_bounds(self.aircraft)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None

    def initial_state(self) -> ExtendedState:
        return self.initial.resolve(self.aircraft, self.program, self.gains, self.thrust(0.0))

    def with_value(self, path: str, value) -> "Scenario":
        """Copy with one dotted field replaced, e.g. ``gains.a1`` or ``aircraft.xp``."""
        data = scenario_to_dict(self)
        keys = path.split(".")
        node = data
        for k in keys[:-1]:
            node = node.get(k) if isinstance(node, dict) else None
        known = isinstance(node, dict) and (keys[-1] in node or keys[:-1] == ["aircraft"])
        if not known:
            raise ScenarioError(f"unknown parameter path {path!r}")
        node[keys[-1]] = value
        return scenario_from_dict(data)


# --------------------------------------------------------------------------- parsing

def _line_of(root, path: tuple) -> int | None:
    """1-based source line of ``path`` in a composed YAML node tree."""
    node = root
    line = None
    for key in path:
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                if k.value == key:
                    line = k.start_mark.line + 1
                    node = v
                    break
            else:
                return line
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            return line
    return line


class _Reader:
    def __init__(self, data: dict, root=None) -> None:
        self.data = data
        self.root = root

    def fail(self, path: tuple, msg: str):
        line = _line_of(self.root, path) if self.root is not None else None
        where = ".".join(str(p) for p in path)
        prefix = f"line {line}: " if line else ""
        raise ScenarioError(f"{prefix}{where}: {msg}")

    def section(self, key: str, required: bool = True) -> dict | None:
        if key not in self.data:
            if required:
                self.fail((key,), "missing required section")
            return None
        val = self.data[key]
        if not isinstance(val, dict):
            self.fail((key,), "expected a mapping")
        return val

    def number(self, path: tuple, val) -> float:
        if isinstance(val, str) and _FLOAT_RE.fullmatch(val.strip()):
            val = float(val)  # YAML 1.1 leaves 1e-3 and 1.0e9 as strings
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(path, f"expected a number, got {val!r}")
        if not math.isfinite(val):
            self.fail(path, "must be finite")
        return float(val)


_FLOAT_RE = re.compile(r"[-+]?(\d+\.?\d*|\.\d+)[eE][-+]?\d+")

_TOP_KEYS = {
    "name", "aircraft", "program", "gains", "thrust", "initial", "plant", "density_scale",
    "dt", "t_final", "derivatives", "final_error", "robustness", "sweep", "seed",
}


def scenario_from_dict(data: dict, root=None) -> Scenario:
    r = _Reader(data, root)
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping")
    for k in data:
        if k not in _TOP_KEYS:
            r.fail((k,), "unknown field")

    ac = r.section("aircraft", required=False) or {}
    base = NOMINAL.to_dict()
    for k, v in ac.items():
        if k not in base:
            r.fail(("aircraft", k), "unknown aircraft parameter")
        base[k] = r.number(("aircraft", k), v)
    try:
        aircraft = AircraftParams(**base)
    except ValueError as exc:
        r.fail(("aircraft",), str(exc))

    pr = r.section("program")
    for k in pr:
        if k not in ("theta_m", "omega", "pitch_target"):
            r.fail(("program", k), "unknown field")
    vals = {}
    for k in ("theta_m", "omega", "pitch_target"):
        if k not in pr:
            r.fail(("program", k), "missing")
        vals[k] = r.number(("program", k), pr[k])
    try:
        program = ManeuverProgram(**vals)
    except ValueError as exc:
        r.fail(("program", "omega"), str(exc))

    gs = r.section("gains")
    gv = {}
    for k in gs:
        if k not in ("a1", "a2", "a3", "a4"):
            r.fail(("gains", k), "unknown gain")
    for k in ("a1", "a2", "a3", "a4"):
        if k not in gs:
            r.fail(("gains", k), "missing")
        gv[k] = r.number(("gains", k), gs[k])
        if not gv[k] < 0:
            r.fail(("gains", k), f"gain must be negative, got {gv[k]!r}")
    gains = Gains(**gv)

    th = data.get("thrust")
    if th is None:
        r.fail(("thrust",), "missing required section")
    if isinstance(th, (int, float)) and not isinstance(th, bool):
        th = [[0.0, th]]
    if not isinstance(th, list) or not th:
        r.fail(("thrust",), "expected a list of [t, P] pairs")
    bps = []
    for i, pair in enumerate(th):
        if not isinstance(pair, list) or len(pair) != 2:
            r.fail(("thrust", i), "expected [t, P]")
        bps.append((r.number(("thrust", i), pair[0]), r.number(("thrust", i), pair[1])))
    try:
        thrust = ThrustSchedule(tuple(bps))
    except ValueError as exc:
        r.fail(("thrust",), str(exc))

    ini = r.section("initial")
    on = ini.get("on_manifold", False)
    if not isinstance(on, bool):
        r.fail(("initial", "on_manifold"), "expected true or false")
    allowed = {"on_manifold", "v", "h", "theta_err", "pitch_err"} if on else {"v", "theta", "alpha", "q", "h", "delta_p"}
    required = {"v", "h"} if on else {"v", "theta", "alpha", "h"}
    for k in ini:
        if k not in allowed:
            r.fail(("initial", k), "unknown field for this kind of initial condition")
    for k in required:
        if k not in ini:
            r.fail(("initial", k), "missing")
    iv = {k: r.number(("initial", k), v) for k, v in ini.items() if k != "on_manifold"}
    if not iv["v"] > 0:
        r.fail(("initial", "v"), "initial airspeed must be positive")
    initial = InitialCondition(on_manifold=on, **iv)

    kw = {}
    if "name" in data:
        if isinstance(data["name"], bool) or not isinstance(data["name"], (str, int)):
            r.fail(("name",), f"expected a string, got {data['name']!r} (quote it)")
        kw["name"] = str(data["name"])
    else:
        kw["name"] = "scenario"
    for k in ("density_scale", "dt", "t_final", "final_error"):
        if k in data:
            kw[k] = r.number((k,), data[k])
    for k in ("plant", "derivatives"):
        if k in data:
            kw[k] = data[k]
    if "seed" in data:
        if isinstance(data["seed"], bool) or not isinstance(data["seed"], int):
            r.fail(("seed",), "expected an integer")
        kw["seed"] = data["seed"]

    rb = r.section("robustness", required=False)
    if rb is not None:
        for k in rb:
            if k not in ("limits", "final_error"):
                r.fail(("robustness", k), "unknown field")
        lim = rb.get("limits")
        if not isinstance(lim, dict) or not lim:
            r.fail(("robustness", "limits"), "expected a non-empty mapping of channel limits")
        lims = {k: r.number(("robustness", "limits", k), v) for k, v in lim.items()}
        fe = r.number(("robustness", "final_error"), rb.get("final_error", 0.05))
        try:
            kw["robustness"] = RobustnessTolerances(lims, fe)
        except ValueError as exc:
            r.fail(("robustness",), str(exc))

    sw = r.section("sweep", required=False)
    if sw is not None:
        if set(sw) != {"param", "values"} or not isinstance(sw["values"], list) or not sw["values"]:
            r.fail(("sweep",), "expected {param: <path>, values: [...]}")
        vs = tuple(r.number(("sweep", "values", i), v) for i, v in enumerate(sw["values"]))
        kw["sweep"] = Sweep(str(sw["param"]), vs)

    try:
        return Scenario(aircraft=aircraft, program=program, gains=gains, thrust=thrust, initial=initial, **kw)
    except ScenarioError as exc:
        # Scenario messages start with the offending field name
        key = str(exc).split()[0]
        r.fail((key if key in data else "thrust",), str(exc))


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario YAML. Errors carry the line and field."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise ScenarioError(f"{where}malformed YAML: {getattr(exc, 'problem', exc)}") from None
    if data is None:
        raise ScenarioError("empty scenario")
    return scenario_from_dict(data, root)


def scenario_to_dict(sc: Scenario) -> dict:
    nominal = NOMINAL.to_dict()
    ac = {k: v for k, v in sc.aircraft.to_dict().items() if v != nominal[k]}
    out = {
        "name": sc.name,
        "aircraft": ac,
        "program": {"theta_m": sc.program.theta_m, "omega": sc.program.omega, "pitch_target": sc.program.pitch_target},
        "gains": {"a1": sc.gains.a1, "a2": sc.gains.a2, "a3": sc.gains.a3, "a4": sc.gains.a4},
        "thrust": [[t, P] for t, P in sc.thrust.breakpoints],
        "initial": sc.initial.to_dict(),
        "plant": sc.plant,
        "density_scale": sc.density_scale,
        "dt": sc.dt,
        "t_final": sc.t_final,
        "derivatives": sc.derivatives,
        "final_error": sc.final_error,
        "seed": sc.seed,
    }
    if sc.robustness is not None:
        out["robustness"] = {"limits": dict(sc.robustness.limits), "final_error": sc.robustness.final_error}
    if sc.sweep is not None:
        out["sweep"] = {"param": sc.sweep.param, "values": list(sc.sweep.values)}
    return out


def serialize_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ScenarioError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("clfcascade.presets").joinpath(f"{name}.yaml").read_text()


def load_scenario(ref: str) -> Scenario:
    """A preset name or a path to a scenario file."""
    if ref in PRESETS:
        return parse_scenario(preset_text(ref))
    path = Path(ref)
    if not path.exists():
        raise ScenarioError(f"no preset or file named {ref!r}")
    return parse_scenario(path.read_text())


# --------------------------------------------------------------------------- running

def run_scenario(sc: Scenario, plant: str | None = None) -> TrajectoryLog:
    x0 = sc.initial_state()
    return simulate(
        sc.aircraft,
        sc.program,
        sc.gains,
        sc.thrust,
        x0,
        dt=sc.dt,
        t_final=sc.t_final,
        plant=plant or sc.plant,
        density_scale=sc.density_scale,
        derivatives=sc.derivatives,
    )


def _fmt(x: float) -> str:
    return "%.17g" % x


def export_csv(log: TrajectoryLog, path) -> None:
    """Write the fixed 14-column trajectory table; ``sat_flags`` is an integer bitmask."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        cols = [log[c] for c in CSV_COLUMNS]
        for i in range(len(log)):
            row = [_fmt(float(c[i])) for c in cols[:-1]]
            row.append(str(int(cols[-1][i])))
            w.writerow(row)


def read_csv(path) -> dict[str, list[float]]:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {h: [float(r[i]) for r in body] for i, h in enumerate(header)}


@dataclass
class ExperimentResult:
    status: int
    metrics: RunMetrics | None
    verdict: dict | None
    files: list[Path] = field(default_factory=list)
    message: str = ""


def _write_yaml(path: Path, data: dict) -> None:
    path.write_text(yaml.safe_dump(data, sort_keys=False))


def output_root(out_dir=None) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    return Path(os.environ.get(OUTPUT_ENV, "runs"))


def run_experiment(sc: Scenario, out_dir=None) -> ExperimentResult:
    """Run one scenario and write its artifacts under ``out_dir/<name>``.

    Status 0 when the run completes with final errors within
    ``final_error`` (and, for robustness scenarios, a PASS verdict), 1 on a
    failed criterion, 2 when the simulation stops on an error.
    """
    root = output_root(out_dir) / sc.name
    root.mkdir(parents=True, exist_ok=True)
    log = run_scenario(sc)
    files = []
    csv_path = root / "trajectory.csv"
    export_csv(log, csv_path)
    files.append(csv_path)
    summary = {"scenario": sc.name, "plant": sc.plant, "completed": log.ok}
    metrics = compute_metrics(log, sc.program, sc.gains) if len(log) else None
    if metrics is not None:
        summary["metrics"] = metrics.as_dict()
    if not log.ok:
        summary["failure"] = log.failure
        summary["failure_time"] = log.failure_time
    status = EXIT_PASS
    message = "PASS"
    if not log.ok:
        status, message = EXIT_ERROR, f"simulation stopped at t={log.failure_time}: {log.failure}"
    elif max(metrics.final_theta_err, metrics.final_pitch_err) > sc.final_error:
        status, message = EXIT_FAIL, "final tracking errors above threshold"

    verdict = None
    if sc.robustness is not None:
        ref = run_scenario(sc, plant="simplified")
        ref_path = root / "trajectory_simplified.csv"
        export_csv(ref, ref_path)
        files.append(ref_path)
        v = robustness_compare(ref, log, sc.robustness, sc.program, sc.t_final)
        verdict = v.as_dict()
        vpath = root / "verdict.yaml"
        _write_yaml(vpath, verdict)
        files.append(vpath)
        if not v.passed and status == EXIT_PASS:
            status, message = EXIT_FAIL, "robustness verdict FAIL: " + "; ".join(v.reasons)
    summary["status"] = message
    mpath = root / "summary.yaml"
    _write_yaml(mpath, summary)
    files.append(mpath)
    return ExperimentResult(status, metrics, verdict, files, message)


def run_sweep(sc: Scenario, param: str, values, out_dir=None) -> list[tuple[float, ExperimentResult]]:
    """Run ``sc`` once per value of the dotted parameter ``param``."""
    results = []
    for val in values:
        variant = sc.with_value(param, float(val))
        variant = replace(variant, name=f"{sc.name}__{param}={val:g}", sweep=None)
        results.append((float(val), run_experiment(variant, out_dir)))
    return results
