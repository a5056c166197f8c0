"""Scenario definitions: built-in setups, config parsing, runs, and sweeps.

A scenario bundles a curve, a plant, a controller, integration settings
and initial states.  Scenarios come either from the built-in table
below or from flat INI-style config files (``key = value`` under
``[section]`` headers); unknown sections or keys are rejected with the
offending name.
"""
import concurrent.futures
import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import svgplot
from .control import (ComparisonOrbitalController, LtiPathController,
                      VesselIntegralController, VesselPathController)
from .curves import cassini_oval, circle, ellipse, find_critical_points
from .plants import LtiPlant, VesselPlant
from .sim import SimConfig, compute_metrics, run_closed_loop, save_trajectory_csv
from .target import TargetOscillator, phase_portrait, save_portrait_csv, save_portrait_svg

__all__ = ["Scenario", "ConfigError", "ScenarioResult", "builtin_scenarios",
           "load_scenario", "parse_config", "build", "run_scenario", "sweep",
           "SWEEP_PARAMETERS"]


class ConfigError(Exception):
    """A scenario config could not be parsed or validated."""


@dataclass
class Scenario:
    name: str
    description: str = ""
    kind: str = "closed_loop"            # or "target_portrait"
    curve: dict = field(default_factory=dict)
    plant: dict = field(default_factory=dict)
    controller: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=lambda: {"csv": True, "svg": True, "metrics": True})
    portrait_grid: int = 5

    def copy(self):
        return Scenario(
            name=self.name, description=self.description, kind=self.kind,
            curve=dict(self.curve), plant=dict(self.plant),
            controller=dict(self.controller), sim=dict(self.sim),
            initial={k: (list(v) if isinstance(v, (list, tuple)) else v)
                     for k, v in self.initial.items()},
            outputs=dict(self.outputs), portrait_grid=self.portrait_grid,
        )


def builtin_scenarios():
    """The six shipped setups, keyed by name."""
    lti_sim = {"step": 0.01, "horizon": 30.0, "stride": 1, "phi_tol": 1e-4}
    vessel_sim = {"step": 0.05, "horizon": 2000.0, "stride": 4, "phi_tol": 10.0}
    vessel_ctl = {"kind": "vessel", "k": 0.1, "w": 0.04, "damping": 1e-5}
    out = {}

    out["fig2-cassini"] = Scenario(
        name="fig2-cassini",
        description="phase portrait of the guiding oscillator on a quartic oval "
                    "with three unstable equilibria",
        kind="target_portrait",
        curve={"kind": "cassini", "a0": 1.0, "b0": 1.2},
        controller={"w": 1.0, "damping": 1.0},
        # the quartic's field is strong on the oval; 5 ms keeps the discrete
        # limit cycle well inside the 1e-4 on-path tolerance
        sim={"step": 0.005, "horizon": 20.0, "stride": 20, "phi_tol": 1e-4},
        portrait_grid=5,
    )
    out["fig3-lti"] = Scenario(
        name="fig3-lti",
        description="linear benchmark converging to the unit circle with bounded "
                    "internal coordinate",
        curve={"kind": "circle", "radius": 1.0},
        plant={"kind": "lti", "r3": 1.0},
        controller={"kind": "lti", "k": 2.0, "w": 0.5, "damping": 0.5},
        sim=dict(lti_sim),
        initial={"q": [2.0, 0.5, 1.0], "p": [0.0, 0.0, 1.0]},
    )
    out["fig3-comparison"] = Scenario(
        name="fig3-comparison",
        description="orbit-stabilizing contrast law from two starts: steady radius "
                    "depends on the initial condition",
        curve={"kind": "circle", "radius": 1.0},
        plant={"kind": "lti", "r3": 1.0},
        controller={"kind": "comparison", "w": 0.5, "damping": 0.5},
        sim=dict(lti_sim),
        initial={"q": [1.5, 0.0, 0.0], "p": [0.0, 0.0, 0.0],
                 "q2": [0.5, 0.0, 0.0], "p2": [0.0, 0.0, 0.0]},
    )
    out["fig4-vessel"] = Scenario(
        name="fig4-vessel",
        description="supply vessel hand point following a 100 m circle",
        curve={"kind": "circle", "radius": 100.0},
        plant={"kind": "vessel", "ell": 18.0},
        controller=dict(vessel_ctl),
        sim=dict(vessel_sim),
        initial={"q": [120.0, -90.0, 0.0], "p": [0.0, 0.0, 0.0]},
    )
    out["fig5-current"] = Scenario(
        name="fig5-current",
        description="static vessel law under a constant ocean current: bounded "
                    "steady offset from the path",
        curve={"kind": "circle", "radius": 100.0},
        plant={"kind": "vessel", "ell": 18.0, "current": [2.0, 1.0]},
        controller=dict(vessel_ctl),
        sim=dict(vessel_sim),
        initial={"q": [120.0, -90.0, 0.0], "p": [0.0, 0.0, 0.0]},
    )
    out["fig6-integral"] = Scenario(
        name="fig6-integral",
        description="integral action under a constant ocean current: steady path "
                    "error removed",
        curve={"kind": "circle", "radius": 100.0},
        plant={"kind": "vessel", "ell": 18.0, "current": [5.0, 1.0]},
        controller={"kind": "vessel_integral", "k_p": 0.1, "k_i": 5e-7,
                    "w": 0.04, "damping": 1e-5},
        sim=dict(vessel_sim),
        initial={"q": [120.0, -90.0, 0.0], "p": [0.0, 0.0, 0.0], "theta": [0.0, 0.0]},
    )
    return out


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

_SECTION_KEYS = {
    "scenario": {"name", "kind", "description", "portrait_grid"},
    "curve": {"kind", "radius", "center", "a0", "b0", "semi_x", "semi_y"},
    "plant": {"kind", "r3", "ell", "current", "m11", "m22", "m23", "m32", "m33",
              "d11", "d22", "d23", "d32", "d33"},
    "controller": {"kind", "k", "w", "damping", "k_p", "k_i"},
    "sim": {"step", "horizon", "stride", "divergence_bound", "phi_tol"},
    "initial": {"q", "p", "theta", "q2", "p2"},
    "outputs": {"csv", "svg", "metrics"},
}
_VECTOR_KEYS = {"center", "current", "q", "p", "theta", "q2", "p2"}
_STRING_KEYS = {"name", "kind", "description"}
_BOOL_KEYS = {"csv", "svg", "metrics"}
_INT_KEYS = {"stride", "portrait_grid"}


def _convert(section, key, raw):
    raw = raw.strip()
    if key in _STRING_KEYS:
        return raw
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "yes", "1", "on"):
            return True
        if raw.lower() in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"[{section}] {key}: expected a boolean, got {raw!r}")
    try:
        if key in _VECTOR_KEYS:
            return [float(tok) for tok in raw.split()]
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None


def parse_config(path):
    """Scenario from a flat key = value config file."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), strict=True)
    try:
        with open(path) as fh:
            cp.read_file(fh, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None

    sc = Scenario(name=Path(path).stem)
    for section in cp.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            value = _convert(section, key, raw)
            if section == "scenario":
                setattr(sc, key, value)
            elif section == "outputs":
                sc.outputs[key] = value
            else:
                getattr(sc, section)[key] = value
    return sc


def load_scenario(ref):
    """Resolve a builtin name or a config file path."""
    table = builtin_scenarios()
    if ref in table:
        return table[ref]
    if Path(ref).exists():
        return parse_config(ref)
    raise ConfigError(f"{ref!r} is neither a builtin scenario nor a config file")


# ---------------------------------------------------------------------------
# building the objects
# ---------------------------------------------------------------------------

def _build_curve(spec):
    kind = spec.get("kind", "circle")
    try:
        if kind == "circle":
            return circle(radius=spec.get("radius", 1.0),
                          center=spec.get("center", (0.0, 0.0)))
        if kind == "cassini":
            return cassini_oval(a0=spec.get("a0", 1.0), b0=spec.get("b0", 1.2))
        if kind == "ellipse":
            return ellipse(semi_x=spec.get("semi_x", 2.0), semi_y=spec.get("semi_y", 1.0),
                           center=spec.get("center", (0.0, 0.0)))
    except ValueError as exc:
        raise ConfigError(f"curve: {exc}") from None
    raise ConfigError(f"unknown curve kind {kind!r} (custom curves are code-registered only)")


def _build_target(curve, ctl):
    damping = ctl.get("damping", 1.0)
    if np.isscalar(damping):
        damping = float(damping) * np.eye(2)
    try:
        return TargetOscillator(curve, damping=damping, speed=ctl.get("w", 1.0))
    except ValueError as exc:
        raise ConfigError(f"target: {exc}") from None


def _build_plant(spec):
    kind = spec.get("kind", "lti")
    params = {k: v for k, v in spec.items() if k != "kind"}
    try:
        if kind == "lti":
            return LtiPlant(r3=params.pop("r3", 1.0))
        if kind == "vessel":
            ell = params.pop("ell", 18.0)
            current = params.pop("current", (0.0, 0.0))
            return VesselPlant(ell=ell, current=current, **params)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"plant: {exc}") from None
    raise ConfigError(f"unknown plant kind {kind!r}")


def _build_controller(ctl, target, plant):
    kind = ctl.get("kind", "lti")
    try:
        if kind == "lti":
            return LtiPathController(target, plant, gain=ctl.get("k", 1.0))
        if kind == "comparison":
            return ComparisonOrbitalController(target, plant)
        if kind == "vessel":
            return VesselPathController(target, plant, gain=ctl.get("k", 0.1))
        if kind == "vessel_integral":
            return VesselIntegralController(target, plant,
                                            k_p=ctl.get("k_p", 0.1),
                                            k_i=ctl.get("k_i", 1e-6))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"controller: {exc}") from None
    raise ConfigError(f"unknown controller kind {kind!r}")


def build(scenario):
    """Instantiate (curve, target, plant, controller) for a scenario."""
    curve = _build_curve(scenario.curve)
    target = _build_target(curve, scenario.controller)
    if scenario.kind == "target_portrait":
        return curve, target, None, None
    plant = _build_plant(scenario.plant)
    controller = _build_controller(scenario.controller, target, plant)
    return curve, target, plant, controller


def _sim_config(spec):
    try:
        return SimConfig(
            step=spec.get("step", 0.01),
            horizon=spec.get("horizon", 30.0),
            record_stride=int(spec.get("stride", 1)),
            divergence_bound=spec.get("divergence_bound", 100.0),
        )
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from None


def portrait_seeds(curve, grid_n, exclusion=1e-3):
    """grid_n x grid_n seeds over the domain box, minus near-critical points."""
    (x0, x1), (y0, y1) = curve.curve_box
    xs = np.linspace(x0, x1, grid_n)
    ys = np.linspace(y0, y1, grid_n)
    crit = find_critical_points(curve)
    seeds = []
    for x in xs:
        for y in ys:
            p = np.array([x, y])
            if all(np.hypot(*(p - c)) > exclusion for c in crit):
                seeds.append(p)
    return np.array(seeds)


@dataclass
class ScenarioResult:
    name: str
    files: list
    metrics: dict
    diverged: bool
    trajectories: list


def _steady_radius(traj, frac=0.25):
    n = len(traj.t)
    tail = slice(max(0, int((1 - frac) * n)), n)
    return float(np.mean(np.hypot(traj.q_y[tail, 0], traj.q_y[tail, 1])))


def run_scenario(scenario, outdir=".", seed=0):
    """Run one scenario and write its csv / svg / metrics artifacts."""
    if isinstance(scenario, str):
        scenario = load_scenario(scenario)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    rng = np.random.default_rng(seed)   # reserved for randomized seeding modes
    del rng

    if scenario.kind == "target_portrait":
        curve, target, _, _ = build(scenario)
        seeds = portrait_seeds(curve, scenario.portrait_grid)
        trajs = phase_portrait(target, seeds,
                               horizon=scenario.sim.get("horizon", 20.0),
                               step=scenario.sim.get("step", 0.01))
        stride = int(scenario.sim.get("stride", 1))
        for tr in trajs:
            tr.t, tr.xi, tr.phi = tr.t[::stride], tr.xi[::stride], tr.phi[::stride]
        tol = scenario.sim.get("phi_tol", 1e-4)
        finals = [tr.final_abs_phi for tr in trajs]
        metrics = {
            "n_seeds": len(trajs),
            "n_converged": int(sum(f < tol for f in finals)),
            "phi_tol": tol,
            "max_final_abs_phi": float(max(finals)),
            "median_final_abs_phi": float(np.median(finals)),
        }
        if scenario.outputs.get("csv", True):
            f = outdir / f"{scenario.name}.csv"
            save_portrait_csv(trajs, f)
            files.append(f)
        if scenario.outputs.get("svg", True):
            f = outdir / f"{scenario.name}.svg"
            save_portrait_svg(target, trajs, f, title=scenario.description or scenario.name)
            files.append(f)
        if scenario.outputs.get("metrics", True):
            f = outdir / f"{scenario.name}.metrics.json"
            _write_json(f, metrics)
            files.append(f)
        return ScenarioResult(scenario.name, files, metrics, False, trajs)

    curve, target, plant, controller = build(scenario)
    config = _sim_config(scenario.sim)
    initials = [(np.asarray(scenario.initial.get("q", [0.0, 0.0, 0.0]), float),
                 np.asarray(scenario.initial.get("p", [0.0, 0.0, 0.0]), float))]
    if "q2" in scenario.initial:
        initials.append((np.asarray(scenario.initial["q2"], float),
                         np.asarray(scenario.initial.get("p2", [0.0, 0.0, 0.0]), float)))
    theta0 = scenario.initial.get("theta")

    gains_echo = {f"controller.{k}": v for k, v in scenario.controller.items()}
    gains_echo.update({"curve": curve.name, "plant": scenario.plant.get("kind", "none"),
                       "scenario": scenario.name})

    trajs = []
    for q0, p0 in initials:
        trajs.append(run_closed_loop(plant, controller, target, config,
                                     np.concatenate([q0, p0]), theta0=theta0))

    tol = scenario.sim.get("phi_tol", 1e-4)
    metrics = {"runs": [compute_metrics(tr, tol).to_dict() for tr in trajs],
               "phi_tol": tol}
    if len(trajs) > 1:
        radii = [_steady_radius(tr) for tr in trajs]
        metrics["steady_radii"] = radii
        metrics["steady_radius_gap"] = abs(radii[0] - radii[1]) / max(radii)
    diverged = any(tr.diverged for tr in trajs)

    if scenario.outputs.get("csv", True):
        for i, tr in enumerate(trajs):
            suffix = "" if i == 0 else f"_{i + 1}"
            f = outdir / f"{scenario.name}{suffix}.csv"
            save_trajectory_csv(tr, f, header=gains_echo)
            files.append(f)
    if scenario.outputs.get("svg", True):
        f = outdir / f"{scenario.name}.svg"
        svgplot.render_closed_loop(curve, trajs, f,
                                   title=scenario.description or scenario.name)
        files.append(f)
    if scenario.outputs.get("metrics", True):
        f = outdir / f"{scenario.name}.metrics.json"
        _write_json(f, metrics)
        files.append(f)
    return ScenarioResult(scenario.name, files, metrics, diverged, trajs)


def _write_json(path, obj):
    import json

    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# parameter sweeps
# ---------------------------------------------------------------------------

SWEEP_PARAMETERS = ("k", "w", "ell", "k_p", "k_I", "step")

_METRIC_FIELDS = ["final_abs_phi", "max_abs_state", "settling_time", "z_decay_rate",
                  "min_speed_on_path", "invariance_drift", "qn_dot_bound"]


def _apply_sweep_value(scenario, param, value):
    sc = scenario.copy()
    if param == "k":
        sc.controller["k"] = value
    elif param == "w":
        sc.controller["w"] = value
    elif param == "k_p":
        sc.controller["k_p"] = value
    elif param == "k_I":
        sc.controller["k_i"] = value
    elif param == "ell":
        sc.plant["ell"] = value
    elif param == "step":
        sc.sim["step"] = value
    else:
        raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMETERS}")
    return sc


def sweep(scenario, param, values, outdir=".", workers=None):
    """One run per value; rows for invalid values are marked rejected.

    Runs fan out across worker threads; the result rows keep the input
    order and go to <name>.sweep.<param>.csv.
    """
    if isinstance(scenario, str):
        scenario = load_scenario(scenario)
    if param not in SWEEP_PARAMETERS:
        raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMETERS}, got {param!r}")
    if scenario.kind != "closed_loop":
        raise ConfigError("sweeps make sense only for closed-loop scenarios")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    def one(value):
        sc = _apply_sweep_value(scenario, param, value)
        sc.outputs = {"csv": False, "svg": False, "metrics": False}
        try:
            curve, target, plant, controller = build(sc)
            config = _sim_config(sc.sim)
        except ConfigError as exc:
            return {"status": "rejected", "reason": str(exc)}
        q0 = np.asarray(sc.initial.get("q", [0.0, 0.0, 0.0]), float)
        p0 = np.asarray(sc.initial.get("p", [0.0, 0.0, 0.0]), float)
        traj = run_closed_loop(plant, controller, target, config,
                               np.concatenate([q0, p0]),
                               theta0=sc.initial.get("theta"))
        m = compute_metrics(traj, sc.sim.get("phi_tol", 1e-4))
        status = "diverged" if traj.diverged else "ok"
        return {"status": status, "reason": "", **m.to_dict()}

    max_workers = workers or min(len(values), 8)
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as pool:
        rows = list(pool.map(one, values))

    path = outdir / f"{scenario.name}.sweep.{param}.csv"
    with open(path, "w") as fh:
        fh.write(f"# scenario = {scenario.name}\n# parameter = {param}\n")
        fh.write(",".join([param, "status", "reason"] + _METRIC_FIELDS) + "\n")
        for value, row in zip(values, rows):
            cells = [f"{value:.17g}", row["status"], row.get("reason", "")]
            for name in _METRIC_FIELDS:
                v = row.get(name)
                cells.append("" if v is None else f"{v:.17g}")
            fh.write(",".join(cells) + "\n")
    return rows, path
