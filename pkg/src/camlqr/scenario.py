"""Declarative scenario runner: explore, learn, attack, detect, report.

A scenario is described by a JSON-friendly nested dict (see
:data:`CONFIG_DEFAULTS` for the schema and defaults).  :func:`run_scenario`
executes the phases in order

    explore (optionally with the actuation coupling active)
    -> build data matrices -> learn gain -> oracle comparison
    -> attacker identification -> closed loop with injection + twin run
    -> detector calibration/detection -> artifacts (CSV, JSON, plots)

and is fully deterministic given the config and seed.  Module errors are
re-raised with the failing phase named; artifacts written before the failure
are retained.
"""

from __future__ import annotations

import copy
import json
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import adversary, detector, learner
from .data import build_data_matrices, check_rank
from .errors import CamlqrError, ConfigError, IoFailure
from .linalg import (
    HURWITZ_TOL,
    CostSpec,
    kleinman_solve,
    spectral_abscissa,
    stabilizing_gain,
)
from .plant import (
    CamouflageMap,
    LTIModel,
    compute_cost,
    make_sum_of_sinusoids,
    multi_agent_benchmark,
    simulate,
)

logger = logging.getLogger("camlqr")

BUILTIN_SCENARIOS = ("nominal_attack", "arrl_attack")

#: Full configuration schema with the default for every optional field.
CONFIG_DEFAULTS = {
    "name": "scenario",
    "seed": 7,
    "out_dir": None,
    "plant": {"builtin": None, "a_csv": None, "b_csv": None, "x0": None},
    "cost": {"q_csv": None, "r_csv": None, "q_scale": None, "r_scale": None},
    "timing": {"dt": 0.01, "exploration_duration": 2.0,
               "control_duration": 13.0},
    "exploration": {"terms_per_channel": 100, "amplitude": 1.0,
                    "freq_range": [0.5, 100.0]},
    "camouflage": None,
    "learner": {"mode": "nominal", "tol": 1e-6, "max_iter": 30,
                "initial_gain": "zero", "window": None, "windows": None},
    "attack": None,
    "detector": {"margin": 3.0, "persistence": 5, "noise_floor": 1e-9,
                 "calibration_window": None},
}

_CAMOUFLAGE_DEFAULTS = {"kind": "harmonic_pair", "scale": 0.3, "offset": 0.02,
                        "omega": 1.0, "mixing": "identity", "c_csv": None,
                        "gamma": None}
_ATTACK_DEFAULTS = {"onset": 5.0, "identification": "exact", "eps_sc": 2.0,
                    "sign": -1.0, "freeze_time": 0.0,
                    "zeta": {"kind": "constant", "magnitude": 1.0,
                             "freq": 1.0, "phase": 0.0}}


def _merge_section(name: str, given, defaults: dict) -> dict:
    if given is None:
        return copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise ConfigError(f"section {name!r} must be an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(
            f"unknown keys in section {name!r}: {sorted(unknown)}"
        )
    merged = copy.deepcopy(defaults)
    merged.update(copy.deepcopy(given))
    return merged


@dataclass
class ScenarioConfig:
    """Normalized scenario description (all defaults applied)."""

    data: dict

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def __getitem__(self, key):
        return self.data[key]

    def validate(self) -> None:
        problems = validate_config(self)
        if problems:
            raise ConfigError("; ".join(problems))


def parse_config(source) -> ScenarioConfig:
    """Parse a config from a dict or a JSON file path; apply all defaults."""
    if isinstance(source, ScenarioConfig):
        raw = source.to_dict()
    elif isinstance(source, dict):
        raw = copy.deepcopy(source)
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {source} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - set(CONFIG_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    cfg = {
        "name": str(raw.get("name", CONFIG_DEFAULTS["name"])),
        "seed": int(raw.get("seed", CONFIG_DEFAULTS["seed"])),
        "out_dir": raw.get("out_dir"),
        "plant": _merge_section("plant", raw.get("plant"),
                                CONFIG_DEFAULTS["plant"]),
        "cost": _merge_section("cost", raw.get("cost"),
                               CONFIG_DEFAULTS["cost"]),
        "timing": _merge_section("timing", raw.get("timing"),
                                 CONFIG_DEFAULTS["timing"]),
        "exploration": _merge_section("exploration", raw.get("exploration"),
                                      CONFIG_DEFAULTS["exploration"]),
        "learner": _merge_section("learner", raw.get("learner"),
                                  CONFIG_DEFAULTS["learner"]),
        "detector": _merge_section("detector", raw.get("detector"),
                                   CONFIG_DEFAULTS["detector"]),
        "camouflage": None,
        "attack": None,
    }
    if raw.get("camouflage") is not None:
        cfg["camouflage"] = _merge_section("camouflage", raw["camouflage"],
                                           _CAMOUFLAGE_DEFAULTS)
    if raw.get("attack") is not None:
        att = _merge_section("attack", raw["attack"], _ATTACK_DEFAULTS)
        att["zeta"] = _merge_section("attack.zeta", att.get("zeta"),
                                     _ATTACK_DEFAULTS["zeta"])
        cfg["attack"] = att
    for key in ("dt", "exploration_duration", "control_duration"):
        cfg["timing"][key] = float(cfg["timing"][key])
    cfg["exploration"]["amplitude"] = float(cfg["exploration"]["amplitude"])
    cfg["exploration"]["terms_per_channel"] = int(
        cfg["exploration"]["terms_per_channel"])
    fr = cfg["exploration"]["freq_range"]
    if not (isinstance(fr, (list, tuple)) and len(fr) == 2):
        raise ConfigError("exploration.freq_range must be a [low, high] pair")
    cfg["exploration"]["freq_range"] = [float(fr[0]), float(fr[1])]
    return ScenarioConfig(data=cfg)


def validate_config(config: ScenarioConfig) -> list:
    """Semantic validation; returns a list of human-readable problems."""
    cfg = config.data
    problems = []
    plant = cfg["plant"]
    if plant["builtin"] is None and (plant["a_csv"] is None
                                     or plant["b_csv"] is None):
        problems.append("plant requires either 'builtin' or both "
                        "'a_csv'/'b_csv'")
    if plant["builtin"] is not None and plant["builtin"] != \
            "multi_agent_benchmark":
        problems.append(f"unknown builtin plant {plant['builtin']!r}")
    if plant["builtin"] is None and plant["x0"] is None:
        problems.append("file-based plants require plant.x0")
    if plant["builtin"] is None:
        cost = cfg["cost"]
        has_csv = cost["q_csv"] is not None and cost["r_csv"] is not None
        has_scale = cost["q_scale"] is not None and cost["r_scale"] is not None
        if not (has_csv or has_scale):
            problems.append("file-based plants require cost matrices "
                            "(q_csv/r_csv or q_scale/r_scale)")
    timing = cfg["timing"]
    if timing["dt"] <= 0:
        problems.append("timing.dt must be positive")
    if timing["exploration_duration"] < timing["dt"]:
        problems.append("exploration_duration must cover at least one step")
    if timing["control_duration"] < timing["dt"]:
        problems.append("control_duration must cover at least one step")
    lo, hi = cfg["exploration"]["freq_range"]
    if not (0 < lo < hi):
        problems.append("exploration.freq_range must satisfy 0 < low < high")
    if timing["dt"] > 0 and hi >= np.pi / timing["dt"]:
        problems.append(
            f"exploration.freq_range high end {hi} must stay below "
            f"pi/dt = {np.pi / timing['dt']:.6g}"
        )
    mode = cfg["learner"]["mode"]
    if mode not in ("nominal", "arrl"):
        problems.append(f"learner.mode must be 'nominal' or 'arrl', got {mode!r}")
    if mode == "arrl" and cfg["camouflage"] is None:
        problems.append("learner.mode 'arrl' requires a camouflage section")
    if cfg["camouflage"] is not None:
        cam = cfg["camouflage"]
        if cam["kind"] != "harmonic_pair":
            problems.append(f"unknown camouflage.kind {cam['kind']!r}")
        if cam["mixing"] not in ("identity",) and cam["c_csv"] is None:
            problems.append("camouflage.mixing must be 'identity' or supply "
                            "c_csv")
        if cam["scale"] == 0:
            problems.append("camouflage.scale must be nonzero")
    att = cfg["attack"]
    if att is not None:
        t_explore = timing["exploration_duration"]
        t_end = t_explore + timing["control_duration"]
        if not (t_explore < att["onset"] <= t_end):
            problems.append(
                f"attack.onset {att['onset']} must lie after exploration "
                f"({t_explore}) and within the run (<= {t_end})"
            )
        if att["identification"] not in ("estimated", "exact", "worst_case"):
            problems.append(
                f"attack.identification must be estimated/exact/worst_case, "
                f"got {att['identification']!r}"
            )
        if att["identification"] == "worst_case" and cfg["camouflage"] is None:
            problems.append("worst_case identification requires a camouflage "
                            "section")
        if att["zeta"]["kind"] not in ("constant", "sinusoid", "ramp"):
            problems.append(f"unknown attack.zeta.kind {att['zeta']['kind']!r}")
    det = cfg["detector"]
    if det["margin"] <= 0:
        problems.append("detector.margin must be positive")
    if int(det["persistence"]) < 1:
        problems.append("detector.persistence must be >= 1")
    win = det["calibration_window"]
    if win is not None and not (isinstance(win, (list, tuple))
                                and len(win) == 2 and win[0] < win[1]):
        problems.append("detector.calibration_window must be a [start, end] "
                        "pair with start < end")
    ig = cfg["learner"]["initial_gain"]
    if not (ig in ("zero", "identity") or isinstance(ig, str)):
        problems.append("learner.initial_gain must be 'zero', 'identity', or "
                        "a CSV path")
    return problems


def builtin_config(name: str, out_dir=None, seed: int = 7) -> ScenarioConfig:
    """The two shipped end-to-end scenarios.

    ``nominal_attack``: plain exploration, nominal learner, then a covert
    injection backed by an exact surrogate — the attack must stay invisible
    to the detector while the actual states drift.

    ``arrl_attack``: coupled exploration, coupling-aware learner, then the
    same injection backed by the surrogate a coupled-data eavesdropper would
    hold — the attack must trip the detector quickly.
    """
    if name == "nominal_attack":
        raw = {
            "name": "nominal_attack",
            "seed": seed,
            "out_dir": out_dir,
            "plant": {"builtin": "multi_agent_benchmark"},
            "timing": {"dt": 0.01, "exploration_duration": 2.0,
                       "control_duration": 13.0},
            "learner": {"mode": "nominal", "initial_gain": "identity"},
            "attack": {"onset": 5.0, "identification": "exact",
                       "zeta": {"kind": "constant", "magnitude": 1.0}},
            "detector": {"calibration_window": [4.0, 5.0]},
        }
    elif name == "arrl_attack":
        raw = {
            "name": "arrl_attack",
            "seed": seed,
            "out_dir": out_dir,
            "plant": {"builtin": "multi_agent_benchmark"},
            "timing": {"dt": 0.01, "exploration_duration": 2.0,
                       "control_duration": 8.0},
            "camouflage": {"kind": "harmonic_pair", "scale": 0.3,
                           "offset": 0.02, "omega": 1.0,
                           "mixing": "identity"},
            "learner": {"mode": "arrl", "initial_gain": "identity"},
            "attack": {"onset": 5.0, "identification": "worst_case",
                       "eps_sc": 2.0, "sign": -1.0, "freeze_time": 0.0,
                       "zeta": {"kind": "constant", "magnitude": 1.0}},
            "detector": {"calibration_window": [4.0, 5.0]},
        }
    else:
        raise ConfigError(
            f"unknown builtin scenario {name!r}; available: "
            f"{', '.join(BUILTIN_SCENARIOS)}"
        )
    return parse_config(raw)


@dataclass
class ScenarioReport:
    """All scenario outcomes, with in-memory handles for downstream use."""

    name: str
    seed: int
    out_dir: str
    gain: np.ndarray = None
    oracle_gain: np.ndarray = None
    oracle_gap_rel: float = None
    rank: dict = None
    learner_summary: dict = None
    eavesdrop: dict = None
    attack: dict = None
    costs: dict = None
    detector_summary: dict = None
    warnings: list = field(default_factory=list)
    files: list = field(default_factory=list)
    # In-memory handles (not serialized).
    explore_log: object = field(default=None, repr=False)
    control_log: object = field(default=None, repr=False)
    twin_log: object = field(default=None, repr=False)
    gain_result: object = field(default=None, repr=False)
    data_matrices: object = field(default=None, repr=False)
    detector_config: object = field(default=None, repr=False)
    model: object = field(default=None, repr=False)
    cost_spec: object = field(default=None, repr=False)
    camouflage_map: object = field(default=None, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "gain": self.gain.tolist() if self.gain is not None else None,
            "oracle_gain": self.oracle_gain.tolist()
            if self.oracle_gain is not None else None,
            "oracle_gap_rel": self.oracle_gap_rel,
            "rank": self.rank,
            "learner": self.learner_summary,
            "eavesdrop": self.eavesdrop,
            "attack": self.attack,
            "costs": self.costs,
            "detector": self.detector_summary,
            "warnings": self.warnings,
            "files": sorted(self.files),
        }


class ScenarioPhaseError(CamlqrError):
    """A module failure annotated with the scenario phase that hit it."""

    def __init__(self, phase: str, original: Exception):
        super().__init__(f"phase {phase!r}: {original}")
        self.phase = phase
        self.original = original


@contextmanager
def _phase(name: str):
    try:
        yield
    except ScenarioPhaseError:
        raise
    except CamlqrError as exc:
        raise ScenarioPhaseError(name, exc) from exc


def _load_matrix_csv(path, name: str) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read {name} matrix {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{name} matrix {path} is not numeric CSV: {exc}") from exc


def _resolve_plant(cfg: dict):
    plant = cfg["plant"]
    if plant["builtin"] == "multi_agent_benchmark":
        model, cost, x0 = multi_agent_benchmark()
        if plant["x0"] is not None:
            x0 = np.asarray(plant["x0"], dtype=float)
    else:
        A = _load_matrix_csv(plant["a_csv"], "A")
        B = _load_matrix_csv(plant["b_csv"], "B")
        model = LTIModel(A=A, B=B)
        x0 = np.asarray(plant["x0"], dtype=float)
        cost = None
    cost_cfg = cfg["cost"]
    if cost_cfg["q_csv"] is not None and cost_cfg["r_csv"] is not None:
        cost = CostSpec(Q=_load_matrix_csv(cost_cfg["q_csv"], "Q"),
                        R=_load_matrix_csv(cost_cfg["r_csv"], "R"))
    elif cost_cfg["q_scale"] is not None and cost_cfg["r_scale"] is not None:
        cost = CostSpec(Q=float(cost_cfg["q_scale"]) * np.eye(model.n),
                        R=float(cost_cfg["r_scale"]) * np.eye(model.m))
    if cost is None:
        raise ConfigError("no cost specification available for this plant")
    if x0.size != model.n:
        raise ConfigError(f"x0 must have length {model.n}, got {x0.size}")
    return model, cost, x0


def _resolve_camouflage(cfg: dict, model: LTIModel) -> CamouflageMap | None:
    cam = cfg["camouflage"]
    if cam is None:
        return None
    scale = float(cam["scale"])
    offset = float(cam["offset"])
    omega = float(cam["omega"])

    def f(t):
        return scale * (np.sin(omega * t) + np.cos(omega * t) + offset)

    if cam["c_csv"] is not None:
        C = _load_matrix_csv(cam["c_csv"], "C")
    else:
        if model.m != model.n:
            raise ConfigError(
                "camouflage.mixing 'identity' needs m == n; supply c_csv"
            )
        C = np.eye(model.m)
    gamma = cam["gamma"]
    if gamma is None:
        sigma = float(np.linalg.svd(C, compute_uv=False)[0])
        gamma = abs(scale) * (np.sqrt(2.0) + abs(offset)) * sigma
    return CamouflageMap(f=f, C=C, gamma=float(gamma))


def _resolve_initial_gain(spec, m: int, n: int):
    if spec == "zero" or spec is None:
        return None
    if spec == "identity":
        if m != n:
            raise ConfigError("initial_gain 'identity' needs m == n")
        return np.eye(n)
    K0 = _load_matrix_csv(spec, "initial gain")
    if K0.shape != (m, n):
        raise ConfigError(f"initial gain must be {m}x{n}, got {K0.shape}")
    return K0


def oracle_gain(model: LTIModel, cost: CostSpec):
    """Model-based reference gain, bootstrapped when the plant is not stable."""
    if spectral_abscissa(model.A) < HURWITZ_TOL:
        K0 = None
    else:
        K0 = stabilizing_gain(model.A, model.B)
    return kleinman_solve(model, cost, K0=K0).K_final


def run_scenario(config: ScenarioConfig, out_dir=None, seed=None,
                 render_plots: bool = True) -> ScenarioReport:
    """Execute a validated scenario end to end and write all artifacts."""
    config = parse_config(config)
    if seed is not None:
        config.data["seed"] = int(seed)
    if out_dir is not None:
        config.data["out_dir"] = str(out_dir)
    config.validate()
    cfg = config.data
    out = cfg["out_dir"] or os.path.join("out", cfg["name"])
    cfg["out_dir"] = str(out)
    os.makedirs(out, exist_ok=True)

    report = ScenarioReport(name=cfg["name"], seed=cfg["seed"], out_dir=out)

    def _emit(filename: str, writer) -> str:
        path = os.path.join(out, filename)
        writer(path)
        report.files.append(filename)
        return path

    def _write_text(text: str):
        def writer(path):
            try:
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(text)
            except OSError as exc:
                raise IoFailure(f"cannot write {path}: {exc}") from exc
        return writer

    _emit("config.json", _write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"))

    with _phase("setup"):
        model, cost, x0 = _resolve_plant(cfg)
        report.model, report.cost_spec = model, cost
        cam = _resolve_camouflage(cfg, model)
        report.camouflage_map = cam
        timing = cfg["timing"]
        dt = timing["dt"]
        t_explore = timing["exploration_duration"]
        exploration = make_sum_of_sinusoids(
            seed=cfg["seed"], m=model.m,
            terms_per_channel=cfg["exploration"]["terms_per_channel"],
            amplitude=cfg["exploration"]["amplitude"],
            freq_range=tuple(cfg["exploration"]["freq_range"]))
        if cam is not None:
            n_probe = int(round(t_explore / dt)) * 10
            cam.validate_nonvanishing(np.linspace(0.0, t_explore, n_probe + 1))

    with _phase("explore"):
        explore_log = simulate(model, x0, t_explore, dt,
                               exploration=exploration, camouflage=cam)
        report.explore_log = explore_log
        _emit("explore_log.csv", explore_log.to_csv)

    with _phase("build_data"):
        window = cfg["learner"]["window"] or dt
        mode = cfg["learner"]["mode"]
        D = build_data_matrices(explore_log, T=float(window),
                                l=cfg["learner"]["windows"],
                                with_psi=(mode == "arrl"))
        report.data_matrices = D
        rank_report = check_rank(D, mode)
        report.rank = rank_report.to_dict()
        if not rank_report.satisfied:
            msg = (f"excitation rank {rank_report.achieved} below the "
                   f"{mode} requirement {rank_report.required}; proceeding "
                   "(the learner enforces its own identifiability gates)")
            logger.warning(msg)
            report.warnings.append(msg)
        _emit("data_matrices.csv", D.to_csv)

    with _phase("learn"):
        K0 = _resolve_initial_gain(cfg["learner"]["initial_gain"],
                                   model.m, model.n)
        learn_fn = learner.arrl if mode == "arrl" else learner.nominal_rl
        result = learn_fn(D, cost, K0=K0, tol=float(cfg["learner"]["tol"]),
                          max_iter=int(cfg["learner"]["max_iter"]))
        report.gain_result = result
        report.gain = result.K_final
        _emit("K.csv", lambda p: np.savetxt(p, result.K_final, fmt="%.11e",
                                            delimiter=","))

    with _phase("oracle"):
        K_star = oracle_gain(model, cost)
        report.oracle_gain = K_star
        report.oracle_gap_rel = float(
            np.linalg.norm(result.K_final - K_star) / np.linalg.norm(K_star))
        _emit("oracle_K.csv", lambda p: np.savetxt(p, K_star, fmt="%.11e",
                                                   delimiter=","))
        for fname in learner.write_gain_report(result, out, oracle_gain=K_star):
            report.files.append(os.path.basename(fname))
        report.learner_summary = {
            "mode": mode,
            "converged": result.converged,
            "iterations": result.n_iterations,
            "final_update_norm": result.final_update_norm,
            "condition_numbers": [float(c) for c in result.condition_numbers],
        }

    with _phase("eavesdrop"):
        try:
            est = adversary.eavesdrop_identify(explore_log)
            report.eavesdrop = {
                "rel_err_A": float(np.linalg.norm(est.A_tilde - model.A)
                                   / np.linalg.norm(model.A)),
                "rel_err_B": float(np.linalg.norm(est.B_tilde - model.B)
                                   / np.linalg.norm(model.B)),
                "fit_residual": est.fit_residual,
            }
            for fname in est.save(out, prefix="eavesdrop"):
                report.files.append(os.path.basename(fname))
        except CamlqrError as exc:
            est = None
            report.eavesdrop = {"error": str(exc)}

    att = cfg["attack"]
    plan = None
    if att is not None:
        with _phase("attack_plan"):
            ident_mode = att["identification"]
            if ident_mode == "exact":
                identified = adversary.exact_model(model)
            elif ident_mode == "worst_case":
                identified = adversary.worst_case_model(
                    model, cam, t0=float(att["freeze_time"]),
                    eps_sc=float(att["eps_sc"]), sign=float(att["sign"]))
            else:
                if est is None:
                    raise ScenarioPhaseError(
                        "attack_plan",
                        CamlqrError("estimated identification unavailable: "
                                    + report.eavesdrop.get("error", "")))
                identified = est
            zeta_cfg = att["zeta"]
            zeta = adversary.ZetaSignal(kind=zeta_cfg["kind"],
                                        magnitude=zeta_cfg["magnitude"],
                                        freq=float(zeta_cfg["freq"]),
                                        phase=float(zeta_cfg["phase"]))
            plan = adversary.AttackPlan(onset=float(att["onset"]), zeta=zeta,
                                        identified=identified)
            for fname in identified.save(out, prefix="attacker_model"):
                report.files.append(os.path.basename(fname))

    with _phase("control"):
        t_control = timing["control_duration"]
        x_start = explore_log.x[-1]
        control_log = simulate(model, x_start, t_control, dt,
                               controller_gain=result.K_final, attack=plan,
                               start_time=t_explore)
        report.control_log = control_log
        _emit("control_log.csv", control_log.to_csv)
        if plan is not None:
            twin_log = simulate(model, x_start, t_control, dt,
                                controller_gain=result.K_final,
                                start_time=t_explore)
            _emit("twin_log.csv", twin_log.to_csv)
        else:
            twin_log = control_log
        report.twin_log = twin_log

    with _phase("detect"):
        det = cfg["detector"]
        t_end = float(control_log.t[-1])
        if det["calibration_window"] is not None:
            cal_win = (float(det["calibration_window"][0]),
                       float(det["calibration_window"][1]))
        elif plan is not None:
            cal_win = (max(t_explore, plan.onset - 1.0), plan.onset)
        else:
            cal_win = (max(t_explore, t_end - 1.0), t_end)
        det_cfg = detector.calibrate(
            twin_log, margin=float(det["margin"]), window=cal_win,
            persistence=int(det["persistence"]),
            noise_floor=float(det["noise_floor"]))
        report.detector_config = det_cfg
        alarm = detector.alarm_details(control_log, det_cfg)
        report.detector_summary = {
            "threshold": det_cfg.threshold,
            "persistence": det_cfg.persistence,
            "calibration_window": list(cal_win),
            "monitor_start": det_cfg.monitor_start,
            "alarm_time": None if alarm is None else alarm[0],
            "alarm_channel": None if alarm is None else alarm[1],
        }

    with _phase("evaluate"):
        costs = {"J_control_full": compute_cost(
            control_log, cost, float(control_log.t[0]), float(control_log.t[-1]))}
        attack_summary = None
        if plan is not None:
            j_end = min(plan.onset + 5.0, float(control_log.t[-1]))
            costs["window"] = [plan.onset, j_end]
            costs["J_attacked"] = compute_cost(control_log, cost,
                                               plan.onset, j_end)
            costs["J_unattacked"] = compute_cost(twin_log, cost,
                                                 plan.onset, j_end)
            i0, _ = control_log.window_indices(plan.onset,
                                               float(control_log.t[-1]))
            covert_sup = float(np.abs(control_log.xbar[i0:]
                                      - twin_log.xbar[i0:]).max())
            attack_summary = {
                "onset": plan.onset,
                "identification": att["identification"],
                "surrogate_mode": plan.identified.mode,
                "covertness_sup": covert_sup,
                "alarm_time": report.detector_summary["alarm_time"],
                "alarm_channel": report.detector_summary["alarm_channel"],
            }
        report.costs = costs
        report.attack = attack_summary

    if render_plots:
        with _phase("plots"):
            from . import plots
            for fname in plots.emit_plots(report, out_dir=out):
                report.files.append(os.path.basename(fname))

    _emit("report.json", _write_text(
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n"))
    return report
