"""Closed-loop thrust regulation: command -> RCAC PID -> cowl -> plant -> sensor.

The actuator moves the capture radius as r0 = r0_nominal + gain * u and is
clamped to the cowl travel. The measured thrust fed back to the controller
is either the plant's true thrust or the surrogate's estimate from
(r0, Pt4, X_CO, H).
"""
from __future__ import annotations

import csv
import json
import math
import subprocess
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .ann import MlpModel
from .atmosphere import freestream_totals
from .combustor import BurnoutError, Plant, PlantConfig
from .inlet import R0_MAX, R0_MIN, R0_NOMINAL
from .rcac import RcacConfig, RcacState, rcac_pid_step

CSV_HEADER = ("t_s", "command_N", "thrust_true_N", "thrust_pred_N", "z_N", "u", "r0_m",
              "Kp", "Ki", "Kd", "rdot_m_s", "Pt4_Pa", "r3_m", "X_CO")
COMMAND_KINDS = ("step", "doublet", "ramp", "harmonic", "constant")
SETTLE_FRACTION = 0.02


class SimulationError(RuntimeError):
    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


# ---------------------------------------------------------------- commands

@dataclass(frozen=True)
class CommandSignal:
    """Thrust command in N.

    step: 0 before ``t_on``, ``amplitude`` after.
    doublet: ``offset`` with +amplitude on [t_on, t_on + width) and
    -amplitude on [t_on + width, t_on + 2 width).
    ramp: linear interpolation through ``breakpoints`` (t, value), held
    constant outside.
    harmonic: offset + amplitude * sin(2 pi f t + phase).
    constant: ``amplitude`` at all times.
    """

    kind: str = "step"
    amplitude: float = 100.0
    t_on: float = 0.0
    width: float = 40.0
    offset: float = 0.0
    frequency: float = 0.02
    phase: float = 0.0
    breakpoints: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in COMMAND_KINDS:
            raise ValueError(f"unknown command kind {self.kind!r}")
        if self.t_on < 0 or self.width < 0 or self.frequency < 0:
            raise ValueError("command timings and frequency must be nonnegative")
        times = [t for t, _ in self.breakpoints]
        if any(t < 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("ramp breakpoints need increasing nonnegative times")
        if self.kind == "ramp" and not self.breakpoints:
            raise ValueError("ramp command needs breakpoints")

    @property
    def scale(self) -> float:
        """Largest commanded magnitude, the reference for relative error bands."""
        if self.kind == "ramp":
            return max(abs(v) for _, v in self.breakpoints)
        if self.kind in ("doublet", "harmonic"):
            return abs(self.offset) + abs(self.amplitude)
        return abs(self.amplitude)


def command_value(signal: CommandSignal, t: float) -> float:
    if t < 0:
        raise ValueError("time must be nonnegative")
    s = signal
    if s.kind == "constant":
        return s.amplitude
    if s.kind == "step":
        return s.amplitude if t >= s.t_on else 0.0
    if s.kind == "doublet":
        if s.t_on <= t < s.t_on + s.width:
            return s.offset + s.amplitude
        if s.t_on + s.width <= t < s.t_on + 2 * s.width:
            return s.offset - s.amplitude
        return s.offset
    if s.kind == "ramp":
        ts, vs = zip(*s.breakpoints)
        return float(np.interp(t, ts, vs))
    return s.offset + s.amplitude * math.sin(2 * math.pi * s.frequency * t + s.phase)


SCENARIOS = {
    "step": CommandSignal("step", amplitude=100.0),
    "doublet": CommandSignal("doublet", amplitude=8.0, offset=100.0, t_on=60.0, width=40.0),
    "ramp": CommandSignal("ramp", breakpoints=((0.0, 100.0), (30.0, 100.0), (60.0, 108.0),
                                               (90.0, 108.0), (120.0, 92.0), (150.0, 92.0),
                                               (170.0, 100.0))),
    "harmonic": CommandSignal("harmonic", amplitude=5.0, offset=100.0, frequency=0.02),
}


# ---------------------------------------------------------------- loop

@dataclass(frozen=True)
class LoopConfig:
    r0_nominal: float = R0_NOMINAL
    actuation_gain: float = 0.001  # m of capture radius per unit u
    r0_bounds: tuple[float, float] = (R0_MIN, R0_MAX)
    dt: float = 0.01
    duration: float | None = None  # None runs to burnout
    feedback: str = "ann"  # or "true"
    sensor_delay: bool = False
    rcac: RcacConfig = field(default_factory=RcacConfig)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.r0_bounds
        if not (R0_MIN <= lo < hi <= R0_MAX):
            raise ValueError("r0_bounds must lie inside the cowl travel")
        if self.actuation_gain <= 0 or self.dt <= 0:
            raise ValueError("actuation_gain and dt must be positive")
        if self.duration is not None and self.duration <= 0:
            raise ValueError("duration must be positive or None")
        if self.feedback not in ("ann", "true"):
            raise ValueError("feedback must be 'ann' or 'true'")


@dataclass
class RunRecord:
    columns: dict[str, np.ndarray]
    reason: str = ""
    saturated_steps: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.columns["t_s"])

    def __getitem__(self, name) -> np.ndarray:
        return self.columns[name]

    @classmethod
    def empty(cls) -> "RunRecord":
        return cls({k: np.zeros(0) for k in CSV_HEADER})


def _predictor(model) -> Callable | None:
    if model is None:
        return None
    if isinstance(model, MlpModel):
        return lambda x, out: float(model.predict(x[None, :])[0])
    return model


def run_closed_loop(cfg: LoopConfig, signal: CommandSignal, model=None,
                    plant_config: PlantConfig | None = None) -> RunRecord:
    """Simulate until ``cfg.duration`` or burnout.

    ``model`` is an MlpModel or any callable ``f(features, outputs) -> N``
    taking the feature row (r0, Pt4, X_CO, H) and the plant outputs.
    """
    predict = _predictor(model)
    if cfg.feedback == "ann" and predict is None:
        raise ValueError("ANN feedback needs a model")
    pcfg = plant_config or PlantConfig()
    plant = Plant(pcfg)
    free = freestream_totals(pcfg.mach, pcfg.altitude)
    state = plant.initial_state()
    rc = RcacState.initial(cfg.rcac)
    lo, hi = cfg.r0_bounds
    n_max = None if cfg.duration is None else int(round(cfg.duration / cfg.dt))
    rows = {k: [] for k in CSV_HEADER}
    u, saturated, k, reason = 0.0, 0, 0, "duration"
    last_sensed = None
    while n_max is None or k < n_max:
        t = k * cfg.dt
        r0_cmd = cfg.r0_nominal + cfg.actuation_gain * u
        r0 = min(max(r0_cmd, lo), hi)
        saturated += r0 != r0_cmd
        try:
            out, state = plant.step(state, r0, free, cfg.dt)
        except BurnoutError:
            reason = "burnout"
            break
        sensed = (r0, out.Pt4, out.X_CO)
        if cfg.sensor_delay and last_sensed is not None:
            sensed, last_sensed = last_sensed, sensed
        else:
            last_sensed = sensed
        x = np.array([*sensed, pcfg.altitude])
        y_pred = predict(x, out) if predict is not None else out.thrust
        y = y_pred if cfg.feedback == "ann" else out.thrust
        r = command_value(signal, t)
        u_applied = u
        u, rc = rcac_pid_step(rc, cfg.rcac, r, y)
        row = (t, r, out.thrust, y_pred, r - y, u_applied, r0, *rc.theta, out.rdot, out.Pt4,
               out.r3, out.X_CO)
        if not all(math.isfinite(v) for v in row) or not math.isfinite(u):
            raise SimulationError(f"non-finite value at step {k}", k)
        for name, v in zip(CSV_HEADER, row):
            rows[name].append(float(v))
        k += 1
        if state.burned_out:
            reason = "burnout"
            break
    return RunRecord({n: np.array(v) for n, v in rows.items()}, reason, int(saturated),
                     {"steps": k, "final_r3_m": state.r3})


# ---------------------------------------------------------------- metrics

def settling_step(record: RunRecord, reference: float, fraction: float = SETTLE_FRACTION):
    """First step after which |z| stays below fraction * |reference|, else None."""
    z = np.abs(record["z_N"])
    if len(z) == 0:
        return None
    outside = np.nonzero(z >= fraction * abs(reference))[0]
    if len(outside) == 0:
        return 0
    last = int(outside[-1])
    return None if last == len(z) - 1 else last + 1


def overshoot(record: RunRecord) -> float:
    """Largest excursion past the command against the initial error sign, in N."""
    z = record["z_N"]
    if len(z) == 0 or z[0] == 0:
        return 0.0
    return float(max(0.0, np.max(-np.sign(z[0]) * z)))


def final_quarter_mean_abs_z(record: RunRecord) -> float:
    z = np.abs(record["z_N"])
    return float(z[3 * len(z) // 4:].mean()) if len(z) else float("nan")


@dataclass
class SweepResult:
    n: float
    p: float
    record: RunRecord | None
    overshoot_N: float = float("nan")
    settling_step: int | None = None
    max_abs_z: float = float("nan")
    error: str = ""


def hyperparameter_sweep(base: LoopConfig, signal: CommandSignal, model=None,
                         plant_config: PlantConfig | None = None,
                         n_values=(0.1, 1.0, 10.0), p_values=(1e-4, 1e-5, 1e-6, 1e-7)):
    results = []
    for n in n_values:
        for p in p_values:
            rcac = replace(base.rcac, p=p, filter_coeffs=(n,) + tuple(base.rcac.filter_coeffs[1:]))
            cfg = replace(base, rcac=rcac)
            try:
                rec = run_closed_loop(cfg, signal, model, plant_config)
            except (SimulationError, ValueError, RuntimeError) as exc:
                results.append(SweepResult(n, p, None, error=str(exc)))
                continue
            results.append(SweepResult(
                n, p, rec, overshoot(rec), settling_step(rec, signal.scale),
                float(np.max(np.abs(rec["z_N"]))) if len(rec) else float("nan"),
            ))
    return results


def sweep_summary(results) -> list[dict]:
    return [{"n": r.n, "p": r.p, "steps": len(r.record) if r.record else 0,
             "overshoot_N": r.overshoot_N, "settling_step": r.settling_step,
             "max_abs_z_N": r.max_abs_z, "error": r.error} for r in results]


def trend_report(results) -> list[str]:
    """Check, without asserting, that larger P0 converges faster and overshoots more."""
    lines = []
    for n in sorted({r.n for r in results}):
        row = sorted((r for r in results if r.n == n and r.record is not None), key=lambda r: r.p)
        if len(row) < 2:
            continue
        lo, hi = row[0], row[-1]
        big = len(hi.record) + 1
        faster = (hi.settling_step if hi.settling_step is not None else big) <= \
            (lo.settling_step if lo.settling_step is not None else big)
        larger = hi.overshoot_N >= lo.overshoot_N
        lines.append(f"n={n:g}: p={hi.p:g} settles at {hi.settling_step} vs p={lo.p:g} at "
                     f"{lo.settling_step} ({'faster' if faster else 'not faster'}); overshoot "
                     f"{hi.overshoot_N:.3f} N vs {lo.overshoot_N:.3f} N "
                     f"({'larger' if larger else 'not larger'})")
    return lines


# ---------------------------------------------------------------- output

def git_describe() -> str:
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, cwd=Path(__file__).resolve().parent, timeout=10)
        return res.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def write_csv(record: RunRecord, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        cols = [record.columns[name] for name in CSV_HEADER]
        for i in range(len(record)):
            w.writerow([repr(float(c[i])) for c in cols])


def _jsonable(obj):
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def plot_run(record: RunRecord, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    c = record.columns
    t = c["t_s"]
    fig, ax = plt.subplots(3, 2, figsize=(10, 9), sharex=True)
    ax[0, 0].plot(t, c["command_N"], "k--", label="command")
    ax[0, 0].plot(t, c["thrust_true_N"], label="true")
    ax[0, 0].plot(t, c["thrust_pred_N"], ":", label="estimated")
    ax[0, 0].set_ylabel("thrust [N]")
    ax[0, 0].legend(fontsize=8)
    ax[0, 1].plot(t, c["r0_m"] * 1e3)
    ax[0, 1].set_ylabel("r0 [mm]")
    ax[1, 0].semilogy(t, np.maximum(np.abs(c["z_N"]), 1e-12))
    ax[1, 0].set_ylabel("|z| [N]")
    for name in ("Kp", "Ki", "Kd"):
        ax[1, 1].plot(t, c[name], label=name)
    ax[1, 1].set_ylabel("gains")
    ax[1, 1].legend(fontsize=8)
    ax[2, 0].plot(t, c["rdot_m_s"] * 1e3)
    ax[2, 0].set_ylabel("rdot [mm/s]")
    ax[2, 1].plot(t, c["Pt4_Pa"] / 1e3)
    ax[2, 1].set_ylabel("Pt4 [kPa]")
    for a in ax[-1]:
        a.set_xlabel("t [s]")
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "sfrj"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_outputs(record: RunRecord, out_dir, config=None, seed=None, name="run", plots=True):
    """Write <name>.csv, <name>.json (manifest) and <name>.svg under ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{name}.csv"
        write_csv(record, csv_path)
        manifest = {
            "rows": len(record),
            "termination": record.reason,
            "saturated_steps": record.saturated_steps,
            "seed": seed,
            "version": git_describe(),
            "config": _jsonable(config),
            "meta": _jsonable(record.meta),
        }
        (out / f"{name}.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
        paths = [csv_path, out / f"{name}.json"]
        if plots and len(record):
            plot_run(record, out / f"{name}.svg")
            paths.append(out / f"{name}.svg")
    except OSError as exc:
        raise OSError(f"could not write outputs under {out}: {exc}") from exc
    return paths


def plot_sweep(results, path, reference: float):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = sorted({r.n for r in results})
    fig, ax = plt.subplots(len(ns), 1, figsize=(8, 3 * len(ns)), sharex=True, squeeze=False)
    for a, n in zip(ax[:, 0], ns):
        for r in results:
            if r.n == n and r.record is not None and len(r.record):
                a.plot(r.record["t_s"], r.record["thrust_pred_N"], label=f"p={r.p:g}")
        a.axhline(reference, color="k", ls="--", lw=0.8)
        a.set_ylabel(f"thrust [N], N1={n:g}")
        a.legend(fontsize=8)
    ax[-1, 0].set_xlabel("t [s]")
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "sfrj"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
