# src/domain/metrics.py
"""Transient metrics, trajectory comparison and convergence fits."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from src.domain.simulator import Trajectory

logger = logging.getLogger(__name__)

DEFAULT_BAND = 0.02
DEFAULT_TOL = 1e-10
MIN_SAMPLES = 3  # second-order differences need three points


def _clean(value: float) -> Optional[float]:
    value = float(value)
    return None if math.isnan(value) else value


@dataclass(frozen=True)
class Metrics:
    """Per-node transient figures of one run. settling_time is NaN when unsettled."""
    rocof_max: np.ndarray
    omega_overshoot: np.ndarray
    settling_time: np.ndarray
    omega_avg_final: float
    theta_avg_ramp_rate: float
    band: float = DEFAULT_BAND
    t_end: float = 0.0

    @property
    def unsettled(self) -> np.ndarray:
        return np.isnan(self.settling_time)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "node": np.arange(len(self.rocof_max)),
                "rocof_max": self.rocof_max,
                "omega_overshoot": self.omega_overshoot,
                "settling_time": self.settling_time,
                "unsettled": self.unsettled,
            }
        )

    def to_dict(self) -> Dict:
        """JSON-ready; NaN becomes None."""
        return {
            "band": self.band,
            "t_end": self.t_end,
            "omega_avg_final": _clean(self.omega_avg_final),
            "theta_avg_ramp_rate": _clean(self.theta_avg_ramp_rate),
            "rocof_max": [_clean(v) for v in self.rocof_max],
            "omega_overshoot": [_clean(v) for v in self.omega_overshoot],
            "settling_time": [_clean(v) for v in self.settling_time],
            "unsettled_nodes": [int(i) for i in np.flatnonzero(self.unsettled)],
        }

    def summary_lines(self):
        """Flat key-value block for the terminal."""
        d = self.to_dict()
        yield f"omega_avg_final = {self.omega_avg_final:.6g}"
        yield f"theta_avg_ramp_rate = {self.theta_avg_ramp_rate:.6g}"
        for k in range(len(self.rocof_max)):
            settle = "unsettled" if d["settling_time"][k] is None else f"{self.settling_time[k]:.6g}"
            yield (
                f"node {k}: rocof_max = {self.rocof_max[k]:.6g}, "
                f"omega_overshoot = {self.omega_overshoot[k]:.6g}, settling_time = {settle}"
            )


@dataclass(frozen=True)
class DeviationReport:
    """Max absolute deviation per compared component of two runs."""
    deviations: Dict[str, float]
    tol: float
    label_a: str = "a"
    label_b: str = "b"
    skipped: Sequence[str] = field(default_factory=tuple)

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> Dict:
        return {
            "a": self.label_a,
            "b": self.label_b,
            "deviations": dict(self.deviations),
            "max_deviation": self.max_deviation,
            "tol": self.tol,
            "verdict": self.verdict,
        }


class MetricsCalculator:
    """Reduce trajectories to ROCOF, overshoot, settling and convergence figures."""

    @staticmethod
    def compute_metrics(traj: Trajectory, band: float = DEFAULT_BAND) -> Metrics:
        """
        ROCOF from second-order central differences of omega.

        Settling time per node is the time of the last excursion of
        |omega - omega_final| beyond band * max|omega|, with omega_final
        averaged over the last 5% of samples. A node still outside the band
        at the last sample is unsettled (NaN).
        """
        if len(traj) < MIN_SAMPLES:
            raise ValueError(f"trajectory needs at least {MIN_SAMPLES} samples (got {len(traj)})")
        if not band > 0:
            raise ValueError(f"band must be > 0 (got {band})")

        times = traj.times
        dt = float(times[1] - times[0])
        omega = traj.component("omega")
        theta = traj.component("theta")

        rocof = np.max(np.abs(np.gradient(omega, dt, axis=0, edge_order=2)), axis=0)
        overshoot = np.max(np.abs(omega), axis=0)

        # reference final value: mean over the last 5% of samples
        final = omega[-max(1, int(math.ceil(0.05 * len(times)))):].mean(axis=0)
        settling = np.zeros(traj.n)
        outside = np.abs(omega - final) > band * overshoot
        for k in range(traj.n):
            hits = np.flatnonzero(outside[:, k])
            if hits.size == 0:
                continue
            last = hits[-1]
            settling[k] = times[last] if last + 1 < len(times) else math.nan

        tail = max(2, int(math.ceil(0.2 * len(times))))
        slope, _ = np.polyfit(times[-tail:], theta[-tail:].mean(axis=1), 1)

        metrics = Metrics(
            rocof_max=rocof,
            omega_overshoot=overshoot,
            settling_time=settling,
            omega_avg_final=float(omega[-1].mean()),
            theta_avg_ramp_rate=float(slope),
            band=band,
            t_end=float(times[-1]),
        )
        if metrics.unsettled.any():
            logger.warning(
                "Nodes %s not settled within band %g by t=%g s",
                np.flatnonzero(metrics.unsettled).tolist(), band, times[-1],
            )
        return metrics

    @staticmethod
    def compare_trajectories(
        a: Trajectory,
        b: Trajectory,
        components: Sequence[str] = ("theta", "omega", "vm"),
        tol: float = DEFAULT_TOL,
    ) -> DeviationReport:
        """Components absent (all NaN) in either run are skipped."""
        if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0.0, atol=1e-12):
            raise ValueError(f"time grids differ ({len(a.times)} vs {len(b.times)} samples)")
        if a.n != b.n:
            raise ValueError(f"node counts differ ({a.n} vs {b.n})")

        deviations: Dict[str, float] = {}
        skipped = []
        for name in components:
            diff = np.abs(a.component(name) - b.component(name))
            if np.all(np.isnan(diff)):
                skipped.append(name)
                continue
            deviations[name] = float(np.nanmax(diff))

        report = DeviationReport(
            deviations=deviations,
            tol=tol,
            label_a=",".join(sorted(set(a.labels))) or "a",
            label_b=",".join(sorted(set(b.labels))) or "b",
            skipped=tuple(skipped),
        )
        logger.debug("Compared %s vs %s: %s", report.label_a, report.label_b, deviations)
        return report

    @staticmethod
    def difference_frequency_norm(traj: Trajectory) -> np.ndarray:
        """||omega - mean(omega)|| per sample."""
        omega = traj.component("omega")
        return np.linalg.norm(omega - omega.mean(axis=1, keepdims=True), axis=1)

    @staticmethod
    def decay_rate(traj: Trajectory, upper: float = 1e-3, lower: float = 1e-9) -> float:
        """
        Exponential rate (negative) of the difference-frequency envelope.

        Fits log r(t) after the peak, where the envelope of r is between
        lower and upper times its maximum. Oscillating signals are fitted
        through their local maxima.
        """
        r = MetricsCalculator.difference_frequency_norm(traj)
        i0 = int(np.argmax(r))
        rmax = r[i0]
        if not rmax > 0:
            raise ValueError("difference frequency is identically zero; no transient to fit")

        # suffix maximum: non-increasing, so the window below is contiguous
        envelope = np.maximum.accumulate(r[::-1])[::-1]
        idx = np.arange(len(r))
        window = idx[(idx > i0) & (envelope > lower * rmax) & (envelope < upper * rmax)]
        if window.size < 3:
            raise ValueError("too few samples inside the fit window; extend t_end")

        inner = window[(window > 0) & (window < len(r) - 1)]
        peaks = inner[(r[inner] > r[inner - 1]) & (r[inner] >= r[inner + 1])]
        fit = peaks if peaks.size >= 3 else window
        slope, _ = np.polyfit(traj.times[fit], np.log(r[fit]), 1)
        return float(slope)

    @staticmethod
    def has_overshoot(traj: Trajectory, threshold: float = 1e-6) -> bool:
        """True when any difference-frequency component reverses sign (ignoring |x| below threshold * max)."""
        omega = traj.component("omega")
        dw = omega - omega.mean(axis=1, keepdims=True)
        scale = np.max(np.abs(dw))
        if scale == 0:
            return False
        for k in range(traj.n):
            x = dw[:, k]
            signs = np.sign(x[np.abs(x) >= threshold * scale])
            if np.any(signs[1:] != signs[:-1]):
                return True
        return False

    @staticmethod
    def convergence_order(errors: Sequence[float], steps: Sequence[float]) -> float:
        """Least-squares slope of log(error) against log(step)."""
        errors = np.asarray(errors, dtype=float)
        steps = np.asarray(steps, dtype=float)
        if errors.shape != steps.shape or errors.size < 2:
            raise ValueError("need at least two (step, error) pairs of equal length")
        if np.any(errors <= 0) or np.any(steps <= 0):
            raise ValueError("errors and steps must be positive")
        slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
        return float(slope)
