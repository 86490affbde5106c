# src/domain/spectral.py
"""Linearized angle/frequency network modes and their closed-form eigenvalues."""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.domain.controllers import ControllerConfig, EquivalentParams, ParameterMap
from src.domain.errors import ConvergenceError
from src.domain.models import SusceptanceLaplacian

logger = logging.getLogger(__name__)

ZERO_MODE = "zero-mode"
REAL_STABLE = "real-stable"
COMPLEX_STABLE = "complex-stable"

LAMBDA_SNAP = 1e-10  # relative to the largest eigenvalue
DEFECTIVE_RTOL = 1e-12  # |discriminant| relative to d^2
CRITICAL_RTOL = 1e-4  # |d - d_crit| relative to d_crit


@dataclass(frozen=True)
class LargerLaplacian:
    """2n x 2n block matrix [[0, I], [-L_B/m, -(d/m) I]] acting on [theta; omega]."""
    matrix: np.ndarray
    m: float
    d: float

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2


@dataclass(frozen=True)
class Mode:
    eta: complex
    source_lambda: float
    classification: str
    defective: bool = False

    def to_dict(self) -> Dict:
        return {
            "real": float(self.eta.real),
            "imag": float(self.eta.imag),
            "source_lambda": float(self.source_lambda),
            "classification": self.classification,
            "defective": self.defective,
        }


@dataclass(frozen=True)
class ModeSet:
    """Two modes per Laplacian eigenvalue, in ascending lambda order."""
    modes: Tuple[Mode, ...]
    lambdas: np.ndarray
    m: float
    d: float

    @property
    def etas(self) -> np.ndarray:
        return np.array([mode.eta for mode in self.modes], dtype=complex)

    @property
    def eta2(self) -> Mode:
        """Mode of largest real part once the single zero mode is set aside."""
        rest = list(self.modes)
        for i, mode in enumerate(rest):
            if mode.classification == ZERO_MODE:
                del rest[i]
                break
        return max(rest, key=lambda mode: (mode.eta.real, mode.eta.imag))

    @property
    def oscillatory(self) -> bool:
        return any(mode.classification == COMPLEX_STABLE for mode in self.modes)

    def count(self, classification: str) -> int:
        return sum(1 for mode in self.modes if mode.classification == classification)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([mode.to_dict() for mode in self.modes])


@dataclass(frozen=True)
class AvgDiffState:
    theta_avg: float
    omega_avg: float
    delta_theta: np.ndarray
    delta_omega: np.ndarray


@dataclass(frozen=True)
class AvgDiffSystem:
    """Larger Laplacian in [theta_avg, omega_avg, delta_theta, delta_omega] coordinates."""
    matrix: np.ndarray

    @property
    def average_block(self) -> np.ndarray:
        return self.matrix[:2, :2]

    @property
    def difference_block(self) -> np.ndarray:
        return self.matrix[2:, 2:]

    @property
    def coupling(self) -> float:
        """Largest entry linking the average and difference coordinates."""
        return float(max(np.max(np.abs(self.matrix[:2, 2:]), initial=0.0),
                         np.max(np.abs(self.matrix[2:, :2]), initial=0.0)))


@dataclass(frozen=True)
class VoltageModeSet:
    etas: np.ndarray
    R_q: float
    tau_f: float


@dataclass(frozen=True)
class ModeResidual:
    mode: Mode
    singular: float  # smallest singular value of (L - eta I) relative to ||L||_2
    quadratic: float  # |m eta^2 + d eta + lambda|


@dataclass(frozen=True)
class ResidualReport:
    residuals: Tuple[ModeResidual, ...]
    tol: float

    @property
    def failing(self) -> List[ModeResidual]:
        return [r for r in self.residuals if r.singular > self.tol or r.quadratic > self.tol]

    @property
    def passed(self) -> bool:
        return not self.failing

    @property
    def max_residual(self) -> float:
        return max((max(r.singular, r.quadratic) for r in self.residuals), default=0.0)

    def describe_failures(self) -> List[str]:
        return [
            f"eta={r.mode.eta:.6g} (lambda={r.mode.source_lambda:.6g}): "
            f"singular residual {r.singular:.3e}, quadratic residual {r.quadratic:.3e}"
            for r in self.failing
        ]


@dataclass(frozen=True)
class DisturbanceSteadyState:
    """Post-step equilibrium: common frequency, mean-zero angles and their difference coordinates."""
    omega_ss: float
    theta: np.ndarray
    delta_theta: np.ndarray

    @property
    def theta_avg_ramp_rate(self) -> float:
        return self.omega_ss


@dataclass(frozen=True)
class TuningReport:
    m: float
    d: float
    lambda_max: float
    eta2: Mode
    d_crit: float
    regime: str
    rocof_per_unit_step: float

    @property
    def oscillatory(self) -> bool:
        return self.regime == "oscillatory"

    def to_dict(self) -> Dict:
        return {
            "m": self.m,
            "d": self.d,
            "lambda_max": self.lambda_max,
            "eta2": self.eta2.to_dict(),
            "d_crit": self.d_crit,
            "regime": self.regime,
            "oscillatory": self.oscillatory,
            "rocof_per_unit_step": self.rocof_per_unit_step,
        }


@dataclass(frozen=True)
class NetworkAnalysis:
    """Everything `analyze` reports for one identically tuned network."""
    params: EquivalentParams
    lambdas: np.ndarray
    modes: ModeSet
    residuals: ResidualReport
    tuning: TuningReport
    voltage_modes: VoltageModeSet
    steady_state: Optional[DisturbanceSteadyState] = None


class SpectralAnalyzer:
    """Spectrum of L_B, larger-Laplacian modes, coordinate transforms and tuning figures."""

    @staticmethod
    def jacobi_eigh(
        A: np.ndarray,
        tol: float = 1e-14,
        max_sweeps: int = 100,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Cyclic Jacobi eigen-decomposition of a real symmetric matrix.

        Returns ascending eigenvalues and the matching orthonormal eigenvector
        columns. Stops once the off-diagonal Frobenius norm is below
        tol * ||A||_F; raises ConvergenceError after max_sweeps sweeps.
        """
        a = np.array(A, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"square matrix required (got shape {a.shape})")
        n = a.shape[0]
        scale = np.linalg.norm(a)
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(scale, 1.0)):
            raise ValueError("matrix is not symmetric")
        v = np.eye(n)
        if scale == 0.0:
            return np.zeros(n), v

        for sweep in range(max_sweeps):
            off = np.linalg.norm(a - np.diag(np.diag(a)))
            if off <= tol * scale:
                logger.debug("Jacobi converged after %d sweeps (off=%.3e)", sweep, off)
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c

                    ap, aq = a[:, p].copy(), a[:, q].copy()
                    a[:, p] = c * ap - s * aq
                    a[:, q] = s * ap + c * aq
                    ap, aq = a[p, :].copy(), a[q, :].copy()
                    a[p, :] = c * ap - s * aq
                    a[q, :] = s * ap + c * aq
                    a[p, q] = a[q, p] = 0.0

                    vp, vq = v[:, p].copy(), v[:, q].copy()
                    v[:, p] = c * vp - s * vq
                    v[:, q] = s * vp + c * vq
        else:
            raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

        w = np.diag(a).copy()
        order = np.argsort(w, kind="stable")
        return w[order], v[:, order]

    @staticmethod
    def laplacian_spectrum(lap: SusceptanceLaplacian) -> np.ndarray:
        lambdas, _ = SpectralAnalyzer.jacobi_eigh(lap.matrix)
        return lambdas

    @staticmethod
    def assemble_larger_laplacian(lap: SusceptanceLaplacian, m: float, d: float) -> LargerLaplacian:
        if not m > 0 or not d > 0:
            raise ValueError(f"m and d must be > 0 (got m={m}, d={d})")
        n = lap.n
        top = np.hstack([np.zeros((n, n)), np.eye(n)])
        bottom = np.hstack([-lap.matrix / m, -(d / m) * np.eye(n)])
        return LargerLaplacian(matrix=np.vstack([top, bottom]), m=m, d=d)

    @staticmethod
    def common_tuning(configs: Sequence[ControllerConfig]) -> EquivalentParams:
        """Shared (M, D, tau_f, R_q, Vm*); HeterogeneousTuningError when nodes differ."""
        return ParameterMap.common_equivalent(configs)

    @staticmethod
    def closed_form_modes(lambdas: Sequence[float], m: float, d: float) -> ModeSet:
        """
        Roots of m*eta^2 + d*eta + lambda = 0 for each Laplacian eigenvalue.

        Eigenvalues with |lambda| below LAMBDA_SNAP * max(lambda) count as zero.
        A vanishing discriminant gives a repeated (defective) real root.
        """
        if not m > 0 or not d > 0:
            raise ValueError(f"m and d must be > 0 (got m={m}, d={d})")
        lambdas = np.sort(np.asarray(lambdas, dtype=float))
        lam_max = float(np.max(np.abs(lambdas), initial=0.0))
        snapped = np.where(np.abs(lambdas) < LAMBDA_SNAP * lam_max, 0.0, lambdas)
        if lam_max == 0.0:
            snapped = np.zeros_like(lambdas)
        if np.any(snapped < 0):
            raise ValueError(f"negative Laplacian eigenvalue {snapped.min():.6g}")

        modes: List[Mode] = []
        for lam in snapped:
            lam = float(lam)
            disc = d * d - 4.0 * m * lam
            if lam == 0.0:
                modes.append(Mode(complex(0.0), lam, ZERO_MODE))
                modes.append(Mode(complex(-d / m), lam, REAL_STABLE))
            elif abs(disc) <= DEFECTIVE_RTOL * d * d:
                eta = complex(-d / (2.0 * m))
                modes.append(Mode(eta, lam, REAL_STABLE, defective=True))
                modes.append(Mode(eta, lam, REAL_STABLE, defective=True))
            elif disc > 0:
                # cancellation-free form of the quadratic formula
                q = -(d + math.sqrt(disc)) / 2.0
                modes.append(Mode(complex(lam / q), lam, REAL_STABLE))
                modes.append(Mode(complex(q / m), lam, REAL_STABLE))
            else:
                re = -d / (2.0 * m)
                im = math.sqrt(-disc) / (2.0 * m)
                modes.append(Mode(complex(re, im), lam, COMPLEX_STABLE))
                modes.append(Mode(complex(re, -im), lam, COMPLEX_STABLE))

        return ModeSet(modes=tuple(modes), lambdas=snapped, m=m, d=d)

    @staticmethod
    def verify_modes(L: LargerLaplacian, modes: ModeSet, tol: float = 1e-9) -> ResidualReport:
        """Check every eta is a singular point of (L - eta I) and a root of its quadratic."""
        norm = np.linalg.norm(L.matrix, 2)
        eye = np.eye(L.matrix.shape[0])
        residuals = []
        for mode in modes.modes:
            sv = np.linalg.svd(L.matrix.astype(complex) - mode.eta * eye, compute_uv=False)
            singular = float(sv[-1] / norm) if norm > 0 else float(sv[-1])
            quadratic = abs(modes.m * mode.eta ** 2 + modes.d * mode.eta + mode.source_lambda)
            residuals.append(ModeResidual(mode=mode, singular=singular, quadratic=float(quadratic)))
        report = ResidualReport(residuals=tuple(residuals), tol=tol)
        for line in report.describe_failures():
            logger.warning("Mode check failed: %s", line)
        return report

    @staticmethod
    def difference_basis(n: int) -> np.ndarray:
        """(n-1) x n Helmert rows: orthonormal and orthogonal to the constant vector."""
        H = np.zeros((max(n - 1, 0), n))
        for k in range(1, n):
            H[k - 1, :k] = 1.0
            H[k - 1, k] = -float(k)
            H[k - 1] /= math.sqrt(k * (k + 1.0))
        return H

    @staticmethod
    def to_avg_diff(x: np.ndarray) -> AvgDiffState:
        """Split a [theta; omega] 2n-vector into averages and difference coordinates."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size % 2:
            raise ValueError(f"expected a 2n-vector (got shape {x.shape})")
        n = x.size // 2
        H = SpectralAnalyzer.difference_basis(n)
        theta, omega = x[:n], x[n:]
        return AvgDiffState(
            theta_avg=float(theta.mean()),
            omega_avg=float(omega.mean()),
            delta_theta=H @ theta,
            delta_omega=H @ omega,
        )

    @staticmethod
    def from_avg_diff(state: AvgDiffState) -> np.ndarray:
        n = len(state.delta_theta) + 1
        H = SpectralAnalyzer.difference_basis(n)
        theta = state.theta_avg + H.T @ state.delta_theta
        omega = state.omega_avg + H.T @ state.delta_omega
        return np.concatenate([theta, omega])

    @staticmethod
    def transformed_larger_laplacian(L: LargerLaplacian) -> AvgDiffSystem:
        n = L.n
        H = SpectralAnalyzer.difference_basis(n)
        Tn = np.vstack([np.full((1, n), 1.0 / n), H])
        Tn_inv = np.hstack([np.ones((n, 1)), H.T])
        zero = np.zeros((n, n))
        T = np.block([[Tn, zero], [zero, Tn]])
        T_inv = np.block([[Tn_inv, zero], [zero, Tn_inv]])
        A = T @ L.matrix @ T_inv

        # [theta_avg, dtheta..., omega_avg, domega...] -> [theta_avg, omega_avg, dtheta..., domega...]
        order = [0, n] + list(range(1, n)) + list(range(n + 1, 2 * n))
        return AvgDiffSystem(matrix=A[np.ix_(order, order)])

    @staticmethod
    def predict_disturbance_steady_state(
        lap: SusceptanceLaplacian,
        m: float,
        d: float,
        P_d: np.ndarray,
    ) -> DisturbanceSteadyState:
        """
        Equilibrium after a constant injection step P_d.

        Every node settles at mean(P_d)/d; angles solve L_B theta = P_d - d*omega_ss
        in the least-norm (mean-zero) sense.
        """
        if not m > 0 or not d > 0:
            raise ValueError(f"m and d must be > 0 (got m={m}, d={d})")
        P_d = np.asarray(P_d, dtype=float)
        if P_d.shape != (lap.n,):
            raise ValueError(f"dimension mismatch: P_d has shape {P_d.shape}, expected ({lap.n},)")
        omega_ss = float(P_d.mean() / d)
        theta, *_ = np.linalg.lstsq(lap.matrix, P_d - d * omega_ss, rcond=None)
        theta = theta - theta.mean()
        return DisturbanceSteadyState(
            omega_ss=omega_ss,
            theta=theta,
            delta_theta=SpectralAnalyzer.difference_basis(lap.n) @ theta,
        )

    @staticmethod
    def voltage_mode_spectrum(lap: SusceptanceLaplacian, R_q: float, tau_f: float) -> VoltageModeSet:
        if not tau_f > 0:
            raise ValueError(f"tau_f must be > 0 (got {tau_f})")
        if not R_q >= 0:
            raise ValueError(f"R_q must be >= 0 (got {R_q})")
        lambdas = SpectralAnalyzer.laplacian_spectrum(lap)
        return VoltageModeSet(etas=-(1.0 + R_q * lambdas) / tau_f, R_q=R_q, tau_f=tau_f)

    @staticmethod
    def damping_regime(d: float, m: float, lambda_max: float) -> Tuple[str, float]:
        """('oscillatory' | 'critical' | 'overdamped', d_crit) for the stiffest mode."""
        d_crit = 2.0 * math.sqrt(max(lambda_max, 0.0) * m)
        if d_crit > 0 and abs(d - d_crit) <= CRITICAL_RTOL * d_crit:
            return "critical", d_crit
        if d < d_crit:
            return "oscillatory", d_crit
        return "overdamped", d_crit

    @staticmethod
    def tuning_report(lap: SusceptanceLaplacian, m: float, d: float) -> TuningReport:
        lambdas = SpectralAnalyzer.laplacian_spectrum(lap)
        modes = SpectralAnalyzer.closed_form_modes(lambdas, m, d)
        lambda_max = float(modes.lambdas[-1])
        regime, d_crit = SpectralAnalyzer.damping_regime(d, m, lambda_max)
        return TuningReport(
            m=m,
            d=d,
            lambda_max=lambda_max,
            eta2=modes.eta2,
            d_crit=d_crit,
            regime=regime,
            rocof_per_unit_step=1.0 / m,
        )

    @staticmethod
    def analyze(
        lap: SusceptanceLaplacian,
        params: EquivalentParams,
        P_d: Optional[np.ndarray] = None,
        tol: float = 1e-9,
    ) -> NetworkAnalysis:
        """Full network report for a common tuning; P_d is the injection step, if any."""
        m, d = params.M, params.D
        lambdas = SpectralAnalyzer.laplacian_spectrum(lap)
        modes = SpectralAnalyzer.closed_form_modes(lambdas, m, d)
        L = SpectralAnalyzer.assemble_larger_laplacian(lap, m, d)
        residuals = SpectralAnalyzer.verify_modes(L, modes, tol)
        steady = None
        if P_d is not None:
            steady = SpectralAnalyzer.predict_disturbance_steady_state(lap, m, d, P_d)
        analysis = NetworkAnalysis(
            params=params,
            lambdas=modes.lambdas,
            modes=modes,
            residuals=residuals,
            tuning=SpectralAnalyzer.tuning_report(lap, m, d),
            voltage_modes=SpectralAnalyzer.voltage_mode_spectrum(lap, params.R_q, params.tau_f),
            steady_state=steady,
        )
        logger.info(
            "Analyzed n=%d: eta2=%.6g%+.6gj, regime=%s",
            lap.n, analysis.tuning.eta2.eta.real, analysis.tuning.eta2.eta.imag, analysis.tuning.regime,
        )
        return analysis
