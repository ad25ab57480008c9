"""Retrospective cost adaptive control of a SISO adaptive PID law.

The controller is u_k = Phi_k theta with Phi_k = [z_k, gamma_k, z_k - z_{k-1}],
where z = r - y and gamma is the running sum of z. The gains theta minimize a
cumulative retrospective cost in which past control u is replaced by the
hypothetical Phi theta, passed through the FIR filter sum_i N_i q^-i. The
minimizer is tracked exactly by recursive least squares.

By default the N_i are read as estimates of the u -> y impulse response, so
with z = r - y they enter the retrospective performance with a minus sign.
``filter_target="performance"`` applies them to the u -> z path unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_THETA = 3


@dataclass(frozen=True)
class RcacConfig:
    p: float = 1e-5  # P0 = p * I
    Rz: float = 1.0
    filter_coeffs: tuple[float, ...] = (1.0,)  # N_1 .. N_nf
    theta0: tuple[float, float, float] = (0.0, 0.0, 0.0)
    Ru: float = 0.0  # accepted for completeness; the cost has no control penalty
    filter_target: str = "output"  # or "performance"

    def __post_init__(self):
        if self.p <= 0 or self.Rz <= 0:
            raise ValueError("p and Rz must be positive")
        if len(self.filter_coeffs) < 1:
            raise ValueError("need at least one filter coefficient")
        if len(self.theta0) != N_THETA:
            raise ValueError("theta0 must have three entries")
        if self.filter_target not in ("output", "performance"):
            raise ValueError("filter_target must be 'output' or 'performance'")

    @property
    def n_f(self) -> int:
        return len(self.filter_coeffs)

    @property
    def performance_filter(self) -> np.ndarray:
        """Coefficients of the filter acting on the u -> z path."""
        N = np.asarray(self.filter_coeffs, dtype=float)
        return -N if self.filter_target == "output" else N


@dataclass(frozen=True)
class RcacState:
    theta: np.ndarray
    P: np.ndarray
    gamma_accum: float = 0.0
    z_prev: float = 0.0
    # newest first: Phi_{k-1}, Phi_{k-2}, ... and u_{k-1}, u_{k-2}, ...
    phi_hist: np.ndarray = field(default_factory=lambda: np.zeros((1, N_THETA)))
    u_hist: np.ndarray = field(default_factory=lambda: np.zeros(1))
    k: int = 0

    @classmethod
    def initial(cls, cfg: RcacConfig) -> "RcacState":
        return cls(
            theta=np.array(cfg.theta0, dtype=float),
            P=cfg.p * np.eye(N_THETA),
            phi_hist=np.zeros((cfg.n_f, N_THETA)),
            u_hist=np.zeros(cfg.n_f),
        )


def build_regressor(z_k: float, gamma_k: float, z_prev: float) -> np.ndarray:
    return np.array([z_k, gamma_k, z_k - z_prev])


def control_output(phi: np.ndarray, theta: np.ndarray) -> float:
    return float(phi @ theta)


def filtered(cfg: RcacConfig, state: RcacState) -> tuple[np.ndarray, float]:
    N = cfg.performance_filter
    return N @ state.phi_hist, float(N @ state.u_hist)


def rls_update(theta: np.ndarray, P: np.ndarray, Rz: float, z: float,
               phi_f: np.ndarray, u_f: float) -> tuple[np.ndarray, np.ndarray]:
    """One rank-one step of the retrospective-cost minimizer."""
    Pphi = P @ phi_f
    denom = 1.0 / Rz + phi_f @ Pphi
    P_new = P - np.outer(Pphi, Pphi) / denom
    P_new = 0.5 * (P_new + P_new.T)
    theta_new = theta - P_new @ phi_f * Rz * (z + phi_f @ theta - u_f)
    return theta_new, P_new


def rcac_update(state: RcacState, cfg: RcacConfig, z_k: float, u_k: float,
                phi_k: np.ndarray) -> RcacState:
    """Fold z_k into the gains, then push (Phi_k, u_k) onto the filter history.

    The filtered regressor uses the history before this push, so the first
    update after reset sees zeros and leaves theta and P untouched.
    """
    phi_f, u_f = filtered(cfg, state)
    theta, P = rls_update(state.theta, state.P, cfg.Rz, z_k, phi_f, u_f)
    phi_hist = np.vstack([phi_k[None, :], state.phi_hist[:-1]])
    u_hist = np.concatenate([[u_k], state.u_hist[:-1]])
    return RcacState(theta=theta, P=P, gamma_accum=state.gamma_accum + z_k, z_prev=z_k,
                     phi_hist=phi_hist, u_hist=u_hist, k=state.k + 1)


def rcac_pid_step(state: RcacState, cfg: RcacConfig, r_k: float,
                  y_k: float) -> tuple[float, RcacState]:
    """Measure z_k = r_k - y_k, refit the gains, and return the next control."""
    z = r_k - y_k
    gamma = state.gamma_accum + z
    phi = build_regressor(z, gamma, state.z_prev)
    phi_f, u_f = filtered(cfg, state)
    theta, P = rls_update(state.theta, state.P, cfg.Rz, z, phi_f, u_f)
    u = control_output(phi, theta)
    new = RcacState(
        theta=theta,
        P=P,
        gamma_accum=gamma,
        z_prev=z,
        phi_hist=np.vstack([phi[None, :], state.phi_hist[:-1]]),
        u_hist=np.concatenate([[u], state.u_hist[:-1]]),
        k=state.k + 1,
    )
    return u, new


def batch_minimizer(cfg: RcacConfig, z: np.ndarray, phi_f: np.ndarray,
                    u_f: np.ndarray) -> np.ndarray:
    """Direct normal-equations argmin of the cumulative retrospective cost."""
    P0_inv = np.eye(N_THETA) / cfg.p
    A = P0_inv + cfg.Rz * phi_f.T @ phi_f
    rhs = P0_inv @ np.asarray(cfg.theta0) - cfg.Rz * phi_f.T @ (z - u_f)
    return np.linalg.solve(A, rhs)
