"""Spectral-Galerkin forward simulation of the controlled system.

Boundary data are lifted into the interior with

    l1(x, t) = (x / pi) g1(t),   l2(x, t) = ((x^3 - pi^2 x) / (6 pi)) g2(t),

so each sine mode of the homogeneous remainder obeys

    a'' = -lam a + lam beta m - A b + F1,   m' = -eta m + a,
    b'' = -lam^2 b - B a + F2,

with F1 = -s1 g1'' - A s2 g2 and F2 = -s2 g2'' - B s1 g1. Integration is
classical RK4 on a fixed step.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InvalidInput
from .expsum import ExponentialSum
from .modal import FinalData
from .spectrum import ModelParams


def lift_coefficients(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Sine coefficients of x/pi and (x^3 - pi^2 x)/(6 pi)."""
    n = np.arange(1, N + 1, dtype=float)
    sgn = (-1.0) ** n
    return -2 * sgn / (n * np.pi), 2 * sgn / (np.pi * n ** 3)


@dataclass(frozen=True)
class Lifting:
    g1: ExponentialSum
    g2: ExponentialSum
    s1: np.ndarray
    s2: np.ndarray

    def forcing(self, t, params: ModelParams):
        """(F1, F2) at times t, shape (len(t), N) each."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        g1, g2 = self.g1(t), self.g2(t)
        d1, d2 = self.g1.derivative(2)(t), self.g2.derivative(2)(t)
        F1 = -np.outer(d1, self.s1) - params.A * np.outer(g2, self.s2)
        F2 = -np.outer(d2, self.s2) - params.B * np.outer(g1, self.s1)
        return F1, F2

    def boundary_part(self, t: float) -> FinalData:
        """Sine coefficients of (l1, l1_t, l2, l2_t) at time t."""
        g1, g2 = float(self.g1(t)), float(self.g2(t))
        d1, d2 = float(self.g1.derivative()(t)), float(self.g2.derivative()(t))
        return FinalData(self.s1 * g1, self.s1 * d1, self.s2 * g2, self.s2 * d2)


def lift_controls(g1: ExponentialSum, g2: ExponentialSum, N: int) -> Lifting:
    s1, s2 = lift_coefficients(N)
    return Lifting(g1, g2, s1, s2)


@dataclass
class SimState:
    """Per-mode (a, a', m, b, b') stacked as a (5, N) array."""

    y: np.ndarray
    t: float = 0.0

    @classmethod
    def zeros(cls, N: int) -> "SimState":
        return cls(np.zeros((5, N)))

    @property
    def N(self) -> int:
        return self.y.shape[1]


def _rhs(y, F1, F2, lam, params: ModelParams):
    a, a1, m, b, b1 = y
    out = np.empty_like(y)
    out[0] = a1
    out[1] = -lam * a + lam * params.beta * m - params.A * b + F1
    out[2] = -params.eta * m + a
    out[3] = b1
    out[4] = -lam * lam * b - params.B * a + F2
    return out


def step(state: SimState, forcing, dt: float, params: ModelParams, index: int = 0) -> SimState:
    """One RK4 step. `forcing` holds (F1, F2) at t, t + dt/2 and t + dt, each of shape (3, N)."""
    if not dt > 0:
        raise InvalidInput("dt must be positive")
    F1, F2 = forcing
    lam = np.arange(1, state.N + 1, dtype=float) ** 2
    y = state.y
    k1 = _rhs(y, F1[0], F2[0], lam, params)
    k2 = _rhs(y + 0.5 * dt * k1, F1[1], F2[1], lam, params)
    k3 = _rhs(y + 0.5 * dt * k2, F1[1], F2[1], lam, params)
    k4 = _rhs(y + dt * k3, F1[2], F2[2], lam, params)
    y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(y)):
        raise DivergenceError(f"nonfinite state at step {index}", step=index)
    return SimState(y, state.t + dt)


def integrate(lift: Lifting, params: ModelParams, T: float, steps: int, y0=None,
              record_every: int = 0):
    """March from t = 0 to T; returns the final state and optional snapshots."""
    N = lift.s1.size
    dt = T / steps
    half = np.linspace(0.0, T, 2 * steps + 1)
    F1, F2 = lift.forcing(half, params)
    state = SimState(np.zeros((5, N)) if y0 is None else np.array(y0, dtype=float))
    snaps = [(0.0, state.y.copy())] if record_every else []
    for k in range(steps):
        sl = slice(2 * k, 2 * k + 3)
        state = step(state, (F1[sl], F2[sl]), dt, params, k)
        if record_every and (k + 1) % record_every == 0:
            snaps.append((state.t, state.y.copy()))
    return state, snaps


def initial_state(lift: Lifting) -> np.ndarray:
    """Remainder initial state making u(0) = u_t(0) = 0."""
    y = np.zeros((5, lift.s1.size))
    bp = lift.boundary_part(0.0)
    y[0], y[1], y[3], y[4] = -bp.alpha1, -bp.rho1, -bp.alpha2, -bp.rho2
    return y


def final_data(state: SimState, lift: Lifting) -> FinalData:
    bp = lift.boundary_part(state.t)
    a, a1, _, b, b1 = state.y
    return FinalData(a + bp.alpha1, a1 + bp.rho1, b + bp.alpha2, b1 + bp.rho2)


def _norms(d: FinalData) -> np.ndarray:
    """L2, H^-1, H^1_0, H^-1 squared norms of (u1, u1_t, u2, u2_t) in sine coefficients."""
    n2 = np.arange(1, d.N + 1, dtype=float) ** 2
    return np.array([np.sum(d.alpha1 ** 2), np.sum(d.rho1 ** 2 / n2),
                     np.sum(d.alpha2 ** 2 * n2), np.sum(d.rho2 ** 2 / n2)])


NORM_NAMES = ("u1_L2", "u1t_Hm1", "u2_H1", "u2t_Hm1")


@dataclass
class RunReport:
    final: FinalData
    target: FinalData | None
    errors: dict = field(default_factory=dict)
    overall: float = 0.0
    spillover: float = 0.0
    dt: float = 0.0
    snapshots: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"final": self.final.to_json(), "errors": self.errors, "overall": self.overall,
                "spillover": self.spillover, "dt": self.dt}


def run_to_T(g1: ExponentialSum, g2: ExponentialSum, params: ModelParams, T: float | None = None,
             steps: int = 20000, target: FinalData | None = None, modes: int | None = None,
             sim_modes: int | None = None, record_every: int = 0) -> RunReport:
    """Simulate from rest under (g1, g2) and compare the state at T with the target.

    Errors are relative, per field, over modes 1..modes; `spillover` is the
    size of the state on modes modes+1..sim_modes relative to the target.
    """
    T = params.T if T is None else T
    modes = params.N if modes is None else modes
    sim_modes = modes if sim_modes is None else sim_modes
    if sim_modes < modes:
        raise InvalidInput("sim_modes must be >= modes")
    lift = lift_controls(g1, g2, sim_modes)
    state, snaps = integrate(lift, params, T, steps, initial_state(lift), record_every)
    final = final_data(state, lift)
    rep = RunReport(final=final, target=target, dt=T / steps, snapshots=snaps)
    if target is None:
        return rep
    low = final.truncated(modes)
    tgt = target.truncated(modes)
    diff = FinalData.from_vector(low.as_vector() - tgt.as_vector())
    en, tn = _norms(diff), _norms(tgt)
    total = max(np.sum(tn), 1e-300)
    rep.errors = {k: float(np.sqrt(e / t)) if t > 0 else float(np.sqrt(e / total))
                  for k, e, t in zip(NORM_NAMES, en, tn)}
    rep.overall = float(np.sqrt(np.sum(en) / total))
    if sim_modes > modes:
        hi = FinalData(*(x[modes:] for x in (final.alpha1, final.rho1, final.alpha2, final.rho2)))
        n2 = np.arange(modes + 1, sim_modes + 1, dtype=float) ** 2
        sp = (np.sum(hi.alpha1 ** 2) + np.sum(hi.rho1 ** 2 / n2) + np.sum(hi.alpha2 ** 2 * n2)
              + np.sum(hi.rho2 ** 2 / n2))
        rep.spillover = float(np.sqrt(sp / total))
    return rep


def modal_energies(y: np.ndarray) -> np.ndarray:
    """Per-mode energy a'^2 + lam a^2 + b'^2 + lam^2 b^2."""
    lam = np.arange(1, y.shape[1] + 1, dtype=float) ** 2
    a, a1, _, b, b1 = y
    return a1 ** 2 + lam * a ** 2 + b1 ** 2 + lam ** 2 * b ** 2
