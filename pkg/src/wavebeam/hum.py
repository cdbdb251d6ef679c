"""Finite-modal Hilbert Uniqueness Method for the two boundary controls.

Adjoint final data e = (z10, z11, z20, z21) on modes 1..N is propagated
backwards in closed form. Writing tau = T - t, the adjoint is the forward
system with A and B exchanged and started from (z10, -z11, z20, -z21), so the
modal solver is reused unchanged. Its boundary traces give

    w(t) = z1x(t, pi) - beta int_t^T exp(-eta (s - t)) z1x(s, pi) ds,
    v(t) = z2x(t, pi),

and the Gram matrix G_ab = int_0^T (w_a w_b + v_a v_b) dt. The controls
g1 = sum c_a w_a and g2 = -sum c_a v_a solve G c = b.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ControllabilityError, InvalidInput, PreconditionError
from .expsum import ExponentialSum, gram_matrix
from .modal import FinalData, solve_mode
from .spectrum import ModelParams, SpectralBranch, solve_spectrum

COMPONENTS = ("alpha1", "rho1", "alpha2", "rho2")


@dataclass(frozen=True)
class TracePair:
    w: ExponentialSum
    v: ExponentialSum

    def realness_residue(self, T: float, points: int = 201) -> float:
        t = np.linspace(0.0, T, points)
        return max(self.w.realness_residue(t), self.v.realness_residue(t))


def _mode_trace(branch: SpectralBranch, data: FinalData, params: ModelParams, T: float) -> TracePair:
    adj = params.swapped()
    sol = solve_mode(branch, data.time_reversed(), adj)
    s = (-1) ** branch.n * branch.n
    y1 = s * sol.f1()
    y2 = s * sol.f2()
    if params.beta > 0:
        y1 = y1 - params.beta * y1.convolve_forward(params.eta)
    return TracePair(y1.reflect(T), y2.reflect(T))


def adjoint_traces(final: FinalData, params: ModelParams, branches: Sequence[SpectralBranch],
                   T: float | None = None) -> TracePair:
    """Boundary traces (w, v) of the adjoint solution with final data `final`."""
    T = params.T if T is None else T
    if len(branches) < final.N:
        raise InvalidInput("need one spectral branch per data mode")
    ws, vs = [], []
    for br in branches[:final.N]:
        if not any(final.mode(br.n)):
            continue
        tp = _mode_trace(br, final, params, T)
        ws.append(tp.w)
        vs.append(tp.v)
    return TracePair(ExponentialSum.combine(ws) if ws else ExponentialSum.zero(),
                     ExponentialSum.combine(vs) if vs else ExponentialSum.zero())


def sobolev_weights(N: int) -> np.ndarray:
    """Diagonal scaling (n, 1, n, 1/n) of the four data blocks."""
    n = np.arange(1, N + 1, dtype=float)
    return np.concatenate([n, np.ones(N), n, 1 / n])


@dataclass
class GramSystem:
    N: int
    T: float
    params: ModelParams
    G: np.ndarray
    traces: list
    eig_min: float
    eig_max: float
    scaled_eig_min: float
    scaled_eig_max: float
    b: np.ndarray | None = None
    c: np.ndarray | None = None
    residual: float | None = None

    def conditioning(self) -> dict:
        return {"eig_min": self.eig_min, "eig_max": self.eig_max,
                "scaled_eig_min": self.scaled_eig_min, "scaled_eig_max": self.scaled_eig_max,
                "scaled_condition": self.scaled_eig_max / self.scaled_eig_min
                if self.scaled_eig_min > 0 else float("inf")}

    def solve(self, b) -> "GramSystem":
        """Cholesky solve of G c = b after symmetric Sobolev pre-scaling."""
        b = np.asarray(b, dtype=float)
        if b.shape != (4 * self.N,):
            raise InvalidInput(f"rhs must have length {4 * self.N}")
        s = 1 / sobolev_weights(self.N)
        Gs = s[:, None] * self.G * s[None, :]
        cf = scipy.linalg.cho_factor(Gs)
        c = s * scipy.linalg.cho_solve(cf, s * b)
        for _ in range(2):
            r = b - self.G @ c
            c = c + s * scipy.linalg.cho_solve(cf, s * r)
        res = float(np.linalg.norm(self.G @ c - b) / max(np.linalg.norm(b), 1e-300))
        if np.linalg.norm(b) == 0:
            res = 0.0
        if res > 1e-8:
            raise ControllabilityError(f"Gram solve residual {res:.2e} exceeds 1e-8", self.conditioning())
        return GramSystem(self.N, self.T, self.params, self.G, self.traces, self.eig_min, self.eig_max,
                          self.scaled_eig_min, self.scaled_eig_max, b=b, c=c, residual=res)

    def energy(self, c) -> float:
        """F-norm quadratic form c^T G c."""
        c = np.asarray(c, dtype=float)
        return float(c @ self.G @ c)


def basis(N: int) -> list:
    return [FinalData.unit(N, comp, n) for comp in range(4) for n in range(1, N + 1)]


def assemble_gram(N: int, T: float, params: ModelParams,
                  branches: Sequence[SpectralBranch] | None = None) -> GramSystem:
    if T <= 2 * np.pi:
        raise PreconditionError(f"control time T={T} must exceed 2 pi")
    params.require_coupled()
    branches = solve_spectrum(params, N) if branches is None else list(branches)[:N]
    traces = [adjoint_traces(e, params, branches, T) for e in basis(N)]
    G = (gram_matrix([tp.w for tp in traces], 0.0, T) + gram_matrix([tp.v for tp in traces], 0.0, T)).real
    G = 0.5 * (G + G.T)
    ev = np.linalg.eigvalsh(G)
    s = 1 / sobolev_weights(N)
    evs = np.linalg.eigvalsh(s[:, None] * G * s[None, :])
    report = {"eig_min": float(ev[0]), "eig_max": float(ev[-1]),
              "scaled_eig_min": float(evs[0]), "scaled_eig_max": float(evs[-1])}
    if evs[0] <= 1e-12 * evs[-1]:
        raise ControllabilityError("Gram matrix is not positive definite", report)
    return GramSystem(N, T, params, G, traces, **report)


def rhs_vector(target: FinalData, N: int | None = None) -> np.ndarray:
    """b_a = (pi/2)(-u11 alpha1 + u10 rho1 - u21 alpha2 + u20 rho2) on the unit basis."""
    N = target.N if N is None else N
    t = target.truncated(N)
    return (np.pi / 2) * np.concatenate([-t.rho1, t.alpha1, -t.rho2, t.alpha2])


@dataclass(frozen=True)
class Controls:
    g1: ExponentialSum
    g2: ExponentialSum
    T: float

    def norms(self) -> dict:
        return {"g1_L2sq": self.g1.norm2(0.0, self.T), "g2_L2sq": self.g2.norm2(0.0, self.T)}

    def to_json(self) -> dict:
        return {"T": self.T, "g1": self.g1.to_json(), "g2": self.g2.to_json(), "norms": self.norms()}

    @classmethod
    def from_json(cls, doc: dict) -> "Controls":
        try:
            return cls(ExponentialSum.from_json(doc["g1"]), ExponentialSum.from_json(doc["g2"]), float(doc["T"]))
        except KeyError as exc:
            raise InvalidInput(f"controls document lacks {exc}") from exc


def synthesize_controls(system: GramSystem) -> Controls:
    if system.c is None:
        raise PreconditionError("solve the Gram system first")
    c = system.c
    g1 = ExponentialSum.combine([tp.w for tp in system.traces], c)
    g2 = ExponentialSum.combine([tp.v for tp in system.traces], -c)
    return Controls(ExponentialSum(g1.amplitudes, g1.exponents, real=True),
                    ExponentialSum(g2.amplitudes, g2.exponents, real=True), system.T)


def hum_controls(target: FinalData, params: ModelParams, N: int | None = None,
                 T: float | None = None) -> tuple[Controls, GramSystem]:
    """Target final state -> (controls, solved Gram system)."""
    N = target.N if N is None else N
    T = params.T if T is None else T
    system = assemble_gram(N, T, params).solve(rhs_vector(target, N))
    return synthesize_controls(system), system


def norm_equivalence_range(system: GramSystem, trials: int, seed: int = 0) -> tuple[float, float]:
    """(min, max) over random adjoint data of c^T G c / Sobolev norm of c."""
    w = sobolev_weights(system.N) ** 2
    r = np.empty(trials)
    for i in range(trials):
        c = np.random.default_rng(seed + i).standard_normal(4 * system.N) / np.sqrt(w)
        r[i] = system.energy(c) / np.sum(w * c * c)
    return float(r.min()), float(r.max())
