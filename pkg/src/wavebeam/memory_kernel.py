"""Volterra algebra for the exponential relaxation kernel k(t) = beta exp(-eta t).

The kernel enters the wave equation through a convolution and the adjoint
boundary trace through the backward map

    psi(t) = phi(t) - beta int_t^T exp(-eta (s - t)) phi(s) ds,

whose inverse uses the resolvent rho(t) = beta exp((beta - eta) t).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidInput, InvalidParameter, WavebeamError
from .expsum import ExponentialSum


@dataclass(frozen=True)
class ExpKernel:
    """k(t) = beta exp(-eta t) with 0 <= beta < eta.

    beta = 0 is accepted as the memoryless limit.
    """

    beta: float
    eta: float

    def __post_init__(self):
        if not (np.isfinite(self.beta) and np.isfinite(self.eta)):
            raise InvalidParameter("kernel parameters must be finite")
        if not (0.0 <= self.beta < self.eta):
            raise InvalidParameter(f"need 0 <= beta < eta, got beta={self.beta}, eta={self.eta}")

    def __call__(self, t):
        return self.beta * np.exp(-self.eta * np.asarray(t, dtype=float))


class Resolvent(NamedTuple):
    """amplitude * exp(-rate t)."""

    amplitude: float
    rate: float

    def __call__(self, t):
        return self.amplitude * np.exp(-self.rate * np.asarray(t, dtype=float))


def resolvent_kernel(k: ExpKernel) -> Resolvent:
    """Resolvent of k, i.e. the solution of rho - k*rho = k."""
    return Resolvent(k.beta, k.eta - k.beta)


@dataclass(frozen=True)
class SampledFunction:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values)
        if g.ndim != 1 or g.size < 2:
            raise InvalidInput("grid needs at least 2 points")
        if v.shape != g.shape:
            raise InvalidInput("values length must equal grid length")
        h = np.diff(g)
        if np.any(h <= 0):
            raise InvalidInput("grid must be strictly increasing")
        if np.max(np.abs(h - h[0])) > 1e-9 * max(1.0, abs(g[-1])):
            raise InvalidInput("grid must be uniformly spaced")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @classmethod
    def sample(cls, f, T: float, points: int) -> "SampledFunction":
        g = np.linspace(0.0, T, points)
        return cls(g, np.asarray(f(g)))


def weighted_tail(values, h: float, c: complex) -> np.ndarray:
    """J_i = int_{t_i}^{t_end} exp(c (s - t_i)) f(s) ds on a uniform grid.

    Simpson panels chained backwards with exact exponential reweighting; the
    chain of odd length starts from a three-point quadratic rule on the last
    interval. O(h^4) at every node; plain trapezoid when only two nodes.
    """
    f = np.asarray(values)
    n = f.size - 1
    dtype = np.result_type(f.dtype, np.asarray(c).dtype, float)
    J = np.zeros(n + 1, dtype=dtype)
    e1 = np.exp(c * h)
    if n == 1:
        J[0] = 0.5 * h * (f[0] + e1 * f[1])
        return J
    e2 = e1 * e1
    J[n - 1] = h / 12 * (-f[n - 2] / e1 + 8 * f[n - 1] + 5 * e1 * f[n])
    # panel integrals over [t_i, t_{i+2}] for every i
    S = h / 3 * (f[:-2] + 4 * e1 * f[1:-1] + e2 * f[2:])
    for i in range(n - 2, -1, -1):
        J[i] = e2 * J[i + 2] + S[i]
    return J


def weighted_head(values, h: float, c: complex) -> np.ndarray:
    """H_i = int_{t_0}^{t_i} exp(c (t_i - s)) f(s) ds, mirror of weighted_tail."""
    f = np.asarray(values)
    return weighted_tail(f[::-1], h, c)[::-1]


def backward_volterra_map(phi: SampledFunction, k: ExpKernel) -> SampledFunction:
    """psi = phi - beta int_t^T exp(-eta (s - t)) phi(s) ds."""
    tail = weighted_tail(phi.values, phi.step, -k.eta)
    return SampledFunction(phi.grid, phi.values - k.beta * tail)


def solve_backward_volterra(psi: SampledFunction, k: ExpKernel, T: float | None = None) -> SampledFunction:
    """Invert the backward map: phi = psi + beta int_t^T exp((beta - eta)(s - t)) psi(s) ds."""
    if not isinstance(psi, SampledFunction):
        raise InvalidInput("psi must be a SampledFunction")
    if T is not None and abs(psi.grid[-1] - T) > 1e-9 * max(1.0, T):
        raise InvalidInput("psi must be sampled on [0, T]")
    rho = resolvent_kernel(k)
    tail = weighted_tail(psi.values, psi.step, -rho.rate)
    return SampledFunction(psi.grid, psi.values + rho.amplitude * tail)


def resolvent_residual(k: ExpKernel, T: float, points: int = 4001) -> float:
    """max |rho - k*rho - k| on a uniform grid, convolution by quadrature."""
    rho = resolvent_kernel(k)
    g = np.linspace(0.0, T, points)
    h = g[1] - g[0]
    conv = k.beta * weighted_head(rho(g), h, -k.eta)
    return float(np.max(np.abs(rho(g) - conv - k(g))))


def resolvent_residual_closed(k: ExpKernel, T: float, points: int = 257) -> float:
    """Same identity with k*rho in closed form via exponential sums."""
    rho = resolvent_kernel(k)
    r = ExponentialSum([rho.amplitude], [-rho.rate], real=True)
    if k.beta == 0:
        return 0.0
    conv = k.beta * r.convolve_forward(k.eta)
    g = np.linspace(0.0, T, points)
    return float(np.max(np.abs(r(g) - conv(g) - k(g))))


def random_band_limited(rng: np.random.Generator, T: float, terms: int = 16) -> ExponentialSum:
    """Real trigonometric polynomial with `terms` standard normal coefficients.

    Half cosines cos(j pi t / T), j = 0..terms/2-1, half sines, j = 1..terms/2.
    """
    half = terms // 2
    a = rng.standard_normal(half)
    b = rng.standard_normal(terms - half)
    amp, mu = [], []
    for j in range(half):
        w = 1j * j * np.pi / T
        if j == 0:
            amp.append(a[0])
            mu.append(0.0)
        else:
            amp += [a[j] / 2, a[j] / 2]
            mu += [w, -w]
    for j, bj in enumerate(b, start=1):
        w = 1j * j * np.pi / T
        amp += [bj / 2j, -bj / 2j]
        mu += [w, -w]
    return ExponentialSum(amp, mu, real=True)


def backward_map_closed(phi: ExponentialSum, k: ExpKernel, T: float) -> ExponentialSum:
    """Exact backward Volterra map applied to an exponential sum."""
    if k.beta == 0:
        return phi
    return phi - k.beta * phi.convolve_backward(k.eta, T)


def norm_equivalence_constants(k: ExpKernel, T: float, trials: int, seed: int = 0,
                               tol: float = 1e-12, max_redraws: int = 10):
    """Monte-Carlo (min, max) of int|psi|^2 / int|phi|^2 over random phi.

    Trial i uses the stream seeded by seed + i.
    """
    if trials < 1:
        raise InvalidInput("trials must be >= 1")
    ratios = np.empty(trials)
    for i in range(trials):
        rng = np.random.default_rng(seed + i)
        for _ in range(max_redraws):
            phi = random_band_limited(rng, T)
            den = phi.norm2(0.0, T)
            if den > tol:
                break
        else:
            raise WavebeamError("degenerate draws exhausted the redraw budget")
        psi = backward_map_closed(phi, k, T)
        ratios[i] = psi.norm2(0.0, T) / den
    return float(ratios.min()), float(ratios.max())
