"""Closed-form exponential sums f(t) = sum_k a_k exp(mu_k t).

Solutions, boundary traces and controls are all carried in this form, so
derivatives, convolutions with exp(-eta t) and L2 inner products never touch
a quadrature rule.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInput

MERGE_TOL = 1e-12


def phi1(w):
    """(exp(w) - 1)/w evaluated without cancellation near w = 0."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    small = np.abs(w) < 0.1
    ws = w[small]
    # Taylor series sum_k w^k/(k+1)!; 12 terms are exact to rounding for |w| < 0.1
    acc = np.ones_like(ws)
    for k in range(12, 0, -1):
        acc = 1 + ws / (k + 1) * acc
    out[small] = acc
    wl = w[~small]
    out[~small] = (np.exp(wl) - 1) / wl
    return out


def exp_integral(s, a: float, b: float):
    """Integral of exp(s t) over [a, b], elementwise in s."""
    s = np.asarray(s, dtype=complex)
    L = b - a
    return np.exp(s * a) * L * phi1(s * L)


def _merge(amp, mu, tol):
    keep = amp != 0
    amp, mu = amp[keep], mu[keep]
    if mu.size <= 1:
        return amp, mu
    scale = np.maximum(1.0, np.abs(mu))
    close = np.abs(mu[:, None] - mu[None, :]) <= tol * scale[:, None]
    label = np.argmax(close, axis=1)  # first index in each cluster
    if np.all(label == np.arange(mu.size)):
        return amp, mu
    reps = np.unique(label)
    merged = np.zeros(reps.size, dtype=complex)
    pos = np.searchsorted(reps, label)
    np.add.at(merged, pos, amp)
    mu = mu[reps]
    keep = merged != 0
    return merged[keep], mu[keep]


class ExponentialSum:
    """Immutable sum of complex exponentials.

    ``real`` declares that the terms are closed under conjugation so that
    evaluation at real t returns real values (the imaginary residue is
    dropped, see :meth:`realness_residue`).
    """

    __slots__ = ("_amp", "_mu", "real")

    def __init__(self, amplitudes: Iterable = (), exponents: Iterable = (), *,
                 real: bool = False, merge_tol: float = MERGE_TOL):
        amp = np.atleast_1d(np.asarray(amplitudes, dtype=complex)).ravel()
        mu = np.atleast_1d(np.asarray(exponents, dtype=complex)).ravel()
        if amp.shape != mu.shape:
            raise InvalidInput("amplitudes and exponents differ in length")
        if not (np.all(np.isfinite(amp)) and np.all(np.isfinite(mu))):
            raise InvalidInput("nonfinite term in exponential sum")
        amp, mu = _merge(amp, mu, merge_tol)
        amp.setflags(write=False)
        mu.setflags(write=False)
        self._amp = amp
        self._mu = mu
        self.real = bool(real)

    # construction helpers
    @classmethod
    def zero(cls) -> "ExponentialSum":
        return cls((), (), real=True)

    @classmethod
    def combine(cls, sums: Sequence["ExponentialSum"], weights=None) -> "ExponentialSum":
        """Linear combination sum_i w_i f_i with a single merge pass."""
        sums = list(sums)
        if weights is None:
            weights = np.ones(len(sums))
        weights = np.asarray(weights)
        if weights.shape != (len(sums),):
            raise InvalidInput("one weight per sum expected")
        if not sums:
            return cls.zero()
        amp = np.concatenate([w * s._amp for w, s in zip(weights, sums)])
        mu = np.concatenate([s._mu for s in sums])
        real = all(s.real for s in sums) and bool(np.all(np.isreal(weights)))
        return cls(amp, mu, real=real)

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amp

    @property
    def exponents(self) -> np.ndarray:
        return self._mu

    def __len__(self):
        return self._amp.size

    def __repr__(self):
        return f"ExponentialSum({len(self)} terms, real={self.real})"

    # evaluation
    def evaluate(self, t) -> np.ndarray:
        """Complex values at the points t (any shape)."""
        t = np.asarray(t, dtype=float)
        if self._amp.size == 0:
            return np.zeros(t.shape, dtype=complex)
        flat = t.ravel()
        vals = np.exp(np.outer(flat, self._mu)) @ self._amp
        return vals.reshape(t.shape)

    def __call__(self, t):
        v = self.evaluate(t)
        return v.real if self.real else v

    def realness_residue(self, t) -> float:
        v = self.evaluate(t)
        return float(np.max(np.abs(v.imag), initial=0.0))

    def is_conjugate_closed(self, tol: float = 1e-10) -> bool:
        if self._amp.size == 0:
            return True
        for a, m in zip(self._amp, self._mu):
            j = np.argmin(np.abs(self._mu - np.conj(m)))
            if abs(self._mu[j] - np.conj(m)) > tol * max(1.0, abs(m)):
                return False
            if abs(self._amp[j] - np.conj(a)) > tol * max(1.0, abs(a)):
                return False
        return True

    # algebra
    def _new(self, amp, mu, real=None):
        return ExponentialSum(amp, mu, real=self.real if real is None else real)

    def __add__(self, other):
        if not isinstance(other, ExponentialSum):
            return NotImplemented
        return ExponentialSum.combine([self, other])

    def __neg__(self):
        return self._new(-self._amp, self._mu)

    def __sub__(self, other):
        if not isinstance(other, ExponentialSum):
            return NotImplemented
        return ExponentialSum.combine([self, other], [1.0, -1.0])

    def __mul__(self, c):
        if isinstance(c, ExponentialSum):
            return NotImplemented
        c = complex(c)
        return self._new(c * self._amp, self._mu, real=self.real and c.imag == 0)

    __rmul__ = __mul__

    def conj(self) -> "ExponentialSum":
        """t -> conj(f(t)) for real t."""
        return self._new(np.conj(self._amp), np.conj(self._mu))

    def derivative(self, order: int = 1) -> "ExponentialSum":
        if order < 0:
            raise InvalidInput("derivative order must be nonnegative")
        return self._new(self._amp * self._mu ** order, self._mu)

    def shift(self, s: float) -> "ExponentialSum":
        """t -> f(t + s)."""
        return self._new(self._amp * np.exp(self._mu * s), self._mu)

    def reflect(self, T: float) -> "ExponentialSum":
        """t -> f(T - t)."""
        return self._new(self._amp * np.exp(self._mu * T), -self._mu)

    def convolve_forward(self, rate: float) -> "ExponentialSum":
        """t -> int_0^t exp(-rate (t - s)) f(s) ds."""
        den = self._mu + rate
        if np.any(np.abs(den) < MERGE_TOL * np.maximum(1.0, np.abs(self._mu))):
            raise InvalidInput("exponent resonates with the convolution rate")
        c = self._amp / den
        amp = np.concatenate([c, [-np.sum(c)]])
        mu = np.concatenate([self._mu, [-rate]])
        return self._new(amp, mu)

    def convolve_backward(self, rate: float, T: float) -> "ExponentialSum":
        """t -> int_t^T exp(-rate (s - t)) f(s) ds."""
        den = self._mu - rate
        if np.any(np.abs(den) < MERGE_TOL * np.maximum(1.0, np.abs(self._mu))):
            raise InvalidInput("exponent resonates with the convolution rate")
        c = self._amp / den
        amp = np.concatenate([-c, [np.sum(c * np.exp(den * T))]])
        mu = np.concatenate([self._mu, [rate]])
        return self._new(amp, mu)

    def select(self, mask) -> "ExponentialSum":
        mask = np.asarray(mask, dtype=bool)
        return ExponentialSum(self._amp[mask], self._mu[mask], real=False)

    def amplitude_at(self, mu: complex, tol: float = 1e-9) -> complex:
        """Total amplitude carried by exponents within tol of mu."""
        hit = np.abs(self._mu - mu) <= tol * max(1.0, abs(mu))
        return complex(np.sum(self._amp[hit]))

    # inner products
    def inner(self, other: "ExponentialSum", a: float = 0.0, b: float = 1.0) -> complex:
        """int_a^b f(t) conj(g(t)) dt in closed form."""
        if self._amp.size == 0 or other._amp.size == 0:
            return 0j
        s = self._mu[:, None] + np.conj(other._mu)[None, :]
        M = exp_integral(s, a, b)
        return complex(self._amp @ M @ np.conj(other._amp))

    def norm2(self, a: float = 0.0, b: float = 1.0) -> float:
        return float(self.inner(self, a, b).real)

    # serialisation
    def to_terms(self) -> list:
        return [[float(a.real), float(a.imag), float(m.real), float(m.imag)]
                for a, m in zip(self._amp, self._mu)]

    def to_json(self) -> dict:
        return {"real": self.real, "terms": self.to_terms()}

    @classmethod
    def from_json(cls, doc: dict) -> "ExponentialSum":
        try:
            terms = np.asarray(doc["terms"], dtype=float).reshape(-1, 4)
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidInput(f"bad exponential-sum document: {exc}") from exc
        return cls(terms[:, 0] + 1j * terms[:, 1], terms[:, 2] + 1j * terms[:, 3],
                   real=bool(doc.get("real", False)))


def gram_matrix(sums: Sequence[ExponentialSum], a: float = 0.0, b: float = 1.0) -> np.ndarray:
    """Hermitian matrix of pairwise inner products int_a^b f_i conj(f_j)."""
    n = len(sums)
    sizes = [len(s) for s in sums]
    if sum(sizes) == 0:
        return np.zeros((n, n), dtype=complex)
    mu = np.concatenate([s.exponents for s in sums])
    P = np.zeros((n, mu.size), dtype=complex)
    k = 0
    for i, s in enumerate(sums):
        P[i, k:k + sizes[i]] = s.amplitudes
        k += sizes[i]
    M = exp_integral(mu[:, None] + np.conj(mu)[None, :], a, b)
    return P @ M @ P.conj().T
