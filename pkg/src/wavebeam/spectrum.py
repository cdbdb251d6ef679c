"""Per-mode characteristic quintic and its three root branches.

For mode n (lambda = n^2) the exponents of the modal solution are the roots of

    Q(L) = L^5 + eta L^4 + (lam^2 + lam) L^3 + (eta lam^2 + lam (eta - beta)) L^2
           + (lam^3 - AB) L + lam^3 (eta - beta) - eta AB,

which factors as (L^2 + lam^2) P(L) - AB (L + eta) with the memory-wave cubic
P(L) = L^3 + eta L^2 + lam L + lam (eta - beta). Evaluating Q through this
factorisation avoids the cancellation of the expanded form near the beam
roots L ~ +-i lam.

Branches: one real root r (memory), a pair i*omega, conj (wave, Im ~ n) and a
pair i*p, conj (beam, Im ~ n^2). The beam root is kept as p = lam + delta with
delta solved directly, since for large n the offset falls below the spacing
of doubles near lam.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import mpmath
import numpy as np

from .errors import ClassificationError, ConvergenceError, InvalidParameter
from .memory_kernel import ExpKernel

MAX_SWEEPS = 200


@dataclass(frozen=True)
class ModelParams:
    beta: float = 0.5
    eta: float = 1.0
    A: float = 0.1
    B: float = 0.1
    N: int = 8
    T: float = 7.0

    def __post_init__(self):
        for name in ("beta", "eta", "A", "B", "T"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidParameter(f"{name} must be finite")
        if not (0.0 <= self.beta < self.eta):
            raise InvalidParameter(f"need 0 <= beta < eta, got beta={self.beta}, eta={self.eta}")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParameter("N must be a positive integer")
        object.__setattr__(self, "N", int(self.N))
        if self.T <= 0:
            raise InvalidParameter("T must be positive")

    @property
    def kernel(self) -> ExpKernel:
        return ExpKernel(self.beta, self.eta)

    @property
    def AB(self) -> float:
        return self.A * self.B

    @property
    def coupled(self) -> bool:
        return self.A != 0 and self.B != 0

    @property
    def reachable_regime(self) -> bool:
        """eta > 3 beta / 2 and T > 2 pi."""
        return self.eta > 1.5 * self.beta and self.T > 2 * np.pi

    def require_coupled(self):
        if not self.coupled:
            raise InvalidParameter("A and B must both be nonzero on the coupled path")

    def swapped(self) -> "ModelParams":
        """Parameters of the adjoint system (coupling constants exchanged)."""
        return replace(self, A=self.B, B=self.A)

    @staticmethod
    def lam(n):
        return np.asarray(n, dtype=float) ** 2 if np.ndim(n) else float(n) ** 2


class QuinticCoeffs(NamedTuple):
    c4: float
    c3: float
    c2: float
    c1: float
    c0: float

    def monic(self) -> np.ndarray:
        return np.array([1.0, *self])


def quintic_coeffs(params: ModelParams, n: int) -> QuinticCoeffs:
    if n < 1:
        raise InvalidParameter("mode index must be >= 1")
    lam = float(n) ** 2
    b, e, AB = params.beta, params.eta, params.AB
    return QuinticCoeffs(e, lam ** 2 + lam, e * lam ** 2 + lam * (e - b),
                         lam ** 3 - AB, lam ** 3 * (e - b) - e * AB)


def _cubic(L, lam, b, e):
    P = ((L + e) * L + lam) * L + lam * (e - b)
    dP = (3 * L + 2 * e) * L + lam
    return P, dP


def quintic_eval(L, lam, b, e, AB):
    """Q(L) and Q'(L) through the factored form."""
    P, dP = _cubic(L, lam, b, e)
    w = (L - 1j * lam) * (L + 1j * lam)
    return w * P - AB * (L + e), 2 * L * P + w * dP - AB


def asymptotic_roots(params: ModelParams, n: int) -> np.ndarray:
    """Leading-order predictions [L1, L2, conj L2, L4, conj L4]."""
    lam = float(n) ** 2
    b, e, AB = params.beta, params.eta, params.AB
    L1 = b - e - b * (b - e) ** 2 / lam
    sq = np.sqrt(lam)
    L2 = complex(-b / 2 + b * (b - e) ** 2 / (2 * lam), sq + (b / 2) * (0.75 * b - e) / sq)
    L4 = complex(-b * AB / (2 * lam ** 5),
                 lam + AB / (2 * lam ** 3) + AB / (2 * lam ** 4) + AB / (2 * lam ** 5))
    return np.array([L1, L2, np.conj(L2), L4, np.conj(L4)], dtype=complex)


def aberth(coeffs_eval, seeds, max_sweeps=MAX_SWEEPS, tol=4e-16):
    """Aberth-Ehrlich simultaneous iteration.

    coeffs_eval(z) returns (Q(z), Q'(z)) for an array z.
    """
    z = np.array(seeds, dtype=complex)
    for sweep in range(1, max_sweeps + 1):
        q, dq = coeffs_eval(z)
        ratio = np.where(dq != 0, q / np.where(dq != 0, dq, 1), 0)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        s = inv.sum(axis=1)
        step = ratio / (1 - ratio * s)
        z = z - step
        if np.all(np.abs(step) <= tol * np.maximum(np.abs(z), 1.0)):
            return z, sweep
    q, _ = coeffs_eval(z)
    raise ConvergenceError(f"Aberth iteration did not converge in {max_sweeps} sweeps",
                           residuals=np.abs(q))


def _newton(f, z0, tol=1e-15, maxit=60):
    z = z0
    for _ in range(maxit):
        q, dq = f(z)
        if q == 0 or dq == 0:
            return z
        step = q / dq
        z = z - step
        if abs(step) <= tol * max(abs(z), 1e-300):
            return z
    return z


@dataclass(frozen=True)
class SpectralBranch:
    n: int
    r: float
    omega: complex
    p: complex
    p_shift: complex  # p - n^2, resolved to full relative precision
    residuals: tuple = field(default=(0.0, 0.0, 0.0))

    @property
    def lam(self) -> float:
        return float(self.n) ** 2

    @property
    def roots(self) -> np.ndarray:
        """[r, i omega, -i conj(omega), i p, -i conj(p)]."""
        L2 = 1j * self.omega
        L4 = 1j * self.p
        return np.array([self.r, L2, np.conj(L2), L4, np.conj(L4)], dtype=complex)

    @property
    def beam_offset(self) -> complex:
        """Lambda_4 - i lam, accurate even when below double resolution of Lambda_4."""
        return 1j * self.p_shift


def _classify(z, pred, n):
    imag_tol = 1e-9 * max(1.0, np.max(np.abs(z)))
    real_idx = np.flatnonzero(np.abs(z.imag) <= imag_tol)
    if real_idx.size != 1:
        raise ClassificationError(
            f"mode {n}: expected exactly one real root, found {real_idx.size}; "
            "change beta/eta or the coupling constants")
    r = float(z[real_idx[0]].real)
    upper = z[z.imag > imag_tol]
    if upper.size != 2:
        raise ClassificationError(f"mode {n}: roots do not form two conjugate pairs")
    d = np.abs(upper - pred[1])
    if abs(d[0] - d[1]) < 1e-6:
        raise ClassificationError(
            f"mode {n}: wave and beam pairs are equidistant from the wave prediction; "
            "change the coupling constants")
    wave, beam = (upper[0], upper[1]) if d[0] < d[1] else (upper[1], upper[0])
    if abs(wave.imag) >= abs(beam.imag):
        raise ClassificationError(f"mode {n}: wave pair is not below the beam pair")
    return r, wave, beam


def _residual_mp(coeffs: QuinticCoeffs, L) -> float:
    with mpmath.workdps(40):
        v = mpmath.polyval([mpmath.mpf(1)] + [mpmath.mpf(c) for c in coeffs], L)
        scale = max(1.0, max(abs(c) for c in coeffs))
        return float(abs(v) / scale)


def solve_branch(params: ModelParams, n: int) -> SpectralBranch:
    lam = float(n) ** 2
    b, e, AB = params.beta, params.eta, params.AB
    coeffs = quintic_coeffs(params, n)
    pred = asymptotic_roots(params, n)
    seeds = pred.copy()
    # a symmetric seed set keeps the iteration symmetric; nudge off exact coincidence
    if np.min(np.abs(seeds[1] - seeds[3])) < 1e-8:
        seeds[3] += 1e-3j
        seeds[4] -= 1e-3j
    z, _ = aberth(lambda x: quintic_eval(x, lam, b, e, AB), seeds)
    r, wave, beam = _classify(z, pred, n)

    r = _newton(lambda x: tuple(np.real(quintic_eval(x, lam, b, e, AB))), r)
    wave = _newton(lambda x: quintic_eval(x, lam, b, e, AB), wave)

    # beam root L = i (lam + delta): Q = -delta (2 lam + delta) P(L) - AB (L + e)
    def beam_eq(delta):
        L = 1j * (lam + delta)
        P, dP = _cubic(L, lam, b, e)
        w = -delta * (2 * lam + delta)
        return w * P - AB * (L + e), 1j * (2 * L * P + w * dP - AB)

    candidates = [-1j * beam - lam, -1j * pred[3] - lam]
    delta0 = min(candidates, key=lambda d: abs(beam_eq(d)[0]))
    delta = _newton(beam_eq, complex(delta0), tol=1e-16)
    if AB == 0:
        delta = 0j

    with mpmath.workdps(40):
        Lr = mpmath.mpf(r)
        Lw = mpmath.mpc(wave.real, wave.imag)
        Lb = mpmath.mpc(0, 1) * (mpmath.mpf(lam) + mpmath.mpc(delta.real, delta.imag))
        res = (_residual_mp(coeffs, Lr), _residual_mp(coeffs, Lw), _residual_mp(coeffs, Lb))
    if max(res) > 1e-9:
        raise ConvergenceError(f"mode {n}: polished roots miss the residual target", residuals=res)
    return SpectralBranch(n=int(n), r=float(r), omega=complex(-1j * wave),
                          p=complex(lam + delta), p_shift=complex(delta), residuals=res)


def solve_spectrum(params: ModelParams, N: int | None = None) -> list[SpectralBranch]:
    N = params.N if N is None else N
    return [solve_branch(params, n) for n in range(1, N + 1)]


@dataclass
class HypothesisReport:
    N: int
    p_gap_increasing: bool
    p_gap_min: float
    im_p_head_max: float
    im_p_tail_max: float
    im_p_decays: bool
    gamma_hat: float
    alpha_hat: float
    alpha_within_10pct: bool
    n_prime_hat: int | None
    distinct: bool
    exclusions_ok: bool
    a0_hat: float
    a0_positive: bool

    @property
    def passed(self) -> bool:
        return all([self.p_gap_increasing, self.im_p_decays, self.gamma_hat > 0,
                    self.n_prime_hat is not None, self.distinct, self.exclusions_ok,
                    self.a0_positive])

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else v) for k, v in d.items()}


def validate_hypotheses(branches: Sequence[SpectralBranch], params: ModelParams) -> HypothesisReport:
    if len(branches) < 4:
        raise InvalidParameter("hypothesis validation needs at least 4 modes")
    ns = np.array([br.n for br in branches])
    rep = np.array([br.p for br in branches])
    om = np.array([br.omega for br in branches])
    r = np.array([br.r for br in branches])
    N = len(branches)
    tail = slice(N // 2, None)

    gaps = np.diff(rep.real)
    gap_inc = bool(np.all(np.diff(gaps) > 0)) if gaps.size > 1 else True
    im_p = np.abs(rep.imag)
    head_max = float(np.max(im_p[: max(1, N // 2)]))
    tail_max = float(np.max(im_p[tail]))
    om_gaps = np.diff(om.real)
    gamma_hat = float(np.min(om_gaps[N // 2 - 1:])) if om_gaps.size else float("nan")
    alpha_hat = float(np.mean(om.imag[tail]))
    ok_r = r <= -om.imag
    n_prime = None
    for i in range(N):
        if np.all(ok_r[i:]):
            n_prime = int(ns[i])
            break

    allroots = np.concatenate([br.roots for br in branches])
    dist = np.abs(allroots[:, None] - allroots[None, :])
    np.fill_diagonal(dist, np.inf)
    scale = np.maximum(1.0, np.abs(allroots))
    distinct = bool(np.all(dist > 1e-12 * scale[:, None])) and len(set(ns)) == N
    exclusions = bool(np.all(np.abs(r + params.eta) > 1e-12) and np.all(np.abs(rep) > 0))
    a0 = float(np.min(np.abs(rep)))
    return HypothesisReport(
        N=N, p_gap_increasing=gap_inc, p_gap_min=float(np.min(gaps)) if gaps.size else float("nan"),
        im_p_head_max=head_max, im_p_tail_max=tail_max, im_p_decays=tail_max <= head_max,
        gamma_hat=gamma_hat, alpha_hat=alpha_hat,
        alpha_within_10pct=abs(alpha_hat - params.beta / 2) <= 0.1 * params.beta / 2,
        n_prime_hat=n_prime, distinct=distinct, exclusions_ok=exclusions,
        a0_hat=a0, a0_positive=a0 > 0)


CSV_HEADER = ["n", "r_n", "re_omega", "im_omega", "re_p", "im_p",
              "residual_r", "residual_omega", "residual_p"]


def spectrum_csv(branches: Sequence[SpectralBranch]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for br in branches:
        w.writerow([br.n, repr(br.r), repr(br.omega.real), repr(br.omega.imag),
                    repr(br.p.real), repr(br.p.imag), *(f"{x:.3e}" for x in br.residuals)])
    return buf.getvalue()
