"""Ingham-type estimates for the nonharmonic series of the coupled system.

The abstract solution pair is

    u1(t) = sum_n R_n e^{r_n t} + C_n e^{i w_n t} + conj(C_n) e^{-i conj(w_n) t}
                  + D_n e^{i p_n t} + conj(D_n) e^{-i conj(p_n) t},
    u2(t) = sum_n d_n D_n e^{i p_n t} + conj(d_n D_n) e^{-i conj(p_n) t} + calD e^{-eta t}.

Everything here is evaluated in closed form on exponential sums: window
transforms, kernel sums, Monte-Carlo inverse/direct constants, and the
averaging operators that annihilate chosen exponentials.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import InvalidInput, PreconditionError
from .expsum import ExponentialSum, exp_integral, phi1
from .modal import compute_calD, compute_dn
from .spectrum import ModelParams, SpectralBranch, validate_hypotheses

POLE_GUARD = 1e-12


# windows -------------------------------------------------------------------

@dataclass(frozen=True)
class WindowSine:
    """k(t) = sin(pi t / T) on [0, T]."""

    T: float

    def k(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= 0) & (t <= self.T), np.sin(np.pi * t / self.T), 0.0)

    def K(self, u):
        u = np.asarray(u, dtype=complex)
        return np.pi * self.T / (np.pi ** 2 - self.T ** 2 * u ** 2)

    def pole_distance(self, u):
        return np.abs(np.pi ** 2 - self.T ** 2 * np.asarray(u, dtype=complex) ** 2)

    def transform(self, u):
        """int k(t) e^{iut} dt = (1 + e^{iuT}) K(u)."""
        u = np.asarray(u, dtype=complex)
        return (1 + np.exp(1j * u * self.T)) * self.K(u)

    @property
    def support(self):
        return 0.0, self.T


@dataclass(frozen=True)
class WindowCosine:
    """k*(t) = cos(pi t / (2T)) on [-T, T]."""

    T: float

    def k(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(np.abs(t) <= self.T, np.cos(np.pi * t / (2 * self.T)), 0.0)

    def K(self, u):
        u = np.asarray(u, dtype=complex)
        return 4 * self.T * np.pi / (np.pi ** 2 - 4 * self.T ** 2 * u ** 2)

    def pole_distance(self, u):
        return np.abs(np.pi ** 2 - 4 * self.T ** 2 * np.asarray(u, dtype=complex) ** 2)

    def transform(self, u):
        """int k*(t) e^{iut} dt = cos(uT) K*(u)."""
        u = np.asarray(u, dtype=complex)
        return np.cos(u * self.T) * self.K(u)

    @property
    def support(self):
        return -self.T, self.T


def _gauss_legendre(f, a, b, nodes=256):
    x, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (b - a) * x + 0.5 * (b + a)
    return 0.5 * (b - a) * np.sum(w * f(t))


def window_transform_identity_check(w, u: complex, nodes: int = 256) -> float:
    """|quadrature of int k e^{iut} - closed form|."""
    if w.pole_distance(u) <= POLE_GUARD:
        raise InvalidInput("u sits on a pole of the window transform; pick another u")
    a, b = w.support
    q = _gauss_legendre(lambda t: w.k(t) * np.exp(1j * u * t), a, b, nodes)
    return float(abs(q - complex(w.transform(u))))


def windowed_norm2(f: ExponentialSum, T: float) -> float:
    """int_0^T sin(pi t / T) |f(t)|^2 dt in closed form."""
    if len(f) == 0:
        return 0.0
    s = f.exponents[:, None] + np.conj(f.exponents)[None, :]
    c = 1j * np.pi / T
    M = (exp_integral(s + c, 0.0, T) - exp_integral(s - c, 0.0, T)) / 2j
    return float((f.amplitudes @ M @ np.conj(f.amplitudes)).real)


# kernel sums -----------------------------------------------------------------

def tail_reciprocal_sum(n0: int) -> float:
    """sum_{m >= n0} 1/(4 m^2 - 1) = 1/(2 (2 n0 - 1)) by telescoping."""
    return 1.0 / (2 * (2 * n0 - 1))


@dataclass
class BoundReport:
    T: float
    M: float
    epsilon: float
    minus_sums: np.ndarray
    plus_sums: np.ndarray
    minus_bound: float
    plus_bounds: np.ndarray
    n0_hat: int | None

    @property
    def holds(self) -> bool:
        return self.n0_hat is not None

    def margins(self):
        return self.minus_bound - self.minus_sums, self.plus_bounds - self.plus_sums


def kernel_sum_bounds(branches: Sequence[SpectralBranch], T: float, epsilon: float,
                      M: float) -> BoundReport:
    """Off-diagonal window sums against 2 pi/(T M^2) and (4 pi/(T M^2)) sum 1/(4m^2-1).

    For a candidate n0 the sums run over the computed modes m >= n0; n0_hat is
    the smallest n0 for which both bounds hold at every n >= n0.
    """
    if not 0 < epsilon < 1:
        raise InvalidInput("epsilon must lie in (0, 1)")
    if M <= 2 * np.pi / (T * (1 - epsilon)):
        raise PreconditionError("need M > 2 pi / (T (1 - epsilon))")
    w = WindowSine(T)
    p = np.array([br.p for br in branches])
    N = p.size
    Km = np.abs(w.K(p[:, None] - np.conj(p)[None, :]))
    np.fill_diagonal(Km, 0.0)
    Kp = np.abs(w.K(p[:, None] + p[None, :]))
    minus_bound = 2 * np.pi / (T * M ** 2)
    n0_hat = None
    minus = plus = bounds = None
    for n0 in range(1, N + 1):
        sl = slice(n0 - 1, N)
        ms = Km[sl, sl].sum(axis=1)
        ps = Kp[sl, sl].sum(axis=1)
        pb = np.full(ps.shape, 4 * np.pi / (T * M ** 2) * tail_reciprocal_sum(n0))
        if minus is None:
            minus, plus, bounds = ms, ps, pb
        if np.all(ms <= minus_bound) and np.all(ps <= pb):
            n0_hat = n0
            minus, plus, bounds = ms, ps, pb
            break
    return BoundReport(T=T, M=M, epsilon=epsilon, minus_sums=minus, plus_sums=plus,
                       minus_bound=minus_bound, plus_bounds=bounds, n0_hat=n0_hat)


# series family -------------------------------------------------------------------

class SeriesFamily:
    """Real-linear map from coefficient vectors to the (u1, u2) exponential sums.

    A coefficient vector theta holds [Re C | Im C | Re D | Im D] (length 4N);
    R_n = Re(C_n)/n, which meets |R_n| <= |C_n|/n.
    """

    def __init__(self, branches: Sequence[SpectralBranch], params: ModelParams):
        self.branches = list(branches)
        self.params = params
        N = self.N = len(self.branches)
        self.n = np.array([br.n for br in self.branches], dtype=float)
        self.r = np.array([br.r for br in self.branches])
        self.omega = np.array([br.omega for br in self.branches])
        self.p = np.array([br.p for br in self.branches])
        self.d = np.array([compute_dn(br, params) for br in self.branches])
        # exponents
        self.mu1 = np.concatenate([self.r + 0j, 1j * self.omega, np.conj(1j * self.omega),
                                   1j * self.p, np.conj(1j * self.p)])
        self.mu2 = np.concatenate([1j * self.p, np.conj(1j * self.p), [-params.eta]])
        # amplitude maps a = P theta
        I = np.eye(N)
        Z = np.zeros((N, N))
        P1 = np.block([
            [np.diag(1 / self.n), Z, Z, Z],
            [I, 1j * I, Z, Z],
            [I, -1j * I, Z, Z],
            [Z, Z, I, 1j * I],
            [Z, Z, I, -1j * I],
        ]).astype(complex)
        dD = np.hstack([Z, Z, np.diag(self.d), np.diag(1j * self.d)])
        self.g = self._calD_row()
        P2 = np.vstack([dD, np.conj(dD), self.g[None, :]])
        self.P1, self.P2 = P1, P2

    def _calD_row(self) -> np.ndarray:
        """calD as a real linear functional of theta."""
        N = self.N
        g = np.zeros(4 * N)
        for k in range(N):
            for part, col in ((1.0, 2 * N + k), (1j, 3 * N + k)):
                D = np.zeros(N, dtype=complex)
                D[k] = part
                g[col] = compute_calD(D, self.branches, self.params)
        return g

    def split(self, theta):
        theta = np.asarray(theta, dtype=float)
        N = self.N
        C = theta[..., :N] + 1j * theta[..., N:2 * N]
        D = theta[..., 2 * N:3 * N] + 1j * theta[..., 3 * N:]
        return C, D

    def u1(self, theta) -> ExponentialSum:
        return ExponentialSum(self.P1 @ theta, self.mu1, real=True)

    def u2(self, theta) -> ExponentialSum:
        return ExponentialSum(self.P2 @ theta, self.mu2, real=True)

    def calD(self, theta) -> float:
        return float(self.g @ theta)

    def quadratic_form(self, a: float, b: float) -> np.ndarray:
        """Q with theta^T Q theta = int_a^b |u1|^2 + |u2|^2."""
        out = np.zeros((4 * self.N, 4 * self.N))
        for P, mu in ((self.P1, self.mu1), (self.P2, self.mu2)):
            M = exp_integral(mu[:, None] + np.conj(mu)[None, :], a, b)
            out += (P.T @ M @ np.conj(P)).real
        return 0.5 * (out + out.T)

    def coefficient_weights(self, with_calD: bool) -> np.ndarray:
        """W with theta^T W theta = sum|C|^2 + sum|D|^2 |p|^4 (+ calD^2)."""
        w = np.concatenate([np.ones(2 * self.N), np.tile(np.abs(self.p) ** 4, 2)])
        W = np.diag(w)
        if with_calD:
            W = W + np.outer(self.g, self.g)
        return W

    def draw(self, rng: np.random.Generator, n0: int = 1) -> np.ndarray:
        """Standard normal C_n; D_n scaled by 1/|p_n|^2 so both blocks weigh alike."""
        N = self.N
        theta = rng.standard_normal(4 * N)
        s = np.abs(self.p) ** -2
        theta[2 * N:3 * N] *= s
        theta[3 * N:] *= s
        if n0 > 1:
            for blk in range(4):
                theta[blk * N: blk * N + n0 - 1] = 0.0
        return theta


@dataclass
class ConstantEstimate:
    value: float
    ratios: np.ndarray
    exact: float
    T: float
    draws: int
    seed: int

    def to_json(self) -> dict:
        return {"value": self.value, "exact": self.exact, "T": self.T, "draws": self.draws,
                "seed": self.seed}


def _draws(family: SeriesFamily, draws: int, seed: int) -> np.ndarray:
    return np.array([family.draw(np.random.default_rng(seed + i)) for i in range(draws)])


def _check_pre(branches, params, T, factor):
    rep = validate_hypotheses(branches, params)
    if not rep.passed:
        raise PreconditionError("spectral hypotheses fail on the computed range")
    if T <= factor * np.pi / rep.gamma_hat:
        raise PreconditionError(f"need T > {factor} pi / gamma_hat = {factor * np.pi / rep.gamma_hat:.4f}")
    return rep


def _ratios(Q, W, theta):
    num = np.einsum("ij,jk,ik->i", theta, Q, theta)
    den = np.einsum("ij,jk,ik->i", theta, W, theta)
    return num / den


def estimate_inverse_constant(branches: Sequence[SpectralBranch], draws: int, T: float, seed: int,
                              params: ModelParams) -> ConstantEstimate:
    """Min over draws of int_0^T (|u1|^2 + |u2|^2) / (sum|C|^2 + sum|D|^2|p|^4 + calD^2)."""
    if draws < 100:
        raise PreconditionError("at least 100 draws required")
    _check_pre(branches, params, T, 2)
    fam = SeriesFamily(branches, params)
    Q = fam.quadratic_form(0.0, T)
    W = fam.coefficient_weights(with_calD=True)
    r = _ratios(Q, W, _draws(fam, draws, seed))
    exact = float(scipy.linalg.eigh(Q, W, eigvals_only=True)[0])
    return ConstantEstimate(float(r.min()), r, exact, T, draws, seed)


def estimate_direct_constant(branches: Sequence[SpectralBranch], draws: int, T: float, seed: int,
                             params: ModelParams) -> ConstantEstimate:
    """Max over draws of int_{-T}^T (|u1|^2 + |u2|^2) / (sum|C|^2 + sum|D|^2|p|^4)."""
    if draws < 1:
        raise PreconditionError("at least one draw required")
    _check_pre(branches, params, T, 1)
    fam = SeriesFamily(branches, params)
    Q = fam.quadratic_form(-T, T)
    W = fam.coefficient_weights(with_calD=False)
    r = _ratios(Q, W, _draws(fam, draws, seed))
    exact = float(scipy.linalg.eigh(Q, W, eigvals_only=True)[-1])
    return ConstantEstimate(float(r.max()), r, exact, T, draws, seed)


# annihilators -------------------------------------------------------------------

def _survival(mu, z, delta):
    """Factor picked up by e^{mu t} under I_{delta,z}; 0 when mu = i z."""
    w = (np.asarray(mu, dtype=complex) - 1j * z) * delta
    return 1 - phi1(w)


@dataclass(frozen=True)
class Annihilator:
    """I u(t) = u(t) - (1/delta) int_0^delta e^{-izs} u(t+s) ds."""

    delta: float
    z: complex

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidInput("delta must be positive")

    def factor(self, mu):
        return _survival(mu, self.z, self.delta)

    def killed(self, mu, tol=1e-12):
        mu = np.asarray(mu, dtype=complex)
        return np.abs(mu - 1j * self.z) <= tol * np.maximum(1.0, np.abs(mu))

    def apply_samples(self, u, t, nodes: int = 64):
        """Direct quadrature of the defining integral, for cross-checks."""
        x, w = np.polynomial.legendre.leggauss(nodes)
        s = 0.5 * self.delta * (x + 1)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        vals = u(t[:, None] + s[None, :]) * np.exp(-1j * self.z * s)[None, :]
        return u(t) - 0.5 * (vals @ w)


def annihilate(op, f: ExponentialSum) -> ExponentialSum:
    """Exact action on an exponential sum; terms with mu = i z are deleted."""
    if isinstance(op, ComposedAnnihilator):
        return op.apply(f)
    mu = f.exponents
    keep = ~op.killed(mu)
    amp = f.amplitudes * op.factor(mu)
    return ExponentialSum(amp[keep], mu[keep], real=False)


@dataclass(frozen=True)
class ComposedAnnihilator:
    """I_{d,-ir} I_{d,w} I_{d,-conj w} I_{d,p} I_{d,-conj p}: kills one full mode."""

    delta: float
    r: float
    omega: complex
    p: complex

    @property
    def parts(self):
        d = self.delta
        return (Annihilator(d, -1j * self.r), Annihilator(d, self.omega),
                Annihilator(d, -np.conj(self.omega)), Annihilator(d, self.p),
                Annihilator(d, -np.conj(self.p)))

    @classmethod
    def for_branch(cls, br: SpectralBranch, delta: float) -> "ComposedAnnihilator":
        return cls(delta, br.r, br.omega, br.p)

    def factor(self, mu):
        out = np.ones(np.shape(mu), dtype=complex)
        for a in self.parts:
            out = out * a.factor(mu)
        return out

    def apply(self, f: ExponentialSum) -> ExponentialSum:
        for a in self.parts:
            f = annihilate(a, f)
        return f

    def growth_bound(self) -> float:
        """2^5 (1 + e^{2|r|d})(1 + e^{2|Im w|d})^2 (1 + e^{2|Im p|d})^2."""
        d = self.delta
        return (2 ** 5 * (1 + np.exp(2 * abs(self.r) * d)) * (1 + np.exp(2 * abs(self.omega.imag) * d)) ** 2
                * (1 + np.exp(2 * abs(self.p.imag) * d)) ** 2)


def compose_all(ops: Sequence, f: ExponentialSum) -> ExponentialSum:
    for op in ops:
        f = annihilate(op, f)
    return f


def annihilator_bound_check(op: ComposedAnnihilator, f: ExponentialSum, T: float):
    """(lhs, rhs) of int_0^T |I f|^2 <= bound * int_0^{T+5 delta} |f|^2."""
    lhs = annihilate(op, f).norm2(0.0, T)
    rhs = op.growth_bound() * f.norm2(0.0, T + 5 * op.delta)
    return lhs, rhs


def choose_delta(epsilon: float, n0: int, T0: float, survivors, killers: Sequence[SpectralBranch],
                 floor: float = 1e-12, max_steps: int = 10000) -> float:
    """delta = min(eps/(5 n0), T0/8), nudged by 1e-3 until every survival factor exceeds floor."""
    delta = min(epsilon / (5 * n0), T0 / 8)
    survivors = np.asarray(survivors, dtype=complex)
    for _ in range(max_steps):
        fac = np.ones(survivors.shape, dtype=complex)
        for br in killers:
            fac *= ComposedAnnihilator.for_branch(br, delta).factor(survivors)
        if survivors.size == 0 or np.min(np.abs(fac)) > floor:
            return float(delta)
        delta += 1e-3
    raise PreconditionError("no admissible delta found")


def haraux_shift(f: ExponentialSum, delta: float) -> ExponentialSum:
    """t -> int_0^delta (f(t) - f(t+s)) ds; constants are annihilated."""
    mu = f.exponents
    amp = f.amplitudes * delta * (1 - phi1(mu * delta))
    return ExponentialSum(amp, mu, real=f.real)


def modulate(f: ExponentialSum, c: complex) -> ExponentialSum:
    """t -> e^{c t} f(t)."""
    return ExponentialSum(f.amplitudes, f.exponents + c, real=f.real and np.imag(c) == 0)


# finite-deficiency estimates -----------------------------------------------------

@dataclass
class DeficiencyReport:
    n0: int
    lhs_541: float
    window_lhs: float
    c_weight: float
    d_penalty: float
    implied_c_541: float
    implied_c_window: float
    lhs_546: float
    rhs_546: float
    slack_546: float
    positivity_546: np.ndarray
    lhs_552: float
    shifted_lhs: float
    shifted_rhs: float
    slack_shifted: float
    implied_c_552: float
    delta: float
    m1_hat: float

    def to_json(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "positivity_546"}
        d["positivity_min"] = float(np.min(self.positivity_546)) if self.positivity_546.size else None
        return d


def finite_deficiency_inverse(branches: Sequence[SpectralBranch], theta, T: float, epsilon: float,
                              params: ModelParams, n0: int, M: float | None = None) -> DeficiencyReport:
    """Evaluate the three lower bounds behind the inverse inequality on one draw."""
    fam = SeriesFamily(branches, params)
    C, D = fam.split(theta)
    if n0 > 1 and (np.any(C[:n0 - 1] != 0) or np.any(D[:n0 - 1] != 0)):
        raise PreconditionError("modes below n0 must vanish")
    rep = validate_hypotheses(branches, params)
    gamma = rep.gamma_hat
    M = gamma if M is None else M
    alpha = params.beta / 2
    sl = slice(n0 - 1, None)
    p, om = fam.p[sl], fam.omega[sl]
    Cs, Ds = C[sl], D[sl]

    theta = np.asarray(theta, dtype=float)
    u1 = fam.u1(theta)
    lhs_541 = u1.norm2(0.0, T)
    # the wave/memory part alone, for the windowed bound
    theta_c = theta.copy()
    theta_c[2 * fam.N:] = 0.0
    win = windowed_norm2(fam.u1(theta_c), T)
    cw = float(np.sum((1 + np.exp(-2 * (om.imag - alpha) * T)) * np.abs(Cs) ** 2))
    grow = 1 + np.exp(-2 * p.imag * T)
    base = 1 / (np.pi ** 2 + 4 * T ** 2 * p.imag ** 2)
    dpen = float(2 * np.pi * T * np.sum((base + 2 / (T ** 2 * gamma ** 2)) * grow * np.abs(Ds) ** 2))
    implied_541 = (lhs_541 + dpen) / cw if cw > 0 else float("inf")
    implied_win = win / cw if cw > 0 else float("inf")

    # beam component alone, weighted by e^{eta t}
    theta_d = theta.copy()
    theta_d[: 2 * fam.N] = 0.0
    u2 = fam.u2(theta_d)
    calD = fam.calD(theta_d)
    G = u2.select(np.abs(u2.exponents + params.eta) > 1e-12)
    eG = modulate(G, params.eta)
    lhs_546 = eG.norm2(0.0, T)
    m1 = float(np.min(np.abs(fam.d) / np.abs(fam.p) ** 2))
    pos = base - 2 / (T ** 2 * M ** 2)
    w4 = np.abs(Ds) ** 2 * np.abs(p) ** 4
    rhs_546 = float(2 * np.pi * T * m1 ** 2 * np.sum(pos * grow * w4))

    G1 = eG + ExponentialSum([calD], [0.0], real=True)
    lhs_552 = G1.norm2(0.0, T)
    T0 = 2 * np.pi / gamma
    delta = 3 * T0 / 8
    h = haraux_shift(G1, delta)
    Ts = T - delta
    shifted_lhs = h.norm2(0.0, Ts)
    Mbar = T * M / Ts
    mult = np.abs(delta * (1 - phi1((params.eta + 1j * p) * delta))) ** 2
    pos_s = 1 / (np.pi ** 2 + 4 * Ts ** 2 * p.imag ** 2) - 2 / (Ts ** 2 * Mbar ** 2)
    shifted_rhs = float(2 * np.pi * Ts * m1 ** 2 * np.sum(pos_s * (1 + np.exp(-2 * p.imag * Ts)) * mult * w4))
    dsum = float(np.sum(pos * grow * w4))
    denom = np.pi * T * dsum + calD ** 2
    return DeficiencyReport(
        n0=n0, lhs_541=lhs_541, window_lhs=win, c_weight=cw, d_penalty=dpen,
        implied_c_541=implied_541, implied_c_window=implied_win,
        lhs_546=lhs_546, rhs_546=rhs_546, slack_546=lhs_546 - rhs_546, positivity_546=pos,
        lhs_552=lhs_552, shifted_lhs=shifted_lhs, shifted_rhs=shifted_rhs,
        slack_shifted=shifted_lhs - shifted_rhs,
        implied_c_552=lhs_552 / denom if denom > 0 else float("inf"), delta=delta, m1_hat=m1)


def calD_bound_constant(branches: Sequence[SpectralBranch], params: ModelParams,
                        as_printed: bool = False) -> float:
    """C with |calD|^2 <= C sum |D_n|^2 |p_n|^4.

    Cauchy-Schwarz on the defining sum plus |p_n| >= a0 gives
    4 a0^-2 (beta/A)^2 sum 1/((eta - Im p)^2 + (Re p)^2). `as_printed` returns
    4 a0^2 (beta/A) times the same sum, which drops one beta/A factor and
    inverts a0; it is kept to show that it fails on generic data.
    """
    p = np.array([br.p for br in branches])
    a0 = float(np.min(np.abs(p)))
    s = float(np.sum(1 / ((params.eta - p.imag) ** 2 + p.real ** 2)))
    ba = params.beta / abs(params.A)
    if as_printed:
        return 4 * a0 ** 2 * ba * s
    return 4 * ba ** 2 * s / a0 ** 2
