"""Modal coefficients and closed-form solutions of the coupled system.

Per mode n the pair (f1, f2) solves

    f1'' + lam f1 - lam beta int_0^t exp(-eta (t - s)) f1(s) ds + A f2 = 0,
    f2'' + lam^2 f2 + B f1 = 0,

with f1 = sum_k C_k exp(L_k t) over the five quintic roots. The companion f2
is recovered exactly: on the wave and memory roots its amplitude is
-B C_k / (L_k^2 + lam^2), on the beam roots -(C_k/A)(L_k^2 + lam - beta lam/(eta + L_k)),
plus a single exp(-eta t) term left over by the memory convolution. Both forms
follow from Q(L) = (L^2 + lam^2) P(L) - AB (L + eta) and are chosen to avoid
cancellation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConditioningError, InvalidInput, InvalidParameter, WavebeamError
from .expsum import ExponentialSum
from .spectrum import ModelParams, SpectralBranch, solve_spectrum


@dataclass(frozen=True)
class FinalData:
    """Sine coefficients (alpha1, rho1, alpha2, rho2) of the four data fields."""

    alpha1: np.ndarray
    rho1: np.ndarray
    alpha2: np.ndarray
    rho2: np.ndarray

    def __post_init__(self):
        arrs = [np.atleast_1d(np.asarray(getattr(self, k), dtype=float))
                for k in ("alpha1", "rho1", "alpha2", "rho2")]
        if len({a.shape for a in arrs}) != 1 or arrs[0].ndim != 1:
            raise InvalidInput("the four coefficient sequences must share one length")
        for k, a in zip(("alpha1", "rho1", "alpha2", "rho2"), arrs):
            a.setflags(write=False)
            object.__setattr__(self, k, a)

    @property
    def N(self) -> int:
        return self.alpha1.size

    @classmethod
    def zeros(cls, N: int) -> "FinalData":
        z = np.zeros(N)
        return cls(z, z, z, z)

    @classmethod
    def from_vector(cls, v) -> "FinalData":
        """Inverse of as_vector: blocks [alpha1 | rho1 | alpha2 | rho2]."""
        v = np.asarray(v, dtype=float)
        if v.size % 4:
            raise InvalidInput("vector length must be a multiple of 4")
        return cls(*v.reshape(4, -1))

    @classmethod
    def unit(cls, N: int, component: int, n: int) -> "FinalData":
        v = np.zeros(4 * N)
        v[component * N + n - 1] = 1.0
        return cls.from_vector(v)

    @classmethod
    def random(cls, N: int, rng: np.random.Generator) -> "FinalData":
        return cls(*rng.standard_normal((4, N)))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.alpha1, self.rho1, self.alpha2, self.rho2])

    def mode(self, n: int):
        i = n - 1
        return self.alpha1[i], self.rho1[i], self.alpha2[i], self.rho2[i]

    def truncated(self, N: int) -> "FinalData":
        out = []
        for a in (self.alpha1, self.rho1, self.alpha2, self.rho2):
            b = np.zeros(N)
            m = min(N, a.size)
            b[:m] = a[:m]
            out.append(b)
        return FinalData(*out)

    def time_reversed(self) -> "FinalData":
        """Data seen by the reversed-time problem: velocities change sign."""
        return FinalData(self.alpha1, -self.rho1, self.alpha2, -self.rho2)

    def norms(self) -> dict:
        """H^1_0, L^2, H^1_0 and H^-1 squared norms (sine basis, unnormalised)."""
        n = np.arange(1, self.N + 1, dtype=float)
        return {"z10_H1": float(np.sum(self.alpha1 ** 2 * n ** 2)),
                "z11_L2": float(np.sum(self.rho1 ** 2)),
                "z20_H1": float(np.sum(self.alpha2 ** 2 * n ** 2)),
                "z21_Hm1": float(np.sum(self.rho2 ** 2 / n ** 2))}

    def to_json(self) -> dict:
        return {k: [float(x) for x in getattr(self, k)] for k in ("alpha1", "rho1", "alpha2", "rho2")}

    @classmethod
    def from_json(cls, doc: dict) -> "FinalData":
        keys = {"alpha1", "rho1", "alpha2", "rho2"}
        if set(doc) != keys:
            raise InvalidInput(f"final data needs exactly the keys {sorted(keys)}")
        return cls(*(doc[k] for k in ("alpha1", "rho1", "alpha2", "rho2")))


def cauchy_init_vector(data: FinalData, params: ModelParams, n: int) -> np.ndarray:
    """(f, f', f'', f''', f'''') at t = 0 for the scalar fifth-order problem."""
    if not 1 <= n <= data.N:
        raise InvalidInput(f"mode {n} outside 1..{data.N}")
    a1, r1, a2, r2 = data.mode(n)
    lam = float(n) ** 2
    b, e, A, B = params.beta, params.eta, params.A, params.B
    f2 = -lam * a1 - A * a2
    f3 = -A * r2 - lam * r1 + lam * b * a1
    # (lam^2+lam)(lam a1 + A a2) - (lam^3 - AB) a1, with the lam^3 a1 terms cancelled by hand
    f4 = lam ** 2 * a1 + (lam ** 2 + lam) * A * a2 + A * B * a1 + lam * b * r1 - lam * e * b * a1
    return np.array([a1, r1, f2, f3, f4], dtype=float)


def _gauss_pp(M, rhs, piv_tol=1e-14):
    """Gaussian elimination with row equilibration and partial pivoting."""
    M = np.array(M, dtype=complex)
    x = np.array(rhs, dtype=complex)
    n = M.shape[0]
    rs = np.max(np.abs(M), axis=1)
    if np.any(rs == 0):
        raise ConditioningError("zero row in Vandermonde system")
    M /= rs[:, None]
    x /= rs
    min_piv = np.inf
    for k in range(n):
        i = k + int(np.argmax(np.abs(M[k:, k])))
        if i != k:
            M[[k, i]] = M[[i, k]]
            x[[k, i]] = x[[i, k]]
        piv = M[k, k]
        min_piv = min(min_piv, abs(piv))
        if abs(piv) < piv_tol:
            raise ConditioningError(f"pivot {abs(piv):.2e} below tolerance")
        f = M[k + 1:, k] / piv
        M[k + 1:, k:] -= np.outer(f, M[k, k:])
        x[k + 1:] -= f * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - M[k, k + 1:] @ x[k + 1:]) / M[k, k]
    return x, min_piv


def solve_vandermonde(roots, init, refine: int = 2):
    """Solve sum_i L_i^k C_i = init_k, k = 0..4, on roots scaled by max modulus.

    Returns (C, relative residual).
    """
    roots = np.asarray(roots, dtype=complex)
    init = np.asarray(init, dtype=complex)
    m = roots.size
    s = float(np.max(np.abs(roots)))
    dist = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(dist, np.inf)
    if np.min(dist) <= 1e-9 * s:
        raise ConditioningError("roots are not pairwise distinct")
    if not np.any(init):
        return np.zeros(m, dtype=complex), 0.0
    x = roots / s
    V = x[None, :] ** np.arange(m)[:, None]
    b = init / s ** np.arange(m)
    c, _ = _gauss_pp(V, b)
    for _ in range(refine):
        r = b - V @ c
        dc, _ = _gauss_pp(V, r)
        c = c + dc
    raw = roots[None, :] ** np.arange(m)[:, None]
    res = np.max(np.abs(raw @ c - init)) / np.max(np.abs(init))
    if res > 1e-8:
        raise ConditioningError(f"Vandermonde reconstruction residual {res:.2e}")
    return c, float(res)


@dataclass(frozen=True)
class ModeSolution:
    n: int
    lam: float
    roots: np.ndarray
    C: np.ndarray
    F2: np.ndarray
    E: complex
    eta: float
    residual: float

    def f1(self) -> ExponentialSum:
        return ExponentialSum(self.C, self.roots, real=True)

    def f2(self) -> ExponentialSum:
        return ExponentialSum(np.append(self.F2, self.E), np.append(self.roots, -self.eta), real=True)


def _f2_amplitudes(roots, C, lam, params: ModelParams):
    b, e, A, B = params.beta, params.eta, params.A, params.B
    F2 = np.empty(5, dtype=complex)
    L = roots[:3]
    F2[:3] = -B * C[:3] / (L * L + lam * lam)
    L = roots[3:]
    F2[3:] = -(C[3:] / A) * (L * L + lam - b * lam / (e + L))
    # without memory the real root sits at -eta and the memory term vanishes identically
    E = 0.0 if b == 0 else -(lam * b / A) * np.sum(C / (roots + e))
    return F2, complex(E)


def solve_mode(branch: SpectralBranch, data: FinalData, params: ModelParams) -> ModeSolution:
    params.require_coupled()
    n = branch.n
    init = cauchy_init_vector(data, params, n)
    roots = branch.roots
    C, res = solve_vandermonde(roots, init)
    # real data: enforce exact conjugate symmetry of the pair coefficients
    C[0] = C[0].real
    C[2] = np.conj(C[1])
    C[4] = np.conj(C[3])
    F2, E = _f2_amplitudes(roots, C, branch.lam, params)
    return ModeSolution(n=n, lam=branch.lam, roots=roots, C=C, F2=F2, E=E.real + 0j,
                        eta=params.eta, residual=res)


def compute_dn(branch: SpectralBranch, params: ModelParams) -> complex:
    """d_n = (p^2 - Re p + beta Re p / (eta + i p)) / A."""
    if params.A == 0:
        raise InvalidParameter("d_n needs A != 0")
    p = branch.p
    if p == 0:
        raise InvalidParameter("d_n needs p_n != 0")
    return complex((p * p - p.real + params.beta * p.real / (params.eta + 1j * p)) / params.A)


def compute_calD(D: Sequence[complex], branches: Sequence[SpectralBranch], params: ModelParams,
                 tol: float = 1e-10) -> float:
    """-(beta/A) sum Re p_n (D_n/(eta + i p_n) + conj(D_n)/(eta - i conj(p_n)))."""
    if params.A == 0:
        raise InvalidParameter("calD needs A != 0")
    D = np.asarray(D, dtype=complex)
    p = np.array([br.p for br in branches[:D.size]])
    z = D / (params.eta + 1j * p)
    total = -(params.beta / params.A) * np.sum(p.real * (z + np.conj(z)))
    if abs(total.imag) > tol * max(1.0, abs(total.real)):
        raise WavebeamError("calD has a spurious imaginary part")
    return float(total.real)


@dataclass(frozen=True)
class ModalCoefficients:
    modes: tuple
    d: np.ndarray
    calD: float
    params: ModelParams

    @property
    def N(self) -> int:
        return len(self.modes)

    @property
    def R(self) -> np.ndarray:
        return np.array([m.C[0].real for m in self.modes])

    @property
    def Cn(self) -> np.ndarray:
        return np.array([m.C[1] for m in self.modes])

    @property
    def Dn(self) -> np.ndarray:
        return np.array([m.C[3] for m in self.modes])

    @property
    def C(self) -> np.ndarray:
        return np.array([m.C for m in self.modes])

    def to_json(self) -> dict:
        def c(z):
            return [float(np.real(z)), float(np.imag(z))]
        return {"calD": self.calD,
                "modes": [{"n": m.n, "C": [c(x) for x in m.C], "d": c(dn),
                           "f2": [c(x) for x in m.F2], "f2_memory": c(m.E)}
                          for m, dn in zip(self.modes, self.d)]}


def modal_coefficients(data: FinalData, params: ModelParams,
                       branches: Sequence[SpectralBranch] | None = None) -> ModalCoefficients:
    if branches is None:
        branches = solve_spectrum(params, data.N)
    if len(branches) < data.N:
        raise InvalidInput("fewer spectral branches than data modes")
    modes = []
    for br in branches[:data.N]:
        try:
            modes.append(solve_mode(br, data, params))
        except WavebeamError as exc:
            raise type(exc)(f"mode {br.n}: {exc}") from exc
    d = np.array([compute_dn(br, params) for br in branches[:data.N]])
    calD = compute_calD([m.C[3] for m in modes], branches, params)
    return ModalCoefficients(modes=tuple(modes), d=d, calD=calD, params=params)


@dataclass
class EstimateReport:
    ratio_i: np.ndarray
    ratio_ii: np.ndarray
    ratio_iii: np.ndarray
    vacuous_i: bool
    vacuous_iii: bool

    @staticmethod
    def _range(a):
        a = a[np.isfinite(a)]
        return (float(a.min()), float(a.max())) if a.size else (float("nan"), float("nan"))

    def ranges(self) -> dict:
        return {"i": self._range(self.ratio_i), "ii": self._range(self.ratio_ii),
                "iii": self._range(self.ratio_iii)}

    def tail_mean(self, which: str, frac: float = 0.25) -> float:
        a = getattr(self, f"ratio_{which}")
        k = max(1, int(round(a.size * frac)))
        t = a[-k:]
        t = t[np.isfinite(t)]
        return float(np.mean(t)) if t.size else float("nan")


def coefficient_estimates(coeffs: ModalCoefficients, data: FinalData) -> EstimateReport:
    if coeffs.N < 8:
        raise InvalidInput("coefficient estimates need at least 8 modes")
    n = np.arange(1, coeffs.N + 1, dtype=float)
    lam = n ** 2
    a1, r1, a2, r2 = (x[:coeffs.N] for x in (data.alpha1, data.rho1, data.alpha2, data.rho2))
    C = coeffs.C
    with np.errstate(divide="ignore", invalid="ignore"):
        den1 = a1 ** 2 * lam + r1 ** 2
        ri = np.where(den1 > 0, lam * np.abs(C[:, 1]) ** 2 / den1, np.nan)
        rii = np.where(np.abs(C[:, 1]) > 0, np.abs(C[:, 0]) / np.abs(C[:, 1]) * np.sqrt(lam), np.nan)
        den3 = a2 ** 2 * lam + r2 ** 2 / lam
        riii = np.where(den3 > 0, lam ** 5 * np.abs(C[:, 3]) ** 2 / den3, np.nan)
    return EstimateReport(ri, rii, riii, vacuous_i=bool(np.all(den1 == 0)),
                          vacuous_iii=bool(np.all(den3 == 0)))


@dataclass
class Synthesis:
    """Closed-form u1(t, x), u2(t, x) = sum_n f_in(t) sin(n x) and their traces."""

    coeffs: ModalCoefficients
    branches: list = field(default_factory=list)

    def f1(self, n: int) -> ExponentialSum:
        return self.coeffs.modes[n - 1].f1()

    def f2(self, n: int) -> ExponentialSum:
        return self.coeffs.modes[n - 1].f2()

    def _field(self, which, t, x):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((t.size, x.size))
        for m in self.coeffs.modes:
            f = m.f1() if which == 1 else m.f2()
            out += np.outer(f(t), np.sin(m.n * x))
        return out

    def u1(self, t, x):
        return self._field(1, t, x)

    def u2(self, t, x):
        return self._field(2, t, x)

    def _trace(self, which) -> ExponentialSum:
        sums = [m.f1() if which == 1 else m.f2() for m in self.coeffs.modes]
        w = [(-1) ** m.n * m.n for m in self.coeffs.modes]
        return ExponentialSum.combine(sums, w)

    def trace_u1x(self) -> ExponentialSum:
        """u1_x(t, pi) = sum_n (-1)^n n f1n(t)."""
        return self._trace(1)

    def trace_u2x(self) -> ExponentialSum:
        return self._trace(2)

    def f2_variation(self, n: int) -> ExponentialSum:
        """f2 = -(1/A)[f1'' + lam f1 - lam beta int_0^t exp(-eta(t-s)) f1 ds]."""
        p = self.coeffs.params
        f1 = self.f1(n)
        lam = float(n) ** 2
        mem = f1.convolve_forward(p.eta)
        return (-1.0 / p.A) * (f1.derivative(2) + lam * f1 - (lam * p.beta) * mem)

    def f2_beam_only(self, n: int) -> ExponentialSum:
        """The beam-pair terms alone (with their share of the exp(-eta t) term).

        Equals f2 only when AB = 0; the gap is measured by beam_only_gap.
        """
        p = self.coeffs.params
        m = self.coeffs.modes[n - 1]
        lam = m.lam
        L = m.roots[3:]
        C = m.C[3:]
        amp = -(C / p.A) * (L * L + lam - p.beta * lam / (p.eta + L))
        mem = -(p.beta * lam / p.A) * np.sum(C / (p.eta + L))
        return ExponentialSum(np.append(amp, mem), np.append(L, -p.eta), real=True)

    def dn_form_gap(self) -> np.ndarray:
        """Relative gap between the exact beam amplitude of f2 and d_n D_n, per mode."""
        out = np.empty(self.coeffs.N)
        for i, m in enumerate(self.coeffs.modes):
            exact = m.F2[3]
            out[i] = abs(exact - self.coeffs.d[i] * m.C[3]) / max(abs(exact), 1e-300)
        return out

    def dn_form_gap_predicted(self) -> np.ndarray:
        """(Re p - lam)(1 - beta/(eta + i p)) D_n / A relative to the exact amplitude."""
        p = self.coeffs.params
        out = np.empty(self.coeffs.N)
        for i, (m, br) in enumerate(zip(self.coeffs.modes, self.branches)):
            gap = m.C[3] / p.A * br.p_shift.real * (1 - p.beta / (p.eta + 1j * br.p))
            out[i] = abs(gap) / max(abs(m.F2[3]), 1e-300)
        return out

    def snapshot_json(self, t, x) -> dict:
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        return {"coefficients": self.coeffs.to_json(), "t": t.tolist(), "x": x.tolist(),
                "u1": self.u1(t, x).tolist(), "u2": self.u2(t, x).tolist()}


def synthesize_solutions(coeffs: ModalCoefficients, branches: Sequence[SpectralBranch],
                         params: ModelParams | None = None) -> Synthesis:
    if len(branches) < coeffs.N:
        raise InvalidInput("mode count mismatch between coefficients and branches")
    return Synthesis(coeffs=coeffs, branches=list(branches[:coeffs.N]))


def modal_residual(sol: ModeSolution, params: ModelParams, t) -> float:
    """Residual of both modal equations on the points t, memory integral in closed form.

    Each equation is scaled by the sup of its largest term, so the value is a
    relative residual comparable across modes.
    """
    f1, f2 = sol.f1(), sol.f2()
    lam = sol.lam
    terms1 = [f1.derivative(2), lam * f1, (lam * params.beta) * f1.convolve_forward(params.eta),
              params.A * f2]
    terms2 = [f2.derivative(2), (lam * lam) * f2, params.B * f1]
    out = 0.0
    for terms, signs in ((terms1, [1, 1, -1, 1]), (terms2, [1, 1, 1])):
        r = ExponentialSum.combine(terms, signs)
        scale = max(np.max(np.abs(x(t))) for x in terms)
        out = max(out, float(np.max(np.abs(r(t)))) / max(scale, 1e-300))
    return out


def reconstruct_initial(coeffs: ModalCoefficients) -> FinalData:
    """(u1, u1_t, u2, u2_t) at t = 0 from the synthesized exponential sums."""
    out = np.zeros((4, coeffs.N))
    for i, m in enumerate(coeffs.modes):
        f1, f2 = m.f1(), m.f2()
        out[:, i] = [f1(0.0), f1.derivative()(0.0), f2(0.0), f2.derivative()(0.0)]
    return FinalData(*out)


def fifth_order_equivalence(params: ModelParams, n: int, mode_data=(1.0, 0.0, 0.0, 0.0),
                            T: float = 5.0, points: int = 501) -> float:
    """Sup-norm gap on [0, T] between f1 from the coupled pair and from the scalar quintic ODE.

    Both are integrated numerically (DOP853, tight tolerances) from matched
    data; neither route uses the roots.
    """
    from scipy.integrate import solve_ivp

    from .spectrum import quintic_coeffs

    lam = float(n) ** 2
    b, e, A, B = params.beta, params.eta, params.A, params.B
    data = FinalData(*(np.r_[np.zeros(n - 1), [x]] for x in mode_data))
    init = cauchy_init_vector(data, params, n)
    c = quintic_coeffs(params, n)
    c = np.array([c.c4, c.c3, c.c2, c.c1, c.c0])

    def scalar(t, y):
        # y = (f, f', f'', f''', f'''')
        return np.r_[y[1:], -(c @ y[::-1])]

    def coupled(t, y):
        f1, f1d, m, f2, f2d = y
        return [f1d, -lam * f1 + lam * b * m - A * f2, -e * m + f1, f2d, -lam * lam * f2 - B * f1]

    a1, r1, a2, r2 = mode_data
    ts = np.linspace(0.0, T, points)
    opts = dict(method="DOP853", rtol=1e-12, atol=1e-13, t_eval=ts)
    s = solve_ivp(scalar, (0.0, T), init, **opts)
    p = solve_ivp(coupled, (0.0, T), [a1, r1, 0.0, a2, r2], **opts)
    return float(np.max(np.abs(s.y[0] - p.y[0])))
