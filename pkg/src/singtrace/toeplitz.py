"""Toeplitz index computations for circle symbols, and the grid trace identity.

A symbol u(s), s in [0, 1), is given either by finitely many Fourier
coefficients (u = sum c_k e^(2 pi i k s)) or by an expression in ``s``.  A
nonvanishing symbol can be made unitary by polar normalisation u/|u|, which
does not change its winding number.

For a unitary symbol the index of T_u = P u P on the Hardy space is

    -winding(u) = (1/2 pi i) int_0^1 u(s) conj(u'(s)) ds,

and four estimates of it are provided: :func:`winding_number`,
:func:`lesch_index` (the trace formula), :func:`truncated_near_kernel`
(near-zero singular values of finite sections) and :func:`zeta_index`
(the p -> 1 residue of the Fourier-model trace).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import InconclusiveError, InsufficientDataError, InvalidInputError, ModelDomainError
from .expr import Expression
from .means import GridFunction, LimitBand, limit_band
from .spectral_flow import lattice_trace

TWO_PI = 2.0 * math.pi
DEFAULT_SAMPLES = 2**12
MAX_SAMPLES = 2**16


class ToeplitzModel:
    """A smooth symbol on the circle, with its derivative in closed form."""

    def __init__(self, coeffs: dict | None = None, expression: str | Expression | None = None, unitarize: bool = False,
                 eps0: float = 1e-8, name: str = ""):
        if (coeffs is None) == (expression is None):
            raise InvalidInputError("give exactly one of fourier coefficients or an expression")
        self.eps0 = eps0
        self.unitarized = bool(unitarize)
        self.coeffs = None
        self.expr = None
        if coeffs is not None:
            cleaned = {}
            for k, c in dict(coeffs).items():
                if int(k) != k:
                    raise InvalidInputError("Fourier modes must be integers")
                c = complex(c)
                if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                    raise InvalidInputError("Fourier coefficients must be finite")
                if c != 0:
                    cleaned[int(k)] = cleaned.get(int(k), 0) + c
            self.coeffs = cleaned
            self.name = name or "trig"
        else:
            self.expr = expression if isinstance(expression, Expression) else Expression(expression, var="s")
            if self.expr.var != "s":
                raise InvalidInputError("symbol expressions use the variable s")
            self.name = name or self.expr.text
        vals = self._raw(np.arange(DEFAULT_SAMPLES) / DEFAULT_SAMPLES)
        if not np.all(np.isfinite(vals)):
            raise ModelDomainError(f"{self.name}: symbol is not finite on the sample grid")
        m = float(np.min(np.abs(vals)))
        if m < eps0:
            raise ModelDomainError(f"{self.name}: symbol nearly vanishes (min |u| = {m:.3e} < {eps0:g})")

    # -------------------------------------------------------------- builders

    @classmethod
    def monomial(cls, n: int) -> "ToeplitzModel":
        return cls(coeffs={int(n): 1.0}, name=f"e^(2 pi i {n} s)")

    @classmethod
    def from_dict(cls, doc: dict) -> "ToeplitzModel":
        if not isinstance(doc, dict):
            raise InvalidInputError("symbol document must be a JSON object")
        unit = bool(doc.get("unitarize", False))
        if "fourier_coeffs" in doc:
            try:
                coeffs = {}
                for k, re, im in doc["fourier_coeffs"]:
                    coeffs[int(k)] = coeffs.get(int(k), 0) + complex(float(re), float(im))
            except (TypeError, ValueError) as exc:
                raise InvalidInputError("fourier_coeffs must be a list of [k, re, im]") from exc
            return cls(coeffs=coeffs, unitarize=unit, name=doc.get("name", ""))
        if "expression" in doc:
            return cls(expression=doc["expression"], unitarize=unit, name=doc.get("name", ""))
        raise InvalidInputError("symbol needs fourier_coeffs or expression")

    def __mul__(self, other: "ToeplitzModel") -> "ToeplitzModel":
        if self.coeffs is None or other.coeffs is None or self.unitarized or other.unitarized:
            raise InvalidInputError("products are implemented for trigonometric-polynomial symbols")
        out = {}
        for j, a in self.coeffs.items():
            for k, b in other.coeffs.items():
                out[j + k] = out.get(j + k, 0) + a * b
        return ToeplitzModel(coeffs=out, name=f"({self.name})*({other.name})")

    def adjoint(self) -> "ToeplitzModel":
        """The symbol conj(u)."""
        if self.coeffs is not None:
            return ToeplitzModel(coeffs={-k: np.conj(c) for k, c in self.coeffs.items()}, unitarize=self.unitarized,
                                 name=f"conj({self.name})")
        conj = _ConjExpr(self.expr)
        m = ToeplitzModel.__new__(ToeplitzModel)
        m.__dict__.update(self.__dict__)
        m.expr, m.name = conj, f"conj({self.name})"
        return m

    # ------------------------------------------------------------ evaluation

    def _raw(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.coeffs is not None:
            ks = np.array(list(self.coeffs), dtype=float)
            cs = np.array(list(self.coeffs.values()), dtype=complex)
            return np.exp(1j * TWO_PI * np.outer(s, ks)) @ cs
        return np.asarray(self.expr(s), dtype=complex) + np.zeros(s.shape, dtype=complex)

    def _raw_derivative(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.coeffs is not None:
            ks = np.array(list(self.coeffs), dtype=float)
            cs = np.array(list(self.coeffs.values()), dtype=complex)
            return np.exp(1j * TWO_PI * np.outer(s, ks)) @ (1j * TWO_PI * ks * cs)
        return np.asarray(self.expr.derivative(1)(s), dtype=complex) + np.zeros(s.shape, dtype=complex)

    def __call__(self, s) -> np.ndarray:
        u = self._raw(s)
        return u / np.abs(u) if self.unitarized else u

    def derivative(self, s) -> np.ndarray:
        du = self._raw_derivative(s)
        if not self.unitarized:
            return du
        u = self._raw(s)
        a = np.abs(u)
        # (u/|u|)' = u'/|u| - u Re(conj(u) u') / |u|^3
        return du / a - u * np.real(np.conj(u) * du) / a**3

    def samples(self, n: int = DEFAULT_SAMPLES) -> tuple[np.ndarray, np.ndarray]:
        s = np.arange(n) / n
        return s, self(s)

    def fourier(self, n_modes: int, n_samples: int | None = None) -> np.ndarray:
        """Coefficients u_hat(m) for m = -n_modes..n_modes (exact for trig symbols, FFT otherwise)."""
        ms = np.arange(-n_modes, n_modes + 1)
        if self.coeffs is not None and not self.unitarized:
            return np.array([self.coeffs.get(int(m), 0) for m in ms], dtype=complex)
        M = n_samples or max(4 * (2 * n_modes + 1), DEFAULT_SAMPLES)
        M = 1 << (M - 1).bit_length()
        _, u = self.samples(M)
        c = np.fft.fft(u) / M
        return c[ms % M]

    def unitary_defect(self, n: int = DEFAULT_SAMPLES) -> float:
        return float(np.max(np.abs(np.abs(self.samples(n)[1]) - 1.0)))


class _ConjExpr:
    """Complex conjugate of a symbol expression (evaluated numerically)."""

    def __init__(self, expr: Expression):
        self.base = expr
        self.text = f"conj({expr.text})"
        self.var = "s"

    def __call__(self, s):
        return np.conj(np.asarray(self.base(s), dtype=complex))

    def derivative(self, order: int = 1):
        d = self.base.derivative(order)
        return lambda s: np.conj(np.asarray(d(s), dtype=complex))


def unitarize(model: ToeplitzModel) -> ToeplitzModel:
    """The polar part u/|u| of a nonvanishing symbol."""
    m = ToeplitzModel.__new__(ToeplitzModel)
    m.__dict__.update(model.__dict__)
    m.unitarized = True
    m.name = f"polar({model.name})"
    return m


# --------------------------------------------------------------------- winding


def winding_number(model: ToeplitzModel, n: int = DEFAULT_SAMPLES, residual_tol: float = 1e-6) -> int:
    """Total phase increment of u over one period divided by 2 pi.

    The sample count doubles while any step changes the phase by more than pi/2.
    """
    while True:
        _, u = model.samples(n)
        if np.min(np.abs(u)) < model.eps0:
            raise ModelDomainError(f"{model.name}: symbol nearly vanishes")
        steps = np.angle(np.roll(u, -1) / u)
        if np.max(np.abs(steps)) <= 0.5 * math.pi:
            break
        if n >= MAX_SAMPLES:
            raise InconclusiveError(f"{model.name}: phase still jumps by more than pi/2 at {n} samples")
        n *= 2
    w = math.fsum(steps) / TWO_PI
    k = round(w)
    if abs(w - k) > residual_tol:
        raise InconclusiveError(f"{model.name}: winding {w!r} is not within {residual_tol:g} of an integer")
    return int(k)


def lesch_index(model: ToeplitzModel, n: int = DEFAULT_SAMPLES, integer_tol: float = 1e-8,
                unitary_tol: float = 1e-10) -> float:
    """(1/2 pi i) int_0^1 u conj(u') ds by the trapezoid rule (spectrally accurate for smooth periodic u).

    The symbol must be unitary on the samples; the value is returned as a
    real number once doubling the sample count no longer moves it off an
    integer by more than ``integer_tol``.
    """
    defect = model.unitary_defect(n)
    if defect > unitary_tol:
        raise InvalidInputError(f"{model.name}: symbol is not unitary (max ||u|-1| = {defect:.3e}); unitarize it first")
    while True:
        s = np.arange(n) / n
        integrand = model(s) * np.conj(model.derivative(s))
        val = complex(np.sum(integrand) / n) / (2j * math.pi)
        if abs(val.real - round(val.real)) <= integer_tol:
            return float(val.real)
        if n >= MAX_SAMPLES:
            raise InconclusiveError(f"{model.name}: trace formula gives {val.real!r}, not within {integer_tol:g} of an integer")
        n *= 2


# ----------------------------------------------------------- finite sections


def toeplitz_matrix(model: ToeplitzModel, N: int) -> np.ndarray:
    """The N x N section of T_u: entries u_hat(j - k)."""
    c = model.fourier(N - 1)
    j = np.arange(N)
    return c[(j[:, None] - j[None, :]) + N - 1]


@dataclass
class NearKernel:
    count: int
    sign_hint: int
    N: int
    smallest: np.ndarray
    stable: bool


def truncated_near_kernel(model: ToeplitzModel, N: int = 512, eps: float = 1e-6, check_double: bool = True) -> NearKernel:
    """Number of singular values below ``eps`` of the N x N section (and of the 2N x 2N one).

    Finite sections have index zero, so a winding w shows up as |w| singular
    values that decay to zero with N.  Disagreement between N and 2N raises
    InconclusiveError.
    """
    if N < 64 or N & (N - 1):
        raise InvalidInputError("N must be a power of two >= 64")

    def count(n):
        sv = np.linalg.svd(toeplitz_matrix(model, n), compute_uv=False)
        return int(np.count_nonzero(sv < eps)), np.sort(sv)[:8]

    c1, small = count(N)
    stable = True
    if check_double:
        c2, _ = count(2 * N)
        if c1 != c2:
            raise InconclusiveError(f"{model.name}: near-kernel count {c1} at N={N} but {c2} at N={2 * N}")
    return NearKernel(c1, -winding_number(model), N, small, stable)


# ---------------------------------------------------------------- zeta index


@dataclass
class ZetaIndex:
    diagonal: float
    p_grid: np.ndarray
    samples: np.ndarray
    band: LimitBand


def commutator_diagonal(model: ToeplitzModel, n_modes: int = 2048) -> float:
    """Diagonal entry of u [D, u*] in the Fourier model (D = diag(k), k in Z).

    [D, M_v] is multiplication by the symbol with coefficients m v_hat(m), so
    u [D, u*] is a multiplication operator and its diagonal is the constant
    zeroth coefficient -sum_m m |u_hat(m)|^2.
    """
    c = model.fourier(n_modes)
    m = np.arange(-n_modes, n_modes + 1)
    return float(-math.fsum(m * np.abs(c) ** 2))


def zeta_index(model: ToeplitzModel, K: int = 2000, tol: float = 5e-3, j_range=(2, 20), n_modes: int = 2048) -> ZetaIndex:
    """(p-1)/2 sum_k (u[D, u*])_kk (1 + k^2)^(-p/2) at p = 1 + 2^-j, extrapolated to p -> 1.

    The k-sum runs over |k| <= K directly with closed-form tails.
    """
    defect = model.unitary_defect()
    if defect > 1e-10:
        raise InvalidInputError(f"{model.name}: zeta_index needs a unitary symbol")
    d = commutator_diagonal(model, n_modes)
    js = np.arange(j_range[0], j_range[1] + 1)
    ps = 1.0 + 2.0 ** (-js.astype(float))
    vals = np.array([0.5 * (p - 1.0) * d * lattice_trace(0.0, p, K) for p in ps])
    g = GridFunction.tabulated(js * math.log(2.0), vals, "log", label="zeta_index")
    band = limit_band(g, tol, "richardson_r", windows=3, window_decades=math.log10(4.0), exponents=(0.0, 1.0, 2.0))
    return ZetaIndex(d, ps, vals, band)


# ------------------------------------------------------------ grid trace


@dataclass(frozen=True)
class GridHalfLine:
    """Frequency grid xi_k = -Lambda + k h for D = (1/2 pi i) d/ds; trace = h * sum."""

    h: float = 1e-3
    Lambda: float = 40.0

    def __post_init__(self):
        if not (self.h > 0 and self.Lambda > 0):
            raise InvalidInputError("grid needs h > 0 and Lambda > 0")
        if 2 * self.Lambda / self.h > 5e7:
            raise InvalidInputError("grid has more than 5e7 points")

    @property
    def points(self) -> np.ndarray:
        n = int(round(2 * self.Lambda / self.h))
        return -self.Lambda + self.h * np.arange(n + 1)

    def trace(self, values) -> float:
        return self.h * math.fsum(np.asarray(values, dtype=float))


@dataclass(frozen=True)
class Decay:
    """Declared envelope |f(t)| <= C exp(-t^2 / (2 sigma^2))."""

    C: float = 1.0
    sigma: float = 1.0

    @property
    def mass(self) -> float:
        return self.C * self.sigma * math.sqrt(2 * math.pi)

    def tail(self, Lambda: float) -> float:
        return self.mass * special.erfc(Lambda / (self.sigma * math.sqrt(2.0)))


@dataclass
class CrossedTrace:
    lhs: float
    rhs: float
    rel_err: float


def crossed_trace_check(a_value: float, f: Callable, grid: GridHalfLine = GridHalfLine(), decay: Decay = Decay(),
                        coverage: float = 1e-8) -> CrossedTrace:
    """h sum_k a f(xi_k) against a int_R f, for a scalar a.

    The grid must leave at most ``coverage`` of the declared envelope mass
    outside [-Lambda, Lambda].
    """
    if decay.tail(grid.Lambda) > coverage * decay.mass:
        raise InsufficientDataError(
            f"grid [-{grid.Lambda:g}, {grid.Lambda:g}] misses more than {coverage:g} of the declared mass"
        )
    xi = grid.points
    lhs = float(a_value) * grid.trace(f(xi))
    edges = np.linspace(-grid.Lambda, grid.Lambda, 65)
    pieces = [integrate.quad(f, -np.inf, -grid.Lambda, epsabs=0, epsrel=1e-12, limit=200)[0],
              integrate.quad(f, grid.Lambda, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0]]
    pieces += [integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0] for lo, hi in zip(edges[:-1], edges[1:])]
    rhs = float(a_value) * math.fsum(pieces)
    rel = abs(lhs - rhs) / abs(rhs) if rhs != 0 else abs(lhs - rhs)
    return CrossedTrace(lhs, rhs, rel)
