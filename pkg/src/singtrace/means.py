"""Hardy and Cesaro means, the transform calculus, and the limit-band estimator.

Grid functions are stored against ``log_x`` rather than ``x`` so that sample
points such as t = exp(10^4) are representable.  A grid is geometric either
in ``x`` (``spacing="log"``) or in ``ln x`` (``spacing="loglog"``); the
latter is what route functions use, since their corrections are powers of
1/ln t.

When a grid function carries a closed-form evaluator the means are computed
with Gauss-Legendre panels between grid points; tabulated functions use the
trapezoid rule in ``ln x`` with the constant extension below the first grid
point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import InsufficientDataError, InvalidInputError, ModelDomainError
from .series import adaptive_gl, gauss_legendre

SPACINGS = ("log", "loglog")
POLICIES = ("raw_tail", "richardson_log", "richardson_r", "cesaro_iterate")
LN10 = math.log(10.0)


@dataclass(frozen=True)
class GridFunction:
    """Samples of a bounded function on (0, inf) over a geometric grid.

    ``func`` (optional) evaluates the function at given ``log_x`` values.
    """

    log_x: np.ndarray
    values: np.ndarray
    spacing: str = "log"
    func: Callable | None = field(default=None, compare=False, repr=False)
    label: str = ""

    def __post_init__(self):
        if self.spacing not in SPACINGS:
            raise InvalidInputError(f"spacing must be one of {SPACINGS}")
        lx = np.asarray(self.log_x, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if lx.shape != vals.shape or lx.ndim != 1 or lx.size < 2:
            raise InvalidInputError("grid and values must be matching 1-d arrays")
        if np.any(np.diff(lx) <= 0):
            raise InvalidInputError("grid must be strictly increasing")
        if self.spacing == "loglog" and lx[0] <= 0:
            raise InvalidInputError("a loglog grid needs x > 1")
        object.__setattr__(self, "log_x", lx)
        object.__setattr__(self, "values", vals)

    # ------------------------------------------------------------- factories

    @classmethod
    def sample(cls, f: Callable, t_min: float, t_max: float, per_decade: int = 64, label: str = "") -> "GridFunction":
        """Sample ``f(x)`` on a grid geometric in x."""
        if not 0 < t_min < t_max:
            raise InvalidInputError("need 0 < t_min < t_max")
        n = max(2, int(round(math.log10(t_max / t_min) * per_decade)) + 1)
        lx = np.linspace(math.log(t_min), math.log(t_max), n)

        def func(y):
            with np.errstate(all="ignore"):
                return np.asarray(f(np.exp(y)), dtype=float) + np.zeros_like(y)

        return cls(lx, func(lx), "log", func, label)

    @classmethod
    def sample_log(cls, f_log: Callable, L_min: float, L_max: float, per_decade: int = 64, label: str = "") -> "GridFunction":
        """Sample ``f_log(L)`` = f(e^L) on a grid geometric in L = ln x."""
        if not 0 < L_min < L_max:
            raise InvalidInputError("need 0 < L_min < L_max")
        n = max(2, int(round(math.log10(L_max / L_min) * per_decade)) + 1)
        lx = np.geomspace(L_min, L_max, n)

        def func(y):
            return np.asarray(f_log(np.asarray(y, dtype=float)), dtype=float)

        return cls(lx, func(lx), "loglog", func, label)

    @classmethod
    def tabulated(cls, log_x, values, spacing: str = "log", label: str = "") -> "GridFunction":
        return cls(np.asarray(log_x, float), np.asarray(values, float), spacing, None, label)

    # ---------------------------------------------------------------- access

    @property
    def x(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_x)

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def grid_variable(self) -> np.ndarray:
        """The variable in which the grid is geometric (decades are counted in it)."""
        if self.spacing == "log":
            return self.log_x / LN10
        return np.log10(self.log_x)

    @property
    def decades(self) -> float:
        v = self.grid_variable
        return float(v[-1] - v[0])

    def evaluate_log(self, log_x) -> np.ndarray:
        """Evaluate at arbitrary ``log_x`` (closed form, else linear interpolation in log x)."""
        log_x = np.asarray(log_x, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(log_x), dtype=float)
        return np.interp(log_x, self.log_x, self.values)

    def __call__(self, x):
        return self.evaluate_log(np.log(np.asarray(x, dtype=float)))

    def with_values(self, values, func=None, label=None) -> "GridFunction":
        return replace(self, values=np.asarray(values, float), func=func, label=self.label if label is None else label)


# ---------------------------------------------------------------------- means


def _panel_integral(g: Callable, a: float, b: float, nodes: int = 8) -> float:
    x, w = gauss_legendre(nodes)
    half = 0.5 * (b - a)
    return half * float(np.dot(w, g(half * x + 0.5 * (a + b))))


def _resolve_quadrature(f: GridFunction, quadrature: str) -> str:
    if quadrature == "auto":
        return "gauss" if f.func is not None else "trapezoid"
    if quadrature == "gauss" and f.func is None:
        raise InvalidInputError("gauss quadrature needs a closed-form grid function")
    if quadrature not in ("gauss", "trapezoid"):
        raise InvalidInputError(f"unknown quadrature {quadrature!r}")
    return quadrature


def _hardy_values(func: Callable | None, log_x: np.ndarray, values: np.ndarray, quadrature: str) -> np.ndarray:
    """(1/x) int_0^x f at every grid point, accumulated with a rescaling so huge x never overflow."""
    out = np.empty_like(log_x)
    y0 = log_x[0]
    if quadrature == "gauss":
        x0 = math.exp(y0)
        head = adaptive_gl(lambda x: func(np.log(x)), 0.0, x0, rel=1e-13) / x0
    else:
        head = values[0]
    out[0] = head
    for i in range(1, len(log_x)):
        a, b = log_x[i - 1], log_x[i]
        if quadrature == "gauss":
            piece = adaptive_gl(lambda y: func(y) * np.exp(y - b), a, b, rel=1e-13, abs_tol=1e-16)
        else:
            piece = 0.5 * (b - a) * (values[i - 1] * math.exp(a - b) + values[i])
        out[i] = out[i - 1] * math.exp(a - b) + piece
    return out


def hardy_mean(f: GridFunction, quadrature: str = "auto") -> GridFunction:
    """H(f)(u) = (1/u) int_0^u f on f's grid.

    Below the first grid point the closed form is integrated exactly; for
    tabulated data f is extended by its first value.
    """
    q = _resolve_quadrature(f, quadrature)
    vals = _hardy_values(f.func, f.log_x, f.values, q)
    func = None
    if f.func is not None:
        func = lambda y, _f=f.func: hardy_at(_f, np.asarray(y, float))  # noqa: E731
    return f.with_values(vals, func=func, label=f"H({f.label})")


def hardy_at(func: Callable, log_x) -> np.ndarray:
    """H(f) at arbitrary points for a closed-form ``func`` (in the log variable)."""
    log_x = np.atleast_1d(np.asarray(log_x, float))
    order = np.argsort(log_x)
    pts = log_x[order]
    res = np.empty_like(pts)
    x0 = min(1.0, math.exp(pts[0]))
    head = adaptive_gl(lambda x: func(np.log(x)), 0.0, x0, rel=1e-13)
    acc_log = math.log(x0)
    acc = head / x0  # running (1/x) * integral with x = e^{acc_log}
    g = lambda y, b: func(y) * np.exp(y - b)  # noqa: E731
    for i, b in enumerate(pts):
        if b > acc_log:
            a = acc_log
            piece = adaptive_gl(lambda y: g(y, b), a, b, rel=1e-13, abs_tol=1e-16)
            acc = acc * math.exp(a - b) + piece
            acc_log = b
            res[i] = acc
        else:
            x = math.exp(b)
            res[i] = adaptive_gl(lambda s: func(np.log(s)), 0.0, x, rel=1e-13) / x
    out = np.empty_like(res)
    out[order] = res
    return out


def _cesaro_integral_values(func, log_x, values, quadrature):
    """int_0^{ln t} g(e^y) dy at every grid point."""
    if log_x[0] < 0:
        raise ModelDomainError("Cesaro mean needs a grid starting at t >= 1")
    out = np.empty_like(log_x)
    if quadrature == "gauss":
        out[0] = adaptive_gl(func, 0.0, log_x[0], rel=1e-13) if log_x[0] > 0 else 0.0
    else:
        out[0] = values[0] * log_x[0]
    for i in range(1, len(log_x)):
        a, b = log_x[i - 1], log_x[i]
        if quadrature == "gauss":
            piece = adaptive_gl(func, a, b, rel=1e-13, abs_tol=1e-16)
        else:
            piece = 0.5 * (b - a) * (values[i - 1] + values[i])
        out[i] = out[i - 1] + piece
    return out


def cesaro_mean(g: GridFunction, quadrature: str = "auto") -> GridFunction:
    """M(g)(t) = (1/ln t) int_1^t g(s) ds/s, integrated in the variable ln s."""
    q = _resolve_quadrature(g, quadrature)
    integ = _cesaro_integral_values(g.func, g.log_x, g.values, q)
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.where(g.log_x > 0, integ / np.where(g.log_x > 0, g.log_x, 1.0), g.values)
    func = None
    if g.func is not None and q == "gauss":
        func = lambda y, _g=g.func: cesaro_at(_g, np.asarray(y, float))  # noqa: E731
    return g.with_values(vals, func=func, label=f"M({g.label})")


def cesaro_at(func: Callable, log_x) -> np.ndarray:
    log_x = np.atleast_1d(np.asarray(log_x, float))
    if np.any(log_x < 0):
        raise ModelDomainError("Cesaro mean is defined for t >= 1")
    order = np.argsort(log_x)
    pts = log_x[order]
    res = np.empty_like(pts)
    acc, last = 0.0, 0.0
    for i, b in enumerate(pts):
        acc += adaptive_gl(func, last, b, rel=1e-13, abs_tol=1e-16) if b > last else 0.0
        last = b
        res[i] = acc / b if b > 0 else float(func(np.array([0.0]))[0])
    out = np.empty_like(res)
    out[order] = res
    return out


# ----------------------------------------------------------------- transforms

TRANSFORMS = ("translate", "dilate", "power", "log_substitute", "exp_substitute")


def transform(f: GridFunction, kind: str, a: float | None = None, b: float | None = None) -> GridFunction:
    """Apply T_b (translate), D_a (dilate), P^a (power), L (log_substitute) or L^-1 (exp_substitute).

    T_b f(x) = f(x + b), D_a f(x) = f(a x), P^a f(x) = f(x^a), L f(t) = f(ln t),
    L^-1 g(u) = g(e^u).  Dilation, power and translation keep the grid;
    L maps a grid geometric in x to one geometric in ln t, L^-1 goes back.
    """
    if kind not in TRANSFORMS:
        raise InvalidInputError(f"unknown transform {kind!r}; expected one of {TRANSFORMS}")
    src = f.func if f.func is not None else (lambda y: np.interp(y, f.log_x, f.values))
    if kind in ("dilate", "power"):
        if a is None or not a > 0:
            raise ModelDomainError(f"{kind} needs a > 0")
        if kind == "dilate":
            la = math.log(a)
            func = lambda y: src(np.asarray(y, float) + la)  # noqa: E731
        else:
            func = lambda y: src(a * np.asarray(y, float))  # noqa: E731
        return f.with_values(func(f.log_x), func=func if f.func is not None else None, label=f"{kind}({f.label})")
    if kind == "translate":
        if b is None:
            raise InvalidInputError("translate needs b")

        def func(y):
            x = np.exp(np.asarray(y, float)) + b
            if np.any(x <= 0):
                raise ModelDomainError("translation leaves (0, inf)")
            return src(np.log(x))

        return f.with_values(func(f.log_x), func=func if f.func is not None else None, label=f"T({f.label})")
    if kind == "log_substitute":
        if f.spacing != "log":
            raise InvalidInputError("log_substitute needs a grid geometric in x")
        new_lx = f.x
        if new_lx[0] <= 0 or not np.all(np.isfinite(new_lx)):
            raise ModelDomainError("log_substitute needs finite grid points")
        func = lambda y: src(np.log(np.asarray(y, float)))  # noqa: E731
        return GridFunction(new_lx, f.values.copy(), "loglog", func if f.func is not None else None, f"L({f.label})")
    # exp_substitute
    if f.spacing != "loglog":
        raise InvalidInputError("exp_substitute needs a grid geometric in ln x")
    new_lx = np.log(f.log_x)
    func = lambda y: src(np.exp(np.asarray(y, float)))  # noqa: E731
    return GridFunction(new_lx, f.values.copy(), "log", func if f.func is not None else None, f"Linv({f.label})")


@dataclass
class ResidualReport:
    translate_tail: float
    dilate_tail: float
    identities: dict
    t_tail: tuple

    @property
    def max_identity_error(self) -> float:
        return max(self.identities.values(), default=0.0)


def commutator_residuals(f: GridFunction, a: float, b: float, tail_decades: float = 1.0, identities: bool = True) -> ResidualReport:
    """Commutator residuals (H T_b - T_b H) f and (M D_a - D_a M) f on the last decade,
    plus the exact intertwining identities checked pointwise over the whole grid.

    Set ``identities=False`` for rapidly oscillating f, where the power
    transform would need an enormous number of quadrature panels.
    """
    if f.func is None:
        raise InvalidInputError("commutator_residuals needs a closed-form grid function")
    if not a > 0:
        raise ModelDomainError("dilation needs a > 0")
    v = f.grid_variable
    tail = v >= v[-1] - tail_decades
    ly = f.log_x[tail]
    func = f.func
    x = np.exp(ly)

    # (H T_b - T_b H) f
    tb = lambda y: func(np.log(np.exp(y) + b))  # noqa: E731
    if np.any(x + b <= 0):
        raise ModelDomainError("translation leaves (0, inf)")
    r_translate = hardy_at(tb, ly) - hardy_at(func, np.log(x + b))
    # (M D_a - D_a M) f
    la = math.log(a)
    da = lambda y: func(np.asarray(y) + la)  # noqa: E731
    r_dilate = cesaro_at(da, ly) - cesaro_at(func, ly + la)

    ids = {}
    if identities and f.log_x[0] >= 0:
        m_pa = cesaro_mean(transform(f, "power", a=a)).values
        pa_m = transform(cesaro_mean(f), "power", a=a).values
        ids["power_cesaro"] = float(np.max(np.abs(m_pa - pa_m)))
    if identities and f.spacing == "log":
        h_da = hardy_mean(transform(f, "dilate", a=a)).values
        da_h = transform(hardy_mean(f), "dilate", a=a).values
        ids["dilate_hardy"] = float(np.max(np.abs(h_da - da_h)))
        lf = transform(f, "log_substitute")
        ids["log_hardy_cesaro"] = float(np.max(np.abs(cesaro_mean(lf).values - hardy_mean(f).values)))
        lt = transform(transform(f, "translate", b=abs(b)), "log_substitute").values
        dl = transform(lf, "dilate", a=math.exp(abs(b))).values
        ids["log_translate_dilate"] = float(np.max(np.abs(lt - dl)))
    return ResidualReport(float(np.max(np.abs(r_translate))), float(np.max(np.abs(r_dilate))), ids, (float(x[0]), float(x[-1])))


# ---------------------------------------------------------------- limit bands


@dataclass(frozen=True)
class LimitBand:
    """Estimate of an omega-limit: a value when the data converge, a band otherwise."""

    converged: bool
    value: float | None
    liminf_est: float
    limsup_est: float
    band_width: float
    method: str
    windows: str
    residual: float = math.nan
    tolerance: float = math.nan

    def __post_init__(self):
        if self.liminf_est > self.limsup_est:
            raise ValueError("liminf estimate exceeds limsup estimate")

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.liminf_est - slack <= x <= self.limsup_est + slack

    def overlaps(self, other: "LimitBand", slack: float = 0.0) -> bool:
        return self.liminf_est <= other.limsup_est + slack and other.liminf_est <= self.limsup_est + slack

    def scaled(self, factor: float) -> "LimitBand":
        """Band of factor * f (used by normalisations)."""
        lo, hi = sorted((self.liminf_est * factor, self.limsup_est * factor))
        return replace(
            self,
            value=None if self.value is None else self.value * factor,
            liminf_est=lo,
            limsup_est=hi,
            band_width=hi - lo,
            residual=self.residual * abs(factor),
        )

    @property
    def estimate(self) -> float:
        """Value if converged, else the band midpoint."""
        return self.value if self.converged else 0.5 * (self.liminf_est + self.limsup_est)


def _small_parameter(log_x: np.ndarray, policy: str) -> np.ndarray:
    if policy == "richardson_r":
        return np.exp(-log_x)
    if np.any(log_x <= 0):
        raise InsufficientDataError("richardson_log needs t > 1 on the tail")
    return 1.0 / log_x


def _design(h: np.ndarray, exponents, log_term: bool) -> np.ndarray:
    hs = h / np.max(h)
    cols = [hs**e for e in exponents]
    if log_term:
        cols.append(hs * np.log(h))
    return np.column_stack(cols)


def limit_band(
    f: GridFunction,
    tol: float,
    policy: str = "richardson_log",
    windows: int = 3,
    window_decades: float = 1.0,
    min_windows: int = 6,
    exponents=(0.0, 1.0),
    log_term: bool = False,
) -> LimitBand:
    """Estimate lim f along its grid.

    The tail is the last ``windows`` geometric windows.  For the Richardson
    policies a least-squares fit of f in powers of the small parameter
    (1/ln t or 1/t) is made on the tail and again with each leading window
    dropped; convergence needs the extrapolated constants to agree within
    ``tol`` and the fit residual to stay within ``tol``.  Otherwise the band
    is the raw [min, max] of f over the tail.
    """
    if policy not in POLICIES:
        raise InvalidInputError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    if not tol > 0:
        raise InvalidInputError("tolerance must be positive")
    if f.decades < min_windows * window_decades - 1e-9:
        raise InsufficientDataError(
            f"limit_band needs {min_windows} windows of {window_decades:g} decades; grid spans {f.decades:.3g}"
        )
    if policy == "cesaro_iterate":
        f = cesaro_mean(f, quadrature="trapezoid")
        policy_fit = "richardson_log"
    else:
        policy_fit = policy
    v = f.grid_variable
    edges = v[-1] - window_decades * np.arange(windows, -1, -1)
    tail = v >= edges[0] - 1e-12
    vals = f.values[tail]
    if not np.all(np.isfinite(vals)):
        raise InsufficientDataError("non-finite samples on the tail")
    raw_lo, raw_hi = float(np.min(vals)), float(np.max(vals))
    desc = f"{windows}x{window_decades:g} decades of {'ln ' if f.spacing == 'loglog' else ''}x ending at 10^{v[-1]:.4g}"

    if raw_hi - raw_lo <= 4 * np.finfo(float).eps * max(1.0, abs(raw_hi)):
        # constant on the tail up to rounding: nothing to extrapolate
        mid = 0.5 * (raw_lo + raw_hi)
        return LimitBand(True, mid, raw_lo, raw_hi, raw_hi - raw_lo, policy, desc, 0.0, tol)
    if policy_fit == "raw_tail":
        width = raw_hi - raw_lo
        conv = width <= tol
        return LimitBand(conv, 0.5 * (raw_lo + raw_hi) if conv else None, raw_lo, raw_hi, width, policy, desc, width, tol)

    h = _small_parameter(f.log_x[tail], policy_fit)
    ncoef = len(exponents) + (1 if log_term else 0)
    A = _design(h, exponents, log_term)
    const_col = list(exponents).index(0.0) if 0.0 in list(exponents) else None
    if const_col is None:
        raise InvalidInputError("the fit basis must contain the constant (exponent 0)")
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    residual = float(np.max(np.abs(A @ coef - vals)))
    consts = [coef[const_col]]
    vt = v[tail]
    for k in range(1, windows):
        keep = vt >= edges[k] - 1e-12
        if keep.sum() < ncoef + 2:
            break
        ck, *_ = np.linalg.lstsq(A[keep], vals[keep], rcond=None)
        consts.append(ck[const_col])
    lo, hi = float(min(consts)), float(max(consts))
    if hi - lo <= tol and residual <= tol:
        return LimitBand(True, float(coef[const_col]), lo, hi, hi - lo, policy, desc, residual, tol)
    return LimitBand(False, None, raw_lo, raw_hi, raw_hi - raw_lo, policy, desc, residual, tol)
