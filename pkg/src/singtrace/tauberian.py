"""Laplace-Stieltjes transforms of increasing functions and the classical
Karamata comparison between h(r)/r and beta(t)/t.

A :class:`StieltjesMeasure` is dbeta for a nondecreasing right-continuous
beta on [0, inf).  Supported presentations:

* ``jump_sequence`` with a finite ``jumps`` list [(t_k, c_k), ...];
* ``jump_sequence`` with ``jumps`` and a ``period`` T: the block is repeated
  at t_k + m T, m = 0, 1, ...;
* ``jump_sequence`` with expressions ``t_n`` and ``c_n`` in ``n`` (n = 0, 1, ...);
* ``closed_form`` with beta given as an expression in ``t``;
* ``sum`` of other measures (used for linearity checks).

Infinite measures carry a growth law beta(t) <= c (1+t)^q; it is sampled at
construction and guarantees h(r) is finite for every r > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import kernels, series
from .errors import DivergenceError, InvalidInputError, ModelDomainError
from .expr import Call, Expression, Num, div, mul, neg
from .means import GridFunction, LimitBand, limit_band
from .spectral_models import N_DIRECT, SpectralModel, _grows

KINDS = ("jump_sequence", "closed_form", "sum")
TRUNCATION = 1e-17


@dataclass(frozen=True)
class GrowthLaw:
    """beta(t) <= c (1+t)^q."""

    c: float
    q: float

    def __post_init__(self):
        if not (self.c > 0 and self.q >= 0):
            raise InvalidInputError(f"growth law needs c > 0 and q >= 0 (got {self})")

    def bound(self, t):
        return self.c * (1.0 + np.asarray(t, dtype=float)) ** self.q


class StieltjesMeasure:
    def __init__(self, kind: str, jumps=None, period: float | None = None, t_expression=None, c_expression=None,
                 expression=None, growth: GrowthLaw | None = None, parts=None, name: str = ""):
        if kind not in KINDS:
            raise InvalidInputError(f"unknown measure kind {kind!r}; expected one of {KINDS}")
        self.kind = kind
        self.name = name or kind
        self.growth = growth
        self.period = None
        self.jumps = None
        self.t_expr = self.c_expr = self.beta_expr = None
        self.parts = None
        self._direct = None
        if kind == "sum":
            if not parts:
                raise InvalidInputError("a sum measure needs parts")
            self.parts = list(parts)
        elif kind == "closed_form":
            if expression is None:
                raise InvalidInputError("closed_form measure needs a beta expression")
            self.beta_expr = expression if isinstance(expression, Expression) else Expression(expression, var="t")
            if growth is None:
                raise InvalidInputError("closed_form measure needs a growth law")
        elif t_expression is not None or c_expression is not None:
            if t_expression is None or c_expression is None:
                raise InvalidInputError("expression jump sequences need both t_n and c_n")
            self.t_expr = t_expression if isinstance(t_expression, Expression) else Expression(t_expression, var="n")
            self.c_expr = c_expression if isinstance(c_expression, Expression) else Expression(c_expression, var="n")
            if growth is None:
                raise InvalidInputError("infinite jump sequences need a growth law")
        else:
            if jumps is None:
                raise InvalidInputError("jump_sequence needs jumps or t_n/c_n expressions")
            arr = np.asarray(jumps, dtype=float).reshape(-1, 2)
            order = np.argsort(arr[:, 0], kind="stable")
            self.jumps = arr[order]
            if period is not None:
                if not period > 0:
                    raise InvalidInputError("period must be positive")
                self.period = float(period)
        self._validate()

    # ------------------------------------------------------------ validation

    def _validate(self):
        if self.kind == "sum":
            return
        if self.jumps is not None:
            t, c = self.jumps[:, 0], self.jumps[:, 1]
            if np.any(c < 0):
                raise ModelDomainError(f"{self.name}: jump increments must be nonnegative")
            if np.any(t < 0):
                raise ModelDomainError(f"{self.name}: jumps must lie in [0, inf)")
            if self.period is not None and np.any(t > self.period):
                raise ModelDomainError(f"{self.name}: periodic jumps must lie in [0, period]")
            return
        if self.kind == "closed_form":
            b0 = float(self.beta_expr(0.0))
            if abs(b0) > 1e-14:
                raise ModelDomainError(f"{self.name}: beta(0) = {b0} != 0")
            ts = np.concatenate([[0.0], np.logspace(-3, 8, 221)])
            b = np.asarray(self.beta_expr(ts), dtype=float)
            if not np.all(np.isfinite(b)) or np.any(np.diff(b) < -1e-12 * np.maximum(1.0, np.abs(b[1:]))):
                raise ModelDomainError(f"{self.name}: beta is not nondecreasing on the sample grid")
        else:
            n = np.arange(N_DIRECT, dtype=float)
            t = np.asarray(self.t_expr(n), dtype=float)
            c = np.asarray(self.c_expr(n), dtype=float)
            if not (np.all(np.isfinite(t)) and np.all(np.isfinite(c))):
                raise ModelDomainError(f"{self.name}: t_n or c_n undefined on the first {N_DIRECT} indices")
            if np.any(c < 0):
                raise ModelDomainError(f"{self.name}: jump increments must be nonnegative")
            if t[0] < 0 or np.any(np.diff(t) <= 0):
                raise ModelDomainError(f"{self.name}: jump points must be increasing in [0, inf)")
            self._direct = (t, c, np.concatenate([[0.0], np.cumsum(c)]))
        ts = np.logspace(-2, 6, 33)
        b = self.beta(ts)
        viol = b > self.growth.bound(ts) * (1 + 1e-12)
        if np.any(viol):
            t_bad = float(ts[np.argmax(viol)])
            raise DivergenceError(f"{self.name}: beta exceeds its growth law at t={t_bad:g}", t_bad)

    # ----------------------------------------------------------------- beta

    def beta(self, t) -> np.ndarray:
        """beta(t) = dbeta([0, t]) on an array of t >= 0."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0):
            raise ModelDomainError("beta is defined for t >= 0")
        if self.kind == "sum":
            return sum(p.beta(t) for p in self.parts)
        if self.kind == "closed_form":
            return np.asarray(self.beta_expr(t), dtype=float) + np.zeros_like(t)
        if self.jumps is not None:
            jt, jc = self.jumps[:, 0], self.jumps[:, 1]
            if self.period is None:
                cum = np.concatenate([[0.0], np.cumsum(jc)])
                return cum[np.searchsorted(jt, t, side="right")]
            reps = np.floor((t[:, None] - jt[None, :]) / self.period) + 1.0
            return np.maximum(reps, 0.0) @ jc
        return self._beta_sequence(t)

    def _log_count(self, t: float) -> float:
        """ln #{n : t_n <= t} for an expression sequence (-inf when empty)."""
        jt, _, _ = self._direct
        if t < jt[0]:
            return -math.inf
        if t < jt[-1]:
            return math.log(int(np.searchsorted(jt, t, side="right")))

        def g(y):
            return series.eval_at_log(self.t_expr, y) - t

        lo, hi = math.log(N_DIRECT - 1), 2.0 * math.log(N_DIRECT)
        while g(hi) <= 0:
            lo, hi = hi, 2.0 * hi
            if hi > 1e15:
                raise ModelDomainError(f"{self.name}: t_n does not exceed {t}")
        y = optimize.brentq(g, lo, hi, xtol=1e-13, rtol=1e-15)
        if y < 36:
            # exact integer count near e^y: the first n with t_n > t
            n = math.floor(math.exp(y))
            while float(self.t_expr(float(n))) > t:
                n -= 1
            while float(self.t_expr(float(n + 1))) <= t:
                n += 1
            return math.log(n + 1)
        return y

    def _beta_sequence(self, t: np.ndarray) -> np.ndarray:
        _, _, cum = self._direct
        out = np.empty_like(t)
        logs = np.array([self._log_count(float(x)) for x in t])
        small = logs <= math.log(N_DIRECT)
        for i in np.flatnonzero(small):
            out[i] = 0.0 if logs[i] == -math.inf else cum[int(round(math.exp(logs[i])))]
        big = np.flatnonzero(~small)
        if big.size:
            order = big[np.argsort(logs[big])]
            out[order] = cum[-1] + series.em_partial(self.c_expr, N_DIRECT, logs[order])
        return out

    # ------------------------------------------------------------ transform

    def laplace_stieltjes(self, r: float) -> float:
        """h(r) = int_0^inf e^(-t/r) dbeta(t)."""
        if not r > 0:
            raise ModelDomainError("laplace_stieltjes needs r > 0")
        r = float(r)
        if self.kind == "sum":
            return math.fsum(p.laplace_stieltjes(r) for p in self.parts)
        if self.jumps is not None:
            jt, jc = self.jumps[:, 0], self.jumps[:, 1]
            block = kernels.exp_weighted_sum(jt, jc, r)
            if self.period is None:
                return block
            return block / -math.expm1(-self.period / r)
        if self.kind == "closed_form":
            return self._laplace_closed(r)
        return self._laplace_sequence(r)

    def _laplace_closed(self, r: float) -> float:
        # after integration by parts: h(r) = int_0^inf e^-u beta(r u) du
        def g(u):
            return np.exp(-u) * np.asarray(self.beta_expr(r * np.asarray(u)), dtype=float)

        total, U = [], 0.0
        while True:
            piece = math.fsum(series.adaptive_gl(g, a, a + 1.0, rel=1e-14) for a in np.arange(U, U + 25.0))
            total.append(piece)
            U += 25.0
            acc = math.fsum(total)
            # remaining mass is below e^-U * growth bound * (polynomial factor)
            tail = math.exp(-U) * float(self.growth.bound(r * U)) * (U + 1.0) ** 2
            if tail <= TRUNCATION * max(acc, 1e-300) or U > 2000:
                return acc

    def _laplace_sequence(self, r: float) -> float:
        jt, jc, _ = self._direct
        head = kernels.exp_weighted_sum(jt, jc, r)
        f = Expression(mul(self.c_expr.node, Call("exp", neg(div(self.t_expr.node, Num(r))))), var="n")
        y0 = math.log(N_DIRECT)
        target = math.log(max(head, 1e-300)) + math.log(TRUNCATION) - 5.0

        def log_term(y):
            return series.log_eval_at_log(f, y) + y

        y = y0
        while log_term(y) > target:
            y *= 2.0
            if y > 1e15:
                raise DivergenceError(f"{self.name}: Laplace-Stieltjes sum does not converge at r={r:g}", r)
        return head + series.em_tail(f, N_DIRECT, y)

    # --------------------------------------------------------------- algebra

    def __add__(self, other: "StieltjesMeasure") -> "StieltjesMeasure":
        if not isinstance(other, StieltjesMeasure):
            return NotImplemented
        return StieltjesMeasure("sum", parts=[self, other], name=f"{self.name}+{other.name}")

    def __repr__(self):
        return f"StieltjesMeasure({self.kind!r}, name={self.name!r})"

    @classmethod
    def from_dict(cls, doc: dict, name: str = "") -> "StieltjesMeasure":
        if not isinstance(doc, dict):
            raise InvalidInputError("measure document must be a JSON object")
        g = doc.get("tail_law")
        growth = None
        if g is not None:
            try:
                growth = GrowthLaw(float(g["c"]), float(g["q"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidInputError(f"bad tail_law {g!r}") from exc
        return cls(doc.get("kind"), jumps=doc.get("jumps"), period=doc.get("period"),
                   t_expression=doc.get("t_expression"), c_expression=doc.get("c_expression"),
                   expression=doc.get("expression"), growth=growth, name=doc.get("name", name))


# ------------------------------------------------------------- constructors


def unit_jumps() -> StieltjesMeasure:
    """Unit jumps at the positive integers: h(r) = 1/(e^(1/r) - 1)."""
    return StieltjesMeasure("jump_sequence", jumps=[[1.0, 1.0]], period=1.0, name="unit_jumps")


def linear() -> StieltjesMeasure:
    """beta(t) = t (Lebesgue measure)."""
    return StieltjesMeasure("closed_form", expression="t", growth=GrowthLaw(1.0, 1.0), name="linear")


def random_periodic(rng: np.random.Generator, max_block: int = 40, max_increment: float = 2.0) -> StieltjesMeasure:
    """A random block of jumps repeated periodically; beta(t)/t -> sum(c)/period."""
    m = int(rng.integers(5, max_block + 1))
    period = float(m)
    t = np.sort(rng.uniform(0.0, period, m))
    c = rng.uniform(0.0, max_increment, m)
    return StieltjesMeasure("jump_sequence", jumps=np.column_stack([t, c]), period=period, name=f"periodic[{m}]")


def zeta_measure(model: SpectralModel) -> StieltjesMeasure:
    """dbeta with a jump of size mu_n at u = -ln mu_n, for a diagonal model.

    Then h(r) = sum mu_n^(1 + 1/r) = zeta(1 + 1/r), so h(r)/r is the zeta
    route's (s - 1) zeta(s) sampled at s = 1 + 1/r.
    """
    if model.kind != "diagonal_sequence" or model.is_finite:
        raise InvalidInputError("zeta_measure needs an infinite diagonal_sequence model")
    mu = model.mu_expr.node
    tl = model.tail_law
    growth = GrowthLaw(2.0 * max(1.0, tl.c) * (1.0 + 1.0 / tl.q), 1.0)
    return StieltjesMeasure("jump_sequence", t_expression=Expression(neg(Call("log", mu)), var="n"),
                            c_expression=Expression(mu, var="n"), growth=growth, name=f"zeta[{model.name}]")


# ----------------------------------------------------------- Karamata check


@dataclass
class KaramataReport:
    band_h: LimitBand | None
    band_beta: LimitBand | None
    consistent: bool
    tolerance: float
    tags: list = field(default_factory=list)
    h_ratio: GridFunction | None = None
    beta_ratio: GridFunction | None = None

    @property
    def unbounded(self) -> bool:
        return bool(self.tags)


def _ratio_band(lx, vals, tol, exponents, label):
    g = GridFunction.tabulated(lx, vals, "log", label=label)
    if _grows(np.log(np.maximum(vals, 1e-300)), lx):
        return g, None
    width = min(1.0, g.decades / 6.0)
    return g, limit_band(g, tol, "richardson_r", windows=3, window_decades=width, exponents=exponents)


def karamata_compare(measure: StieltjesMeasure, tol: float = 1e-3, r_decades=(1.0, 7.0), t_decades=(1.0, 9.0),
                     per_decade: int = 8) -> KaramataReport:
    """Compare the limits of h(r)/r and beta(t)/t.

    Consistent when both bands overlap within ``tol`` and, if both ratios
    converge, their values differ by at most ``tol``.  Unbounded ratios are
    tagged and make the comparison vacuously consistent.
    """
    if not tol > 0:
        raise InvalidInputError("tolerance must be positive")
    lr = np.linspace(r_decades[0], r_decades[1], int(round((r_decades[1] - r_decades[0]) * per_decade)) + 1) * math.log(10)
    lt = np.linspace(t_decades[0], t_decades[1], int(round((t_decades[1] - t_decades[0]) * per_decade)) + 1) * math.log(10)
    r = np.exp(lr)
    t = np.exp(lt)
    h = np.array([measure.laplace_stieltjes(x) for x in r]) / r
    b = measure.beta(t) / t
    gh, band_h = _ratio_band(lr, h, tol, (0.0, 1.0, 2.0), "h(r)/r")
    gb, band_b = _ratio_band(lt, b, tol, (0.0, 1.0), "beta(t)/t")
    tags = []
    if band_h is None:
        tags.append("h(r)/r unbounded")
    if band_b is None:
        tags.append("beta(t)/t unbounded")
    if tags:
        return KaramataReport(band_h, band_b, True, tol, tags, gh, gb)
    if band_h.converged and band_b.converged:
        ok = abs(band_h.value - band_b.value) <= tol
    else:
        ok = band_h.overlaps(band_b, slack=tol)
    return KaramataReport(band_h, band_b, bool(ok), tol, tags, gh, gb)
