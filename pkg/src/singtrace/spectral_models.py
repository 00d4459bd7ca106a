"""Operators presented through their spectral data.

A :class:`SpectralModel` is one of

* ``closed_form_mu``   - the singular-value function mu_t is an expression in ``s``;
* ``integrated_form``  - the primitive F(t) is an expression, mu = F';
* ``diagonal_sequence``- a nonincreasing sequence mu_n (expression in ``n`` or a finite list);
* ``matrix``           - a dense matrix, mu taken from its singular values.

The step convention mu_t = s_{floor(t)+1} (the (floor(t)+1)-th largest singular
value) is used for sequences and matrices.  Infinite models must declare a
tail law mu_t <= c (1+t)^(-q) for t >= t0; it is sample-checked at
construction and drives every truncation bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import kernels, series
from .errors import ConsistencyError, DivergenceError, InvalidInputError, ModelDomainError
from .expr import Expression, Num, is_constant, mul, power

KINDS = ("closed_form_mu", "integrated_form", "diagonal_sequence", "matrix")
N_DIRECT = 2**16
TERM_FLOOR = 1e-18


@dataclass(frozen=True)
class TailLaw:
    """mu_t <= c (1+t)^(-q) for t >= t0."""

    c: float
    q: float
    t0: float = 0.0

    def __post_init__(self):
        if not (self.c > 0 and self.q > 0 and self.t0 >= 0):
            raise InvalidInputError(f"tail law needs c > 0, q > 0, t0 >= 0 (got {self})")

    def bound(self, t):
        return self.c * (1.0 + np.asarray(t, dtype=float)) ** (-self.q)

    @property
    def abscissa(self) -> float:
        """Smallest s for which sum mu_n^s is guaranteed to converge by this law."""
        return 1.0 / self.q

    def power(self, p: float) -> "TailLaw":
        return TailLaw(self.c**p, self.q * p, self.t0)


def log1p_exp(L):
    """log(1 + e^L) without overflow."""
    L = np.asarray(L, dtype=float)
    return np.where(L > 30, L + np.log1p(np.exp(-np.minimum(L, 700))), np.log1p(np.exp(np.minimum(L, 30))))


class SpectralModel:
    """Immutable spectral description of a positive compact operator."""

    def __init__(
        self,
        kind: str,
        expression: str | Expression | None = None,
        values=None,
        tail_law: TailLaw | None = None,
        weight: str | Expression | float | None = None,
        weights=None,
        matrix=None,
        name: str = "",
        validate: bool = True,
    ):
        if kind not in KINDS:
            raise InvalidInputError(f"unknown model kind {kind!r}; expected one of {KINDS}")
        self.kind = kind
        self.name = name or kind
        self.tail_law = tail_law
        self.values = None
        self.weights = None
        self.weight_expr = None
        self.mu_expr = None
        self.F_expr = None

        if kind == "matrix":
            if matrix is None:
                raise InvalidInputError("matrix model needs a matrix")
            mat = np.asarray(matrix, dtype=complex if np.iscomplexobj(matrix) else float)
            if mat.ndim != 2 or not np.all(np.isfinite(mat)):
                raise InvalidInputError("matrix must be a finite 2-d array")
            values = np.linalg.svd(mat, compute_uv=False)
            self.values = np.sort(values)[::-1]
        elif kind == "diagonal_sequence" and values is not None:
            vals = np.abs(np.asarray(values, dtype=float))
            if vals.ndim != 1 or not np.all(np.isfinite(vals)):
                raise InvalidInputError("diagonal values must be a finite 1-d list")
            order = np.argsort(-vals, kind="stable")
            self.values = vals[order]
            if weights is not None:
                w = np.asarray(weights, dtype=float)
                if w.shape != vals.shape:
                    raise InvalidInputError("weights must match the values")
                self.weights = w[order]
        else:
            if expression is None:
                raise InvalidInputError(f"{kind} model needs an expression")
            ex = expression if isinstance(expression, Expression) else Expression(expression)
            if kind == "integrated_form":
                self.F_expr = ex
                self.mu_expr = ex.derivative(1)
            else:
                self.mu_expr = ex
            if tail_law is None:
                raise InvalidInputError(f"infinite {kind} model {self.name!r} needs a tail_law")

        if weight is not None:
            if self.values is not None:
                w = weight if not isinstance(weight, (str, Expression)) else None
                if w is None:
                    ex = weight if isinstance(weight, Expression) else Expression(weight)
                    w = ex(np.arange(len(self.values), dtype=float))
                self.weights = np.broadcast_to(np.asarray(w, dtype=float), self.values.shape).copy()
            else:
                if isinstance(weight, (int, float)):
                    weight = Expression(Num(float(weight)), var="n")
                self.weight_expr = weight if isinstance(weight, Expression) else Expression(weight)

        self._direct = None
        if validate:
            self._validate()

    # ------------------------------------------------------------------ basics

    @property
    def is_finite(self) -> bool:
        return self.values is not None

    @property
    def is_continuous(self) -> bool:
        return self.kind in ("closed_form_mu", "integrated_form")

    @property
    def has_weight(self) -> bool:
        return self.weights is not None or self.weight_expr is not None

    @property
    def rank(self) -> int:
        if not self.is_finite:
            return -1
        return int(np.count_nonzero(self.values > 0))

    @property
    def abscissa(self) -> float:
        if self.is_finite:
            return 0.0
        return self.tail_law.abscissa

    def __repr__(self):
        return f"SpectralModel({self.kind!r}, name={self.name!r})"

    def _mu_scalar(self, x: float) -> float:
        val = float(self.mu_expr(float(x)))
        if not math.isfinite(val) and x > 0:
            val = series.eval_at_log(self.mu_expr, math.log(x))
        if not math.isfinite(val):
            raise ModelDomainError(f"{self.name}: mu undefined at t={x!r}")
        return val

    def _direct_arrays(self):
        """mu_n and a_n for n < N_DIRECT (diagonal expression models)."""
        if self._direct is None:
            n = np.arange(N_DIRECT, dtype=float)
            mu = np.asarray(self.mu_expr(n), dtype=float)
            if not np.all(np.isfinite(mu)):
                raise ModelDomainError(f"{self.name}: mu undefined on the first {N_DIRECT} indices")
            w = None
            if self.weight_expr is not None:
                w = np.asarray(self.weight_expr(n), dtype=float)
            self._direct = (mu, w, np.concatenate([[0.0], np.cumsum(mu)]))
        return self._direct

    def _validate(self):
        if self.is_finite:
            if np.any(self.values < 0):
                raise ModelDomainError("singular values must be nonnegative")
            return
        if self.kind == "integrated_form":
            f0 = float(self.F_expr(0.0))
            if not math.isfinite(f0) or abs(f0) > 1e-12:
                raise ModelDomainError(f"{self.name}: integrated form needs F(0) = 0 (got {f0})")
        if self.kind == "diagonal_sequence":
            mu, _, _ = self._direct_arrays()
            grid = np.unique(np.concatenate([np.arange(64.0), np.floor(np.logspace(1, 15, 400))]))
        else:
            grid = np.concatenate([[0.0], np.logspace(-8, 15, 600)])
        with np.errstate(all="ignore"):
            vals = np.asarray(self.mu_expr(grid), dtype=float)
        if not np.all(np.isfinite(vals)):
            bad = grid[~np.isfinite(vals)][0]
            raise ModelDomainError(f"{self.name}: mu undefined at t={bad!r}")
        if np.any(vals < 0):
            raise ModelDomainError(f"{self.name}: mu negative at t={grid[vals < 0][0]!r}")
        big = [series.log_eval_at_log(self.mu_expr, y) for y in (800.0, 2000.0, 5000.0, 10000.0)]
        logs = np.concatenate([np.log(np.maximum(vals, 1e-300)), big])
        rises = np.diff(vals) > 1e-12 * np.maximum(vals[:-1], 1e-300)
        if np.any(rises) or np.any(np.diff(big) > 1e-9 * np.abs(big[:-1])) or logs[len(vals) - 1] < big[0] - 1e-9:
            where = grid[1:][rises][0] if np.any(rises) else "beyond 1e300"
            raise ModelDomainError(f"{self.name}: mu is not nonincreasing (violation near t={where})")
        tl = self.tail_law
        start = max(tl.t0, 1.0)
        ts = np.logspace(math.log10(start), math.log10(start) + 12, 64)
        if self.kind == "diagonal_sequence":
            ts = np.floor(ts)  # sequences are bounded index by index: mu_n <= c (1+n)^-q
        mus = np.asarray(self.mu_expr(ts), dtype=float)
        if np.any(mus > tl.bound(ts) * (1 + 1e-9)):
            bad = ts[mus > tl.bound(ts) * (1 + 1e-9)][0]
            raise ModelDomainError(f"{self.name}: tail law {tl} violated at t={bad:.6g}")

    # ---------------------------------------------------------------- mu and F

    def mu_at(self, t: float) -> float:
        if t < 0:
            raise ModelDomainError("mu_t needs t >= 0")
        if self.is_finite:
            k = int(math.floor(t))
            return float(self.values[k]) if k < len(self.values) else 0.0
        if self.kind == "diagonal_sequence":
            return self._mu_scalar(math.floor(t))
        return self._mu_scalar(t)

    def log_mu_at_log(self, L: float) -> float:
        """ln mu_t at t = e^L, valid far beyond double range."""
        if self.is_finite:
            v = self.mu_at(math.exp(L)) if L < 700 else 0.0
            return math.log(v) if v > 0 else -math.inf
        y = L
        if self.kind == "diagonal_sequence" and L < 36:
            y = math.log(max(math.floor(math.exp(L)), 1e-300)) if L > 0 else -math.inf
            if y == -math.inf:
                return math.log(self._mu_scalar(0.0))
        return series.log_eval_at_log(self.mu_expr, y)

    def integral_mu(self, t: float) -> float:
        """F(t) = int_0^t mu_s ds."""
        if t < 0:
            raise ModelDomainError("F(t) needs t >= 0")
        if t == 0:
            return 0.0
        return float(self.F_log(np.array([math.log(t)]))[0])

    def F_log(self, L) -> np.ndarray:
        """F(e^L) for an array of L (any order), with huge e^L supported."""
        L = np.asarray(L, dtype=float)
        order = np.argsort(L)
        out = np.empty_like(L)
        out[order] = self._F_log_sorted(L[order])
        return out

    def _F_log_sorted(self, L: np.ndarray) -> np.ndarray:
        if self.is_finite:
            cum = np.concatenate([[0.0], np.cumsum(self.values)])
            n = len(self.values)
            out = np.empty_like(L)
            for i, l in enumerate(L):
                if l > math.log(n + 1):
                    out[i] = cum[-1]
                else:
                    t = math.exp(l)
                    k = min(int(math.floor(t)), n)
                    out[i] = cum[k] + (t - k) * (self.values[k] if k < n else 0.0)
            return out
        if self.kind == "integrated_form":
            return np.array([series.eval_at_log(self.F_expr, float(l)) for l in L])
        if self.kind == "closed_form_mu":
            head = series.adaptive_gl(self.mu_expr, 0.0, 1.0)
            out = np.empty_like(L)
            low = L <= 0
            for i in np.flatnonzero(low):
                out[i] = series.adaptive_gl(self.mu_expr, 0.0, math.exp(L[i]))
            hi = L[~low]
            if hi.size:
                cum = series.cumulative_log_integral(self.mu_expr, np.concatenate([[0.0], hi]))[1:]
                out[~low] = head + cum
            return out
        return self._diag_F_log(L)

    def _diag_F_log(self, L: np.ndarray) -> np.ndarray:
        mu, _, cum = self._direct_arrays()
        out = np.empty_like(L)
        big_idx = []
        for i, l in enumerate(L):
            t = math.exp(l) if l < 700 else math.inf
            if t < N_DIRECT:
                k = int(math.floor(t))
                out[i] = cum[k] + (t - k) * mu[k]
            else:
                big_idx.append(i)
        if big_idx:
            lb = L[big_idx]
            # integer part floor(t) and the linear piece up to t, only visible below 2^52
            ms = np.array([math.log(math.floor(math.exp(l))) if l < 36 else l for l in lb])
            part = series.em_partial(self.mu_expr, N_DIRECT, ms)
            frac = np.array([(math.exp(l) - math.exp(m)) * self._mu_scalar(math.exp(m)) if l < 36 else 0.0 for l, m in zip(lb, ms)])
            out[big_idx] = cum[N_DIRECT] + part + frac
        return out

    # ----------------------------------------------------------- distribution

    def log_distribution(self, log_u: float) -> float:
        """ln lambda_u where lambda_u counts singular values > u (-inf when 0)."""
        if self.is_finite:
            cnt = int(np.count_nonzero(self.values > math.exp(log_u)))
            return math.log(cnt) if cnt else -math.inf
        if log_u >= 700 or self._mu_scalar(0.0) <= math.exp(log_u):
            return -math.inf
        if self.kind == "diagonal_sequence":
            mu, _, _ = self._direct_arrays()
            u = math.exp(log_u) if log_u > -700 else 0.0
            if mu[-1] <= u:
                # first index with mu_n <= u; mu is nonincreasing
                cnt = int(np.searchsorted(-mu, -u, side="left"))
                return math.log(cnt) if cnt else -math.inf
        else:
            if log_u > -700 and self._mu_scalar(1.0) <= math.exp(log_u):
                u = math.exp(log_u)
                x = optimize.brentq(lambda x: self._mu_scalar(x) - u, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
                return math.log(x) if x > 0 else -math.inf
        y = self._solve_log_mu(log_u)
        if self.kind == "diagonal_sequence" and y < 36:
            # count = first integer n with mu_n <= u, bisected near e^y
            x, u = math.exp(y), math.exp(log_u)
            lo = max(0, math.floor(x * (1 - 1e-9)) - 1)
            hi = math.ceil(x * (1 + 1e-9)) + 1
            while lo > 0 and self._mu_scalar(lo) <= u:
                lo = lo // 2
            while self._mu_scalar(hi) > u:
                hi *= 2
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if self._mu_scalar(mid) > u:
                    lo = mid
                else:
                    hi = mid
            cnt = hi if self._mu_scalar(lo) > u else lo
            return math.log(cnt) if cnt else -math.inf
        return y

    def _solve_log_mu(self, log_u: float) -> float:
        """y >= 0 with ln mu(e^y) = log_u (continuous extension of mu)."""

        def h(y):
            return series.log_eval_at_log(self.mu_expr, y) - log_u

        lo, hi = 0.0, 8.0
        while h(hi) > 0:
            lo, hi = hi, hi * 2.0
            if hi > 1e12:
                raise ModelDomainError(f"{self.name}: mu does not fall below e^{log_u}")
        return optimize.brentq(h, lo, hi, xtol=1e-13, rtol=1e-15, maxiter=200)

    def distribution_at(self, u: float) -> float:
        if not u > 0:
            raise ModelDomainError("distribution needs u > 0")
        ly = self.log_distribution(math.log(u))
        if ly == -math.inf:
            return 0.0
        if (self.is_finite or self.kind == "diagonal_sequence") and ly < 36:
            return float(round(math.exp(ly)))  # an integer count; undo the log round trip
        return math.exp(ly) if ly < 709 else math.inf

    def cutoff_trace_log(self, log_u: float) -> float:
        """int_0^{lambda_u} mu_s ds for u = e^{log_u}."""
        ly = self.log_distribution(log_u)
        if ly == -math.inf:
            return 0.0
        return float(self.F_log(np.array([ly]))[0])

    def cutoff_trace(self, u: float, check: bool = True) -> float:
        if not u > 0:
            raise ModelDomainError("cutoff trace needs u > 0")
        val = self.cutoff_trace_log(math.log(u))
        if check:
            direct = self._direct_spectral_sum(u)
            if direct is not None and abs(val - direct) > 1e-9 * max(abs(direct), 1e-300) + 1e-300:
                raise ConsistencyError(f"{self.name}: cutoff trace {val!r} != spectral sum {direct!r} at u={u!r}")
        return val

    def _direct_spectral_sum(self, u: float):
        u = math.exp(math.log(u))  # the threshold the log-space route actually compares against
        if self.is_finite:
            return math.fsum(self.values[self.values > u])
        if self.kind == "diagonal_sequence":
            lam = self.distribution_at(u)
            if lam <= 2**22:
                n = np.arange(int(math.ceil(lam)) + 1, dtype=float)
                vals = np.asarray(self.mu_expr(n), dtype=float)
                return math.fsum(vals[vals > u])
        return None

    # --------------------------------------------------------------- traces

    def _require_weight(self):
        if not self.has_weight:
            raise InvalidInputError(f"{self.name}: weighted trace requested but no trace_weight given")

    def zeta(self, s: float, weighted: bool = False, n_direct: int | None = None) -> float:
        """tau(T^s) (or tau(A T^s) when weighted)."""
        if weighted:
            self._require_weight()
        if self.is_finite:
            w = self.weights if weighted else None
            return kernels.weighted_power_sum(self.values, w, s)
        tl = self.tail_law
        if s * tl.q <= 1.0:
            raise DivergenceError(f"{self.name}: zeta diverges at s={s} (abscissa {tl.abscissa})", tl.abscissa)
        fx = power(self.mu_expr.node, Num(float(s)))
        if weighted:
            fx = mul(self.weight_expr.node, fx)
        f = Expression(fx, var=self.mu_expr.var)
        c_log = max(0.0, s * math.log(tl.c))
        if weighted:
            c_log += math.log1p(self._weight_bound())
        decay = s * tl.q - 1.0
        if self.is_continuous:
            head = series.adaptive_gl(f, 0.0, 1.0)
            y_end = max(math.log1p(tl.t0), 0.0) + (40.0 + c_log - min(0.0, math.log(decay))) / decay
            return head + series.integrate_log(f, 0.0, y_end)
        N = n_direct or N_DIRECT
        if N == N_DIRECT:
            mu, w, _ = self._direct_arrays()
        else:
            n = np.arange(N, dtype=float)
            mu = np.asarray(self.mu_expr(n), dtype=float)
            w = np.asarray(self.weight_expr(n), dtype=float) if self.weight_expr is not None else None
        head = kernels.weighted_power_sum(mu, w if weighted else None, s)
        y_end = max(math.log(N), math.log1p(tl.t0)) + (40.0 + c_log - min(0.0, math.log(decay))) / decay
        if weighted:
            plain = Expression(power(self.mu_expr.node, Num(float(s))), var=self.mu_expr.var)
            return head + self._tail_weight(w) * series.em_tail(plain, N, y_end)
        return head + series.em_tail(f, N, y_end)

    def _tail_weight(self, w: np.ndarray) -> float:
        """Weight used beyond the direct range of a diagonal model.

        A constant weight is exact.  Otherwise the weight is replaced by its
        mean over the upper half of the direct range: Euler-Maclaurin cannot
        be applied to a_n mu_n^s when a_n oscillates in n (sin(n) at the
        integers is not the sampled integrand of any slowly varying
        function), while the mean is exact up to O(N^-s) whenever the
        oscillating part of a_n has bounded partial sums.
        """
        if is_constant(self.weight_expr.node):
            return float(self.weight_expr(0.0))
        return float(np.mean(w[w.size // 2:]))

    def _weight_bound(self) -> float:
        if self.weights is not None:
            return float(np.max(np.abs(self.weights)))
        _, w, _ = self._direct_arrays()
        return float(np.max(np.abs(w)))

    def zeta_weighted(self, s: float) -> float:
        return self.zeta(s, weighted=True)

    def heat_trace(self, lam: float, p: float = 1.0, weighted: bool = False) -> float:
        """tau(exp(-lam^(-2/p) T^(-2))); the kernel of T contributes zero."""
        if not lam > 0:
            raise ModelDomainError("heat trace needs lambda > 0")
        if weighted:
            self._require_weight()
        a = lam ** (-2.0 / p)
        if self.is_finite:
            return kernels.heat_sum(self.values, self.weights if weighted else None, a)
        # terms vanish (< e^-100) once mu < sqrt(a / 100)
        log_cut = 0.5 * math.log(a / 100.0)
        fx = Expression(
            mul(self.weight_expr.node, _heat_node(self.mu_expr, a)) if weighted else _heat_node(self.mu_expr, a),
            var=self.mu_expr.var,
        )
        if self.is_continuous:
            if self._mu_scalar(0.0) <= math.exp(log_cut):
                return 0.0
            head = series.adaptive_gl(fx, 0.0, 1.0, rel=1e-13)
            y_end = max(self._solve_log_mu(log_cut), 1.0)
            return head + series.integrate_log(fx, 0.0, y_end)
        mu, w, _ = self._direct_arrays()
        head = kernels.heat_sum(mu, w if weighted else None, a)
        if mu[-1] <= math.exp(log_cut):
            return head
        y_end = self._solve_log_mu(log_cut)
        if weighted:
            plain = Expression(_heat_node(self.mu_expr, a), var=self.mu_expr.var)
            return head + self._tail_weight(w) * series.em_tail(plain, N_DIRECT, y_end)
        return head + series.em_tail(fx, N_DIRECT, y_end)

    # ---------------------------------------------------------- derived models

    def power(self, p: float) -> "SpectralModel":
        """The model of T^p (weights carried along)."""
        if p == 1:
            return self
        if self.is_finite:
            return SpectralModel("diagonal_sequence", values=self.values**p, weights=self.weights, name=f"{self.name}^{p:g}")
        node = power(self.mu_expr.node, Num(float(p)))
        kind = "diagonal_sequence" if self.kind == "diagonal_sequence" else "closed_form_mu"
        return SpectralModel(
            kind,
            expression=Expression(node, var=self.mu_expr.var),
            tail_law=self.tail_law.power(p),
            weight=self.weight_expr,
            name=f"{self.name}^{p:g}",
        )

    def scaled(self, factor: float) -> "SpectralModel":
        """The model of factor * T."""
        if self.is_finite:
            return SpectralModel("diagonal_sequence", values=self.values * factor, weights=self.weights, name=f"{factor:g}*{self.name}")
        node = mul(Num(float(factor)), self.mu_expr.node)
        kind = "diagonal_sequence" if self.kind == "diagonal_sequence" else "closed_form_mu"
        tl = TailLaw(self.tail_law.c * factor, self.tail_law.q, self.tail_law.t0)
        return SpectralModel(kind, expression=Expression(node, var=self.mu_expr.var), tail_law=tl,
                             weight=self.weight_expr, name=f"{factor:g}*{self.name}")

    def with_weight(self, weight) -> "SpectralModel":
        if self.is_finite:
            return SpectralModel("diagonal_sequence", values=self.values, weight=weight, name=self.name)
        expr = self.F_expr if self.kind == "integrated_form" else self.mu_expr
        return SpectralModel(self.kind, expression=expr, tail_law=self.tail_law, weight=weight, name=self.name)

    # --------------------------------------------------------------- file I/O

    @classmethod
    def from_dict(cls, doc: dict, name: str = "") -> "SpectralModel":
        if not isinstance(doc, dict):
            raise InvalidInputError("model document must be a JSON object")
        kind = doc.get("kind")
        tl = doc.get("tail_law")
        tail = None
        if tl is not None:
            try:
                tail = TailLaw(float(tl["c"]), float(tl["q"]), float(tl.get("t0", 0.0)))
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidInputError(f"bad tail_law {tl!r}") from exc
        weight = doc.get("weight_expression")
        if kind == "matrix":
            return cls("matrix", matrix=doc.get("matrix"), weight=weight, name=doc.get("name", name))
        values = doc.get("values")
        return cls(kind, expression=doc.get("expression"), values=values, tail_law=tail,
                   weight=weight, weights=doc.get("weights"), name=doc.get("name", name))


def _heat_node(mu: Expression, a: float):
    """exp(-a * mu^(-2)) as a tree."""
    from .expr import Call, neg

    return Call("exp", neg(mul(Num(float(a)), power(mu.node, Num(-2.0)))))


# ------------------------------------------------------------------ constructors


def closed_form(expression: str, tail_law: TailLaw, name: str = "") -> SpectralModel:
    return SpectralModel("closed_form_mu", expression=expression, tail_law=tail_law, name=name)


def integrated_form(expression: str, tail_law: TailLaw, name: str = "") -> SpectralModel:
    return SpectralModel("integrated_form", expression=expression, tail_law=tail_law, name=name)


def diagonal(expression=None, values=None, tail_law: TailLaw | None = None, weight=None, name: str = "") -> SpectralModel:
    return SpectralModel("diagonal_sequence", expression=expression, values=values, tail_law=tail_law, weight=weight, name=name)


def from_matrix(matrix, name: str = "") -> SpectralModel:
    return SpectralModel("matrix", matrix=matrix, name=name)


# Shipped reference models.


def harmonic(weight=None) -> SpectralModel:
    return diagonal("1/(n+1)", tail_law=TailLaw(1.0, 1.0), weight=weight, name="harmonic")


def sqrt_harmonic() -> SpectralModel:
    return diagonal("(n+1)^(-0.5)", tail_law=TailLaw(1.0, 0.5), name="sqrt_harmonic")


def trace_class() -> SpectralModel:
    return diagonal("(n+1)^(-2)", tail_law=TailLaw(1.0, 2.0), name="trace_class")


def resolvent() -> SpectralModel:
    return closed_form("1/(1+s)", TailLaw(1.0, 1.0), name="resolvent")


def oscillatory(amplitude: float = 0.4) -> SpectralModel:
    expr = f"log(1+s)*(1+{amplitude!r}*sin(log(log(s+e))))"
    return integrated_form(expr, TailLaw(1.0 + 2.0 * amplitude, 1.0), name="oscillatory")


# ------------------------------------------------------------------- distribution


@dataclass(frozen=True)
class DistributionData:
    """lambda_u (count of singular values > u) and N_T(v) = lambda_{1/v}."""

    model: SpectralModel

    def lam(self, u: float) -> float:
        return self.model.distribution_at(u)

    def N_T(self, v: float) -> float:
        return self.model.distribution_at(1.0 / v)

    def galois_violations(self, s_values, u_values) -> list[tuple[float, float]]:
        """Pairs (s, u) breaking  s >= lambda_u  <=>  mu_s <= u."""
        bad = []
        for u in u_values:
            lam = self.lam(u)
            for s in s_values:
                if (s >= lam) != (self.model.mu_at(s) <= u):
                    bad.append((float(s), float(u)))
        return bad


def distribution(model: SpectralModel) -> DistributionData:
    return DistributionData(model)


# ------------------------------------------------------------------------ ideals


def psi(p: float, t):
    """psi_p: identity below 1 and t^(1-1/p) above."""
    t = np.asarray(t, dtype=float)
    return np.where(t <= 1.0, t, np.abs(t) ** (1.0 - 1.0 / p))


@dataclass
class IdealParams:
    """Ideal membership data for L^(p,inf) (p = 1 uses log(1+t), not psi_1)."""

    p: float = 1.0
    norm_estimate: float = math.nan
    K: float = math.nan
    C: float = math.nan
    in_ideal: bool | None = None
    small_ideal_C: float = math.nan
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.p < 1:
            raise InvalidInputError("ideal exponent p must be >= 1")

    def psi_p(self, t):
        return psi(self.p, t)


def _grows(log_ratio: np.ndarray, log_t: np.ndarray) -> bool:
    """Detect unbounded growth of a ratio over the last two decades of a grid."""
    last = log_t >= log_t[-1] - 2 * math.log(10)
    earlier_max = np.max(log_ratio[~last]) if np.any(~last) else -np.inf
    tail = log_ratio[last]
    slope = np.polyfit(log_t[last], tail, 1)[0]
    return bool(tail[-1] > earlier_max + 1e-3 and slope > 1e-3)


def default_ideal_grid(decades: float = 16.0) -> np.ndarray:
    return np.logspace(-2, -2 + decades, int(decades * 16) + 1)


def ideal_norm(model: SpectralModel, params: IdealParams, t_grid=None) -> IdealParams:
    t = default_ideal_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if math.log10(t[-1] / t[0]) < 12 - 1e-9:
        raise InvalidInputError("ideal_norm needs a grid covering at least 12 decades")
    L = np.log(t)
    F = model.F_log(L)
    denom = log1p_exp(L) if params.p == 1 else np.log(psi(params.p, t))
    with np.errstate(divide="ignore"):
        log_ratio = np.log(np.maximum(F, 1e-300)) - (np.log(denom) if params.p == 1 else denom)
    out = IdealParams(p=params.p, notes=list(params.notes))
    if _grows(log_ratio, L):
        out.in_ideal = False
        out.norm_estimate = math.inf
        out.notes.append("ratio grows across the final decades: not in the ideal")
    else:
        out.in_ideal = True
        out.norm_estimate = float(np.exp(np.max(log_ratio)))
        out.K = out.norm_estimate
        out.C = 1.1 * out.norm_estimate
    log_tmu = np.array([l + model.log_mu_at_log(l) for l in L])
    out.small_ideal_C = math.inf if _grows(log_tmu, L) else float(np.exp(np.max(log_tmu)))
    return out


def submajorizes(f: SpectralModel, g: SpectralModel, grid) -> tuple[bool, float]:
    """Whether f is submajorized by g on the grid; returns (verdict, max violation)."""
    L = np.log(np.asarray(grid, dtype=float))
    diff = f.F_log(L) - g.F_log(L)
    worst = float(np.max(diff))
    return bool(worst <= 1e-12), max(worst, 0.0)


def _power_integral_bound(p: float, t):
    t = np.asarray(t, dtype=float)
    if p == 1:
        return np.log1p(t)
    return ((1.0 + t) ** (1.0 - p) - 1.0) / (1.0 - p)


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst: float
    details: dict = field(default_factory=dict)


def power_integral_check(model: SpectralModel, p_grid, t_grid=None, K: float | None = None) -> CheckReport:
    """int_0^t mu^p <= K^p int_0^t (1+s)^(-p) with K the (1,inf) norm estimate."""
    t = np.logspace(-1, 12, 14 * 8 + 1) if t_grid is None else np.asarray(t_grid, dtype=float)
    if K is None:
        K = ideal_norm(model, IdealParams(1.0)).norm_estimate
    worst = 0.0
    per_p = {}
    for p in p_grid:
        lhs = model.power(p).F_log(np.log(t))
        rhs = K**p * _power_integral_bound(p, t)
        ratio = float(np.max(lhs / rhs))
        per_p[float(p)] = ratio
        worst = max(worst, ratio)
    return CheckReport("integrated power bound", worst <= 1 + 1e-9, worst, {"K": K, "ratios": per_p})


def distribution_growth_check(model: SpectralModel, C: float, t_grid=None) -> CheckReport:
    """Smallest grid t from which lambda_{1/t} <= C t log t holds at every larger grid point."""
    t = np.logspace(0.1, 12, 12 * 16) if t_grid is None else np.asarray(t_grid, dtype=float)
    t = t[t > 1]
    ok = []
    for tt in t:
        ll = model.log_distribution(-math.log(tt))
        ok.append(ll <= math.log(C) + math.log(tt) + math.log(math.log(tt)) + 1e-12)
    ok = np.asarray(ok)
    if not ok[-1]:
        return CheckReport("distribution growth bound", False, float(t[-1]), {"max_t_tested": float(t[-1])})
    bad = np.flatnonzero(~ok)
    start = t[bad[-1] + 1] if bad.size else t[0]
    return CheckReport("distribution growth bound", True, float(start), {"holds_from": float(start), "C": C})
