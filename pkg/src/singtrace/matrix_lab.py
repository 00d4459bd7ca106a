"""Finite-dimensional checks of operator and singular-value inequalities
for b^(1/2) T b^(1/2), and of the compression gap for diagonal models.

Matrix functions are computed by full Hermitian eigendecomposition with
eigenvalues clamped at zero (relative tolerance 1e-12); dimensions are at
most 64 so determinism is preferred over speed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, ModelDomainError
from .expr import Expression
from .means import GridFunction, LimitBand, limit_band
from .spectral_models import SpectralModel
from . import series

MAX_DIM = 64
CLAMP_REL = 1e-12
PSD_REL = 1e-9


def _hermitian(a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"{name} must be a square matrix")
    if a.shape[0] > MAX_DIM:
        raise InvalidInputError(f"{name} has dimension {a.shape[0]} > {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    norm = max(np.linalg.norm(a, 2), 1e-300)
    if np.linalg.norm(a - a.conj().T, 2) > 1e-12 * norm:
        raise InvalidInputError(f"{name} is not Hermitian")
    return 0.5 * (a + a.conj().T)


def psd_power(a: np.ndarray, s: float) -> np.ndarray:
    """a^s for positive semidefinite a, eigenvalues below 1e-12 ||a|| clamped to 0."""
    w, v = np.linalg.eigh(a)
    scale = max(np.max(np.abs(w)), 1e-300)
    if w[0] < -CLAMP_REL * scale:
        raise ModelDomainError(f"matrix is not positive semidefinite (eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    out = (v * w**s) @ v.conj().T
    return 0.5 * (out + out.conj().T)


@dataclass
class MatrixPair:
    """T >= 0 and m I <= b <= M I with m > 0."""

    T: np.ndarray
    b: np.ndarray
    s: float = 1.5

    def __post_init__(self):
        self.T = _hermitian(self.T, "T")
        self.b = _hermitian(self.b, "b")
        if self.T.shape != self.b.shape:
            raise InvalidInputError("T and b must have the same shape")
        if not self.s >= 1:
            raise InvalidInputError("exponent s must be >= 1")
        wt = np.linalg.eigvalsh(self.T)
        tn = max(np.max(np.abs(wt)), 1e-300)
        if wt[0] < -CLAMP_REL * tn:
            raise ModelDomainError(f"T is not positive semidefinite (eigenvalue {wt[0]:.3e})")
        wb = np.linalg.eigvalsh(self.b)
        if wb[0] <= 0:
            raise ModelDomainError("b must be positive definite")
        self.m = float(wb[0])
        self.M = float(wb[-1])
        self.T_norm = float(max(wt[-1], 0.0))
        self._bh = None

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    @property
    def b_half(self) -> np.ndarray:
        if self._bh is None:
            self._bh = psd_power(self.b, 0.5)
        return self._bh

    def compressed(self) -> np.ndarray:
        """b^(1/2) T b^(1/2)."""
        x = self.b_half @ self.T @ self.b_half
        return 0.5 * (x + x.conj().T)

    def sandwiched_power(self, s: float | None = None) -> np.ndarray:
        """b^(1/2) T^s b^(1/2)."""
        x = self.b_half @ psd_power(self.T, self.s if s is None else s) @ self.b_half
        return 0.5 * (x + x.conj().T)

    def scale(self, s: float | None = None) -> float:
        s = self.s if s is None else s
        return max(self.T_norm**s * self.M**s, 1e-300)

    def to_dict(self) -> dict:
        return {"T": np.real_if_close(self.T).tolist(), "b": np.real_if_close(self.b).tolist(), "s": self.s}


@dataclass
class LoewnerResult:
    psd: bool
    min_eig: float
    scale: float

    @property
    def relative(self) -> float:
        return self.min_eig / self.scale


def _loewner(pair: MatrixPair, const: float) -> tuple[np.ndarray, np.ndarray]:
    if pair.s > 2:
        raise InvalidInputError("the operator inequalities are stated for 1 <= s <= 2")
    lhs = psd_power(pair.compressed(), pair.s)
    rhs = const ** (pair.s - 1.0) * pair.sandwiched_power()
    return lhs, rhs


def loewner_upper(pair: MatrixPair) -> LoewnerResult:
    """Check (b^1/2 T b^1/2)^s <= M^(s-1) b^1/2 T^s b^1/2."""
    lhs, rhs = _loewner(pair, pair.M)
    d = rhs - lhs
    me = float(np.linalg.eigvalsh(0.5 * (d + d.conj().T))[0])
    sc = pair.scale()
    return LoewnerResult(me >= -PSD_REL * sc, me, sc)


def loewner_lower(pair: MatrixPair) -> LoewnerResult:
    """Check (b^1/2 T b^1/2)^s >= m^(s-1) b^1/2 T^s b^1/2."""
    lhs, rhs = _loewner(pair, pair.m)
    d = lhs - rhs
    me = float(np.linalg.eigvalsh(0.5 * (d + d.conj().T))[0])
    sc = pair.scale()
    return LoewnerResult(me >= -PSD_REL * sc, me, sc)


@dataclass
class SingularReport:
    holds_upper: bool
    holds_lower: bool
    worst_upper: float
    worst_lower: float
    trace_upper: bool
    trace_lower: bool
    scale: float

    @property
    def holds(self) -> bool:
        return self.holds_upper and self.holds_lower and self.trace_upper and self.trace_lower


def singular_ineq_p(pair: MatrixPair, t_grid=None, s: float | None = None) -> SingularReport:
    """mu_t(b^1/2 T b^1/2)^s against M^(s-1) and m^(s-1) times mu_t(b^1/2 T^s b^1/2).

    Checked at the integer t in ``t_grid`` (default all t < dim); the trace
    versions of both inequalities are checked too.
    """
    s = pair.s if s is None else float(s)
    if not s >= 1:
        raise InvalidInputError("exponent s must be >= 1")
    t = np.arange(pair.dim) if t_grid is None else np.asarray(t_grid, dtype=int)
    if np.any((t < 0) | (t >= pair.dim)):
        raise InvalidInputError("t_grid entries must be integers in [0, dim)")
    lhs_all = np.clip(np.linalg.eigvalsh(pair.compressed())[::-1], 0, None) ** s
    rhs_all = np.clip(np.linalg.eigvalsh(pair.sandwiched_power(s))[::-1], 0, None)
    lhs, rhs = lhs_all[t], rhs_all[t]
    sc = pair.scale(s)
    up = pair.M ** (s - 1) * rhs - lhs
    lo = lhs - pair.m ** (s - 1) * rhs
    tr_l, tr_r = math.fsum(lhs_all), math.fsum(rhs_all)
    floor = -PSD_REL * sc
    return SingularReport(
        bool(np.min(up) >= floor), bool(np.min(lo) >= floor), float(np.min(up)), float(np.min(lo)),
        pair.M ** (s - 1) * tr_r - tr_l >= floor * pair.dim, tr_l - pair.m ** (s - 1) * tr_r >= floor * pair.dim, sc,
    )


# ------------------------------------------------------------ random suites


def random_pair(rng: np.random.Generator, dim: int = 8, s: float = 1.5, shift: float = 0.5) -> MatrixPair:
    """Wishart T and shifted-Wishart b."""
    g = rng.standard_normal((dim, dim))
    h = rng.standard_normal((dim, dim))
    T = g @ g.T / dim
    b = h @ h.T / dim + shift * np.eye(dim)
    return MatrixPair(T, b, s)


@dataclass
class SuiteReport:
    trials: int
    exponents: tuple
    root_seed: int
    violations: list = field(default_factory=list)
    worst_relative: float = math.inf

    @property
    def passed(self) -> bool:
        return not self.violations

    def dump_failures(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.violations, fh, indent=1, sort_keys=True)


def loewner_suite(trials: int = 1000, dim: int = 8, exponents=(1.1, 1.5, 1.9), seed: int = 0,
                  singular_exponents=(1.0, 2.5, 4.0)) -> SuiteReport:
    """Randomized trials of both operator inequalities (and the singular-value
    and trace versions at ``singular_exponents``).

    Trial i uses the i-th child of ``SeedSequence(seed)``, so verdicts depend
    only on the root seed.
    """
    children = np.random.SeedSequence(seed).spawn(trials)
    rep = SuiteReport(trials, tuple(exponents), seed)
    worst = math.inf
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        base = random_pair(rng, dim)
        for s in exponents:
            pair = MatrixPair(base.T, base.b, s)
            for name, fn in (("upper", loewner_upper), ("lower", loewner_lower)):
                res = fn(pair)
                worst = min(worst, res.relative)
                if not res.psd:
                    rep.violations.append({"trial": i, "check": name, "min_eig": res.min_eig, **pair.to_dict()})
        for s in singular_exponents:
            sr = singular_ineq_p(base, s=s)
            if not sr.holds:
                rep.violations.append({"trial": i, "check": "singular", "worst_upper": sr.worst_upper,
                                       "worst_lower": sr.worst_lower, **MatrixPair(base.T, base.b, s).to_dict()})
    rep.worst_relative = worst
    return rep


# -------------------------------------------------------- compression gap


@dataclass
class CompressionReport:
    s_grid: np.ndarray
    weighted: np.ndarray
    compressed: np.ndarray
    gap: np.ndarray
    extrapolation: LimitBand | None
    notes: list = field(default_factory=list)


def _weight_values(b_weight, n: np.ndarray) -> np.ndarray:
    if isinstance(b_weight, (int, float)):
        return np.full(n.shape, float(b_weight))
    expr = b_weight if isinstance(b_weight, Expression) else Expression(b_weight, var="n")
    return np.asarray(expr(n), dtype=float) + np.zeros_like(n)


def compression_terms(b_weight, model: SpectralModel, s: float, n_direct: int = 2**20):
    """(s-1) tau(b T^s), (s-1) tau((b^1/2 T b^1/2)^s) and their difference.

    For a diagonal model b^1/2 T b^1/2 is diagonal with entries b_n mu_n.
    Indices n < ``n_direct`` are summed directly; beyond that the weight is
    replaced by its mean over the direct range, which is exact up to
    O(n_direct^-s) for weights whose oscillating part has bounded partial
    sums (periodic or almost periodic in n).
    """
    if model.kind != "diagonal_sequence":
        raise InvalidInputError("compression_residue_compare needs a diagonal model")
    if not s > 1:
        raise InvalidInputError("s must exceed 1")
    if model.is_finite:
        mu = model.values
        n = np.arange(mu.size, dtype=float)
    else:
        n = np.arange(n_direct, dtype=float)
        mu = np.asarray(model.mu_expr(n), dtype=float)
    b = _weight_values(b_weight, n)
    if np.any(b <= 0) or not np.all(np.isfinite(b)):
        raise ModelDomainError("b must be a bounded positive sequence")
    mus = mu**s
    bs = b**s
    terms_w = b * mus
    terms_c = bs * mus
    # b - b^s = -b * expm1((s-1) ln b), accurate as s -> 1
    terms_g = -b * np.expm1((s - 1.0) * np.log(b)) * mus
    sums = [math.fsum(terms_w), math.fsum(terms_c), math.fsum(terms_g)]
    if not model.is_finite:
        tail = _power_tail(model, s, n_direct)
        means = [float(np.mean(b)), float(np.mean(bs)), float(np.mean(-b * np.expm1((s - 1.0) * np.log(b))))]
        sums = [x + m * tail for x, m in zip(sums, means)]
    e = s - 1.0
    return e * sums[0], e * sums[1], e * sums[2]


def _power_tail(model: SpectralModel, s: float, N: int) -> float:
    """sum_{n >= N} mu_n^s."""
    tl = model.tail_law
    if s * tl.q <= 1:
        raise ModelDomainError(f"{model.name}: sum of mu^s diverges at s={s}")
    from .expr import Num, power

    f = Expression(power(model.mu_expr.node, Num(float(s))), var="n")
    decay = s * tl.q - 1.0
    y_end = math.log(N) + (40.0 + max(0.0, s * math.log(tl.c)) - min(0.0, math.log(decay))) / decay
    return series.em_tail(f, N, y_end)


def compression_residue_compare(b_weight, model: SpectralModel, s_grid=None, tol: float = 1e-3,
                                n_direct: int = 2**20) -> CompressionReport:
    """Gap (s-1)[tau(b T^s) - tau((b^1/2 T b^1/2)^s)] along s_grid, extrapolated to s -> 1.

    The default grid is s = 1 + 2^-k, k = 2..14; the extrapolation fits
    powers of (s - 1) on windows of two doublings.
    """
    ks = np.arange(2, 15)
    s_grid = 1.0 + 2.0 ** (-ks) if s_grid is None else np.asarray(s_grid, dtype=float)
    s_grid = np.sort(s_grid)[::-1]
    rows = np.array([compression_terms(b_weight, model, s, n_direct) for s in s_grid])
    notes = []
    band = None
    r = 1.0 / (s_grid - 1.0)
    if s_grid.size >= 7:
        g = GridFunction.tabulated(np.log(r), rows[:, 2], "log", label="compression gap")
        band = limit_band(g, tol, "richardson_r", windows=3, window_decades=g.decades / 6.0, exponents=(0.0, 1.0, 2.0))
    else:
        notes.append("fewer than 7 exponents: no extrapolation")
    return CompressionReport(s_grid, rows[:, 0], rows[:, 1], rows[:, 2], band, notes)


@dataclass
class ScalingReport:
    eps: np.ndarray
    gaps: np.ndarray
    exponent: float
    r_squared: float
    constant: float
    bound_exponent: float = 0.25

    @property
    def consistent(self) -> bool:
        """The gaps obey C eps^(1/4) with the fitted C and a log-log fit of R^2 >= 0.9."""
        return self.exponent >= self.bound_exponent - 1e-9 and self.r_squared >= 0.9


def epsilon_scaling(b_weight, model: SpectralModel, s: float = 1.0 + 2.0**-6, eps=(1e-1, 1e-2, 1e-3, 1e-4),
                    n_direct: int = 2**20) -> ScalingReport:
    """|(s-1) tau((b^1/2 T b^1/2)^s) - (s-1) tau(((b+eps)^1/2 T (b+eps)^1/2)^s)| against eps."""
    eps = np.asarray(eps, dtype=float)
    base = compression_terms(b_weight, model, s, n_direct)[1]
    if isinstance(b_weight, (int, float)):
        shifted = [float(b_weight) + e for e in eps]
    else:
        src = b_weight.text if isinstance(b_weight, Expression) else str(b_weight)
        shifted = [f"({src}) + {float(e)!r}" for e in eps]
    gaps = np.array([abs(compression_terms(w, model, s, n_direct)[1] - base) for w in shifted])
    x, y = np.log(eps), np.log(gaps)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    r2 = 1.0 - float(np.sum(resid**2)) / max(float(np.sum((y - y.mean()) ** 2)), 1e-300)
    C = float(np.max(gaps / eps**0.25))
    return ScalingReport(eps, gaps, float(slope), r2, C)
