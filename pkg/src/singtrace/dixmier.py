"""Five numerical routes to the Dixmier trace and their cross-validation.

* ``partial_sum``      F(t) / log(1+t)
* ``cutoff``           (trace of T restricted to mu > 1/t) / log(1+t)
* ``stretched_cutoff`` F(C t log t) / log(1+t)
* ``zeta``             (s-p) zeta(s) as s -> p+, sampled at s = p + 1/r
* ``heat``             lambda^-1 tau(exp(-lambda^(-2/p) T^-2)) as lambda -> inf

Raw zeta and heat limits carry normalising constants (p and Gamma(1+p/2));
:func:`normalization_constant` is the single place they are applied.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InvalidInputError
from .means import GridFunction, LimitBand, cesaro_mean, limit_band, transform
from .spectral_models import SpectralModel, log1p_exp

ROUTES = ("partial_sum", "cutoff", "stretched_cutoff", "zeta", "heat")
DEFAULT_TOL = {"partial_sum": 5e-3, "cutoff": 5e-3, "stretched_cutoff": 5e-3, "zeta": 1e-6, "heat": 1e-4}
DEFAULT_STRETCH = 5.0
# the L grid covers ~3.3 decades of ln t, so the windows are half-decades
ROUTE_WINDOW_DECADES = 0.5
WEIGHTED_ROUTES = ("zeta", "heat")
SCHEMA_VERSION = "1"

# Human-readable statement of the identity each route estimates (written to every CSV row).
ANCHORS = {
    "partial_sum": "tau_w(T) = w-lim F(t)/log(1+t)",
    "cutoff": "tau_w(T) = w-lim tau(T chi(T > 1/t))/log(1+t)",
    "stretched_cutoff": "tau_w(T) = w-lim F(C t log t)/log(1+t)",
    "zeta": "lim (s-p) zeta_A(s) = p tau_w(A T^p)",
    "heat": "lim lambda^-1 tau(A exp(-lambda^(-2/p) T^-2)) = Gamma(1+p/2) tau_w(A T^p)",
}


@dataclass(frozen=True)
class RouteGrid:
    """Grid geometric in L = ln t used by the partial-sum and cutoff routes."""

    L_min: float = math.log(100.0)
    L_max: float = 1.0e5
    per_decade: int = 64

    def describe(self) -> str:
        return f"L=ln t in [{self.L_min:.6g},{self.L_max:.6g}] geometric {self.per_decade}/decade"


def normalization_constant(route: str, p: float = 1.0) -> float:
    """Raw route limit divided by this constant estimates tau_w(A T^p)."""
    if route == "zeta":
        return float(p)
    if route == "heat":
        return math.gamma(1.0 + p / 2.0)
    if route in ROUTES:
        return 1.0
    raise InvalidInputError(f"unknown route {route!r}")


def normalize(route: str, raw: float, p: float = 1.0) -> float:
    return raw / normalization_constant(route, p)


def _check_ideal(model: SpectralModel):
    if not model.is_finite and model.tail_law.q < 1.0:
        raise DivergenceError(
            f"{model.name}: tail exponent q={model.tail_law.q:g} < 1, so F(t)/log(1+t) is unbounded "
            "(not in the weak trace-class ideal); pass the p-th power model instead",
            model.tail_law.abscissa,
        )


# ------------------------------------------------------------ route functions


def partial_sum_function(model: SpectralModel, grid: RouteGrid = RouteGrid()) -> GridFunction:
    def f_log(L):
        return model.F_log(L) / log1p_exp(L)

    return GridFunction.sample_log(f_log, grid.L_min, grid.L_max, grid.per_decade, label="partial_sum")


def cutoff_function(model: SpectralModel, stretch: float | None = None, grid: RouteGrid = RouteGrid()) -> GridFunction:
    if stretch is None:

        def f_log(L):
            L = np.atleast_1d(L)
            ly = np.array([model.log_distribution(-l) for l in L])
            out = np.zeros_like(L)
            ok = np.isfinite(ly)
            if ok.any():
                out[ok] = model.F_log(ly[ok])
            return out / log1p_exp(L)

        label = "cutoff"
    else:
        if not stretch > 0:
            raise InvalidInputError("stretch constant must be positive")
        lc = math.log(stretch)

        def f_log(L):
            L = np.atleast_1d(L)
            upper = lc + L + np.log(L)
            return model.F_log(upper) / log1p_exp(L)

        label = f"stretched_cutoff(C={stretch:g})"
    return GridFunction.sample_log(f_log, grid.L_min, grid.L_max, grid.per_decade, label=label)


def route_partial_sum(model: SpectralModel, tol: float = DEFAULT_TOL["partial_sum"], grid: RouteGrid = RouteGrid()) -> LimitBand:
    _check_ideal(model)
    return limit_band(partial_sum_function(model, grid), tol, "richardson_log", window_decades=ROUTE_WINDOW_DECADES)


def route_cutoff(model: SpectralModel, tol: float = DEFAULT_TOL["cutoff"], stretch: float | None = None,
                 grid: RouteGrid = RouteGrid()) -> LimitBand:
    _check_ideal(model)
    f = cutoff_function(model, stretch, grid)
    # log log t / log t appears once the upper limit is stretched
    return limit_band(f, tol, "richardson_log", window_decades=ROUTE_WINDOW_DECADES, log_term=stretch is not None)


# ---------------------------------------------------------------------- zeta


@dataclass
class ZetaProbe:
    p: float
    r_grid: np.ndarray
    samples: np.ndarray
    extrapolation: LimitBand
    normalized: LimitBand
    weighted: bool = False
    notes: list = field(default_factory=list)

    @property
    def raw_limit(self) -> float | None:
        return self.extrapolation.value

    @property
    def dixmier_value(self) -> float | None:
        return self.normalized.value

    def grid_spec(self) -> str:
        return f"r=2^k k={int(round(math.log2(self.r_grid[0])))}..{int(round(math.log2(self.r_grid[-1])))}"


def route_zeta(model: SpectralModel, p: float = 1.0, tol: float = DEFAULT_TOL["zeta"], weighted: bool = False,
               k_range: tuple[int, int] = (4, 24)) -> ZetaProbe:
    if not model.is_finite and p < model.abscissa - 1e-12:
        raise DivergenceError(f"{model.name}: p={p} is below the summability abscissa {model.abscissa}", model.abscissa)
    rs, vals, notes = [], [], []
    for k in range(k_range[0], k_range[1] + 1):
        r = 2.0**k
        try:
            z = model.zeta(p + 1.0 / r, weighted=weighted)
        except (OverflowError, FloatingPointError) as exc:
            notes.append(f"grid truncated at r=2^{k}: {exc}")
            break
        if not math.isfinite(z):
            notes.append(f"grid truncated at r=2^{k}: non-finite zeta")
            break
        rs.append(r)
        vals.append(z / r)
    rs, vals = np.asarray(rs), np.asarray(vals)
    f = GridFunction.tabulated(np.log(rs), vals, "log", label="zeta")
    band = limit_band(f, tol, "richardson_r", exponents=(0.0, 1.0, 2.0))
    return ZetaProbe(p, rs, vals, band, band.scaled(1.0 / normalization_constant("zeta", p)), weighted, notes)


# ---------------------------------------------------------------------- heat


@dataclass
class HeatProbe:
    p: float
    lambda_grid: np.ndarray
    samples: np.ndarray
    gamma_const: float
    extrapolation: LimitBand
    normalized: LimitBand
    weighted: bool = False

    @property
    def raw_limit(self) -> float | None:
        return self.extrapolation.value

    @property
    def dixmier_value(self) -> float | None:
        return self.normalized.value

    def grid_spec(self) -> str:
        return f"lambda=2^k k=0..{len(self.lambda_grid) - 1}"


def heat_exponents(model: SpectralModel, p: float) -> tuple[float, ...]:
    """Powers of 1/lambda in the large-lambda expansion of the heat samples.

    For mu_n ~ c n^-q the sample grows like lambda^(1/(q p) - 1); the sum's
    Euler-Maclaurin constant contributes lambda^-1.
    """
    exps = {0.0, 1.0, 2.0}
    if not model.is_finite:
        e1 = 1.0 - 1.0 / (model.tail_law.q * p)
        if e1 > 1e-12:
            exps.add(round(e1, 12))
    return tuple(sorted(exps))


def route_heat(model: SpectralModel, p: float = 1.0, tol: float = DEFAULT_TOL["heat"], weighted: bool = False,
               n_points: int = 24) -> HeatProbe:
    lams = 2.0 ** np.arange(n_points)
    vals = np.array([model.heat_trace(lam, p, weighted=weighted) / lam for lam in lams])
    f = GridFunction.tabulated(np.log(lams), vals, "log", label="heat")
    band = limit_band(f, tol, "richardson_r", exponents=heat_exponents(model, p))
    g = normalization_constant("heat", p)
    return HeatProbe(p, lams, vals, g, band, band.scaled(1.0 / g), weighted)


# ------------------------------------------------------------------ agreement


@dataclass
class TraceReport:
    route_bands: dict
    agreed: bool
    consensus_value: float | None
    tolerance: float
    p: float = 1.0
    model_name: str = ""
    grid_specs: dict = field(default_factory=dict)

    @property
    def all_converged(self) -> bool:
        return all(b.converged for b in self.route_bands.values())

    def rows(self) -> list[dict]:
        out = []
        for route, band in self.route_bands.items():
            out.append({
                "route": route,
                "converged": str(band.converged).lower(),
                "value": "" if band.value is None else repr(float(band.value)),
                "liminf": repr(float(band.liminf_est)),
                "limsup": repr(float(band.limsup_est)),
                "band_width": repr(float(band.band_width)),
                "grid_spec": self.grid_specs.get(route, ""),
                "anchor": ANCHORS[route],
            })
        return out

    def to_csv(self, seed: int | None = None) -> str:
        return write_csv(self.rows(), seed)


CSV_FIELDS = ("schema_version", "seed", "route", "converged", "value", "liminf", "limsup", "band_width", "grid_spec", "anchor")


def write_csv(rows: list[dict], seed: int | None = None, fields=CSV_FIELDS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\r\n")
    w.writeheader()
    for row in rows:
        w.writerow({"schema_version": SCHEMA_VERSION, "seed": "" if seed is None else str(seed), **row})
    return buf.getvalue()


def run_route(route: str, model: SpectralModel, p: float = 1.0, tol: float | None = None, weighted: bool = False,
              grid: RouteGrid = RouteGrid(), stretch: float = DEFAULT_STRETCH) -> tuple[LimitBand, str]:
    """Normalised band of one route plus a grid description."""
    if route not in ROUTES:
        raise InvalidInputError(f"unknown route {route!r}; expected a subset of {ROUTES}")
    tol = DEFAULT_TOL[route] if tol is None else tol
    base = model.power(p) if route in ("partial_sum", "cutoff", "stretched_cutoff") else model
    if route == "partial_sum":
        return route_partial_sum(base, tol, grid), grid.describe()
    if route == "cutoff":
        return route_cutoff(base, tol, None, grid), grid.describe()
    if route == "stretched_cutoff":
        return route_cutoff(base, tol, stretch, grid), f"{grid.describe()} C={stretch:g}"
    if route == "zeta":
        probe = route_zeta(model, p, tol, weighted)
        return probe.normalized, probe.grid_spec()
    if route == "heat":
        probe = route_heat(model, p, tol, weighted)
        return probe.normalized, probe.grid_spec()
    raise InvalidInputError(f"unknown route {route!r}; expected a subset of {ROUTES}")


def agree(model: SpectralModel, p: float = 1.0, tol: float = 5e-3, routes=ROUTES, route_tols: dict | None = None,
          grid: RouteGrid = RouteGrid()) -> TraceReport:
    """Run the routes and compare them.

    A model carrying a weight a_n is read as the product A T with A = diag(a_n);
    only the zeta and heat routes accept it.

    Converged values must lie within ``tol`` of each other, the bands of
    non-converged routes must intersect pairwise and must contain every
    converged value up to ``tol``.
    """
    tols = dict(DEFAULT_TOL)
    if route_tols:
        tols.update(route_tols)
    weighted = model.has_weight
    if weighted:
        bad = [r for r in routes if r not in WEIGHTED_ROUTES]
        if bad:
            raise InvalidInputError(f"weighted models support the routes {WEIGHTED_ROUTES}, not {bad}")
    bands, specs = {}, {}
    for route in routes:
        bands[route], specs[route] = run_route(route, model, p, tols[route], weighted=weighted, grid=grid)
    values = [b.value for b in bands.values() if b.converged]
    open_bands = [b for b in bands.values() if not b.converged]
    ok_values = (max(values) - min(values) <= tol) if values else True
    ok_bands = all(a.overlaps(b) for i, a in enumerate(open_bands) for b in open_bands[i + 1:])
    ok_bands = ok_bands and all(b.contains(v, tol) for b in open_bands for v in values)
    agreed = ok_values and ok_bands
    consensus = float(np.mean(values)) if (agreed and values) else None
    return TraceReport(bands, agreed, consensus, tol, p, model.name, specs)


def subsequential_values(model: SpectralModel, phases=(0.5 * math.pi, 1.5 * math.pi), k: int = 1) -> dict:
    """F(t)/log(1+t) along t = exp(exp(2 pi k + phase)).

    For models oscillating in log log t these sample distinct cluster points
    of the partial-sum ratio; they are illustrations, not values of any
    particular invariant state.
    """
    out = {}
    for ph in phases:
        L = math.exp(2 * math.pi * k + ph)
        out[float(ph)] = float(model.F_log(np.array([L]))[0] / log1p_exp(L))
    return out


def cesaro_collapse(model: SpectralModel, tol: float = 1e-2, route: str = "partial_sum", log_L_max: float = 200.0,
                    per_decade: int = 8) -> LimitBand:
    """Band of the route function after one Cesaro mean taken in the variable L = ln t.

    An oscillation periodic in ln ln t survives every Richardson fit in 1/ln t
    but is averaged out by M acting on L: the mean of 1 + a sin(ln L) is
    1 + a (1 - cos ln L)/ln L.  The grid therefore runs out to ln L =
    ``log_L_max`` (t = exp(exp(200)) by default), far beyond the route grids.
    """
    grid = RouteGrid(math.log(100.0), math.exp(log_L_max), per_decade)
    if route == "partial_sum":
        g = partial_sum_function(model, grid)
    elif route == "stretched_cutoff":
        g = cutoff_function(model, DEFAULT_STRETCH, grid)
    else:
        raise InvalidInputError("cesaro_collapse supports the partial_sum and stretched_cutoff routes")
    g = GridFunction.tabulated(g.log_x, g.values, "loglog", label=g.label)
    in_L = transform(g, "exp_substitute")
    mean = cesaro_mean(in_L, quadrature="trapezoid")
    return limit_band(mean, tol, "raw_tail", windows=3, window_decades=3.0)
