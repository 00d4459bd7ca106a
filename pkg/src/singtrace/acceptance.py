"""Desk-scale acceptance checks shared by ``singtrace suite`` and the test suite.

Each ``criterion_*`` function returns a :class:`CriterionResult`.  The
``measured`` string holds only deterministic numbers so that suite CSVs are
reproducible; wall-clock times go to ``timing`` and appear in reports only.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import dixmier, matrix_lab, spectral_flow, tauberian, toeplitz
from .dixmier import SCHEMA_VERSION, write_csv
from .spectral_models import harmonic, oscillatory, sqrt_harmonic, trace_class

SUITE_FIELDS = ("schema_version", "seed", "criterion", "title", "passed", "measured", "anchor")
SUITE_BUDGET = 120.0


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: str
    anchor: str
    timing: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:>2}  {self.title}: {self.measured}  ({self.timing:.1f} s)"

    def row(self) -> dict:
        return {"criterion": str(self.number), "title": self.title, "passed": str(self.passed).lower(),
                "measured": self.measured, "anchor": self.anchor}


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.timing = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _fmt(x) -> str:
    return "nan" if x is None else f"{x + 0.0:.6g}"


@_timed
def criterion_1(tighten: float = 1.0) -> CriterionResult:
    """Five routes on mu_n = 1/(n+1) agree on 1 within their own tolerances, in at most 10 s."""
    t0 = time.perf_counter()
    tols = {r: v / tighten for r, v in dixmier.DEFAULT_TOL.items()}
    rep = dixmier.agree(harmonic(), tol=5e-3 / tighten, route_tols=tols)
    elapsed = time.perf_counter() - t0
    errs = {r: (abs(b.value - 1.0) if b.converged else math.inf) for r, b in rep.route_bands.items()}
    ok = all(errs[r] <= tols[r] for r in errs) and rep.agreed and elapsed <= 10.0
    meas = " ".join(f"{r}={_fmt(b.value)}" for r, b in rep.route_bands.items())
    return CriterionResult(1, "route agreement on the harmonic model", ok, meas,
                           "partial sums, cutoffs, zeta residue and heat asymptotics give one trace value")


@_timed
def criterion_2() -> CriterionResult:
    """mu_n = (n+1)^(-1/2) at p = 2: raw zeta limit 2, heat limit over Gamma(2) equal to 1."""
    model = sqrt_harmonic()
    z = dixmier.route_zeta(model, p=2.0)
    h = dixmier.route_heat(model, p=2.0)
    raw = z.raw_limit
    heat = h.normalized.value if h.normalized.converged else None
    ok = raw is not None and abs(raw - 2.0) <= 1e-3 and heat is not None and abs(heat - 1.0) <= 1e-3
    return CriterionResult(2, "normalization for p > 1", ok, f"raw_zeta={_fmt(raw)} heat/Gamma(2)={_fmt(heat)}",
                           "lim (s-p) zeta(s) = p tau(T^p); heat limit = Gamma(1+p/2) tau(T^p)")


@_timed
def criterion_3() -> CriterionResult:
    """mu_n = (n+1)^(-2): every route vanishes."""
    rep = dixmier.agree(trace_class(), tol=1e-6, route_tols={r: 1e-6 for r in dixmier.ROUTES})
    vals = {r: b.value for r, b in rep.route_bands.items()}
    ok = all(b.converged and abs(b.value) <= 1e-6 for b in rep.route_bands.values())
    return CriterionResult(3, "trace-class operators have zero trace", ok,
                           " ".join(f"{r}={_fmt(v)}" for r, v in vals.items()),
                           "singular traces vanish on trace-class operators")


@_timed
def criterion_4() -> CriterionResult:
    """Oscillating model: non-converged bands close to [0.6, 1.4], overlapping; Cesaro mean collapses to 1."""
    model = oscillatory(0.4)
    rep = dixmier.agree(model)
    bands = rep.route_bands
    none_converged = not any(b.converged for b in bands.values())
    near = all(abs(b.liminf_est - 0.6) <= 0.02 and abs(b.limsup_est - 1.4) <= 0.02 for b in bands.values())
    vals = list(bands.values())
    overlap = all(a.overlaps(b) for i, a in enumerate(vals) for b in vals[i + 1:])
    ces = dixmier.cesaro_collapse(model)
    ces_ok = ces.contains(1.0, 0.0) and ces.liminf_est >= 0.99 and ces.limsup_est <= 1.01
    ok = none_converged and near and overlap and ces_ok
    meas = " ".join(f"{r}=[{b.liminf_est:.4f},{b.limsup_est:.4f}]" for r, b in bands.items())
    meas += f" cesaro=[{ces.liminf_est:.4f},{ces.limsup_est:.4f}]"
    return CriterionResult(4, "non-measurable band and its Cesaro collapse", ok, meas,
                           "route values depend on the limit functional; Cesaro-invariant means agree")


@_timed
def criterion_5(seed: int = 0) -> CriterionResult:
    """Unit jumps at r = 1e6 within 1e-5; ten random bounded-increment measures consistent at 1e-3."""
    u = tauberian.unit_jumps()
    r = 1e6
    gap = abs(u.laplace_stieltjes(r) / r - float(u.beta(np.array([r]))[0]) / r)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 5]))
    reps = [tauberian.karamata_compare(tauberian.random_periodic(rng), tol=1e-3, r_decades=(1.0, 6.0),
                                       t_decades=(1.0, 7.0), per_decade=6) for _ in range(10)]
    n_ok = sum(1 for x in reps if x.consistent and not x.unbounded)
    ok = gap <= 1e-5 and n_ok == 10
    return CriterionResult(5, "Abel and Cesaro means of Stieltjes measures", ok,
                           f"unit_gap={gap:.3e} random_consistent={n_ok}/10",
                           "h(r)/r and beta(t)/t share their limit")


@_timed
def criterion_6(seed: int = 0) -> CriterionResult:
    """1000 random 8x8 pairs times three exponents with no Loewner violation, in at most 20 s."""
    t0 = time.perf_counter()
    rep = matrix_lab.loewner_suite(trials=1000, dim=8, seed=seed)
    elapsed = time.perf_counter() - t0
    ok = rep.passed and elapsed <= 20.0
    return CriterionResult(6, "Loewner bounds for sandwiched powers", ok,
                           f"violations={len(rep.violations)} worst_relative_min_eig={rep.worst_relative:.3e}",
                           "m^(s-1) b^1/2 T^s b^1/2 <= (b^1/2 T b^1/2)^s <= M^(s-1) b^1/2 T^s b^1/2")


@_timed
def criterion_7() -> CriterionResult:
    """Compression gap for b_n = 2 + sin n extrapolates to 0; eps-perturbation gaps obey the 1/4 bound."""
    model = harmonic()
    comp = matrix_lab.compression_residue_compare("2 + sin(n)", model)
    band = comp.extrapolation
    gap_ok = band is not None and band.converged and abs(band.value) <= 1e-3
    sc = matrix_lab.epsilon_scaling("2 + sin(n)", model)
    ok = gap_ok and sc.consistent
    meas = f"gap_limit={_fmt(band.value if band else None)} eps_slope={sc.exponent:.4f} R2={sc.r_squared:.4f}"
    return CriterionResult(7, "compression residue", ok, meas,
                           "(s-1) tau(b T^s) and (s-1) tau((b^1/2 T b^1/2)^s) share their limit at s -> 1")


@_timed
def criterion_8() -> CriterionResult:
    """Lattice shifts n = 1, 2, 3: four spectral-flow methods give -n; the constant matches quadrature."""
    t0 = time.perf_counter()
    parts, ok = [], True
    for n in (1, 2, 3):
        path = spectral_flow.OperatorPath.lattice(n, 2000)
        cr = spectral_flow.sf_crossings(path).value
        pa = spectral_flow.sf_partition(path).value
        it = spectral_flow.sf_integral(path, 1.5).value
        zb = spectral_flow.sf_zeta(path).band
        ok &= cr == -n and pa == -n and abs(it + n) <= 0.02
        ok &= zb.converged and abs(zb.value + n) <= 5e-3
        parts.append(f"n={n}:{cr:g}/{pa:g}/{it:.4f}/{_fmt(zb.value)}")
    cerr = max(abs(spectral_flow.ctilde(p) - spectral_flow.ctilde_quadrature(p)) for p in (1.1, 1.5, 1.9))
    ok &= cerr <= 1e-10
    ok &= time.perf_counter() - t0 <= 30.0
    return CriterionResult(8, "spectral flow on lattice shifts", bool(ok), " ".join(parts) + f" ctilde_err={cerr:.1e}",
                           "crossing count = partition index = integral formula = zeta residue")


@_timed
def criterion_9() -> CriterionResult:
    """Sup of the resolvent-difference sweep is stable within 10% across K."""
    stable, sups = spectral_flow.sweep_stability(1, (500, 1000, 2000))
    return CriterionResult(9, "resolvent difference stability", stable, " ".join(f"{s:.6g}" for s in sups),
                           "tau(B[(1+D0^2)^(-p/2) - (1+Dt^2)^(-p/2)]) bounded uniformly in p near 1")


@_timed
def criterion_10() -> CriterionResult:
    """Winding -2..3: Lesch index, near-kernel count and zeta index agree; Gaussian crossed trace."""
    ok, parts = True, []
    for w in range(-2, 4):
        sym = toeplitz.ToeplitzModel.monomial(w)
        li = toeplitz.lesch_index(sym)
        nk = toeplitz.truncated_near_kernel(sym, N=512)
        zi = toeplitz.zeta_index(sym).band
        ok &= abs(li + w) <= 1e-8 and nk.count == abs(w) and zi.converged and abs(zi.value + w) <= 5e-3
        parts.append(f"w={w}:{li:.6g}/{nk.count}/{_fmt(zi.value)}")
    ct = toeplitz.crossed_trace_check(2.0, lambda x: np.exp(-0.5 * x**2))
    ok &= ct.rel_err <= 1e-6
    return CriterionResult(10, "Toeplitz index chain", bool(ok), " ".join(parts) + f" crossed_rel_err={ct.rel_err:.1e}",
                           "index of the compressed symbol = minus its winding number")


def reproducibility_check(seed: int = 0) -> bool:
    """Two runs of a seeded scenario produce byte-identical CSV."""
    a = dixmier.agree(harmonic(), routes=("partial_sum", "zeta")).to_csv(seed)
    b = dixmier.agree(harmonic(), routes=("partial_sum", "zeta")).to_csv(seed)
    rep1 = matrix_lab.loewner_suite(trials=20, seed=seed)
    rep2 = matrix_lab.loewner_suite(trials=20, seed=seed)
    return a.encode() == b.encode() and rep1.worst_relative == rep2.worst_relative


def criterion_11(previous: list[CriterionResult], elapsed: float, seed: int = 0) -> CriterionResult:
    """The earlier criteria all pass within the suite budget and seeded CSVs are reproducible."""
    t0 = time.perf_counter()
    same = reproducibility_check(seed)
    total = elapsed + (time.perf_counter() - t0)
    failed = [r.number for r in previous if not r.passed]
    ok = same and not failed and total <= SUITE_BUDGET
    meas = f"reproducible={str(same).lower()} failed={failed or 'none'}"
    return CriterionResult(11, "suite infrastructure", ok, meas, "exit 0 within budget; seeded output reproducible",
                           time.perf_counter() - t0)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10)


def run_all(seed: int = 0, tighten: float = 1.0, echo=None) -> list[CriterionResult]:
    """Run every criterion in order; ``echo`` receives each result as it completes."""
    t0 = time.perf_counter()
    results = []
    for fn in CRITERIA:
        if fn is criterion_1:
            res = fn(tighten)
        elif fn in (criterion_5, criterion_6):
            res = fn(seed)
        else:
            res = fn()
        results.append(res)
        if echo:
            echo(res)
    res = criterion_11(results, time.perf_counter() - t0, seed)
    results.append(res)
    if echo:
        echo(res)
    return results


def results_csv(results: list[CriterionResult], seed: int) -> str:
    return write_csv([r.row() for r in results], seed, SUITE_FIELDS)


__all__ = ["CriterionResult", "CRITERIA", "run_all", "results_csv", "reproducibility_check", "SCHEMA_VERSION"]
