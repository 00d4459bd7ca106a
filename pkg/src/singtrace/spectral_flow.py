"""Spectral flow of linear self-adjoint paths D_t = D0 + t A, t in [0, 1].

Four estimates are provided:

* :func:`sf_crossings` counts eigenvalue crossings of zero;
* :func:`sf_partition` sums indices of consecutive nonnegative spectral projections;
* :func:`sf_integral` integrates tau(A (1 + D_t^2)^(-p/2)) and divides by C~(p);
* :func:`sf_zeta` extrapolates (p-1)/2 tau(A (1 + D0^2)^(-p/2)) as p -> 1 on lattice paths.

Sign convention: an eigenvalue moving from < 0 to >= 0 counts +1.  For the
lattice path D0 = diag(k), k in Z, and u the n-step up-shift, u D0 u* = D0 - n,
so A = -n I and every method returns -n.

Traces over the lattice always include the |k| > K tails in closed form
(Hurwitz zeta series), since truncating them would remove the 2/(p-1) pole
the zeta formula relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from . import kernels
from .errors import DegenerateCrossingError, InvalidInputError, ModelDomainError
from .means import GridFunction, LimitBand, limit_band
from .series import gauss_legendre

PATH_KINDS = ("lattice", "matrix")
MAX_MATRIX_DIM = 4096


# ------------------------------------------------------------------- C tilde


def ctilde(p: float) -> float:
    """int_R (1 + x^2)^(-p/2) dx = sqrt(pi) Gamma((p-1)/2) / Gamma(p/2), p > 1."""
    if not p > 1:
        raise ModelDomainError("C~(p) needs p > 1")
    return math.exp(0.5 * math.log(math.pi) + special.gammaln(0.5 * (p - 1.0)) - special.gammaln(0.5 * p))


def ctilde_quadrature(p: float) -> float:
    """C~(p) by quadrature: with x = cot(phi) it equals 2 int_0^(pi/2) sin(phi)^(p-2) dphi.

    The endpoint singularity phi^(p-2) is handled by QUADPACK's algebraic weight.
    """
    if not p > 1:
        raise ModelDomainError("C~(p) needs p > 1")

    def smooth(phi):
        return (np.sinc(phi / np.pi)) ** (p - 2.0)  # (sin(phi)/phi)^(p-2)

    val, _ = integrate.quad(smooth, 0.0, 0.5 * math.pi, weight="alg", wvar=(p - 2.0, 0.0), epsabs=0.0, epsrel=1e-13,
                            limit=200)
    return 2.0 * val


def _primitive(x, p: float):
    """G(x) = int_0^x (1 + y^2)^(-p/2) dy = x 2F1(1/2, p/2; 3/2; -x^2)."""
    x = np.asarray(x, dtype=float)
    return x * special.hyp2f1(0.5, 0.5 * p, 1.5, -x * x)


def _endpoint_term(lam, p: float) -> float:
    """sum of C~ (1[lam >= 0] - 1/2) - G(lam) over a finite spectrum."""
    lam = np.asarray(lam, dtype=float)
    c = ctilde(p)
    return math.fsum(c * (np.where(lam >= 0, 0.5, -0.5)) - _primitive(lam, p))


# ---------------------------------------------------------------- lattice sums


def lattice_tail(x: float, p: float, K: int, terms: int = 8) -> float:
    """sum over |k| > K of (1 + (k - x)^2)^(-p/2), via the binomial series in m^-2
    and Hurwitz zeta values (needs K + 1 - |x| > 1)."""
    a_hi, a_lo = K + 1.0 - x, K + 1.0 + x
    if min(a_hi, a_lo) <= 1.0:
        raise InvalidInputError("lattice tail needs K + 1 - |x| > 1")
    total = []
    for j in range(terms):
        coef = special.binom(-0.5 * p, j)
        s = p + 2.0 * j
        total.append(coef * (special.zeta(s, a_hi) + special.zeta(s, a_lo)))
    return math.fsum(total)


def lattice_trace(x: float, p: float, K: int) -> float:
    """sum over all k in Z of (1 + (k - x)^2)^(-p/2): direct for |k| <= K plus closed-form tails."""
    if not p > 1:
        raise ModelDomainError("the lattice trace diverges for p <= 1")
    return kernels.lattice_sum(x, p, K) + lattice_tail(x, p, K)


# ----------------------------------------------------------------------- paths


class OperatorPath:
    """D_t = D0 + t A.

    ``lattice`` paths are D0 = diag(k), |k| <= K, with u the n-step shift and
    A = u[D0, u*] = -n I; eigenvalues are known in closed form.  ``matrix``
    paths take Hermitian D0 and A (or a unitary u, from which A = u D0 u* - D0).
    """

    def __init__(self, kind: str, D0=None, A=None, u=None, K: int | None = None, n: int | None = None, name: str = ""):
        if kind not in PATH_KINDS:
            raise InvalidInputError(f"unknown path kind {kind!r}; expected one of {PATH_KINDS}")
        self.kind = kind
        self.name = name or kind
        if kind == "lattice":
            if K is None or n is None:
                raise InvalidInputError("lattice paths need K and n")
            K, n = int(K), int(n)
            if K < 1 or abs(n) > K // 2:
                raise InvalidInputError("lattice paths need K >= 1 and |n| <= K/2")
            self.K, self.n = K, n
            self.k = np.arange(-K, K + 1, dtype=float)
            self.D0 = self.A = self.u = None
            return
        self.K = self.n = None
        D0 = self._herm(D0, "D0")
        if u is not None:
            u = np.asarray(u, dtype=complex if np.iscomplexobj(u) else float)
            if u.shape != D0.shape:
                raise InvalidInputError("u must have the shape of D0")
            if np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), 2) > 1e-10:
                raise InvalidInputError("u is not unitary")
            Au = u @ D0 @ u.conj().T - D0
            if A is not None and np.linalg.norm(np.asarray(A) - Au, 2) > 1e-10 * max(1.0, np.linalg.norm(D0, 2)):
                raise InvalidInputError("A differs from u D0 u* - D0")
            A = 0.5 * (Au + Au.conj().T)
        if A is None:
            raise InvalidInputError("matrix paths need A or u")
        self.D0, self.A, self.u = D0, self._herm(A, "A"), u
        if self.A.shape != D0.shape:
            raise InvalidInputError("A must have the shape of D0")

    @staticmethod
    def _herm(a, name):
        a = np.atleast_2d(np.asarray(a))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInputError(f"{name} must be square")
        if a.shape[0] > MAX_MATRIX_DIM:
            raise InvalidInputError(f"{name} exceeds dimension {MAX_MATRIX_DIM}")
        if not np.all(np.isfinite(a)):
            raise InvalidInputError(f"{name} has non-finite entries")
        if np.linalg.norm(a - a.conj().T, 2) > 1e-12 * max(1.0, np.linalg.norm(a, 2)):
            raise InvalidInputError(f"{name} is not self-adjoint")
        return 0.5 * (a + a.conj().T)

    @classmethod
    def lattice(cls, n: int, K: int = 2000) -> "OperatorPath":
        return cls("lattice", K=K, n=n, name=f"lattice(n={n},K={K})")

    @classmethod
    def from_dict(cls, doc: dict) -> "OperatorPath":
        if not isinstance(doc, dict):
            raise InvalidInputError("path document must be a JSON object")
        kind = doc.get("kind")
        if kind == "lattice":
            return cls.lattice(int(doc.get("n", 1)), int(doc.get("K", 2000)))
        return cls(kind, D0=doc.get("D0"), A=doc.get("A"), u=doc.get("u"), name=doc.get("name", ""))

    @property
    def dim(self) -> int:
        return self.k.size if self.kind == "lattice" else self.D0.shape[0]

    @property
    def scale(self) -> float:
        if self.kind == "lattice":
            return float(self.K + abs(self.n))
        return max(1.0, np.linalg.norm(self.D0, 2) + np.linalg.norm(self.A, 2))

    @property
    def zero_tol(self) -> float:
        return 0.0 if self.kind == "lattice" else 1e-12 * self.scale

    def spectrum(self, t: float) -> np.ndarray:
        """Sorted eigenvalues of D_t."""
        if self.kind == "lattice":
            return self.k - t * self.n
        return np.linalg.eigvalsh(self.D0 + t * self.A)

    def eigh(self, t: float):
        return np.linalg.eigh(self.D0 + t * self.A)

    def negatives(self, t: float) -> int:
        return int(np.count_nonzero(self.spectrum(t) < -self.zero_tol))


# ------------------------------------------------------------------ crossings


@dataclass
class Crossing:
    t: float
    direction: int


@dataclass
class CrossingCount:
    value: int
    crossings: list = field(default_factory=list)
    samples: int = 0


def _local_gap(lam: np.ndarray, window: float, tol: float) -> float:
    near = lam[np.abs(lam) <= window]
    if near.size < 2:
        return math.inf
    d = np.diff(near)
    d = d[d > max(tol, 1e-300)]
    return float(np.min(d)) if d.size else math.inf


def sf_crossings(path: OperatorPath, t_samples=None, reparam=None, max_depth: int = 40) -> CrossingCount:
    """Net number of eigenvalues crossing zero, counted along the sample grid.

    Intervals are bisected while some eigenvalue near zero moves by more than
    half the local spectral gap.  An eigenvalue that reaches zero at an
    interior sample without changing sign raises DegenerateCrossingError.
    """
    ts = np.linspace(0.0, 1.0, 65) if t_samples is None else np.asarray(t_samples, dtype=float)
    if ts.ndim != 1 or ts.size < 2 or np.any(np.diff(ts) <= 0) or ts[0] != 0.0 or ts[-1] != 1.0:
        raise InvalidInputError("t_samples must increase from 0 to 1")
    phi = reparam or (lambda s: s)
    tol = path.zero_tol
    spec = {}

    def lam(s):
        if s not in spec:
            spec[s] = path.spectrum(float(phi(s)))
        return spec[s]

    crossings = []
    total = 0
    stack = [(float(a), float(b), 0) for a, b in zip(ts[::-1][1:], ts[::-1][:-1])]
    visited = []
    while stack:
        a, b, depth = stack.pop()
        la, lb = lam(a), lam(b)
        move = float(np.max(np.abs(lb - la)))
        gap = _local_gap(la, 2.0 * move + 1.0, tol)
        if move > 0.5 * gap:
            if depth >= max_depth:
                if np.any(np.abs(la) <= move) or np.any(np.abs(lb) <= move):
                    raise DegenerateCrossingError(
                        f"cannot resolve eigenvalues near zero on [{a:.6g}, {b:.6g}]; "
                        "perturb the path by eps*I with eps = 1e-8"
                    )
            else:
                m = 0.5 * (a + b)
                stack.append((m, b, depth + 1))
                stack.append((a, m, depth + 1))
                continue
        na = int(np.count_nonzero(la < -tol))
        nb = int(np.count_nonzero(lb < -tol))
        if na != nb:
            crossings.append(Crossing(0.5 * (a + b), int(np.sign(na - nb))))
            total += na - nb
        visited.append(b)
    # a zero eigenvalue at an interior sample that does not change sign is a tangential touch
    for s in visited[:-1]:
        ls = lam(s)
        if np.any(np.abs(ls) <= max(tol, 1e-14 * path.scale)):
            d = 1e-7
            if path.negatives(float(phi(s - d))) == path.negatives(float(phi(s + d))):
                if np.any(np.abs(path.spectrum(float(phi(s - d)))) <= 2e-7 * path.scale) and np.any(
                        np.abs(path.spectrum(float(phi(s + d)))) <= 2e-7 * path.scale):
                    raise DegenerateCrossingError(
                        f"eigenvalue touches zero without crossing at t={s:.6g}; perturb the path by eps*I, eps = 1e-8"
                    )
    return CrossingCount(total, crossings, len(spec))


# ------------------------------------------------------------------ partition


@dataclass
class PartitionResult:
    value: int
    indices: list
    partition: np.ndarray
    refinements: int = 0


def _projection(path: OperatorPath, t: float):
    if path.kind == "lattice":
        return path.spectrum(t) >= 0.0
    w, v = path.eigh(t)
    return v[:, w >= -path.zero_tol]


def _proj_diff_large(path: OperatorPath, P, Q) -> int:
    """Number of singular values of P - Q that are >= 1/2."""
    if path.kind == "lattice":
        return int(np.count_nonzero(P ^ Q))
    d = P @ P.conj().T - Q @ Q.conj().T
    return int(np.count_nonzero(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T))) >= 0.5))


def _pair_index(path: OperatorPath, P, Q, rank_tol: float) -> int:
    """ind(PQ : ran Q -> ran P) = dim(ran Q cap ker P) - dim(ran P cap ker Q)."""
    if path.kind == "lattice":
        return int(np.count_nonzero(Q & ~P)) - int(np.count_nonzero(P & ~Q))
    rP, rQ = P.shape[1], Q.shape[1]
    if rP == 0 or rQ == 0:
        return rQ - rP
    sv = np.linalg.svd(P.conj().T @ Q, compute_uv=False)
    rank = int(np.count_nonzero(sv > rank_tol * max(1.0, sv[0])))
    return (rQ - rank) - (rP - rank)


def sf_partition(path: OperatorPath, partition=None, reparam=None, rank_tol: float = 1e-8,
                 max_finite_rank: int = 8, max_depth: int = 30) -> PartitionResult:
    """sum_i ind(P_{t_(i-1)} P_{t_i}) over a partition of [0, 1], P_t the projection onto D_t >= 0.

    Consecutive projections must be close modulo finite rank: P_(i-1) - P_i
    may have at most ``max_finite_rank`` singular values >= 1/2, otherwise the
    interval is bisected.
    """
    part = np.linspace(0.0, 1.0, 65) if partition is None else np.asarray(partition, dtype=float)
    if isinstance(partition, int):
        part = np.linspace(0.0, 1.0, partition + 1)
    if part.ndim != 1 or part.size < 2 or np.any(np.diff(part) <= 0) or part[0] != 0.0 or part[-1] != 1.0:
        raise InvalidInputError("partition must increase from 0 to 1")
    phi = reparam or (lambda s: s)
    cache = {}

    def proj(s):
        if s not in cache:
            cache[s] = _projection(path, float(phi(s)))
        return cache[s]

    indices, refinements = [], 0
    stack = [(float(a), float(b), 0) for a, b in zip(part[::-1][1:], part[::-1][:-1])]
    used = [0.0]
    while stack:
        a, b, depth = stack.pop()
        P, Q = proj(a), proj(b)
        if _proj_diff_large(path, P, Q) > max_finite_rank:
            if depth >= max_depth:
                raise DegenerateCrossingError(f"projections on [{a:.6g}, {b:.6g}] stay far apart; refine the path")
            m = 0.5 * (a + b)
            stack.append((m, b, depth + 1))
            stack.append((a, m, depth + 1))
            refinements += 1
            continue
        indices.append(_pair_index(path, P, Q, rank_tol))
        used.append(b)
    return PartitionResult(int(sum(indices)), indices, np.asarray(used), refinements)


# ------------------------------------------------------------------- integral


@dataclass
class IntegralResult:
    value: float
    integral: float
    endpoint_correction: float
    ctilde: float
    nodes: int
    converged: bool


def _integrand(path: OperatorPath, t: float, p: float) -> float:
    if path.kind == "lattice":
        return -path.n * lattice_trace(t * path.n, p, path.K)
    w, v = path.eigh(t)
    diag = np.real(np.einsum("ij,ij->j", v.conj(), path.A @ v))
    return math.fsum(diag * (1.0 + w * w) ** (-0.5 * p))


def sf_integral(path: OperatorPath, p: float = 1.5, rel: float = 1e-4, max_nodes: int = 1024) -> IntegralResult:
    """(1/C~) int_0^1 tau(A (1 + D_t^2)^(-p/2)) dt by Gauss-Legendre in t.

    Starts at 32 nodes and doubles until successive values differ by less
    than ``rel``.  For finite matrices the spectra of D_0 and D_1 differ, and
    the endpoint term sum C~ (1[lam >= 0] - 1/2) - G(lam), evaluated at t = 1
    minus t = 0 with G the primitive of (1 + x^2)^(-p/2), makes the result
    exact; on the lattice the term vanishes because D_1 and D_0 have the
    same spectrum.
    """
    if not 1 < p < 2:
        raise ModelDomainError("sf_integral needs p in (1, 2)")
    c = ctilde(p)
    nodes, prev, converged = 32, None, False
    while nodes <= max_nodes:
        x, wts = gauss_legendre(nodes)
        ts = 0.5 * (x + 1.0)
        val = 0.5 * math.fsum(wi * _integrand(path, float(ti), p) for ti, wi in zip(ts, wts))
        if prev is not None and abs(val - prev) < rel * max(1.0, abs(val)):
            converged = True
            break
        prev = val
        nodes *= 2
    nodes = min(nodes, max_nodes)
    corr = 0.0
    if path.kind == "matrix":
        corr = _endpoint_term(path.spectrum(1.0), p) - _endpoint_term(path.spectrum(0.0), p)
    return IntegralResult((val + corr) / c, val / c, corr / c, c, nodes, converged)


# ----------------------------------------------------------------------- zeta


@dataclass
class ZetaFlow:
    p_grid: np.ndarray
    samples: np.ndarray
    band: LimitBand


def sf_zeta(path: OperatorPath, tol: float = 5e-3, j_range=(2, 20)) -> ZetaFlow:
    """(p-1)/2 tau(A (1 + D0^2)^(-p/2)) at p = 1 + 2^-j, extrapolated in 2^-j.

    Lattice paths only: A = -n I, so the trace is -n times the full lattice sum.
    """
    if path.kind != "lattice":
        raise InvalidInputError("sf_zeta is defined for lattice paths")
    js = np.arange(j_range[0], j_range[1] + 1)
    ps = 1.0 + 2.0 ** (-js.astype(float))
    vals = np.array([0.5 * (p - 1.0) * (-path.n) * lattice_trace(0.0, p, path.K) for p in ps])
    g = GridFunction.tabulated(js * math.log(2.0), vals, "log", label="sf_zeta")
    band = limit_band(g, tol, "richardson_r", windows=3, window_decades=math.log10(4.0), exponents=(0.0, 1.0, 2.0))
    return ZetaFlow(ps, vals, band)


# ------------------------------------------------------- resolvent differences


@dataclass
class SweepReport:
    sup: float
    values: np.ndarray
    t_grid: np.ndarray
    p_grid: np.ndarray

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.sup))


def resolvent_difference_sweep(path: OperatorPath, B=None, p_grid=None, t_grid=None) -> SweepReport:
    """sup over the grid of |tau(B [(1 + D0^2)^(-p/2) - (1 + D_t^2)^(-p/2)])|.

    On lattice paths B must be a scalar (B = b I) and both traces include
    their closed-form tails.
    """
    ps = np.linspace(1.02, 1.32, 7) if p_grid is None else np.asarray(p_grid, dtype=float)
    ts = np.linspace(0.0, 1.0, 11) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any((ps <= 1) | (ps >= 4.0 / 3.0)):
        raise InvalidInputError("p_grid must lie in (1, 4/3)")
    vals = np.empty((ts.size, ps.size))
    if path.kind == "lattice":
        b = 1.0 if B is None else float(np.asarray(B))
        for j, p in enumerate(ps):
            base = lattice_trace(0.0, p, path.K)
            for i, t in enumerate(ts):
                vals[i, j] = b * (base - lattice_trace(t * path.n, p, path.K))
    else:
        Bm = np.eye(path.dim) if B is None else np.asarray(B)
        w0, v0 = path.eigh(0.0)
        for i, t in enumerate(ts):
            w, v = path.eigh(float(t))
            for j, p in enumerate(ps):
                f0 = (v0 * (1.0 + w0**2) ** (-0.5 * p)) @ v0.conj().T
                ft = (v * (1.0 + w**2) ** (-0.5 * p)) @ v.conj().T
                vals[i, j] = float(np.real(np.trace(Bm @ (f0 - ft))))
    return SweepReport(float(np.max(np.abs(vals))), vals, ts, ps)


def sweep_stability(n: int = 1, Ks=(500, 1000, 2000), **kw) -> tuple[bool, list]:
    """Sup of the lattice resolvent-difference sweep for each K; stable when all lie within 10% of the largest."""
    sups = [resolvent_difference_sweep(OperatorPath.lattice(n, K), **kw).sup for K in Ks]
    top = max(sups)
    return bool(all(abs(s - top) <= 0.1 * top for s in sups)), sups


# --------------------------------------------------------------------- report


@dataclass
class SfReport:
    sf_crossings: float
    sf_partition: float
    sf_integral: float
    sf_zeta: float | None
    ctilde: float
    p: float
    agreement: bool
    zeta_band: LimitBand | None = None


def sf_report(path: OperatorPath, p: float = 1.5, methods=("crossings", "partition", "integral", "zeta"),
              tol: float = 0.02) -> SfReport:
    """Run the requested methods and check that they agree with the crossing count."""
    cr = sf_crossings(path).value if "crossings" in methods else math.nan
    pa = sf_partition(path).value if "partition" in methods else math.nan
    it = sf_integral(path, p).value if "integral" in methods else math.nan
    zb = sf_zeta(path).band if ("zeta" in methods and path.kind == "lattice") else None
    ref = cr if not math.isnan(cr) else pa
    ok = True
    if not math.isnan(cr) and not math.isnan(pa):
        ok &= cr == pa
    if not math.isnan(it) and not math.isnan(ref):
        ok &= abs(it - ref) <= tol
    if zb is not None and not math.isnan(ref):
        ok &= zb.converged and abs(zb.value - ref) <= 5e-3
    return SfReport(cr, pa, it, None if zb is None else zb.value, ctilde(p), p, bool(ok), zb)
