"""Probability of a domain under a normal, by integration over directions.

Standardizing the normal turns the problem into an average over lines
through the origin: each line carries the symmetric chi radial law, the
domain restricts to a union of parameter intervals (the trace), and the
covered radial mass alpha(n) in [0, 2] integrates over half the unit
sphere.  Dimensions 1-3 use pairs, an adaptive half-circle rule, and an
adaptive tensor rule on the hemisphere; higher dimensions fall back to
Monte Carlo over directions.

Two Kronrod sums run side by side: one accumulates alpha and one
accumulates 2*measure - alpha, so the reported p and p_complement sum to 1
at machine precision instead of differing by quadrature error.
"""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from ._kernels import quad_alpha_batch, quad_trace_batch
from .core import NormalDist, QuadraticDomain, standardize_quadratic, symmetric_sqrt
from .domains import (
    DEFAULT_PROBES,
    ImplicitDomain,
    RayTrace,
    TracedDomain,
    as_traced,
)
from .errors import AccuracyWarning, InvalidArgumentError, InvalidMethodError
from .gx2 import _log_chi2_sf

# 7-15 Gauss-Kronrod abscissae and weights on [-1, 1].
_XGK_HALF = np.array(
    [
        0.9914553711208126,
        0.9491079123427585,
        0.8648644233597691,
        0.7415311855993944,
        0.5860872354676911,
        0.4058451513773972,
        0.2077849550078985,
        0.0,
    ]
)
_WGK_HALF = np.array(
    [
        0.0229353220105292,
        0.0630920926299785,
        0.1047900103222502,
        0.1406532597155259,
        0.1690047266392679,
        0.1903505780647854,
        0.2044329400752989,
        0.2094821410847278,
    ]
)
_WG_HALF = np.array(
    [0.1294849661688697, 0.2797053914892767, 0.3818300505051189, 0.4179591836734694]
)
XGK15 = np.concatenate([-_XGK_HALF[:7], [0.0], _XGK_HALF[6::-1]])
WGK15 = np.concatenate([_WGK_HALF[:7], [_WGK_HALF[7]], _WGK_HALF[6::-1]])
WG7 = np.concatenate([_WG_HALF[:3], [_WG_HALF[3]], _WG_HALF[2::-1]])
for _arr in (XGK15, WGK15, WG7):
    _arr.setflags(write=False)

GOLDEN_RATIO = (1.0 + np.sqrt(5.0)) / 2.0


# ---------------------------------------------------------------------------
# radial law along a line through the origin of a standard normal


def ray_pdf(z, k: int):
    """Density of the signed radial coordinate in k standard dimensions."""
    zs = np.asarray(z, dtype=float)
    # chi2.pdf blows up at 0 for k=1; the signed law is still finite there
    with np.errstate(invalid="ignore", over="ignore"):
        out = np.abs(zs) * stats.chi2.pdf(zs * zs, k)
    if k == 1:
        out = np.where(zs == 0.0, 1.0 / np.sqrt(2.0 * np.pi), out)
    elif k >= 2:
        out = np.where(zs == 0.0, 0.0, out)
    return float(out) if np.asarray(z).ndim == 0 else out


def ray_sf(z, k: int):
    """P(Z > z) for the signed radial coordinate; 1/2 at the origin."""
    zs = np.asarray(z, dtype=float)
    # chdtrc is the bare ufunc; the rv-class route costs two orders more per call
    half_sf = 0.5 * special.chdtrc(k, zs * zs)
    out = np.where(zs >= 0.0, half_sf, 1.0 - half_sf)
    return float(out) if np.asarray(z).ndim == 0 else out


def ray_cdf(z, k: int):
    zs = np.asarray(z, dtype=float)
    half_sf = 0.5 * special.chdtrc(k, zs * zs)
    out = np.where(zs >= 0.0, 1.0 - half_sf, half_sf)
    return float(out) if np.asarray(z).ndim == 0 else out


def ray_log_sf(z, k: int):
    """log P(Z > z); stays finite far past where the linear tail underflows."""
    zs = np.asarray(z, dtype=float)
    scalar = zs.ndim == 0
    zs = np.atleast_1d(zs)
    out = np.empty(zs.shape)
    far = zs > 30.0
    if np.any(far):
        out[far] = np.atleast_1d(_log_chi2_sf(zs[far] ** 2, float(k))) - np.log(2.0)
    rest = ~far
    if np.any(rest):
        with np.errstate(divide="ignore"):
            out[rest] = np.log(ray_sf(zs[rest], k))
    return float(out[0]) if scalar else out


def _interval_mass(lo: float, hi: float, k: int) -> float:
    """Radial mass of (lo, hi) evaluated from whichever tail keeps small
    quantities small; the naive F(hi) - F(lo) cancels to zero deep in
    either tail."""
    if lo >= 0.0:
        return ray_sf(lo, k) - ray_sf(hi, k)
    if hi <= 0.0:
        return ray_sf(-hi, k) - ray_sf(-lo, k)
    return 1.0 - ray_sf(-lo, k) - ray_sf(hi, k)


def alpha_from_trace(trace: RayTrace, k: int) -> float:
    """Covered radial mass (times 2) of a traced line.

    Summed piece by piece so a line whose covered set is one far-out sliver
    keeps full relative accuracy.
    """
    if trace.psi == 0:
        return 1.0
    r = trace.roots
    if r.size == 0:
        return float(trace.psi) + 1.0
    total = 0.0
    if trace.psi > 0:
        total += ray_sf(-float(r[0]), k)
    for i in range(r.size - 1):
        piece_sign = trace.psi * (1 if (i + 1) % 2 == 0 else -1)
        if piece_sign > 0:
            total += _interval_mass(float(r[i]), float(r[i + 1]), k)
    tail_sign = trace.psi * (1 if r.size % 2 == 0 else -1)
    if tail_sign > 0:
        total += ray_sf(float(r[-1]), k)
    return 2.0 * total


def _interval_mass_vec(lo: np.ndarray, hi: np.ndarray, k: int) -> np.ndarray:
    """Vector form of _interval_mass; same three stable cases."""
    out = np.empty(lo.shape)
    m1 = lo >= 0.0
    m2 = ~m1 & (hi <= 0.0)
    m3 = ~(m1 | m2)
    if np.any(m1):
        out[m1] = ray_sf(lo[m1], k) - ray_sf(hi[m1], k)
    if np.any(m2):
        out[m2] = ray_sf(-hi[m2], k) - ray_sf(-lo[m2], k)
    if np.any(m3):
        out[m3] = 1.0 - ray_sf(-lo[m3], k) - ray_sf(hi[m3], k)
    return out


def _alpha_from_traces(traces, k: int) -> np.ndarray:
    """alpha_from_trace over a batch, grouped by shape so the tail and piece
    masses evaluate as arrays instead of one scipy call per ray."""
    out = np.empty(len(traces))
    groups: dict = {}
    for idx, tr in enumerate(traces):
        if tr.psi == 0:
            out[idx] = 1.0
        elif tr.roots.size == 0:
            out[idx] = float(tr.psi) + 1.0
        else:
            groups.setdefault((tr.psi, tr.roots.size), []).append(idx)
    for (psi, m), idxs in groups.items():
        r = np.stack([traces[i].roots for i in idxs])
        total = np.zeros(len(idxs))
        if psi > 0:
            total += ray_sf(-r[:, 0], k)
        for i in range(m - 1):
            piece_sign = psi * (1 if (i + 1) % 2 == 0 else -1)
            if piece_sign > 0:
                total += _interval_mass_vec(r[:, i], r[:, i + 1], k)
        tail_sign = psi * (1 if m % 2 == 0 else -1)
        if tail_sign > 0:
            total += ray_sf(r[:, -1], k)
        out[idxs] = 2.0 * total
    return out


def mc_directions(k: int, count: int, seed=None) -> np.ndarray:
    """Uniform random unit vectors, (count, k)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    v = rng.standard_normal((count, k))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # resample the (measure-zero) degenerate rows rather than dividing by ~0
    bad = norms[:, 0] < 1e-12
    while np.any(bad):
        v[bad] = rng.standard_normal((int(np.sum(bad)), k))
        norms[bad] = np.linalg.norm(v[bad], axis=1, keepdims=True)
        bad = norms[:, 0] < 1e-12
    return v / norms


def fibonacci_sphere(count: int) -> np.ndarray:
    """Deterministic near-uniform direction grid on the 2-sphere."""
    i = np.arange(count) + 0.5
    theta = np.arccos(1.0 - 2.0 * i / count)
    phi = 2.0 * np.pi * i / GOLDEN_RATIO
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=1)


# ---------------------------------------------------------------------------
# configuration / result


@dataclass
class IntegralConfig:
    """Knobs for integrate_normal.

    span limits numerical traces to |t| <= span standard deviations (the
    missed radial tail is folded into the reported bound); subdivision stops
    when the bound drops under max(abs_tol, rel_tol * min(p, 1-p)).
    boundary_grid picks the direction set boundary points are traced on:
    "uniform" angles or a golden-ratio ("fibonacci") sequence, with "auto"
    meaning uniform on the circle and fibonacci on the sphere.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-6
    span: float | None = None
    probes: int = DEFAULT_PROBES
    ray_count: int = 100_000
    seed: int | None = None
    max_subdivisions: int = 10_000
    collect_boundary: bool = True
    boundary_grid: str = "auto"
    boundary_dirs: int = 10_000

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise InvalidArgumentError(
                f"tolerances must be positive, got abs={self.abs_tol} rel={self.rel_tol}"
            )
        if self.span is not None and self.span <= 0:
            raise InvalidArgumentError(f"span must be positive, got {self.span}")
        if self.ray_count < 100:
            raise InvalidArgumentError(f"ray_count must be >= 100, got {self.ray_count}")
        if self.boundary_grid not in ("auto", "uniform", "fibonacci"):
            raise InvalidArgumentError(
                f"boundary_grid must be auto, uniform, or fibonacci, got {self.boundary_grid!r}"
            )
        if self.boundary_dirs < 1:
            raise InvalidArgumentError(f"boundary_dirs must be >= 1, got {self.boundary_dirs}")

    def resolved_span(self) -> float:
        if self.span is not None:
            return float(self.span)
        # default: far enough out that the invisible tail is under abs_tol/10
        return float(min(40.0, stats.norm.isf(max(self.abs_tol, 5e-324) / 20.0)))


@dataclass(frozen=True)
class IntegralResult:
    """p and its complement are accumulated separately so each keeps
    relative accuracy; std_error is set only by the Monte-Carlo mode (its
    err_bound is then 3 standard errors, a confidence scale rather than a
    hard bound)."""

    p: float
    p_complement: float
    err_bound: float
    method: str
    n_evals: int
    boundary_points: np.ndarray
    std_error: float | None = None


class _Kahan:
    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, v: float):
        y = v - self.c
        t = self.s + y
        self.c = (t - self.s) - y
        self.s = t


# ---------------------------------------------------------------------------
# alpha evaluation over direction batches


class _AlphaSource:
    """Per-direction alpha and traces for one (normal, domain) pair.

    Directions live in standardized coordinates; traces of non-quadratic
    domains are taken in the original coordinates along mu + t (S n), whose
    parameter t is exactly the standardized radial coordinate.
    """

    def __init__(self, n: NormalDist, domain, span: float, probes: int):
        self.k = n.dim
        self.span = span
        self.n_evals = 0
        if getattr(domain, "dim", None) != n.dim:
            raise InvalidArgumentError(
                f"domain dimension {getattr(domain, 'dim', None)} does not match "
                f"normal dimension {n.dim}"
            )
        self.exact = isinstance(domain, QuadraticDomain)
        if self.exact:
            std = standardize_quadratic(domain, n)
            self._q2, self._q1, self._q0 = std.q2, std.q1, std.q0
        else:
            self._mu = n.mu
            self._smat = symmetric_sqrt(n.sigma).s
            self._traced = as_traced(domain)
            self._probes = probes

    def alpha(self, dirs: np.ndarray) -> np.ndarray:
        self.n_evals += dirs.shape[0]
        if self.exact:
            return quad_alpha_batch(self._q2, self._q1, self._q0, dirs, self.k)
        traces = self._traced.trace_batch(
            self._mu, dirs @ self._smat, self.span, self._probes
        )
        return _alpha_from_traces(traces, self.k)

    def traces(self, dirs: np.ndarray) -> list[RayTrace]:
        if self.exact:
            psi, pairs = quad_trace_batch(self._q2, self._q1, self._q0, dirs)
            return [
                RayTrace(int(psi[i]), pairs[i][np.isfinite(pairs[i])])
                for i in range(len(psi))
            ]
        return self._traced.trace_batch(self._mu, dirs @ self._smat, self.span, self._probes)

    @property
    def tail_bound(self) -> float:
        """Radial mass invisible past the tracing span (0 for exact traces)."""
        if self.exact:
            return 0.0
        return float(stats.chi2.sf(self.span * self.span, self.k))


# ---------------------------------------------------------------------------
# adaptive drivers


def _eval_panels_2d(src: _AlphaSource, bounds: np.ndarray):
    mid = 0.5 * (bounds[:, 0] + bounds[:, 1])
    half = 0.5 * (bounds[:, 1] - bounds[:, 0])
    theta = mid[:, None] + half[:, None] * XGK15[None, :]
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1).reshape(-1, 2)
    vals = src.alpha(dirs).reshape(-1, 15)
    kron = half * (vals @ WGK15)
    gauss = half * (vals[:, 1::2] @ WG7)
    return kron, np.abs(kron - gauss)


def _eval_panels_3d(src: _AlphaSource, bounds: np.ndarray):
    """bounds rows are (theta_a, theta_b, phi_a, phi_b); returns Kronrod
    integrals of alpha sin(theta), error estimates, and preferred split axes."""
    tmid = 0.5 * (bounds[:, 0] + bounds[:, 1])
    thalf = 0.5 * (bounds[:, 1] - bounds[:, 0])
    pmid = 0.5 * (bounds[:, 2] + bounds[:, 3])
    phalf = 0.5 * (bounds[:, 3] - bounds[:, 2])
    theta = tmid[:, None] + thalf[:, None] * XGK15[None, :]  # (P, 15)
    phi = pmid[:, None] + phalf[:, None] * XGK15[None, :]
    st = np.sin(theta)
    dirs = np.empty((bounds.shape[0], 15, 15, 3))
    dirs[..., 0] = st[:, :, None] * np.cos(phi)[:, None, :]
    dirs[..., 1] = st[:, :, None] * np.sin(phi)[:, None, :]
    dirs[..., 2] = np.cos(theta)[:, :, None]
    vals = src.alpha(dirs.reshape(-1, 3)).reshape(-1, 15, 15)
    vals = vals * st[:, :, None]
    kron = thalf * phalf * np.einsum("pij,i,j->p", vals, WGK15, WGK15)
    gauss = thalf * phalf * np.einsum("pij,i,j->p", vals[:, 1::2, 1::2], WG7, WG7)
    var_t = np.sum(np.abs(np.diff(vals, axis=1)), axis=(1, 2))
    var_p = np.sum(np.abs(np.diff(vals, axis=2)), axis=(1, 2))
    axes = np.where(var_t >= var_p, 0, 1)
    return kron, np.abs(kron - gauss), axes


def _adaptive_sphere(src: _AlphaSource, cfg: IntegralConfig, three_d: bool):
    """Shared refinement loop.  Panels live in a worst-first heap; the global
    running estimate decides the stopping threshold each round."""
    if three_d:
        tgrid = np.linspace(0.0, np.pi / 2.0, 9)
        pgrid = np.linspace(0.0, 2.0 * np.pi, 17)
        bounds = np.array(
            [
                (tgrid[i], tgrid[i + 1], pgrid[j], pgrid[j + 1])
                for i in range(8)
                for j in range(16)
            ]
        )
        kron, errs, axes = _eval_panels_3d(src, bounds)
        measures = (np.cos(bounds[:, 0]) - np.cos(bounds[:, 1])) * (
            bounds[:, 3] - bounds[:, 2]
        )
        total_measure = 2.0 * np.pi
    else:
        grid = np.linspace(0.0, np.pi, 33)
        bounds = np.stack([grid[:-1], grid[1:]], axis=1)
        kron, errs = _eval_panels_2d(src, bounds)
        axes = np.zeros(len(bounds), dtype=int)
        measures = bounds[:, 1] - bounds[:, 0]
        total_measure = np.pi

    heap = []
    counter = 0
    for i in range(len(bounds)):
        heapq.heappush(
            heap, (-errs[i], counter, tuple(bounds[i]), kron[i], measures[i], int(axes[i]))
        )
        counter += 1
    run_i = float(np.sum(kron))
    run_err = float(np.sum(errs))

    denom = 2.0 * total_measure
    while True:
        p_hat = min(max(run_i / denom, 0.0), 1.0)
        threshold = denom * max(cfg.abs_tol, cfg.rel_tol * min(p_hat, 1.0 - p_hat))
        if run_err <= threshold or not heap:
            break
        if len(heap) >= cfg.max_subdivisions:
            warnings.warn(
                AccuracyWarning(
                    f"angular subdivision budget ({cfg.max_subdivisions} panels) "
                    f"exhausted; achieved bound {run_err / denom:.3e}",
                    run_err / denom,
                )
            )
            break
        neg_err, _, b, k_old, m_old, axis = heapq.heappop(heap)
        if three_d:
            ta, tb, pa, pb = b
            if axis == 0:
                tm = 0.5 * (ta + tb)
                children = np.array([(ta, tm, pa, pb), (tm, tb, pa, pb)])
            else:
                pm = 0.5 * (pa + pb)
                children = np.array([(ta, tb, pa, pm), (ta, tb, pm, pb)])
            kron_c, errs_c, axes_c = _eval_panels_3d(src, children)
            measures_c = (np.cos(children[:, 0]) - np.cos(children[:, 1])) * (
                children[:, 3] - children[:, 2]
            )
        else:
            a, bb = b
            mid = 0.5 * (a + bb)
            children = np.array([(a, mid), (mid, bb)])
            kron_c, errs_c = _eval_panels_2d(src, children)
            axes_c = np.zeros(2, dtype=int)
            measures_c = children[:, 1] - children[:, 0]
        run_i += float(np.sum(kron_c)) - k_old
        run_err += float(np.sum(errs_c)) - (-neg_err)
        for i in range(2):
            heapq.heappush(
                heap,
                (
                    -errs_c[i],
                    counter,
                    tuple(children[i]),
                    kron_c[i],
                    measures_c[i],
                    int(axes_c[i]),
                ),
            )
            counter += 1

    acc = _Kahan()
    acc_c = _Kahan()
    err_total = 0.0
    for neg_err, _, _, k_val, m_val, _ in heap:
        acc.add(k_val)
        acc_c.add(2.0 * m_val - k_val)
        err_total += -neg_err
    p = acc.s / denom
    pc = acc_c.s / denom
    bound = err_total / denom + src.tail_bound
    return p, pc, bound


# ---------------------------------------------------------------------------
# boundary sampling


def _boundary_points(
    n: NormalDist, src: _AlphaSource, dirs: np.ndarray, span: float
) -> np.ndarray:
    smat = symmetric_sqrt(n.sigma).s
    traces = src.traces(dirs)
    pts = []
    for d, tr in zip(dirs, traces):
        if tr.roots.size == 0:
            continue
        keep = tr.roots[np.abs(tr.roots) <= span]
        if keep.size:
            pts.append(n.mu[None, :] + keep[:, None] * (smat @ d)[None, :])
    if not pts:
        return np.empty((0, n.dim))
    return np.concatenate(pts, axis=0)


def _boundary_dirs(k: int, count: int, grid: str, seed=None) -> np.ndarray:
    if k == 1:
        return np.array([[1.0], [-1.0]])
    if k == 2:
        if grid == "fibonacci":
            ang = np.mod((np.arange(count) + 0.5) * np.pi / GOLDEN_RATIO, np.pi)
        else:
            ang = np.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if k == 3:
        if grid == "uniform":
            n_theta = max(2, int(round(np.sqrt(count / 2.0))))
            n_phi = max(4, int(round(count / n_theta)))
            theta = np.pi * (np.arange(n_theta) + 0.5) / n_theta
            phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
            tt, pp = np.meshgrid(theta, phi, indexing="ij")
            st = np.sin(tt)
            return np.stack(
                [st * np.cos(pp), st * np.sin(pp), np.cos(tt)], axis=-1
            ).reshape(-1, 3)
        return fibonacci_sphere(count)
    return mc_directions(k, count, seed)


# ---------------------------------------------------------------------------
# entry point


def integrate_normal(
    n: NormalDist, domain, cfg: IntegralConfig | None = None, method: str = "auto"
) -> IntegralResult:
    """P(x in domain) for x ~ n, with a complement, an error bound, and a
    sample of boundary points.

    method "auto" picks pairs/adaptive rules for 1-3 dimensions and Monte
    Carlo above; "mc" forces Monte Carlo in any dimension (its bound is then
    three standard errors, not a hard bound).
    """
    if cfg is None:
        cfg = IntegralConfig()
    if method not in ("auto", "mc"):
        raise InvalidMethodError(f"unknown integration method {method!r}")
    if not isinstance(n, NormalDist):
        raise InvalidArgumentError("first argument must be a NormalDist")
    span = cfg.resolved_span()
    src = _AlphaSource(n, domain, span, cfg.probes)
    k = n.dim

    if method == "mc" or k >= 4:
        rng = np.random.default_rng(cfg.seed)
        dirs = mc_directions(k, cfg.ray_count, rng)
        al = src.alpha(dirs)
        p = float(np.sum(al)) / (2.0 * cfg.ray_count)
        pc = float(np.sum(2.0 - al)) / (2.0 * cfg.ray_count)
        se = float(np.std(al)) / (2.0 * np.sqrt(cfg.ray_count))
        if cfg.collect_boundary:
            boundary = _boundary_points(n, src, dirs[: cfg.boundary_dirs], span)
        else:
            boundary = np.empty((0, k))
        return IntegralResult(
            p=p,
            p_complement=pc,
            err_bound=3.0 * se + src.tail_bound,
            method="mc",
            n_evals=src.n_evals,
            boundary_points=boundary,
            std_error=se,
        )

    if k == 1:
        al = src.alpha(np.array([[1.0], [-1.0]]))
        p = float(al[0] + al[1]) / 4.0
        pc = float((2.0 - al[0]) + (2.0 - al[1])) / 4.0
        bound = 4.0 * np.finfo(float).eps + src.tail_bound
        method_name = "pair"
    else:
        p, pc, bound = _adaptive_sphere(src, cfg, three_d=(k == 3))
        method_name = "gk-circle" if k == 2 else "gk-sphere"

    if cfg.collect_boundary:
        boundary = _boundary_points(
            n, src, _boundary_dirs(k, cfg.boundary_dirs, cfg.boundary_grid, cfg.seed), span
        )
    else:
        boundary = np.empty((0, k))
    return IntegralResult(
        p=min(max(p, 0.0), 1.0),
        p_complement=min(max(pc, 0.0), 1.0),
        err_bound=bound,
        method=method_name,
        n_evals=src.n_evals,
        boundary_points=boundary,
    )
