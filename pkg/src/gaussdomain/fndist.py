"""Distributions of scalar and vector functions of a normal vector.

A function f of a normal x has cdf P(f(x) <= c) equal to the normal
probability of the region c - f(x) > 0, so every distribution question
about f reduces to domain integration: exact generalized chi-square for
quadratic f, ray tracing otherwise.  Densities come from differencing the
cdf, quantiles from root finding on it, and joint distributions from
min-form intersections of the per-function regions.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .core import NormalDist, QuadraticDomain
from .domains import ImplicitDomain
from .errors import InvalidArgumentError, UnboundedFunctionError
from .gx2 import gx2_cdf, gx2_inv, gx2_params_from_quad
from .polar import IntegralConfig, integrate_normal

INV_PROB_TOL = 1e-8
BRACKET_DOUBLINGS = 60
QUANTILE_EPS = 1e-10
STATS_GRID_QUAD = 2049
STATS_GRID_1D = 1025
STATS_GRID_ND = 257
DIFF_STEP_FRAC = 1e-2
DIFF_ABS_TOL = 1e-11
DIFF_REL_TOL = 1e-8


def _default_config() -> IntegralConfig:
    # boundary samples are never consumed here, and cdf scans amortize the
    # trace cost over hundreds of calls: half the default probe density
    # still resolves sub-sd domain features
    return IntegralConfig(collect_boundary=False, probes=512)


def _vectorize_over_rows(f, dim: int, anchor: np.ndarray):
    """Adapt a scalar-on-vector callable to (N, dim) -> (N,) if it is not
    batch-capable already; probed once, decided once.

    The probe row count must differ from dim, or a scalar-on-vector f that
    happens to produce a dim-length result would pass the shape test.
    """
    n_probe = dim + 3

    def rowwise(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.fromiter((float(f(row)) for row in pts), dtype=float, count=pts.shape[0])

    probe = np.tile(anchor, (n_probe, 1)) + 1e-3 * np.arange(n_probe)[:, None]
    try:
        out = np.asarray(f(probe), dtype=float)
        if out.shape == (n_probe,):
            return f
    except Exception:
        pass
    return rowwise


@dataclass(frozen=True)
class FnOfNormal:
    """A scalar function of a normal vector, ready for distribution queries.

    f is either a QuadraticDomain (exact path) or a callable taking a
    k-vector (batches of shape (N, k) are used when the callable supports
    them).
    """

    n: NormalDist
    f: object
    config: IntegralConfig = field(default_factory=_default_config)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if isinstance(self.f, QuadraticDomain):
            if self.f.dim != self.n.dim:
                raise InvalidArgumentError(
                    f"quadratic has dimension {self.f.dim}, normal has {self.n.dim}"
                )
        elif not callable(self.f):
            raise InvalidArgumentError("f must be callable or a QuadraticDomain")

    @property
    def is_quadratic(self) -> bool:
        return isinstance(self.f, QuadraticDomain)

    def _params(self):
        if "params" not in self._cache:
            self._cache["params"] = gx2_params_from_quad(self.n, self.f)
        return self._cache["params"]

    def _batch_f(self):
        if "batch_f" not in self._cache:
            self._cache["batch_f"] = _vectorize_over_rows(self.f, self.n.dim, self.n.mu)
        return self._cache["batch_f"]

    def _center(self) -> float:
        if "center" not in self._cache:
            if self.is_quadratic:
                val = float(self.f(self.n.mu))
            else:
                val = float(np.asarray(self._batch_f()(self.n.mu[None, :])).ravel()[0])
            self._cache["center"] = val
        return self._cache["center"]


def _diff_config(cfg: IntegralConfig) -> IntegralConfig:
    # cdf differences divide quadrature noise by the step volume, so the
    # evals feeding a difference quotient run far below the default bound
    return dataclasses.replace(
        cfg,
        abs_tol=min(cfg.abs_tol, DIFF_ABS_TOL),
        rel_tol=min(cfg.rel_tol, DIFF_REL_TOL),
    )


def fn_cdf(fn: FnOfNormal, c: float, config: IntegralConfig | None = None) -> float:
    """P(f(x) <= c), the normal mass of the region c - f(x) > 0."""
    c = float(c)
    if not np.isfinite(c):
        raise InvalidArgumentError("threshold must be finite")
    if fn.is_quadratic:
        return gx2_cdf(c, fn._params())
    fb = fn._batch_f()
    dom = ImplicitDomain(lambda pts: c - fb(pts), fn.n.dim)
    return integrate_normal(fn.n, dom, config if config is not None else fn.config).p


def fn_sf(fn: FnOfNormal, c: float) -> float:
    """P(f(x) > c); complement route so deep upper tails keep precision."""
    c = float(c)
    if not np.isfinite(c):
        raise InvalidArgumentError("threshold must be finite")
    if fn.is_quadratic:
        from .gx2 import gx2_sf

        return gx2_sf(c, fn._params())
    fb = fn._batch_f()
    dom = ImplicitDomain(lambda pts: fb(pts) - c, fn.n.dim)
    return integrate_normal(fn.n, dom, fn.config).p


def fn_inv(fn: FnOfNormal, p: float, xtol: float = 1e-14) -> float:
    """Quantile of f(x): root of fn_cdf(c) = p to 1e-8 in probability.

    The probability tolerance caps at half the tail mass, so extreme p
    cannot be satisfied by any point where the cdf merely saturates; xtol
    is the relative width at which the bracket is declared collapsed
    (loosen it when the quantile only serves as an integration limit).
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise InvalidArgumentError(f"probability must lie strictly in (0, 1), got {p}")
    if fn.is_quadratic:
        return gx2_inv(p, fn._params())
    tol = max(min(INV_PROB_TOL, 0.5 * p, 0.5 * (1.0 - p)), 1e-15)

    center = fn._center()
    step = max(1.0, 0.5 * abs(center))
    lo = hi = center
    flo = fhi = fn_cdf(fn, center)
    n_try = 0
    while flo > p and n_try < BRACKET_DOUBLINGS:
        lo -= step
        flo = fn_cdf(fn, lo)
        step *= 2.0
        n_try += 1
    if flo > p:
        raise UnboundedFunctionError(
            f"no lower bracket for p={p} within {BRACKET_DOUBLINGS} doublings below f(mu)"
        )
    step = max(1.0, 0.5 * abs(center))
    n_try = 0
    while fhi < p and n_try < BRACKET_DOUBLINGS:
        hi += step
        fhi = fn_cdf(fn, hi)
        step *= 2.0
        n_try += 1
    if fhi < p:
        raise UnboundedFunctionError(
            f"no upper bracket for p={p} within {BRACKET_DOUBLINGS} doublings above f(mu)"
        )

    # bisection with a secant proposal each round; accept the secant point
    # only while it stays inside the bracket
    for _ in range(200):
        if abs(flo - p) <= tol:
            return lo
        if abs(fhi - p) <= tol:
            return hi
        mid = 0.5 * (lo + hi)
        if fhi > flo:
            sec = lo + (p - flo) * (hi - lo) / (fhi - flo)
            if lo + 0.05 * (hi - lo) < sec < hi - 0.05 * (hi - lo):
                mid = sec
        fmid = fn_cdf(fn, mid)
        if abs(fmid - p) <= tol:
            return mid
        if fmid < p:
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
        if hi - lo <= xtol * max(1.0, abs(lo), abs(hi)):
            return 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def _iqr(fn: FnOfNormal) -> float:
    if "iqr" not in fn._cache:
        fn._cache["iqr"] = fn_inv(fn, 0.75) - fn_inv(fn, 0.25)
    return fn._cache["iqr"]


def _iqr_step(fn: FnOfNormal) -> float:
    return max(DIFF_STEP_FRAC * _iqr(fn), 1e-6)


def fn_pdf(fn: FnOfNormal, x: float) -> float:
    """Density of f(x) by a scale-aware central difference of the cdf."""
    if fn.is_quadratic:
        from .gx2 import gx2_pdf

        return gx2_pdf(float(x), fn._params())
    h = _iqr_step(fn)
    tight = _diff_config(fn.config)
    lo = fn_cdf(fn, float(x) - h, config=tight)
    hi = fn_cdf(fn, float(x) + h, config=tight)
    return max((hi - lo) / (2.0 * h), 0.0)


@dataclass(frozen=True)
class FnStats:
    mean: float
    median: float
    sd: float

    def __iter__(self):
        return iter((self.mean, self.median, self.sd))


def _tail_grid(anchor: float, far: float, scale: float, n: int) -> np.ndarray:
    """n points from anchor toward far, log-uniform in (x - anchor)/scale.

    Constant points-per-decade coverage: a tail reaching three orders of
    magnitude past the anchor still gets dozens of nodes per decade, while
    a light tail degenerates to near-linear spacing at scale resolution.
    """
    sign = 1.0 if far >= anchor else -1.0
    span = abs(far - anchor)
    v = np.linspace(0.0, np.log1p(span / scale), n)
    return anchor + sign * scale * np.expm1(v)


def fn_stats(fn: FnOfNormal) -> FnStats:
    """Mean, median, and sd of f(x).

    Moments are split at the median into one-sided integrals of the cdf
    and sf, mean = m + int sf - int cdf and E (X-m)^2 = 2 int (x-m) sf +
    2 int (m-x) cdf, so every integrand decays away from the median and
    nothing large cancels.  Differencing the cdf into a density first
    would bias every edge-singular case (k=1 chi-square edges) far beyond
    the quadrature error, and the textbook [xF] - int F form loses the
    variance outright when the quantile span runs to many scales.
    """
    lo = fn_inv(fn, QUANTILE_EPS, xtol=1e-3)
    hi = fn_inv(fn, 1.0 - QUANTILE_EPS, xtol=1e-3)
    median = fn_inv(fn, 0.5)
    if hi <= lo:
        return FnStats(mean=median, median=median, sd=0.0)
    if fn.is_quadratic:
        n_side = (STATS_GRID_QUAD + 1) // 2
    elif fn.n.dim == 1:
        n_side = (STATS_GRID_1D + 1) // 2
    elif fn.n.dim == 2:
        n_side = (STATS_GRID_ND + 1) // 2
    else:
        # each cdf/sf value is a full spherical integral here; favor a
        # coarser grid over a runtime in minutes
        n_side = (STATS_GRID_ND + 1) // 4 + 1
    scale = max(_iqr(fn), 1e-9 * (hi - lo), 1e-12)

    xs_up = _tail_grid(median, hi, scale, n_side)
    xs_dn = _tail_grid(median, lo, scale, n_side)
    sf_up = np.array([fn_sf(fn, float(x)) for x in xs_up])
    cdf_dn = np.array([fn_cdf(fn, float(x)) for x in xs_dn])
    i1_up = simpson(sf_up, x=xs_up)
    i1_dn = -simpson(cdf_dn, x=xs_dn)
    i2_up = simpson((xs_up - median) * sf_up, x=xs_up)
    i2_dn = -simpson((median - xs_dn) * cdf_dn, x=xs_dn)
    mean = median + i1_up - i1_dn
    var = 2.0 * (i2_up + i2_dn) - (i1_up - i1_dn) ** 2
    return FnStats(mean=float(mean), median=float(median), sd=float(np.sqrt(max(var, 0.0))))


# ---------------------------------------------------------------------------
# joint distributions


def _common_normal(fns) -> NormalDist:
    if len(fns) < 2:
        raise InvalidArgumentError("joint distributions need at least two functions")
    base = fns[0].n
    for fn in fns[1:]:
        same = fn.n is base or (
            np.array_equal(fn.n.mu, base.mu) and np.array_equal(fn.n.sigma, base.sigma)
        )
        if not same:
            raise InvalidArgumentError("all functions must share one normal")
    return base


def joint_cdf(fns, cs, config: IntegralConfig | None = None) -> float:
    """P(f_1 <= c_1, ..., f_d <= c_d) via the min-form intersection."""
    cs = np.asarray(cs, dtype=float).ravel()
    if cs.size != len(fns):
        raise InvalidArgumentError(f"{len(fns)} functions but {cs.size} thresholds")
    if not np.all(np.isfinite(cs)):
        raise InvalidArgumentError("thresholds must be finite")
    n = _common_normal(fns)
    batch = [fn._batch_f() if not fn.is_quadratic else fn.f for fn in fns]

    def margin(pts):
        vals = np.stack([c - np.asarray(fb(pts), dtype=float) for fb, c in zip(batch, cs)])
        return np.min(vals, axis=0)

    dom = ImplicitDomain(margin, n.dim)
    return integrate_normal(n, dom, config if config is not None else fns[0].config).p


def joint_pdf(fns, cs) -> float:
    """Joint density by mixed central differences of the joint cdf.

    The 2^d corner sum shrinks the signal by prod(2 h_i), so each corner
    cdf runs under the tightened differencing tolerances; at the default
    rel_tol the quadrature noise would drown the difference entirely.
    """
    cs = np.asarray(cs, dtype=float).ravel()
    if cs.size != len(fns):
        raise InvalidArgumentError(f"{len(fns)} functions but {cs.size} thresholds")
    hs = np.array([_iqr_step(fn) for fn in fns])
    d = len(fns)
    tight = _diff_config(fns[0].config)
    total = 0.0
    for bits in range(1 << d):
        signs = np.array([1.0 if (bits >> j) & 1 else -1.0 for j in range(d)])
        total += float(np.prod(signs)) * joint_cdf(fns, cs + signs * hs, config=tight)
    return max(total / float(np.prod(2.0 * hs)), 0.0)


# ---------------------------------------------------------------------------
# monotone transforms


@dataclass(frozen=True)
class TransformedNormal:
    """y = g(x) elementwise for a normal x, with g strictly monotone.

    Functions of y become functions of x by composition; of(None) is the
    identity on y (scalar only), giving the transformed variable's own
    distribution (e.g. the lognormal for g = exp).
    """

    n: NormalDist
    forward: object
    inverse: object
    config: IntegralConfig = field(default_factory=_default_config)

    def __post_init__(self):
        sd = np.sqrt(np.diag(self.n.sigma))
        ts = np.linspace(-6.0, 6.0, 241)
        for i in range(self.n.dim):
            grid = self.n.mu[i] + sd[i] * ts
            vals = np.asarray(self.forward(grid), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise InvalidArgumentError(
                    "transform must be finite over the tested 6-sd range"
                )
            d = np.diff(vals)
            if not (np.all(d > 0.0) or np.all(d < 0.0)):
                raise InvalidArgumentError(
                    "transform must be strictly monotone over the tested 6-sd range"
                )
            back = np.asarray(self.inverse(vals), dtype=float)
            if not np.allclose(back, grid, rtol=1e-8, atol=1e-10):
                raise InvalidArgumentError("inverse does not invert the transform")

    def of(self, h=None) -> FnOfNormal:
        """FnOfNormal for h(y) (or y itself when h is None)."""
        g = self.forward
        if h is None:
            if self.n.dim != 1:
                raise InvalidArgumentError(
                    "identity wrapping needs a univariate normal; pass a scalar h"
                )
            h = lambda y: y
        elif not callable(h):
            raise InvalidArgumentError("h must be callable")
        if self.n.dim == 1:
            # y is a plain array of values; elementwise h stays vectorized
            def fy(pts):
                y = np.asarray(g(np.asarray(pts, dtype=float)[..., 0]), dtype=float)
                return np.asarray(h(y), dtype=float)

        else:

            def fy(pts):
                return h(np.asarray(g(np.asarray(pts, dtype=float)), dtype=float))

        return FnOfNormal(self.n, fy, self.config)


def transform_dist(forward, inverse, n: NormalDist, config=None) -> TransformedNormal:
    """Wrap y = g(x) for strictly monotone g with a supplied inverse."""
    if not callable(forward) or not callable(inverse):
        raise InvalidArgumentError("forward and inverse must be callable")
    if config is None:
        config = _default_config()
    return TransformedNormal(n, forward, inverse, config)
