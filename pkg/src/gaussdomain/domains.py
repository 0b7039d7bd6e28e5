"""Integration domains and their restrictions to lines.

A domain is a region {x : f(x) > 0}.  Quadratic regions restrict to lines
exactly (sign at -inf plus at most two crossings); arbitrary callables are
traced numerically by dense sign sampling and bisection.  Set operations
combine domains so that quadratic pieces keep their exact traces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._kernels import quad_trace_batch
from .core import QuadraticDomain
from .errors import DomainEvaluationError, InvalidArgumentError

TANGENT_TOL = 1e-9
ROOT_MERGE_TOL = 1e-9
DEFAULT_SPAN = 8.0
DEFAULT_PROBES = 1000
# keep implicit-probe batches under ~2e6 points
_CHUNK_POINTS = 2_000_000


@dataclass(frozen=True)
class RayTrace:
    """Restriction of a domain to a line x(t) = o + t d.

    psi is the sign of the defining function as t -> -inf (0 only for a
    function identically zero on the line); roots are the sorted crossing
    parameters.  Tangential touches are dropped: they have measure zero and
    do not flip the sign.
    """

    psi: int
    roots: np.ndarray

    def __post_init__(self):
        r = np.sort(np.asarray(self.roots, dtype=float).ravel())
        if self.psi not in (-1, 0, 1):
            raise InvalidArgumentError(f"psi must be -1, 0, or 1, got {self.psi}")
        object.__setattr__(self, "roots", r)
        r.setflags(write=False)


def sign_from_trace(trace: RayTrace, t: float, tol: float = ROOT_MERGE_TOL) -> int:
    """Domain sign at parameter t: +1 inside, -1 outside, 0 on the boundary."""
    if trace.psi == 0:
        return 0
    if trace.roots.size and float(np.min(np.abs(trace.roots - t))) <= tol:
        return 0
    below = int(np.count_nonzero(trace.roots < t))
    return trace.psi * (1 if below % 2 == 0 else -1)


def ray_trace_quadratic(q: QuadraticDomain, origin, direction) -> RayTrace:
    """Exact trace of a quadratic region along x(t) = origin + t direction."""
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    a = float(d @ q.q2 @ d)
    b = float(2.0 * (o @ q.q2 @ d) + q.q1 @ d)
    c = float(q(o))
    if a == 0.0:
        if b == 0.0:
            return RayTrace(int(np.sign(c)), np.empty(0))
        return RayTrace(-int(np.sign(b)), np.array([-c / b]))
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return RayTrace(int(np.sign(a)), np.empty(0))
    sq = np.sqrt(disc)
    qd = -0.5 * (b + (sq if b >= 0.0 else -sq))
    r1, r2 = qd / a, c / qd
    if abs(r1 - r2) < TANGENT_TOL:
        return RayTrace(int(np.sign(a)), np.empty(0))
    return RayTrace(int(np.sign(a)), np.array([r1, r2]))


class ImplicitDomain:
    """Region {x : f(x) > 0} for a vectorized callable f (N, dim) -> (N,)."""

    def __init__(self, f: Callable[[np.ndarray], np.ndarray], dim: int):
        if dim < 1:
            raise InvalidArgumentError(f"dim must be >= 1, got {dim}")
        self.f = f
        self.dim = int(dim)

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))


def _merge_root_clusters(roots: np.ndarray) -> np.ndarray:
    """Collapse runs of near-coincident crossings by parity."""
    if roots.size < 2:
        return roots
    kept = []
    i = 0
    while i < roots.size:
        j = i + 1
        while j < roots.size and roots[j] - roots[j - 1] < ROOT_MERGE_TOL:
            j += 1
        if (j - i) % 2 == 1:
            kept.append(0.5 * (roots[i] + roots[j - 1]))
        i = j
    return np.asarray(kept)


_DENSE_SCAN = 129


def _vertex_candidates(ts2: np.ndarray, g: np.ndarray, s: np.ndarray):
    """Cells whose same-sign endpoints may hide a crossing pair.

    The left and right neighbor-cell secants are extended to their
    intersection; when that vertex lands inside the cell on the far side of
    zero, the cell deserves a closer look.  For a min/max of affine margins
    the secants are the active lines themselves, so the vertex estimate is
    the true kink, and concavity/convexity makes the test conservative (no
    false negatives) for any concave bump or convex dip.

    Returns (row, cell, t_star) arrays; ts2 is (rows, n) or broadcastable.
    """
    n = g.shape[1]
    if n < 4:
        z = np.empty(0, dtype=int)
        return z, z, np.empty(0)
    g_j, g_j1 = g[:, 1:-2], g[:, 2:-1]
    s_j, s_j1 = s[:, 1:-2], s[:, 2:-1]
    t_j, t_j1 = ts2[:, 1:-2], ts2[:, 2:-1]
    m = (g[:, 1:] - g[:, :-1]) / (ts2[:, 1:] - ts2[:, :-1])
    m_l, m_r = m[:, : n - 3], m[:, 2 : n - 1]
    pinch = m_l - m_r
    mask = (s_j == s_j1) & (m_l * s_j < 0.0) & (m_r * s_j > 0.0) & (pinch != 0.0)
    if not np.any(mask):
        z = np.empty(0, dtype=int)
        return z, z, np.empty(0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_star = (g_j1 - g_j + m_l * t_j - m_r * t_j1) / pinch
        v_hat = g_j + m_l * (t_star - t_j)
    mask &= (t_star > t_j) & (t_star < t_j1) & (v_hat * s_j < 0.0)
    row, cell = np.nonzero(mask)
    return row, cell + 1, t_star[row, cell]


def ray_trace_implicit_batch(
    f, origin, dirs, span: float = DEFAULT_SPAN, probes: int = DEFAULT_PROBES
) -> list[RayTrace]:
    """Numerical traces of {f > 0} along lines origin + t dirs[i], |t| <= span.

    Signs are sampled on a uniform grid (exact zeros count as outside, so
    psi is never 0 here), each sign flip is bisected to ~1e-12, and crossing
    clusters tighter than 1e-9 merge by parity.  A crossing pair hiding
    between two same-sign probes is recovered by the neighbor-slope vertex
    test (exact when the margin is a min/max of affine pieces, as the
    intersection and union forms are); whatever survives a dense rescan of
    flagged cells below pitch/128^2, or crosses outside the span, stays
    invisible by construction.
    """
    o = np.asarray(origin, dtype=float)
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    n_dirs, dim = dirs.shape
    if probes < 8:
        raise InvalidArgumentError(f"probes must be >= 8, got {probes}")
    ts = np.linspace(-span, span, probes)

    def geval(pts: np.ndarray) -> np.ndarray:
        vals = np.asarray(f(pts), dtype=float)
        if not np.all(np.isfinite(vals)):
            where = pts[int(np.argwhere(~np.isfinite(vals))[0][0])]
            raise DomainEvaluationError(
                f"domain callable returned a non-finite value at {where.tolist()}"
            )
        return vals

    chunk = max(1, _CHUNK_POINTS // probes)
    out: list[RayTrace] = []
    for start in range(0, n_dirs, chunk):
        dv = dirs[start : start + chunk]
        pts = o[None, None, :] + ts[None, :, None] * dv[:, None, :]
        g = geval(pts.reshape(-1, dim)).reshape(dv.shape[0], probes)
        s = np.where(g > 0.0, 1.0, -1.0)
        ray_idx, seg_idx = np.nonzero(s[:, :-1] * s[:, 1:] < 0.0)
        win_ray = [ray_idx]
        win_lo = [ts[seg_idx]]
        win_hi = [ts[seg_idx + 1]]
        win_sl = [s[ray_idx, seg_idx]]

        ts2 = np.broadcast_to(ts[None, :], g.shape)
        row, cell, t_star = _vertex_candidates(ts2, g, s)
        if row.size:
            g_star = geval(o[None, :] + t_star[:, None] * dv[row])
            s_cell = s[row, cell]
            flipped = (g_star > 0.0) != (s_cell > 0.0)
            fr, fc, ft = row[flipped], cell[flipped], t_star[flipped]
            win_ray += [fr, fr]
            win_lo += [ts[fc], ft]
            win_hi += [ft, ts[fc + 1]]
            win_sl += [s[fr, fc], np.where(s[fr, fc] > 0.0, -1.0, 1.0)]

            # vertex sample stayed on the endpoint side: curvature case,
            # rescan the cell densely and give the fine grid one more
            # vertex pass before declaring the cell empty
            ur, uc = row[~flipped], cell[~flipped]
            if ur.size:
                u = np.linspace(0.0, 1.0, _DENSE_SCAN)
                t_f = ts[uc][:, None] + (ts[uc + 1] - ts[uc])[:, None] * u[None, :]
                pts_f = o[None, None, :] + t_f[:, :, None] * dv[ur][:, None, :]
                g_f = geval(pts_f.reshape(-1, dim)).reshape(ur.size, _DENSE_SCAN)
                s_f = np.where(g_f > 0.0, 1.0, -1.0)
                rr, cc = np.nonzero(s_f[:, :-1] * s_f[:, 1:] < 0.0)
                win_ray.append(ur[rr])
                win_lo.append(t_f[rr, cc])
                win_hi.append(t_f[rr, cc + 1])
                win_sl.append(s_f[rr, cc])
                row2, cell2, t_star2 = _vertex_candidates(t_f, g_f, s_f)
                if row2.size:
                    g2 = geval(o[None, :] + t_star2[:, None] * dv[ur[row2]])
                    s2 = s_f[row2, cell2]
                    flip2 = (g2 > 0.0) != (s2 > 0.0)
                    fr2, fc2, ft2 = row2[flip2], cell2[flip2], t_star2[flip2]
                    win_ray += [ur[fr2], ur[fr2]]
                    win_lo += [t_f[fr2, fc2], ft2]
                    win_hi += [ft2, t_f[fr2, fc2 + 1]]
                    win_sl += [s_f[fr2, fc2], np.where(s_f[fr2, fc2] > 0.0, -1.0, 1.0)]

        ray_all = np.concatenate(win_ray)
        lo = np.concatenate(win_lo)
        hi = np.concatenate(win_hi)
        s_lo = np.concatenate(win_sl)
        dseg = dv[ray_all]
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            gm = np.asarray(f(o[None, :] + mid[:, None] * dseg), dtype=float)
            same_side = (gm > 0.0) == (s_lo > 0.0)
            lo = np.where(same_side, mid, lo)
            hi = np.where(same_side, hi, mid)
        roots_flat = 0.5 * (lo + hi)
        order = np.argsort(ray_all, kind="stable")
        split_at = np.searchsorted(ray_all[order], np.arange(1, dv.shape[0]))
        per_ray = np.split(roots_flat[order], split_at)
        for i in range(dv.shape[0]):
            out.append(RayTrace(int(s[i, 0]), _merge_root_clusters(np.sort(per_ray[i]))))
    return out


def ray_trace_implicit(
    f, origin, direction, span: float = DEFAULT_SPAN, probes: int = DEFAULT_PROBES
) -> RayTrace:
    return ray_trace_implicit_batch(f, origin, np.asarray(direction)[None, :], span, probes)[0]


class TracedDomain:
    """Domain known only through its line traces.

    trace_one(origin, direction, span, probes) -> RayTrace is required;
    trace_batch is optional and lets composites vectorize their exact
    quadratic pieces across many directions.
    """

    def __init__(self, dim: int, trace_one, trace_many=None):
        self.dim = int(dim)
        self._trace_one = trace_one
        self._trace_many = trace_many

    def trace(
        self, origin, direction, span: float = DEFAULT_SPAN, probes: int = DEFAULT_PROBES
    ) -> RayTrace:
        return self._trace_one(origin, direction, span, probes)

    def trace_batch(
        self, origin, dirs, span: float = DEFAULT_SPAN, probes: int = DEFAULT_PROBES
    ) -> list[RayTrace]:
        if self._trace_many is not None:
            return self._trace_many(origin, dirs, span, probes)
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        return [self._trace_one(origin, d, span, probes) for d in dirs]


def _quadratic_trace_many(q: QuadraticDomain):
    def many(origin, dirs, span, probes):
        o = np.asarray(origin, dtype=float)
        q1_eff = 2.0 * (q.q2 @ o) + q.q1
        q0_eff = float(q(o))
        psi, pairs = quad_trace_batch(q.q2, q1_eff, q0_eff, dirs)
        return [
            RayTrace(int(psi[i]), pairs[i][np.isfinite(pairs[i])]) for i in range(len(psi))
        ]

    return many


def as_traced(dom) -> TracedDomain:
    """View any domain through the trace interface."""
    if isinstance(dom, TracedDomain):
        return dom
    if isinstance(dom, QuadraticDomain):
        return TracedDomain(
            dom.dim,
            lambda o, d, span, probes: ray_trace_quadratic(dom, o, d),
            _quadratic_trace_many(dom),
        )
    if isinstance(dom, ImplicitDomain):
        return TracedDomain(
            dom.dim,
            lambda o, d, span, probes: ray_trace_implicit(dom.f, o, d, span, probes),
            lambda o, dirs, span, probes: ray_trace_implicit_batch(dom.f, o, dirs, span, probes),
        )
    raise InvalidArgumentError(f"not a domain: {type(dom).__name__}")


def _flip(tr: RayTrace) -> RayTrace:
    return RayTrace(-tr.psi, tr.roots)


def intersect_traces(traces: list[RayTrace]) -> RayTrace:
    """Trace of the conjunction from the operand traces.

    An operand's crossing survives exactly where every other operand is
    strictly inside.  Operands identically on their boundary poison the
    whole line.  Coincident boundaries between different operands shed both
    crossings; callers that intersect duplicated regions must deduplicate
    first.
    """
    if len(traces) == 1:
        return traces[0]
    if any(tr.psi == 0 for tr in traces):
        return RayTrace(0, np.empty(0))
    psi = min(tr.psi for tr in traces)
    kept = []
    for j, tr in enumerate(traces):
        for t in tr.roots:
            if all(
                sign_from_trace(other, float(t)) > 0
                for l, other in enumerate(traces)
                if l != j
            ):
                kept.append(float(t))
    return RayTrace(psi, np.asarray(kept))


def _dim_of(dom) -> int:
    return dom.dim


def _check_dims(doms):
    dims = {_dim_of(d) for d in doms}
    if len(dims) != 1:
        raise InvalidArgumentError(f"domains have mixed dimensions: {sorted(dims)}")
    return dims.pop()


def domain_complement(dom):
    """The region where the defining function is negative; type-preserving."""
    if isinstance(dom, QuadraticDomain):
        return dom.negated()
    if isinstance(dom, ImplicitDomain):
        f = dom.f
        return ImplicitDomain(lambda x: -np.asarray(f(x), dtype=float), dom.dim)
    traced = as_traced(dom)
    return TracedDomain(
        traced.dim,
        lambda o, d, span, probes: _flip(traced.trace(o, d, span, probes)),
        lambda o, dirs, span, probes: [
            _flip(tr) for tr in traced.trace_batch(o, dirs, span, probes)
        ],
    )


def domain_intersect(*doms):
    """Conjunction.  All-implicit operands combine by pointwise min; anything
    else combines trace-wise so quadratic operands keep exact crossings."""
    if not doms:
        raise InvalidArgumentError("need at least one domain")
    if len(doms) == 1:
        return doms[0]
    dim = _check_dims(doms)
    if all(isinstance(d, ImplicitDomain) for d in doms):
        fns = [d.f for d in doms]
        return ImplicitDomain(
            lambda x: np.minimum.reduce([np.asarray(f(x), dtype=float) for f in fns]), dim
        )
    leaves = [as_traced(d) for d in doms]

    def one(o, d, span, probes):
        return intersect_traces([leaf.trace(o, d, span, probes) for leaf in leaves])

    def many(o, dirs, span, probes):
        per_leaf = [leaf.trace_batch(o, dirs, span, probes) for leaf in leaves]
        return [intersect_traces([tl[i] for tl in per_leaf]) for i in range(len(per_leaf[0]))]

    return TracedDomain(dim, one, many)


def domain_union(*doms):
    """Disjunction: pointwise max for all-implicit operands, De Morgan
    otherwise."""
    if not doms:
        raise InvalidArgumentError("need at least one domain")
    if len(doms) == 1:
        return doms[0]
    dim = _check_dims(doms)
    if all(isinstance(d, ImplicitDomain) for d in doms):
        fns = [d.f for d in doms]
        return ImplicitDomain(
            lambda x: np.maximum.reduce([np.asarray(f(x), dtype=float) for f in fns]), dim
        )
    return domain_complement(domain_intersect(*[domain_complement(d) for d in doms]))
