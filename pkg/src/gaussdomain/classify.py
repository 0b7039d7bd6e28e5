"""Classification among normal populations.

The optimal rule between two normals compares expected value gains, which
reduces to the sign of a quadratic in x.  Error rates are then exact
generalized-chi-square tail probabilities of that quadratic under each
class, or ray integrals for custom boundaries.  Multi-class regions are
intersections of the pairwise quadratics.  Discriminability summaries,
task constructions (two-interval and m-interval designs), sample fitting,
and direct boundary optimization round out the module.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special, stats

from .core import NormalDist, QuadraticDomain, symmetric_sqrt
from .domains import domain_intersect
from .errors import (
    InsufficientDataError,
    InvalidArgumentError,
    InvalidMethodError,
    InvalidValuesError,
    SingularCovarianceError,
)
from .gx2 import FlatCase, Gx2Params, gx2_cdf, gx2_inv, gx2_params_from_quad, gx2_pdf, gx2_sf
from .polar import IntegralConfig, integrate_normal

PRIOR_SUM_TOL = 1e-12
# coefficient scale below which a pairwise boundary counts as identically zero
DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class ClassSpec:
    """Normal populations with priors and an outcome value matrix.

    values[i][j] is the payoff for answering j when the truth is i; the
    default identity matrix scores correct answers 1 and errors 0.
    """

    normals: tuple
    priors: np.ndarray = None
    values: np.ndarray = None

    def __post_init__(self):
        normals = tuple(self.normals)
        if len(normals) < 2:
            raise InvalidArgumentError("need at least two classes")
        dims = {n.dim for n in normals}
        if len(dims) != 1:
            raise InvalidArgumentError(f"classes have mixed dimensions: {sorted(dims)}")
        m = len(normals)
        priors = self.priors
        if priors is None:
            priors = np.full(m, 1.0 / m)
        priors = np.asarray(priors, dtype=float)
        if priors.shape != (m,):
            raise InvalidArgumentError(f"priors must have length {m}, got {priors.shape}")
        if np.any(priors <= 0.0):
            raise InvalidArgumentError("priors must all be positive")
        if abs(float(np.sum(priors)) - 1.0) > PRIOR_SUM_TOL:
            raise InvalidArgumentError(f"priors sum to {np.sum(priors)!r}, not 1")
        values = self.values
        if values is None:
            values = np.eye(m)
        values = np.asarray(values, dtype=float)
        if values.shape != (m, m):
            raise InvalidArgumentError(f"values must be {m}x{m}, got {values.shape}")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "values", values)
        priors.setflags(write=False)
        values.setflags(write=False)

    @property
    def n_classes(self) -> int:
        return len(self.normals)

    @property
    def dim(self) -> int:
        return self.normals[0].dim

    def value_gain(self, i: int) -> float:
        """Net value of answering i when the truth is i versus not."""
        v = self.values
        return float(v[i, i] - (np.sum(v[i]) - v[i, i]))


@dataclass(frozen=True)
class LabeledSamples:
    """Per-class observation matrices (rows = samples, columns = features)."""

    groups: tuple

    def __post_init__(self):
        groups = tuple(np.atleast_2d(np.asarray(g, dtype=float)) for g in self.groups)
        if len(groups) < 2:
            raise InvalidArgumentError("need samples for at least two classes")
        dims = {g.shape[1] for g in groups}
        if len(dims) != 1:
            raise InvalidArgumentError(f"sample groups have mixed dimensions: {sorted(dims)}")
        k = dims.pop()
        for i, g in enumerate(groups):
            if not np.all(np.isfinite(g)):
                raise InvalidArgumentError(f"class {i} samples contain non-finite values")
            if g.shape[0] < k + 2:
                raise InsufficientDataError(
                    f"class {i} has {g.shape[0]} samples; need at least {k + 2} "
                    f"for a positive-definite covariance in {k} dimensions"
                )
        object.__setattr__(self, "groups", groups)

    @property
    def n_classes(self) -> int:
        return len(self.groups)

    @property
    def dim(self) -> int:
        return self.groups[0].shape[1]


@dataclass(frozen=True)
class DprimeIndices:
    """Separation indices for a pair of normals.

    bayes comes from the optimal error rate; rms and avg are the
    Mahalanobis-style approximations using the root-mean-square and the
    plain average of the two covariance square roots.  bayes_is_surrogate
    marks the 1d fallback where the optimal rate underflowed and the avg
    index stands in.
    """

    bayes: float
    rms: float
    avg: float
    bayes_is_surrogate: bool = False


@dataclass(frozen=True)
class ClassificationResult:
    boundary: object
    errors: np.ndarray
    outcome_value: float
    p_error: float
    row_residuals: np.ndarray
    dprime: DprimeIndices | None = None
    err_bounds: np.ndarray | None = None


# ---------------------------------------------------------------------------
# optimal boundary


def bayes_boundary(
    a: NormalDist, b: NormalDist, priors=(0.5, 0.5), values=None
) -> QuadraticDomain:
    """Quadratic whose positive region is where answering "a" maximizes
    expected value gain."""
    if a.dim != b.dim:
        raise InvalidArgumentError(f"class dimensions differ: {a.dim} vs {b.dim}")
    spec = ClassSpec((a, b), np.asarray(priors, dtype=float), values)
    va, vb = spec.value_gain(0), spec.value_gain(1)
    if va <= 0.0 or vb <= 0.0:
        raise InvalidValuesError(
            f"net value gains must be positive (got {va}, {vb}); "
            "the log prior-value ratio is undefined otherwise"
        )
    sa_inv = np.linalg.inv(a.sigma)
    sb_inv = np.linalg.inv(b.sigma)
    q2 = 0.5 * (sb_inv - sa_inv)
    q1 = sa_inv @ a.mu - sb_inv @ b.mu
    sign_a, logdet_a = np.linalg.slogdet(a.sigma)
    sign_b, logdet_b = np.linalg.slogdet(b.sigma)
    q0 = 0.5 * (
        float(b.mu @ sb_inv @ b.mu) - float(a.mu @ sa_inv @ a.mu) + (logdet_b - logdet_a)
    ) + float(np.log(spec.priors[0] * va) - np.log(spec.priors[1] * vb))
    return QuadraticDomain(q2, q1, q0)


def _boundary_is_null(q: QuadraticDomain) -> bool:
    return (
        float(np.max(np.abs(q.q2), initial=0.0)) == 0.0
        and float(np.max(np.abs(q.q1), initial=0.0)) == 0.0
        and q.q0 == 0.0
    )


# ---------------------------------------------------------------------------
# discriminability indices


def _log_error_rate(a: NormalDist, b: NormalDist) -> float:
    """log of the equal-prior optimal error rate, kept in the log domain so
    separations far beyond the smallest double still resolve."""
    boundary = bayes_boundary(a, b)
    if _boundary_is_null(boundary):
        return float(np.log(0.5))
    log_miss_a = gx2_cdf(0.0, gx2_params_from_quad(a, boundary), log=True)
    log_miss_b = gx2_sf(0.0, gx2_params_from_quad(b, boundary), log=True)
    return float(special.logsumexp([log_miss_a, log_miss_b]) - np.log(2.0))


def dprime_indices(a: NormalDist, b: NormalDist) -> DprimeIndices:
    delta = a.mu - b.mu
    s_rms = symmetric_sqrt(0.5 * (a.sigma + b.sigma))
    d_rms = float(np.linalg.norm(s_rms.inv @ delta))
    s_avg = 0.5 * (symmetric_sqrt(a.sigma).s + symmetric_sqrt(b.sigma).s)
    d_avg = float(np.linalg.norm(np.linalg.solve(s_avg, delta)))
    log_pe = _log_error_rate(a, b)
    if log_pe == -np.inf:
        if a.dim == 1:
            return DprimeIndices(bayes=d_avg, rms=d_rms, avg=d_avg, bayes_is_surrogate=True)
        return DprimeIndices(bayes=np.inf, rms=d_rms, avg=d_avg)
    d_bayes = float(-2.0 * special.ndtri_exp(log_pe))
    return DprimeIndices(bayes=d_bayes, rms=d_rms, avg=d_avg)


# ---------------------------------------------------------------------------
# two-class classification


def _two_class_errors_gx2(spec: ClassSpec, boundary: QuadraticDomain):
    errors = np.empty((2, 2))
    for i, n in enumerate(spec.normals):
        params = gx2_params_from_quad(n, boundary)
        errors[i, 0] = gx2_sf(0.0, params)
        errors[i, 1] = gx2_cdf(0.0, params)
    return errors, None


def _two_class_errors_ray(spec: ClassSpec, boundary, cfg: IntegralConfig):
    errors = np.empty((2, 2))
    bounds = np.empty(2)
    for i, n in enumerate(spec.normals):
        res = integrate_normal(n, boundary, cfg)
        errors[i, 0] = res.p
        errors[i, 1] = res.p_complement
        bounds[i] = res.err_bound
    return errors, bounds


def classify_two(
    spec: ClassSpec,
    boundary=None,
    method: str = "auto",
    cfg: IntegralConfig | None = None,
) -> ClassificationResult:
    """Error matrix, expected outcome value, and separation indices for a
    two-class problem.

    boundary defaults to the optimal quadratic; any custom domain whose
    positive region answers "a" may replace it.  method gx2 requires a
    quadratic boundary; ray integrates any domain; auto picks gx2 exactly
    when the boundary is quadratic.
    """
    if spec.n_classes != 2:
        raise InvalidArgumentError(f"classify_two needs 2 classes, got {spec.n_classes}")
    if method not in ("auto", "gx2", "ray"):
        raise InvalidMethodError(f"unknown method {method!r}")
    a, b = spec.normals
    if boundary is None:
        boundary = bayes_boundary(a, b, spec.priors, spec.values)
    quadratic = isinstance(boundary, QuadraticDomain)
    if method == "gx2" and not quadratic:
        raise InvalidMethodError("method 'gx2' requires a quadratic boundary")
    if quadratic and _boundary_is_null(boundary):
        errors = np.full((2, 2), 0.5)
        err_bounds = None
    elif quadratic and method in ("auto", "gx2"):
        errors, err_bounds = _two_class_errors_gx2(spec, boundary)
    else:
        if cfg is None:
            cfg = IntegralConfig(collect_boundary=False)
        errors, err_bounds = _two_class_errors_ray(spec, boundary, cfg)
    p_error = float(spec.priors[0] * errors[0, 1] + spec.priors[1] * errors[1, 0])
    outcome = float(spec.priors @ np.sum(spec.values * errors, axis=1))
    residuals = np.sum(errors, axis=1) - 1.0
    return ClassificationResult(
        boundary=boundary,
        errors=errors,
        outcome_value=outcome,
        p_error=p_error,
        row_residuals=residuals,
        dprime=dprime_indices(a, b),
        err_bounds=err_bounds,
    )


# ---------------------------------------------------------------------------
# multi-class classification


def classify_multi(spec: ClassSpec, cfg: IntegralConfig | None = None) -> ClassificationResult:
    """Error matrix for three or more classes.

    The answer-j region is the intersection of j's pairwise optimal
    quadratics against every other class.  Identical classes (pairwise
    boundary identically zero) tie; their shared region's probability is
    split evenly rather than double-counted.  Row sums are reported via
    row_residuals, never silently renormalized.
    """
    m = spec.n_classes
    if m < 3:
        raise InvalidArgumentError(f"classify_multi needs >= 3 classes, got {m}")
    if cfg is None:
        cfg = IntegralConfig(collect_boundary=False)

    pairwise = {}
    for j in range(m):
        for l in range(m):
            if l != j:
                # only the prior ratio enters the boundary; renormalize the
                # pair so the two-class validator accepts it
                pj, pl = spec.priors[j], spec.priors[l]
                pairwise[(j, l)] = bayes_boundary(
                    spec.normals[j],
                    spec.normals[l],
                    (pj / (pj + pl), pl / (pj + pl)),
                    spec.values[np.ix_([j, l], [j, l])],
                )

    regions = []
    tie_counts = np.zeros(m, dtype=int)
    for j in range(m):
        constraints = []
        seen = set()
        for l in range(m):
            if l == j:
                continue
            q = pairwise[(j, l)]
            scale = max(
                float(np.max(np.abs(q.q2), initial=0.0)),
                float(np.max(np.abs(q.q1), initial=0.0)),
                abs(q.q0),
            )
            if scale <= DEGENERATE_RTOL:
                tie_counts[j] += 1
                continue
            key = (q.q2.tobytes(), q.q1.tobytes(), q.q0)
            if key in seen:
                continue
            seen.add(key)
            constraints.append(q)
        if not constraints:
            regions.append(None)  # everything ties: whole space
        else:
            regions.append(domain_intersect(*constraints))

    errors = np.empty((m, m))
    bounds = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if regions[j] is None:
                p = 1.0
            else:
                res = integrate_normal(spec.normals[i], regions[j], cfg)
                p = res.p
                bounds[i, j] = res.err_bound
            errors[i, j] = p / (1.0 + tie_counts[j])
    residuals = np.sum(errors, axis=1) - 1.0
    p_error = 1.0 - float(spec.priors @ np.diag(errors))
    outcome = float(spec.priors @ np.sum(spec.values * errors, axis=1))
    return ClassificationResult(
        boundary=regions,
        errors=errors,
        outcome_value=outcome,
        p_error=p_error,
        row_residuals=residuals,
        dprime=None,
        err_bounds=bounds,
    )


# ---------------------------------------------------------------------------
# task constructions


def two_interval_spec(a: NormalDist, b: NormalDist) -> ClassSpec:
    """The pair-presentation task as a 2k-dimensional classification.

    Observing (x1, x2) with the target first or second makes the two
    hypotheses the concatenated normals (a, b) and (b, a) with block
    covariances; the optimal rule compares them directly.
    """
    if a.dim != b.dim:
        raise InvalidArgumentError(f"class dimensions differ: {a.dim} vs {b.dim}")
    k = a.dim
    mu_ab = np.concatenate([a.mu, b.mu])
    mu_ba = np.concatenate([b.mu, a.mu])
    sig_ab = np.zeros((2 * k, 2 * k))
    sig_ab[:k, :k] = a.sigma
    sig_ab[k:, k:] = b.sigma
    sig_ba = np.zeros((2 * k, 2 * k))
    sig_ba[:k, :k] = b.sigma
    sig_ba[k:, k:] = a.sigma
    return ClassSpec((NormalDist(mu_ab, sig_ab), NormalDist(mu_ba, sig_ba)))


def m_interval_accuracy(a: NormalDist, b: NormalDist, m: int, tol: float = 1e-6) -> float:
    """Probability of picking the target among m alternatives (one draw from
    a, m-1 from b) by largest likelihood ratio; univariate classes only."""
    if m < 2:
        raise InvalidArgumentError(f"interval count must be >= 2, got {m}")
    if a.dim != 1 or b.dim != 1:
        raise InvalidArgumentError("m_interval_accuracy expects univariate classes")
    boundary = bayes_boundary(a, b)
    if _boundary_is_null(boundary):
        return 1.0 / m
    params_a = gx2_params_from_quad(a, boundary)
    params_b = gx2_params_from_quad(b, boundary)
    if isinstance(params_a, Gx2Params) and params_a.is_degenerate:
        return 1.0 / m

    lo = gx2_inv(1e-12, params_a)
    hi = gx2_inv(1.0 - 1e-12, params_a)

    def integrand(l):
        return gx2_cdf(l, params_b) ** (m - 1) * gx2_pdf(l, params_a)

    # the single-term densities blow up (or their cdfs kink) at the support
    # edge; quad needs those interior points declared or it stalls early
    edges = []
    for prm in (params_a, params_b):
        if isinstance(prm, Gx2Params) and prm.w.size and np.any(prm.k == 1):
            if lo < prm.m < hi:
                edges.append(prm.m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(
            integrand, lo, hi, epsabs=tol, epsrel=1e-8, limit=400,
            points=sorted(edges) or None,
        )
    return float(min(max(val, 0.0), 1.0))


# ---------------------------------------------------------------------------
# fitting and boundary optimization


def fit_normals(samples: LabeledSamples) -> ClassSpec:
    """Maximum-likelihood normals (1/n covariance) with frequency priors."""
    normals = []
    counts = []
    for i, g in enumerate(samples.groups):
        mu = np.mean(g, axis=0)
        centered = g - mu
        sigma = (centered.T @ centered) / g.shape[0]
        try:
            normals.append(NormalDist(mu, sigma))
        except SingularCovarianceError as exc:
            raise SingularCovarianceError(
                f"class {i} sample covariance is singular: {exc}"
            ) from exc
        counts.append(g.shape[0])
    priors = np.asarray(counts, dtype=float)
    priors /= priors.sum()
    return ClassSpec(tuple(normals), priors)


def _pack_quadratic(q: QuadraticDomain) -> np.ndarray:
    iu = np.triu_indices(q.dim)
    return np.concatenate([q.q2[iu], q.q1, [q.q0]])


def _unpack_quadratic(theta: np.ndarray, k: int) -> QuadraticDomain:
    iu = np.triu_indices(k)
    n2 = iu[0].size
    q2 = np.zeros((k, k))
    q2[iu] = theta[:n2]
    # mirror before construction; the constructor's 0.5*(A+A') would halve
    # off-diagonal terms stored only in the upper triangle
    q2 = q2 + q2.T - np.diag(np.diag(q2))
    return QuadraticDomain(q2, theta[n2 : n2 + k], float(theta[-1]))


def sample_outcome_value(samples: LabeledSamples, boundary, values=None) -> float:
    """Average payoff of the rule "answer a where the boundary is positive"
    over all labeled samples."""
    if samples.n_classes != 2:
        raise InvalidArgumentError("sample_outcome_value needs 2 classes")
    if values is None:
        values = np.eye(2)
    values = np.asarray(values, dtype=float)
    total = 0.0
    n_all = sum(g.shape[0] for g in samples.groups)
    for i, g in enumerate(samples.groups):
        picks_a = np.asarray(boundary(g)) > 0.0
        total += float(np.sum(np.where(picks_a, values[i, 0], values[i, 1])))
    return total / n_all


@dataclass(frozen=True)
class OptimizedBoundary(QuadraticDomain):
    converged: bool = True
    achieved_value: float = float("nan")


def optimize_boundary(
    samples: LabeledSamples,
    init: QuadraticDomain | None = None,
    values=None,
    restarts: int = 3,
    seed: int | None = 0,
) -> OptimizedBoundary:
    """Direct-search tuning of a quadratic rule to maximize the sample
    outcome value; starts at the fitted optimal boundary unless given.

    The returned coefficients are scaled to unit norm (the rule only uses
    the sign) with the sign fixed so the class-a sample mean sits on the
    positive side when possible; the achieved value never falls below the
    initial boundary's.
    """
    if samples.n_classes != 2:
        raise InvalidArgumentError("optimize_boundary needs 2 classes")
    k = samples.dim
    if values is None:
        values = np.eye(2)
    if init is None:
        spec = fit_normals(samples)
        init = bayes_boundary(spec.normals[0], spec.normals[1], spec.priors, values)
    elif init.dim != k:
        raise InvalidArgumentError(f"init has dimension {init.dim}, samples have {k}")

    theta0 = _pack_quadratic(init)
    scale = float(np.linalg.norm(theta0))
    if scale > 0:
        theta0 = theta0 / scale
    n_par = theta0.size

    def negative_value(theta):
        return -sample_outcome_value(samples, _unpack_quadratic(theta, k), values)

    rng = np.random.default_rng(seed)
    best_theta = theta0
    best_val = -negative_value(theta0)
    converged = True
    for trial in range(restarts):
        start = theta0 if trial == 0 else theta0 + 0.25 * rng.standard_normal(n_par)
        res = optimize.minimize(
            negative_value,
            start,
            method="Nelder-Mead",
            options={"maxiter": 200 * n_par, "xatol": 1e-8, "fatol": 1e-12},
        )
        if not res.success:
            converged = False
        if -res.fun > best_val:
            best_val = -res.fun
            best_theta = res.x

    norm = float(np.linalg.norm(best_theta))
    if norm > 0:
        best_theta = best_theta / norm
    mu_a = np.mean(samples.groups[0], axis=0)
    candidates = [best_theta, -best_theta, theta0]
    scored = []
    for th in candidates:
        dom = _unpack_quadratic(th, k)
        scored.append((sample_outcome_value(samples, dom, values), float(dom(mu_a)), th))
    scored.sort(key=lambda t: (t[0], t[1]), reverse=True)
    final = _unpack_quadratic(scored[0][2], k)
    return OptimizedBoundary(
        final.q2, final.q1, final.q0, converged=converged, achieved_value=scored[0][0]
    )


# ---------------------------------------------------------------------------
# dimension reduction


@dataclass(frozen=True)
class ProjectedDecision:
    """1d view of a classification problem along a decision variable.

    kind "quadratic": class_dists hold the decision variable's distribution
    per class (criterion at 0 preserves all errors).  kind "axis": exact 1d
    normal projections onto the given direction.
    """

    kind: str
    class_dists: tuple
    sample_values: tuple | None = None


def project_decision(source, projector) -> ProjectedDecision:
    """Map a spec or labeled samples to 1d along a quadratic decision
    variable or a straight axis."""
    samples = None
    if isinstance(source, LabeledSamples):
        samples = source
        spec = fit_normals(source)
    elif isinstance(source, ClassSpec):
        spec = source
    else:
        raise InvalidArgumentError("source must be a ClassSpec or LabeledSamples")

    if isinstance(projector, QuadraticDomain):
        if projector.dim != spec.dim:
            raise InvalidArgumentError(
                f"projector dimension {projector.dim} != class dimension {spec.dim}"
            )
        dists = tuple(gx2_params_from_quad(n, projector) for n in spec.normals)
        values = None
        if samples is not None:
            values = tuple(np.asarray(projector(g), dtype=float) for g in samples.groups)
        return ProjectedDecision(kind="quadratic", class_dists=dists, sample_values=values)

    v = np.asarray(projector, dtype=float).ravel()
    if v.shape != (spec.dim,):
        raise InvalidArgumentError(f"axis must have length {spec.dim}, got {v.shape}")
    if float(np.linalg.norm(v)) == 0.0:
        raise InvalidArgumentError("axis vector must be nonzero")
    dists = tuple(
        NormalDist.univariate(float(v @ n.mu), float(np.sqrt(v @ n.sigma @ v)))
        for n in spec.normals
    )
    values = None
    if samples is not None:
        values = tuple(g @ v for g in samples.groups)
    return ProjectedDecision(kind="axis", class_dists=dists, sample_values=values)
