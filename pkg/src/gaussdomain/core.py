"""Multivariate normals, quadratic forms, and whitening.

The central transform: given x ~ N(mu, sigma) and a quadratic
q(x) = x'Q2 x + q1'x + q0, rewrite q in terms of the standard normal
z = S^-1 (x - mu), where S is the symmetric square root of sigma.  Every
downstream computation (distribution parameters, ray integration) starts
from the standardized coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, SingularCovarianceError

# Relative asymmetry above which a covariance is rejected instead of symmetrized.
SYMMETRY_RTOL = 1e-12
# Eigenvalues below this fraction of the largest are treated as singular.
PD_RTOL = 1e-12


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return a


def _as_vector(a, name: str) -> np.ndarray:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return a


def _validated_covariance(sigma: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(sigma))))
    asym = float(np.max(np.abs(sigma - sigma.T)))
    if asym > SYMMETRY_RTOL * scale:
        raise InvalidArgumentError(
            f"covariance asymmetry {asym:.3e} exceeds tolerance {SYMMETRY_RTOL * scale:.3e}"
        )
    return 0.5 * (sigma + sigma.T)


@dataclass(frozen=True)
class NormalDist:
    """A k-dimensional normal distribution N(mu, sigma)."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = _as_vector(self.mu, "mu")
        sigma = _validated_covariance(_as_matrix(self.sigma, "sigma"))
        if sigma.shape[0] != mu.shape[0]:
            raise InvalidArgumentError(
                f"mu has dimension {mu.shape[0]} but sigma is {sigma.shape[0]}x{sigma.shape[1]}"
            )
        eigvals = np.linalg.eigvalsh(sigma)
        floor = PD_RTOL * max(eigvals[-1], 0.0)
        if eigvals[0] <= floor:
            raise SingularCovarianceError(
                f"covariance eigenvalue {eigvals[0]:.3e} at or below positive-definite "
                f"threshold {floor:.3e}"
            )
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        mu.setflags(write=False)
        sigma.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @classmethod
    def univariate(cls, mu: float, sd: float) -> "NormalDist":
        if sd <= 0:
            raise InvalidArgumentError(f"standard deviation must be positive, got {sd}")
        return cls(np.array([float(mu)]), np.array([[float(sd) ** 2]]))

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "sigma": self.sigma.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalDist":
        try:
            mu, sigma = d["mu"], d["sigma"]
        except (KeyError, TypeError) as exc:
            raise InvalidArgumentError(f"normal spec needs 'mu' and 'sigma': {d!r}") from exc
        if np.isscalar(mu):
            mu = [mu]
        if np.isscalar(sigma):
            sigma = [[sigma]]
        return cls(np.asarray(mu, dtype=float), np.asarray(sigma, dtype=float))


@dataclass(frozen=True)
class QuadraticDomain:
    """Coefficients of q(x) = x'Q2 x + q1'x + q0; the domain is q(x) > 0.

    An asymmetric q2 is replaced by its symmetric part, which leaves q(x)
    unchanged.
    """

    q2: np.ndarray
    q1: np.ndarray
    q0: float

    def __post_init__(self):
        q2 = _as_matrix(self.q2, "q2")
        q1 = _as_vector(self.q1, "q1")
        if q2.shape[0] != q1.shape[0]:
            raise InvalidArgumentError(
                f"q1 has dimension {q1.shape[0]} but q2 is {q2.shape[0]}x{q2.shape[1]}"
            )
        q0 = float(self.q0)
        if not np.isfinite(q0):
            raise InvalidArgumentError("q0 must be finite")
        q2 = 0.5 * (q2 + q2.T)
        object.__setattr__(self, "q2", q2)
        object.__setattr__(self, "q1", q1)
        object.__setattr__(self, "q0", q0)
        q2.setflags(write=False)
        q1.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.q1.shape[0]

    def __call__(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[-1] != self.dim:
            raise InvalidArgumentError(
                f"points have dimension {pts.shape[-1]}, quadratic has {self.dim}"
            )
        vals = np.einsum("ni,ij,nj->n", pts, self.q2, pts) + pts @ self.q1 + self.q0
        return float(vals[0]) if scalar else vals

    def negated(self) -> "QuadraticDomain":
        return QuadraticDomain(-self.q2, -self.q1, -self.q0)

    def shifted(self, delta: float) -> "QuadraticDomain":
        return QuadraticDomain(self.q2, self.q1, self.q0 + float(delta))

    def to_dict(self) -> dict:
        return {"q2": self.q2.tolist(), "q1": self.q1.tolist(), "q0": self.q0}

    @classmethod
    def from_dict(cls, d: dict) -> "QuadraticDomain":
        try:
            q2, q1, q0 = d["q2"], d["q1"], d["q0"]
        except (KeyError, TypeError) as exc:
            raise InvalidArgumentError(f"quadratic spec needs 'q2', 'q1', 'q0': {d!r}") from exc
        if np.isscalar(q2):
            q2 = [[q2]]
        if np.isscalar(q1):
            q1 = [q1]
        return cls(np.asarray(q2, dtype=float), np.asarray(q1, dtype=float), float(q0))


@dataclass(frozen=True)
class SqrtMatrix:
    """Symmetric positive-definite square root S of a covariance, S S = sigma."""

    s: np.ndarray
    eigvals: np.ndarray = field(repr=False)
    eigvecs: np.ndarray = field(repr=False)

    @property
    def inv(self) -> np.ndarray:
        v, lam = self.eigvecs, self.eigvals
        return (v / np.sqrt(lam)) @ v.T


def symmetric_sqrt(sigma) -> SqrtMatrix:
    """Symmetric square root of a positive-definite covariance matrix."""
    sigma = _validated_covariance(_as_matrix(sigma, "sigma"))
    eigvals, eigvecs = np.linalg.eigh(sigma)
    floor = PD_RTOL * max(float(eigvals[-1]), 0.0)
    if eigvals[0] <= floor:
        raise SingularCovarianceError(
            f"covariance eigenvalue {eigvals[0]:.3e} at or below positive-definite "
            f"threshold {floor:.3e}"
        )
    s = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    s = 0.5 * (s + s.T)
    return SqrtMatrix(s=s, eigvals=eigvals, eigvecs=eigvecs)


def standardize_quadratic(q: QuadraticDomain, n: NormalDist) -> QuadraticDomain:
    """Rewrite q for the standard normal z with x = mu + S z.

    Returns the coefficients (S Q2 S, 2 S Q2 mu + S q1, q(mu)).
    """
    if q.dim != n.dim:
        raise InvalidArgumentError(f"quadratic dimension {q.dim} != normal dimension {n.dim}")
    s = symmetric_sqrt(n.sigma).s
    q2t = s @ q.q2 @ s
    q1t = 2.0 * (s @ (q.q2 @ n.mu)) + s @ q.q1
    q0t = float(q(n.mu))
    return QuadraticDomain(q2t, q1t, q0t)
