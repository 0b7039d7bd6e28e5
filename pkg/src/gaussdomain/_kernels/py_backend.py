"""Pure-numpy ray kernels.

Same contract as the compiled module: given a quadratic q(x) = x'Q2x + q1'x
+ q0 in standardized coordinates and a batch of direction vectors, compute
per-line coverage weights (alpha) or the sign-at-minus-infinity plus root
pair of the restriction to each line through the origin.

The radial coordinate along a line has the symmetric chi law for df
standard-normal dimensions: P(Z > z) = chdtrc(df, z^2)/2 for z >= 0.
"""

import numpy as np
from scipy import special

TANGENT_TOL = 1e-9


def _phi_bar(z, df):
    z = np.asarray(z, dtype=float)
    half_sf = 0.5 * special.chdtrc(df, z * z)
    return np.where(z >= 0.0, half_sf, 1.0 - half_sf)


def _interval_mass(lo, hi, df):
    """Radial mass of (lo, hi), evaluated from whichever tail keeps the
    small quantities small.  Forming 1 - tail and subtracting would zero out
    intervals deep in either tail."""
    both_pos = lo >= 0.0
    both_neg = hi <= 0.0
    return np.where(
        both_pos,
        _phi_bar(lo, df) - _phi_bar(hi, df),
        np.where(
            both_neg,
            _phi_bar(-hi, df) - _phi_bar(-lo, df),
            1.0 - _phi_bar(-lo, df) - _phi_bar(hi, df),
        ),
    )


def _line_coefficients(q2, q1, q0, dirs):
    a = np.einsum("ni,ij,nj->n", dirs, q2, dirs)
    b = dirs @ q1
    return a, b, float(q0)


def quad_alpha_batch(q2, q1, q0, dirs, df):
    """Coverage weight alpha in [0, 2] for each direction's full line.

    alpha = 2 * P(domain holds along the line) under the radial chi measure;
    tangencies (root gap < 1e-9) count as no crossing.
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    a, b, c = _line_coefficients(q2, q1, q0, dirs)
    alpha = np.empty(dirs.shape[0])

    lin = a == 0.0
    const = lin & (b == 0.0)
    if np.any(const):
        alpha[const] = 1.0 + np.sign(c)
    ln = lin & ~const
    if np.any(ln):
        # covered half-line mass == upper-tail mass past -c/|b| on both
        # branch signs; the symmetric form never cancels
        alpha[ln] = 2.0 * _phi_bar(-c / np.abs(b[ln]), df)

    quad = ~lin
    disc = b * b - 4.0 * a * c
    flat = quad & (disc <= 0.0)
    if np.any(flat):
        alpha[flat] = 1.0 + np.sign(a[flat])
    cross = quad & (disc > 0.0)
    if np.any(cross):
        aa, bb = a[cross], b[cross]
        sq = np.sqrt(disc[cross])
        qd = -0.5 * (bb + np.where(bb >= 0.0, sq, -sq))
        r1 = qd / aa
        r2 = c / qd
        lo = np.minimum(r1, r2)
        hi = np.maximum(r1, r2)
        al = np.where(
            aa > 0.0,
            2.0 * (_phi_bar(hi, df) + _phi_bar(-lo, df)),
            2.0 * _interval_mass(lo, hi, df),
        )
        tangent = (hi - lo) < TANGENT_TOL
        if np.any(tangent):
            al[tangent] = 1.0 + np.sign(aa[tangent])
        alpha[cross] = al
    return alpha


def quad_trace_batch(q2, q1, q0, dirs):
    """Per-line sign at -inf and sorted crossing pair (nan-padded).

    Returns (psi (N,), roots (N, 2)); linear lines fill only column 0,
    tangencies and crossing-free lines fill neither.
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    a, b, c = _line_coefficients(q2, q1, q0, dirs)
    n = dirs.shape[0]
    psi = np.empty(n)
    roots = np.full((n, 2), np.nan)

    lin = a == 0.0
    const = lin & (b == 0.0)
    psi[const] = np.sign(c)
    ln = lin & ~const
    if np.any(ln):
        psi[ln] = -np.sign(b[ln])
        roots[ln, 0] = -c / b[ln]

    quad = ~lin
    psi[quad] = np.sign(a[quad])
    disc = b * b - 4.0 * a * c
    cross = quad & (disc > 0.0)
    if np.any(cross):
        aa, bb = a[cross], b[cross]
        sq = np.sqrt(disc[cross])
        qd = -0.5 * (bb + np.where(bb >= 0.0, sq, -sq))
        r1 = qd / aa
        r2 = c / qd
        lo = np.minimum(r1, r2)
        hi = np.maximum(r1, r2)
        keep = (hi - lo) >= TANGENT_TOL
        idx = np.nonzero(cross)[0][keep]
        roots[idx, 0] = lo[keep]
        roots[idx, 1] = hi[keep]
    return psi, roots
