"""Adaptive 7/15-point Gauss-Kronrod quadrature on a finite interval.

Panels are refined in batches: every pass evaluates the integrand once on
all open panels (vectorised), accepts the panels whose Kronrod/Gauss
difference is within their share of the tolerance, and bisects the rest.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ConvergenceError

_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# 15 abscissae on [-1, 1]; Gauss nodes are the odd-indexed Kronrod ones.
_NODES = np.concatenate([-_XK[:-1], [0.0], _XK[-2::-1]])
_KW = np.concatenate([_WK[:-1], [_WK[-1]], _WK[-2::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5, 9, 11, 13]] = np.concatenate([_WG[:3], _WG[2::-1]])
_GW[7] = _WG[3]


def gauss_kronrod(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-12,
    max_panels: int = 4000,
    initial_panels: int = 8,
) -> tuple[float, float]:
    """Integrate ``f`` over [a, b]; ``f`` must accept a 1-d array.

    Returns ``(value, error_estimate)``. Raises ConvergenceError if the
    panel budget is exhausted before the tolerance is met.
    """
    if not b > a:
        if a == b:
            return 0.0, 0.0
        raise ValueError("require a <= b")
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    done_val = 0.0
    done_err = 0.0
    used = initial_panels
    while True:
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = mid[:, None] + half[:, None] * _NODES[None, :]
        fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
        k = half * (fx @ _KW)
        g = half * (fx @ _GW)
        err = np.abs(k - g)
        total = done_val + k.sum()
        budget = max(abs_tol, rel_tol * abs(total))
        if done_err + err.sum() <= budget:
            return float(total), float(done_err + err.sum())
        # Accept panels whose error is below their length-proportional share.
        share = budget * (hi - lo) / (b - a)
        ok = err <= 0.5 * share
        done_val += k[ok].sum()
        done_err += err[ok].sum()
        lo, hi = lo[~ok], hi[~ok]
        used += lo.size
        if used > max_panels or not np.all(np.isfinite(k)):
            raise ConvergenceError(
                f"Gauss-Kronrod did not converge on [{a}, {b}] "
                f"(estimate {total}, error {done_err + err.sum()})"
            )
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
