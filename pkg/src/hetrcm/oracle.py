"""Independent numerical oracles for the closed forms and for union-find.

Nothing here calls into :mod:`hetrcm.analytic` or :mod:`hetrcm.graph`.
Integrals use QUADPACK (``scipy.integrate.quad``) while the analytic module
uses its own Gauss-Kronrod code, so the two routes share no integrator.
"""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, RegimeError
from .params import ModelParams


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-13
    rel_tol: float = 1e-11
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_SPEC = QuadratureSpec()


def _quad(f, a, b, spec: QuadratureSpec, **kw) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                      limit=spec.max_subdivisions, **kw)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"quad on [{a}, {b}] did not converge: {exc}") from exc
    return val


def _check(params: ModelParams) -> tuple[int, float, float]:
    d, alpha, tau = params.d, float(params.alpha), float(params.tau)
    if min(alpha, tau * alpha) <= d:
        raise RegimeError("oracle integrals diverge for min(alpha, tau*alpha) <= d",
                          regime="InfiniteDegree")
    return d, alpha, tau


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d, 2 pi^(d/2) / Gamma(d/2)."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def _radial_shape(d: int, alpha: float, spec: QuadratureSpec) -> float:
    """(A_d / alpha) int_0^inf (1 - e^{-s}) s^{-beta-1} ds, beta = d/alpha, by quadrature.

    On [0, 1] the s^{-beta} endpoint singularity is handled by QUADPACK's
    algebraic weight; on [1, inf) the slowly decaying s^{-beta-1} part is
    integrated in closed form and only the e^{-s} remainder is numerical.
    """
    beta = d / alpha
    near = _quad(lambda s: -math.expm1(-s) / s if s > 0 else 1.0, 0.0, 1.0, spec,
                 weight="alg", wvar=(-beta, 0.0))
    far_exp = _quad(lambda s: math.exp(-s) * s ** (-beta - 1.0), 1.0, math.inf, spec)
    return sphere_area(d) / alpha * (near + 1.0 / beta - far_exp)


def radial_integral(d: int, alpha: float, c: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Integral over R^d of 1 - exp(-c |x|^-alpha), by quadrature.

    With t = r**-alpha and then s = c t the integral becomes
    c^beta (A_d/alpha) int_0^inf (1 - e^{-s}) s^{-beta-1} ds, beta = d/alpha.
    """
    return c ** (d / alpha) * _radial_shape(d, alpha, spec)


def quadrature_integral(params: ModelParams, w: float,
                        spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """I(w) = int E[p_0x | W_0 = w] dx with the partner weight averaged numerically.

    The Pareto average over the partner weight u is taken in v = log u,
    where the density is tau e^{-tau v}.  The radial integral at
    c = lambda w e^v is c^beta times a quadrature constant, so the outer
    integrand is evaluated in log space and needs no cutoff even when
    tau - beta is small and the decay is slow.
    """
    d, alpha, tau = _check(params)
    if not w >= 1:
        raise ValueError(f"w must be >= 1, got {w}")
    beta = d / alpha
    shape = _radial_shape(d, alpha, spec)
    log_c0 = math.log(float(params.lam) * w)

    def outer(v):
        return tau * shape * math.exp(beta * (log_c0 + v) - tau * v)

    return _quad(outer, 0.0, math.inf, spec)


def mixing_pmf_oracle(params: ModelParams, k: int,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """P[D_0 = k] as the Pareto mixture of Poisson(nu I(w)) laws.

    I(1) comes from :func:`quadrature_integral`; I(w) = I(1) w^(d/alpha)
    follows from rescaling x -> w^(1/alpha) x in the defining integral.
    The w-integral is cut at W_max with Pareto tail mass below rel_tol/10,
    which bounds the neglected part since the Poisson pmf is at most 1.
    """
    d, alpha, tau = _check(params)
    beta = d / alpha
    mu1 = float(params.nu) * quadrature_integral(params, 1.0, spec)
    log_kfact = math.lgamma(k + 1)
    v_max = -math.log(spec.rel_tol / 10.0) / tau

    def integrand(v):
        mu = mu1 * math.exp(beta * v)
        return tau * math.exp(-tau * v + k * math.log(mu) - mu - log_kfact)

    # Peak of the Poisson factor sits where mu(w) = k.
    points = []
    if k > mu1:
        v_peak = math.log(k / mu1) / beta
        if v_peak < v_max:
            points = [v_peak]
    return _quad(integrand, 0.0, v_max, spec, points=points or None)


def bfs_components(edges, n: int) -> np.ndarray:
    """Label each vertex by the smallest id in its component (breadth-first)."""
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[int(i)].append(int(j))
        adj[int(j)].append(int(i))
    label = np.full(n, -1, dtype=np.int64)
    for start in range(n):
        if label[start] >= 0:
            continue
        label[start] = start
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if label[v] < 0:
                    label[v] = start
                    queue.append(v)
    return label
