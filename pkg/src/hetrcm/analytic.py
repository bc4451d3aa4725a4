"""Closed-form degree laws and the percolation-regime classifier.

All quantities assume Pareto(1, tau) weights and the connection function
``1 - exp(-lambda * w_x * w_y * |x - y|**-alpha)``.  With ``beta = d/alpha``
and ``kappa = tau*alpha/d`` the central objects are

* ``I(w) = v_d Gamma(1 - beta) tau/(tau - beta) (lambda w)**beta``, the
  expected number of neighbours per unit intensity of a particle of weight w;
* ``c1 = (nu v_d Gamma(1 - beta) tau/(tau - beta))**kappa * lambda**tau``;
* ``P[D = k] = kappa c1 / k! * Gamma(k - kappa, c1**(1/kappa))`` with the
  upper incomplete gamma function at a possibly negative shape.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, ParameterError, RegimeError
from .params import ModelParams, as_exact
from .quadrature import gauss_kronrod

FLOAT_SLACK = 1e-12


class Regime(str, enum.Enum):
    INFINITE_DEGREE = "InfiniteDegree"
    LAMBDA_C_ZERO = "LambdaCZero"
    LAMBDA_C_POSITIVE_FINITE = "LambdaCPositiveFinite"
    LAMBDA_C_INFINITE = "LambdaCInfinite"
    BOUNDARY = "BoundaryFiniteUnknownPositivity"


def _cmp(x, y) -> int:
    """Three-way comparison; exact for rationals, 1e-12 relative slack otherwise."""
    ex, ey = as_exact(x), as_exact(y)
    if ex is not None and ey is not None:
        return (ex > ey) - (ex < ey)
    fx, fy = float(x), float(y)
    if abs(fx - fy) <= FLOAT_SLACK * max(1.0, abs(fx), abs(fy)):
        return 0
    return 1 if fx > fy else -1


def classify_regime(params: ModelParams) -> Regime:
    """Percolation regime of the parameters.

    ``BOUNDARY`` covers tau*alpha = 2d, where lambda_c is known to be finite
    but its positivity is open.  In d = 1 the same label is used for
    tau*alpha = 2 with alpha > 2, which no known result covers.
    """
    d, alpha = params.d, params.alpha
    ta = params.tau * params.alpha
    if _cmp(min(alpha, ta, key=float), d) <= 0:
        return Regime.INFINITE_DEGREE
    c = _cmp(ta, 2 * d)
    if c < 0:
        return Regime.LAMBDA_C_ZERO
    if c == 0:
        return Regime.BOUNDARY
    if d >= 2:
        return Regime.LAMBDA_C_POSITIVE_FINITE
    # d == 1, tau*alpha > 2, alpha > 1
    if _cmp(alpha, 2) <= 0:
        return Regime.LAMBDA_C_POSITIVE_FINITE
    return Regime.LAMBDA_C_INFINITE


def _require_finite_degree(params: ModelParams) -> None:
    if not params.finite_degree:
        raise RegimeError(
            f"min(alpha, tau*alpha) = {min(float(params.alpha), float(params.tau * params.alpha))}"
            f" <= d = {params.d}: the neighbour integral diverges and the degree is infinite",
            regime=Regime.INFINITE_DEGREE.value,
        )


def unit_ball_volume(d: int) -> float:
    """Volume of the Euclidean unit ball in R^d, pi^(d/2) / Gamma(d/2 + 1).

    Evaluated by the recursion v_d = v_{d-2} 2 pi / d from v_1 = 2, v_2 = pi,
    which is exact in the first few dimensions up to rounding of pi.
    """
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 1:
        raise ParameterError("d", f"must be an integer >= 1, got {d!r}")
    v = 2.0 if d % 2 else math.pi
    for k in range(3 if d % 2 else 4, int(d) + 1, 2):
        v *= 2.0 * math.pi / k
    return v


def _log_inner_factor(params: ModelParams) -> float:
    """log(v_d Gamma(1 - beta) tau/(tau - beta))."""
    beta = params.d / float(params.alpha)
    tau = float(params.tau)
    return (math.log(unit_ball_volume(params.d)) + math.lgamma(1.0 - beta)
            + math.log(tau) - math.log(tau - beta))


def integral_closed_form(params: ModelParams, w: float) -> float:
    """Integral over R^d of E[p_0x | W_0 = w]."""
    _require_finite_degree(params)
    if not w >= 1:
        raise DomainError(f"weights are supported on [1, inf), got w = {w}")
    beta = params.d / float(params.alpha)
    return math.exp(_log_inner_factor(params) + beta * math.log(float(params.lam) * w))


def log_c1(params: ModelParams) -> float:
    _require_finite_degree(params)
    kappa = params.tail_index
    return (kappa * (math.log(float(params.nu)) + _log_inner_factor(params))
            + float(params.tau) * math.log(float(params.lam)))


def c1_constant(params: ModelParams) -> float:
    """Tail constant c1; may overflow to inf for very large tau*alpha/d."""
    return math.exp(log_c1(params))


def typical_degree_scale(params: ModelParams) -> float:
    """c1**(d/(tau*alpha)) = nu * I(1), the conditional mean degree at W_0 = 1."""
    _require_finite_degree(params)
    beta = params.d / float(params.alpha)
    return math.exp(math.log(float(params.nu)) + _log_inner_factor(params)
                    + beta * math.log(float(params.lam)))


def mean_degree(params: ModelParams) -> float:
    """E[D_0] = nu v_d Gamma(1 - beta) (tau/(tau - beta))**2 lambda**beta."""
    _require_finite_degree(params)
    beta = params.d / float(params.alpha)
    tau = float(params.tau)
    return typical_degree_scale(params) * tau / (tau - beta)


def upper_gamma_scaled(s: float, a: float, *, tol: float = 1e-13) -> tuple[float, float]:
    """Upper incomplete gamma for any real shape ``s`` and ``a > 0``.

    Returns ``(m, log_scale)`` with ``Gamma(s, a) = m * exp(log_scale)``.
    The integrand is rescaled by its maximum on [a, inf) so the result is
    finite even where Gamma(s, a) itself overflows.  The integral is
    truncated at ``b`` with an analytic bound on the neglected tail that is
    kept below ``tol`` relative to the total.
    """
    if not a > 0:
        raise DomainError(f"lower limit must be positive, got {a}")
    sm1 = s - 1.0
    if s > 0 and s * math.log(a) - math.log(s) - math.lgamma(s) < -40.0:
        # lower incomplete part gamma(s, a) <= a**s / s is negligible
        return 1.0, math.lgamma(s)
    peak_t = max(a, sm1)
    log_scale = sm1 * math.log(peak_t) - peak_t

    def integrand(t):
        return np.exp(sm1 * np.log(t) - t - log_scale)

    width = 40.0 + 12.0 * math.sqrt(max(sm1, 1.0))
    b = max(peak_t + width, 2.0 * sm1 if sm1 > 0 else 0.0)
    while True:
        val, err = gauss_kronrod(integrand, a, b, abs_tol=0.0, rel_tol=tol,
                                 max_panels=20000)
        # t**(s-1) e**-t <= b**(s-1) e**(-b/2) e**(-t/2) for t >= b >= 2(s-1)
        if sm1 <= 0:
            tail = math.exp(sm1 * math.log(b) - b - log_scale)
        else:
            tail = 2.0 * math.exp(sm1 * math.log(b) - b - log_scale)
        if tail <= tol * val:
            return val, log_scale
        b += width


def degree_pmf(params: ModelParams, k: int) -> float:
    """P_0[D_0 = k] for the degree of the particle at the origin."""
    _require_finite_degree(params)
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 0:
        raise DomainError(f"k must be a nonnegative integer, got {k!r}")
    kappa = params.tail_index
    a = typical_degree_scale(params)
    try:
        m, log_scale = upper_gamma_scaled(int(k) - kappa, a)
    except ConvergenceError as exc:
        raise ConvergenceError(f"degree_pmf(k={k}) integration failed: {exc}") from exc
    if m == 0.0:
        return 0.0
    return math.exp(math.log(kappa) + log_c1(params) - math.lgamma(int(k) + 1)
                    + math.log(m) + log_scale)


def degree_pmf_table(params: ModelParams, kmax: int) -> np.ndarray:
    """Vector of P[D = k] for k = 0..kmax."""
    return np.array([degree_pmf(params, k) for k in range(kmax + 1)])


def degree_survival(params: ModelParams, n: int, *, rel_tol: float = 1e-6) -> float:
    """P_0[D_0 > n] by direct summation of the pmf tail.

    Summation stops once the leading-order tail bound beyond the last
    term is below ``rel_tol`` times the accumulated sum.
    """
    _require_finite_degree(params)
    kappa = params.tail_index
    c1 = c1_constant(params)
    total = 0.0
    k = n + 1
    while True:
        total += degree_pmf(params, k)
        if k > 2 * n + 10 and k > kappa * (kappa + 1):
            # Past kappa*(kappa+1), Gamma(j - kappa)/j! < 2 j**(-1-kappa), so
            # sum_{j>k} P[D=j] < 2 c1 k**-kappa.
            if 2.0 * c1 * k ** (-kappa) <= rel_tol * total:
                return total
        k += 1


def tail_asymptotic(params: ModelParams, n: int) -> float:
    """Leading-order survival c1 * n**(-tau*alpha/d)."""
    _require_finite_degree(params)
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    return math.exp(log_c1(params) - params.tail_index * math.log(n))


@dataclass
class AnalyticReport:
    params: ModelParams
    regime: Regime
    v_d: float
    c1: float | None = None
    mean_degree: float | None = None
    pmf: list[float] = field(default_factory=list)

    def integral_at(self, w: float) -> float:
        return integral_closed_form(self.params, w)

    def as_dict(self) -> dict:
        out = {"params": self.params.as_dict(), "regime": self.regime.value, "v_d": self.v_d}
        if self.c1 is not None:
            out["c1"] = self.c1
            out["mean_degree"] = self.mean_degree
            out["integral_at_1"] = self.integral_at(1.0)
            out["tail_exponent"] = self.params.tail_index
            out["pmf"] = self.pmf
        return out


def analytic_report(params: ModelParams, kmax: int = 20) -> AnalyticReport:
    regime = classify_regime(params)
    report = AnalyticReport(params=params, regime=regime, v_d=unit_ball_volume(params.d))
    if regime is not Regime.INFINITE_DEGREE:
        report.c1 = c1_constant(params)
        report.mean_degree = mean_degree(params)
        report.pmf = degree_pmf_table(params, kmax).tolist()
    return report
