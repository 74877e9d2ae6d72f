"""Closed-form and residue-series quantities for SO(2N) and its excised
sub-ensemble: Selberg integral, normalization constants, moments and the
small-value density, the Jacobi Christoffel-Darboux kernel, n-level densities,
and the excised one-level density with its hard gap.

The excised density admits two equivalent representations: a vertical-line
contour integral and the sum of residues at r = 0 and the negative
half-integers.  The residue series converges factorially fast in the bulk but
only algebraically as theta approaches the hard-gap edge, so evaluation
switches to the (tail-corrected) line quadrature wherever the residue tail
estimate misses the requested tolerance.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .special_functions import (
    JacobiOrder,
    jacobi_p,
    jacobi_p_deriv,
    log_barnes_g,
    log_gamma,
)

__all__ = [
    "ResidueSeries",
    "NormalizationResult",
    "DensityGrid",
    "r1_so2n_unscaled",
    "r1_so2n_scaled_expansion",
    "selberg_integral",
    "c_so2n",
    "moments_so2n",
    "h_exact",
    "h_asymptotic",
    "value_density_small_x",
    "value_cumulative_small_x",
    "normalization_ratio",
    "cd_kernel",
    "cd_kernel_diag",
    "excised_integrand",
    "kernel_residue_at_minus_half",
    "r1_excised",
    "r1_excised_grid",
    "r1_excised_detail",
    "r1_excised_line_integral",
    "theta_inf",
    "gap_margin",
    "n_level_density",
    "density_grid",
    "write_density_csv",
]

_LOG2 = np.log(2.0)
_CONTOUR_RADIUS = 0.1
_CONTOUR_NODES = 128
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def r1_so2n_unscaled(n_pairs: int, theta):
    """One-level density (2N-1)/(2pi) + sin((2N-1)t)/(2pi sin t) of SO(2N) on [0, pi].

    The Dirichlet-kernel ratio is continued through t = 0 and t = pi with the
    Chebyshev polynomial U_{2N-2}(cos t), which the ratio equals identically.
    """
    if n_pairs < 1:
        raise DomainError("n_pairs must be >= 1")
    th = np.asarray(theta, dtype=float)
    scalar = th.ndim == 0
    th = np.atleast_1d(th)
    s = np.sin(th)
    safe = np.abs(s) > 1e-6
    ratio = np.empty_like(th)
    ratio[safe] = np.sin((2 * n_pairs - 1) * th[safe]) / s[safe]
    if np.any(~safe):
        x = np.cos(th[~safe])
        u_prev = np.ones_like(x)
        u = 2.0 * x
        if n_pairs == 1:
            u = u_prev
        else:
            for _ in range(2 * n_pairs - 3):
                u_prev, u = u, 2.0 * x * u - u_prev
        ratio[~safe] = u
    out = (2 * n_pairs - 1) / (2 * np.pi) + ratio / (2 * np.pi)
    return float(out[0]) if scalar else out


def r1_so2n_scaled_expansion(n_pairs: int, y, order: int = 2):
    """Large-N expansion of the mean-density-scaled SO(2N) one-level density.

    order 0: 1 + sin(2 pi y)/(2 pi y); order 1 adds -(1+cos 2 pi y)/(2N);
    order 2 adds -pi y sin(2 pi y)/(6 N^2).
    """
    if order not in (0, 1, 2):
        raise DomainError("expansion order must be 0, 1 or 2")
    y = np.asarray(y, dtype=float)
    out = 1.0 + np.sinc(2.0 * y)
    if order >= 1:
        out = out - (1.0 + np.cos(2 * np.pi * y)) / (2.0 * n_pairs)
    if order >= 2:
        out = out - np.pi * y * np.sin(2 * np.pi * y) / (6.0 * n_pairs**2)
    return float(out) if out.ndim == 0 else out


def _is_real(z) -> bool:
    return np.imag(z) == 0


def selberg_integral(n_pairs: int, r, s):
    """Selberg's angular integral of prod (1-cos)^r (1+cos)^s times the squared
    Vandermonde in cosines over [0, pi]^N.

    Requires Re(r), Re(s) > -1/2 strictly.
    """
    if np.real(r) <= -0.5 or np.real(s) <= -0.5:
        raise DomainError("selberg_integral requires Re(r), Re(s) > -1/2")
    total = n_pairs * (n_pairs + r + s - 1) * _LOG2
    for j in range(n_pairs):
        total = total + (
            log_gamma(2.0 + j)
            + log_gamma(s + 0.5 + j)
            + log_gamma(r + 0.5 + j)
            - log_gamma(s + r + n_pairs + j)
        )
    value = np.exp(total)
    if _is_real(r) and _is_real(s):
        return float(np.real(value))
    return complex(value)


def c_so2n(n_pairs: int) -> float:
    """Weyl normalization constant of the SO(2N) eigenphase measure (explicit product)."""
    total = -n_pairs * (n_pairs - 1) * _LOG2
    for j in range(n_pairs):
        total += np.real(log_gamma(float(n_pairs + j)) - log_gamma(2.0 + j) - 2 * log_gamma(0.5 + j))
    return float(np.exp(total))


def moments_so2n(n_pairs: int, s, analytic_continuation: bool = False):
    """Moment generating function M_O(N, s) of the characteristic polynomial at 1.

    The defining Haar integral converges only for Re(s) > -1/2; pass
    analytic_continuation=True to evaluate the meromorphic product formula
    elsewhere (used for residue extraction around s = -1/2).
    """
    if not analytic_continuation and np.real(s) <= -0.5:
        raise DomainError("moments_so2n requires Re(s) > -1/2")
    total = 2 * n_pairs * s * _LOG2
    for j in range(1, n_pairs + 1):
        total = total + (
            log_gamma(float(n_pairs + j - 1))
            + log_gamma(s + j - 0.5)
            - log_gamma(j - 0.5)
            - log_gamma(s + j + n_pairs - 1)
        )
    value = np.exp(total)
    return float(np.real(value)) if _is_real(s) else complex(value)


def h_exact(n_pairs: int) -> float:
    """Residue of M_O(N, s) at s = -1/2 (explicit Gamma product)."""
    total = -n_pairs * _LOG2 - np.real(log_gamma(float(n_pairs)))
    for j in range(1, n_pairs + 1):
        total += np.real(
            log_gamma(float(n_pairs + j - 1))
            + log_gamma(float(j))
            - log_gamma(j - 0.5)
            - log_gamma(j + n_pairs - 1.5)
        )
    return float(np.exp(total))


def h_asymptotic(n_pairs: int) -> float:
    """Large-N form 2^(-7/8) G(1/2) pi^(-1/4) N^(3/8) of h(N)."""
    return float(2.0 ** (-7.0 / 8.0) * np.exp(log_barnes_g(0.5)) * np.pi ** (-0.25) * n_pairs ** (3.0 / 8.0))


def value_density_small_x(n_pairs: int, x) -> float:
    """Small-value density P_O(N, x) ~ x^(-1/2) h(N) of the characteristic polynomial."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("value density requires x > 0")
    out = x ** (-0.5) * h_exact(n_pairs)
    return float(out) if out.ndim == 0 else out


def value_cumulative_small_x(n_pairs: int, x) -> float:
    """Small-x cumulative 2 sqrt(x) h(N) = Prob(0 <= Lambda <= x)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("cumulative requires x >= 0")
    out = 2.0 * np.sqrt(x) * h_exact(n_pairs)
    return float(out) if out.ndim == 0 else out


def theta_inf(n_pairs: int, log_cutoff: float) -> float:
    """Hard-gap edge arccos(1 - 2^-(2N-1) e^X); no eigenphase of the excised
    ensemble lies below it."""
    if log_cutoff >= 2 * n_pairs * _LOG2:
        raise DomainError("cutoff at or above the attainable maximum: ensemble is empty")
    return float(np.arccos(1.0 - 2.0 ** (-(2 * n_pairs - 1)) * np.exp(log_cutoff)))


def gap_margin(n_pairs: int, log_cutoff: float, theta):
    """d(theta, X) = (2N-1) log 2 + log(1-cos theta) - X; negative inside the hard gap."""
    th = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        out = (2 * n_pairs - 1) * _LOG2 + np.log1p(-np.cos(th)) - log_cutoff
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Jacobi kernel
# ---------------------------------------------------------------------------

def _wronskian(n_pairs: int, r, x):
    """P(N, r, theta) = P_N' P_{N-1} - P_N P_{N-1}' at x = cos theta, orders (r-1/2, -1/2)."""
    a = np.asarray(r, dtype=complex) - 0.5
    pn = jacobi_p(JacobiOrder(n_pairs, a, -0.5), x)
    pnm1 = jacobi_p(JacobiOrder(n_pairs - 1, a, -0.5), x)
    dn = jacobi_p_deriv(JacobiOrder(n_pairs, a, -0.5), x)
    dnm1 = jacobi_p_deriv(JacobiOrder(n_pairs - 1, a, -0.5), x)
    return dn * pnm1 - pn * dnm1


def cd_kernel_diag(n_pairs: int, r, theta):
    """Diagonal f_N^(r-1/2,-1/2)(theta, theta) of the Christoffel-Darboux kernel.

    At r = 0 this reduces to the SO(2N) one-level density.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0) or np.any(th >= np.pi):
        raise DomainError("cd_kernel_diag requires theta in the open interval (0, pi)")
    x = np.cos(th)
    lg = log_gamma(n_pairs + 1.0) + log_gamma(n_pairs + np.asarray(r, complex)) - log_gamma(
        n_pairs + np.asarray(r, complex) - 0.5
    ) - log_gamma(n_pairs - 0.5)
    pref = (1 - x) ** np.asarray(r, complex) * 2.0 ** (1 - np.asarray(r, complex)) / (
        2 * n_pairs + np.asarray(r, complex) - 1
    ) * np.exp(lg)
    out = pref * _wronskian(n_pairs, r, x)
    if np.ndim(out) == 0:
        return complex(out) if not _is_real(r) else float(np.real(out))
    return out


def cd_kernel(n_pairs: int, r, theta_j, theta_k):
    """Off-diagonal Christoffel-Darboux kernel f_N^(r-1/2,-1/2)(theta_j, theta_k)."""
    xj, xk = np.cos(theta_j), np.cos(theta_k)
    if np.isclose(xj, xk):
        raise DomainError("use cd_kernel_diag for coincident arguments")
    r = complex(r)
    lg = log_gamma(n_pairs + 1.0) + log_gamma(n_pairs + r) - log_gamma(n_pairs + r - 0.5) - log_gamma(
        n_pairs - 0.5
    )
    pref = 2.0 ** (1 - r) / (2 * n_pairs + r - 1) * np.exp(lg)
    a = r - 0.5
    p_hi = JacobiOrder(n_pairs, a, -0.5)
    p_lo = JacobiOrder(n_pairs - 1, a, -0.5)
    cross = jacobi_p(p_hi, xj) * jacobi_p(p_lo, xk) - jacobi_p(p_lo, xj) * jacobi_p(p_hi, xk)
    val = pref * (1 - xj) ** (r / 2) * (1 - xk) ** (r / 2) / (xj - xk) * cross
    return complex(val) if not _is_real(r) else float(np.real(val))


def n_level_density(n_pairs: int, r, thetas) -> float:
    """n-level density of the Jacobi ensemble: det of the n x n kernel matrix.

    Repeated theta values make the kernel matrix rank deficient; the
    determinant is then 0, which is returned with a warning.
    """
    thetas = np.asarray(thetas, dtype=float)
    n = len(thetas)
    if n > n_pairs:
        raise DomainError("n-level density needs n <= N")
    if len(np.unique(thetas)) != n:
        warnings.warn("repeated theta values: kernel matrix is singular, density is 0")
        return 0.0
    mat = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            mat[i, j] = cd_kernel_diag(n_pairs, r, thetas[i]) if i == j else cd_kernel(
                n_pairs, r, thetas[i], thetas[j]
            )
    return float(np.real(np.linalg.det(mat)))


# ---------------------------------------------------------------------------
# contour machinery for the excised ensemble
# ---------------------------------------------------------------------------

def excised_integrand(n_pairs: int, log_cutoff: float, theta, r):
    """Integrand of the vertical-line representation of the excised one-level
    density (without the normalization constant C_X).

    The Gamma(N+r) factor of the kernel prefactor cancels the j = 0 term of
    the denominator product exactly; the cancellation is performed
    analytically here so the removable integer-pole pairs never appear.
    """
    r = np.asarray(r, dtype=complex)
    if np.any(r == 0):
        raise DomainError("excised_integrand has a pole at r = 0")
    half = r + 0.5
    if np.any((half.imag == 0) & (half.real <= 0) & (half.real == np.round(half.real))):
        raise DomainError("excised_integrand evaluated at a half-integer pole")
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0) or np.any(th > np.pi):
        raise DomainError("excised_integrand requires theta in (0, pi]")
    x = np.cos(th)
    total = np.zeros(np.broadcast(r, x).shape, dtype=complex)
    for j in range(n_pairs):
        total = total + log_gamma(2.0 + j) + log_gamma(0.5 + j) + log_gamma(r + 0.5 + j)
    for j in range(1, n_pairs):
        total = total - log_gamma(r + n_pairs + j)
    total = total + log_gamma(n_pairs + 1.0) - log_gamma(n_pairs + r - 0.5) - log_gamma(n_pairs - 0.5)
    total = total - r * log_cutoff + (n_pairs * n_pairs + 2 * n_pairs * r - n_pairs) * _LOG2
    total = total + r * np.log1p(-x) + (1 - r) * _LOG2
    return np.exp(total) / (r * (2 * n_pairs + r - 1)) * _wronskian(n_pairs, r, x)


def _contour_residue(func, center: float, radius: float = _CONTOUR_RADIUS, nodes: int = _CONTOUR_NODES):
    """Residue via the trapezoid rule on a circle (spectrally accurate)."""
    angles = 2.0 * np.pi * np.arange(nodes) / nodes
    z = center + radius * np.exp(1j * angles)
    vals = func(z) * (z - center)
    return np.mean(vals, axis=-1)


def kernel_residue_at_minus_half(n_pairs: int, log_cutoff: float, theta):
    """Closed-form residue of the excised integrand at the simple pole r = -1/2.

    Vanishes identically for N = 1, where the Gamma factors cancel the pole.
    """
    th = np.asarray(theta, dtype=float)
    if n_pairs == 1:
        return 0.0 if th.ndim == 0 else np.zeros_like(th)
    x = np.cos(th)
    total = 0.0
    for j in range(1, n_pairs):
        total += np.real(
            log_gamma(2.0 + j) + log_gamma(0.5 + j) + log_gamma(float(j)) - log_gamma(n_pairs + j - 0.5)
        )
    total += np.real(
        log_gamma(n_pairs + 1.0) + log_gamma(0.5) - log_gamma(n_pairs - 1.0) - log_gamma(n_pairs - 0.5)
    )
    pref = -2.0 * np.exp(0.5 * log_cutoff + (n_pairs * n_pairs - 2 * n_pairs + 1.5) * _LOG2 + total)
    wr = np.real(_wronskian(n_pairs, np.asarray(-0.5 + 0.0j), x))
    out = pref * (1 - x) ** (-0.5) / (2 * n_pairs - 1.5) * wr
    return float(out) if out.ndim == 0 else out


def _ratio_integrand(n_pairs: int, log_cutoff: float, alpha):
    a = np.asarray(alpha, dtype=complex)
    total = np.zeros_like(a)
    for j in range(n_pairs):
        total = total + (
            log_gamma(float(n_pairs + j)) + log_gamma(a + 0.5 + j) - log_gamma(a + n_pairs + j) - log_gamma(0.5 + j)
        )
    return np.exp(total - a * log_cutoff + 2 * n_pairs * a * _LOG2) / a


def _ratio_residue_at_minus_half(n_pairs: int, log_cutoff: float) -> float:
    total = 0.0
    for j in range(1, n_pairs):
        total += np.real(
            log_gamma(float(n_pairs + j)) + log_gamma(float(j)) - log_gamma(n_pairs + j - 0.5) - log_gamma(0.5 + j)
        )
    total += np.real(log_gamma(float(n_pairs)) - log_gamma(n_pairs - 0.5) - log_gamma(0.5))
    return float(-np.exp(0.5 * log_cutoff + (1 - n_pairs) * _LOG2 + total))


@dataclass
class ResidueSeries:
    """Poles and residue coefficients of a left-half-plane residue expansion.

    `coefficients[k]` carries the exponential factor exp((k+1/2) X) stripped
    for the half-integer poles; the r = 0 coefficient (present when
    leading_term_included) is the raw residue.
    """

    pole_locations: np.ndarray
    coefficients: np.ndarray
    truncation_K: int
    leading_term_included: bool
    log_cutoff: float
    warning: bool = False

    def term_values(self) -> np.ndarray:
        # pole -(2k+1)/2 contributes exp((k+1/2) X) = exp(-pole * X)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            terms = self.coefficients * np.exp(-self.pole_locations * self.log_cutoff)
        return np.nan_to_num(terms, nan=0.0, posinf=0.0, neginf=0.0)

    def total(self) -> float:
        total = np.sum(self.term_values())
        return float(np.real(total))

    def to_json_dict(self) -> dict:
        return {
            "poles": [float(p) for p in self.pole_locations],
            "coefficients_re": [float(np.real(c)) for c in self.coefficients],
            "coefficients_im": [float(np.imag(c)) for c in self.coefficients],
            "K": int(self.truncation_K),
            "warning": bool(self.warning),
        }


@dataclass
class NormalizationResult:
    """Value of C_SO(2N)/C_X with its residue series and truncation diagnostics."""

    value: float
    tail_estimate: float
    warning: bool
    series: ResidueSeries = field(repr=False)

    def __float__(self) -> float:
        return self.value


def normalization_ratio(n_pairs: int, log_cutoff: float, truncation_K: int = 10, tol: float = 1e-10) -> NormalizationResult:
    """Haar probability that log Lambda >= X, as the residue series
    1 + (simple pole at -1/2, closed form) + sum of higher contour residues.

    The result lies in (0, 1]; a warning flag is set when the estimated tail
    (magnitude of the next pole's contribution) exceeds `tol`.
    """
    if log_cutoff >= 2 * n_pairs * _LOG2:
        raise DomainError("cutoff at or above the attainable maximum: ensemble is empty")
    if truncation_K < 1:
        raise DomainError("truncation_K must be >= 1")
    poles = [0.0, -0.5]
    # half-integer coefficients are stored with the factor exp((k+1/2) X) stripped
    coeffs = [1.0 + 0.0j, complex(_ratio_residue_at_minus_half(n_pairs, log_cutoff) / np.exp(0.5 * log_cutoff))]
    for k in range(1, truncation_K + 1):
        pole = -(2 * k + 1) / 2.0
        res = _contour_residue(lambda z: _ratio_integrand(n_pairs, log_cutoff, z), pole)
        poles.append(pole)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            coeff = complex(res * np.exp(pole * log_cutoff))
        coeffs.append(coeff if np.isfinite(coeff) else 0.0 + 0.0j)
    series = ResidueSeries(
        pole_locations=np.asarray(poles),
        coefficients=np.asarray(coeffs),
        truncation_K=truncation_K,
        leading_term_included=True,
        log_cutoff=log_cutoff,
    )
    next_pole = -(2 * (truncation_K + 1) + 1) / 2.0
    tail = abs(_contour_residue(lambda z: _ratio_integrand(n_pairs, log_cutoff, z), next_pole))
    series.warning = bool(tail > tol)
    value = series.total()
    return NormalizationResult(value=value, tail_estimate=float(tail), warning=series.warning, series=series)


@lru_cache(maxsize=128)
def _cached_ratio_value(n_pairs: int, log_cutoff: float, truncation_K: int) -> float:
    return normalization_ratio(n_pairs, log_cutoff, truncation_K).value


# ---------------------------------------------------------------------------
# line quadrature with asymptotic tail completion
# ---------------------------------------------------------------------------

def _leading_power(n_pairs: int) -> float:
    # |integrand(c + it)| ~ const * t^(-p) along vertical lines
    return n_pairs * n_pairs - 2 * n_pairs + 2 - (n_pairs - 1) / 2.0


def _ibp_tail(power: float, t0: float, d: float, c: float, levels: int = 6) -> complex:
    """int_T^inf exp(i t d) (c + i t)^(-power) dt by integration by parts."""
    out = 0.0 + 0.0j
    coeff = 1.0
    for j in range(levels):
        out += -coeff * np.exp(1j * t0 * d) * (c + 1j * t0) ** (-(power + j)) / (1j * d)
        coeff *= (power + j) / d
    return out


def _line_quadrature(n_pairs: int, log_cutoff: float, theta: float, c: float, t_upper=None, tol: float = 1e-10):
    """(1/2 pi) times the full vertical-line integral of the excised integrand
    at Re(r) = c, tail-completed with the fitted power-law model.

    Returns (value, tail_error_estimate); both exclude the C_X factor.
    """
    d = gap_margin(n_pairs, log_cutoff, theta)
    if d < 0:
        return 0.0, 0.0
    if t_upper is None:
        t_upper = min(max(3000.0, 60.0 / max(d, 1e-6)), 2.0e6)
    cap = np.pi / max(d, 0.2)
    edges = [0.0]
    t = 0.0
    while t < t_upper:
        t += min(max(0.2, t / 8.0), cap)
        edges.append(min(t, t_upper))
    edges = np.asarray(edges)
    mid = (edges[:-1] + edges[1:]) / 2.0
    half = (edges[1:] - edges[:-1]) / 2.0
    ts = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    main = np.sum(wts * excised_integrand(n_pairs, log_cutoff, theta, c + 1j * ts))
    # fit g(c+it) exp(-(c+it) d) ~ sum_a C_a (c+it)^-(p+a) near t_upper
    p = _leading_power(n_pairs)
    t_fit = np.linspace(0.55 * t_upper, t_upper, 16)
    u = c + 1j * t_fit
    rhs = excised_integrand(n_pairs, log_cutoff, theta, u) * np.exp(-u * d)
    basis = np.stack([u ** (-(p + a)) for a in range(3)], axis=1)
    coeff, *_ = np.linalg.lstsq(basis, rhs, rcond=None)
    fit_resid = float(np.max(np.abs(basis @ coeff - rhs)))
    tail = np.exp(c * d) * sum(coeff[a] * _ibp_tail(p + a, t_upper, d, c) for a in range(3))
    # the model mismatch integrates against t^-(p+3); bound it crudely by its value at t_upper
    tail_err = fit_resid * np.exp(c * d) * t_upper / max(d * t_upper, 1.0)
    value = 2.0 * float(np.real(main + tail)) / (2.0 * np.pi)
    return value, float(tail_err / (2.0 * np.pi))


def r1_excised_line_integral(n_pairs: int, log_cutoff: float, theta: float, c: float = 0.5, t_upper=None, tol: float = 1e-9) -> float:
    """Excised one-level density by direct quadrature of the vertical-line
    integral at Re(r) = c: the independent cross-check of `r1_excised`.

    Inside the hard gap the contour closes to the right and the value is 0.
    Raises DomainError when the truncation-tail estimate exceeds `tol`.
    """
    if c <= 0:
        raise DomainError("contour abscissa c must be positive")
    d = gap_margin(n_pairs, log_cutoff, theta)
    if abs(d) < 1e-12:
        raise DomainError("theta sits on the hard-gap boundary (d = 0): value is direction-dependent")
    if d < 0:
        return 0.0
    ratio = _cached_ratio_value(n_pairs, log_cutoff, 10)
    value, tail_err = _line_quadrature(n_pairs, log_cutoff, theta, c, t_upper, tol)
    cx_over_cso = 1.0 / ratio
    if tail_err * c_so2n(n_pairs) * cx_over_cso > tol:
        raise DomainError(
            f"line-integral tail estimate {tail_err:.2e} exceeds tolerance {tol:.2e}; increase t_upper"
        )
    return c_so2n(n_pairs) * cx_over_cso * value


# ---------------------------------------------------------------------------
# excised one-level density (residues, with line fallback near the gap edge)
# ---------------------------------------------------------------------------

def _residue_sum_grid(n_pairs: int, log_cutoff: float, thetas: np.ndarray, truncation_K: int):
    """Residue-series sum (without C_X) and per-theta tail estimate on a grid."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    total = r1_so2n_unscaled(n_pairs, thetas) / c_so2n(n_pairs)
    total = total + kernel_residue_at_minus_half(n_pairs, log_cutoff, thetas)
    th_col = thetas[:, None]
    for k in range(1, truncation_K + 1):
        pole = -(2 * k + 1) / 2.0
        res = _contour_residue(lambda z: excised_integrand(n_pairs, log_cutoff, th_col, z), pole)
        total = total + np.real(res)
    next_pole = -(2 * (truncation_K + 1) + 1) / 2.0
    tail = np.abs(_contour_residue(lambda z: excised_integrand(n_pairs, log_cutoff, th_col, z), next_pole))
    return total, tail


def r1_excised_grid(n_pairs: int, log_cutoff: float, thetas, truncation_K: int = 10, tol: float = 1e-9) -> np.ndarray:
    """Excised one-level density on a grid of angles (vectorized residue sums).

    Zero on the hard gap (the boundary d = 0 is assigned to the gap).  Where
    the residue-series tail estimate exceeds `tol` (a strip adjoining the gap
    edge, where the series converges only algebraically) the value is
    recomputed through the line-contour representation.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    out = np.zeros_like(thetas)
    margins = gap_margin(n_pairs, log_cutoff, thetas)
    live = margins > 0
    if not np.any(live):
        return out
    ratio = _cached_ratio_value(n_pairs, log_cutoff, max(truncation_K, 10))
    cx = c_so2n(n_pairs) / ratio
    sums, tails = _residue_sum_grid(n_pairs, log_cutoff, thetas[live], truncation_K)
    vals = cx * sums
    bad = cx * tails > tol
    if np.any(bad):
        idx = np.nonzero(bad)[0]
        live_thetas = thetas[live]
        for i in idx:
            value, _ = _line_quadrature(n_pairs, log_cutoff, float(live_thetas[i]), 0.5, None, tol)
            vals[i] = cx * value
    out[live] = np.maximum(vals, 0.0)
    return out


def r1_excised(n_pairs: int, log_cutoff: float, theta, truncation_K: int = 10, tol: float = 1e-9):
    """Excised one-level density R_1 at a single angle (or array of angles)."""
    if np.ndim(theta) == 0:
        return float(r1_excised_grid(n_pairs, log_cutoff, np.asarray([theta], float), truncation_K, tol)[0])
    return r1_excised_grid(n_pairs, log_cutoff, theta, truncation_K, tol)


def r1_excised_detail(n_pairs: int, log_cutoff: float, theta: float, truncation_K: int = 10, tol: float = 1e-9):
    """Single-angle evaluation with diagnostics.

    Returns (value, tail_estimate, warning, used_line_route); the tail
    estimate is the magnitude of the first omitted pole's contribution
    (scaled by C_X), per the truncation-error model O(exp(-c_K X)).
    """
    margin = gap_margin(n_pairs, log_cutoff, theta)
    if margin <= 0:
        return 0.0, 0.0, False, False
    ratio = _cached_ratio_value(n_pairs, log_cutoff, max(truncation_K, 10))
    cx = c_so2n(n_pairs) / ratio
    sums, tails = _residue_sum_grid(n_pairs, log_cutoff, np.asarray([theta]), truncation_K)
    tail = float(cx * tails[0])
    if tail <= tol:
        return float(cx * sums[0]), tail, False, False
    value, tail_err = _line_quadrature(n_pairs, log_cutoff, float(theta), 0.5, None, tol)
    return float(cx * value), float(cx * tail_err), bool(cx * tail_err > tol), True


# ---------------------------------------------------------------------------
# density grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityGrid:
    """Analytic one-level density values on an ascending theta grid."""

    thetas: np.ndarray
    values: np.ndarray
    n_pairs: int
    log_cutoff: float

    def __post_init__(self):
        if np.any(np.diff(self.thetas) <= 0):
            raise DomainError("theta grid must be strictly ascending")
        if np.any(self.values < 0):
            raise DomainError("density values must be nonnegative")


def density_grid(n_pairs: int, log_cutoff: float, thetas, truncation_K: int = 10) -> DensityGrid:
    values = r1_excised_grid(n_pairs, log_cutoff, np.asarray(thetas, float), truncation_K)
    return DensityGrid(np.asarray(thetas, float), values, n_pairs, log_cutoff)


def write_density_csv(grid: DensityGrid, path) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["theta", "r1"])
        for t, v in zip(grid.thetas, grid.values):
            writer.writerow([repr(float(t)), repr(float(v))])
