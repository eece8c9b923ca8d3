"""
Dispersion function D_eps(z), the Gamma matrix and the rank-two resolvent correction

All formulas are written once on numpy arrays; the scalar entry points wrap
them for SheetPoint input. The z-branch and the (z-1)-branch carry independent
sheet indices.
"""
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.special import log1p

from app.config.settings import logger
from app.services.errors import BranchPointError, InvalidConfigError, PoleError
from app.services.riemann import (
    A_CONST, Dimension, SheetPoint, branch_sqrt, check_sheet, g_values, green_kernel,
    threshold_profile,
)

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class ModelParams:
    """
    Parameters (d, theta0, c, b, eps) of the two-channel Hamiltonian H_eps.

    eps = 0 describes the uncoupled Hamiltonian H_0; the solvers require eps > 0.
    """
    d: int
    theta0: float
    c: float
    epsilon: float
    b: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'd', Dimension.check(self.d))
        for name in ('theta0', 'c', 'epsilon', 'b'):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise InvalidConfigError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.epsilon < 0:
            raise InvalidConfigError(f"epsilon must be >= 0, got {self.epsilon}")

    @property
    def theta1(self):
        return {Dimension.ONE: 2.0, Dimension.TWO: A_CONST, Dimension.THREE: -FOUR_PI}[self.d]

    @property
    def theta1_eps(self):
        return self.theta1 + self.c * self.epsilon

    @property
    def coupling_sq(self):
        """b^2 eps^2."""
        return (self.b * self.epsilon) ** 2

    @property
    def p_coefficient(self):
        """P = theta0 (a + c eps) - b^2 eps^2, the d=2 combination."""
        return self.theta0 * self.theta1_eps - self.coupling_sq

    def with_epsilon(self, epsilon):
        return replace(self, epsilon=epsilon)

    def decoupled(self):
        return replace(self, b=0.0)

    def require_perturbed(self):
        if self.epsilon <= 0:
            raise InvalidConfigError("solvers need epsilon > 0")
        return self


@dataclass(frozen=True)
class GammaMatrix:
    """Numerator matrix of the resolvent correction; Gamma_21 is Gamma_12 by construction."""
    g11: complex
    g12: complex
    g22: complex

    @property
    def g21(self):
        return self.g12

    def __getitem__(self, index):
        i, j = index
        if (i, j) == (0, 0):
            return self.g11
        if (i, j) == (1, 1):
            return self.g22
        if {i, j} == {0, 1}:
            return self.g12
        raise IndexError(f"channel indices must be 0 or 1, got {index}")

    def as_array(self):
        return np.array([[self.g11, self.g12], [self.g12, self.g22]], dtype=complex)


@dataclass(frozen=True)
class SpectrumSummary:
    point_spectrum: list
    threshold_eigenvalue_present: bool
    bound_state_profile: Callable


def _branches(values, sheet, z_minus_1_sheet):
    values = np.asarray(values, dtype=complex)
    return values, branch_sqrt(values, sheet), branch_sqrt(values - 1.0, z_minus_1_sheet)


def _scalar(result):
    result = np.asarray(result)
    return result[()] if result.ndim == 0 else result


def _one_plus_it(values, t):
    """1 + i sqrt(z-1), through (1 + i t)(1 - i t) = z on the side where it is small."""
    direct = 1.0 + 1j * t
    conjugate = 1.0 - 1j * t
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(np.abs(conjugate) >= np.abs(direct), values / conjugate, direct)


def _d2_factors(params, values, sheet, z_minus_1_sheet):
    """
    u = theta1_eps + P g(z), v = theta0 + P g(z-1) and D_eps = u v - b^2 eps^2 for d=2.

    Near the origin g(z-1) = log1p(-z)/(4 pi) - 1/a (- i/2 on sheet -1) and the
    O(1) parts of u v - b^2 eps^2 are cancelled by hand.

    Returns:
        tuple: (u, v, D_eps, scale), scale bounding the moduli D_eps is summed from
    """
    theta0, ceps, b2e2 = params.theta0, params.c * params.epsilon, params.coupling_sq
    p = params.p_coefficient
    g0 = g_values(values, sheet)
    u = params.theta1_eps + p * g0
    shift = -0.5j if z_minus_1_sheet == -1 else 0.0
    with np.errstate(divide='ignore', invalid='ignore'):
        log_upper = log1p(-values) / FOUR_PI + shift
        g1 = g_values(values - 1.0, z_minus_1_sheet)
    near = np.abs(values) < 0.5
    head = (b2e2 - theta0 * ceps) / A_CONST
    v = np.where(near, head + p * log_upper, theta0 + p * g1)
    value = np.where(near, head * (ceps + p * g0) - theta0 * ceps + u * p * log_upper, u * v - b2e2)
    scale = np.where(
        near,
        np.abs(head) * (abs(ceps) + np.abs(p * g0)) + abs(theta0 * ceps) + np.abs(u * p * log_upper),
        np.abs(u) * (abs(theta0) + np.abs(p * g1)) + b2e2)
    return u, v, value, scale


def d_epsilon_values(params, values, sheet=0, z_minus_1_sheet=0):
    """
    D_eps on an array of energies.

    Args:
        params (ModelParams): Model parameters
        values (complex or ndarray): Energies z
        sheet (int): Sheet of sqrt(z), ln(z)
        z_minus_1_sheet (int): Sheet of sqrt(z-1), ln(z-1)

    Returns:
        complex or ndarray: D_eps(z)
    """
    values, s, t = _branches(values, sheet, z_minus_1_sheet)
    theta0, ceps = params.theta0, params.c * params.epsilon
    if params.d == Dimension.ONE:
        return _scalar(params.coupling_sq - (theta0 + 2j * s) * (2.0 * _one_plus_it(values, t) + ceps))
    if params.d == Dimension.TWO:
        return _scalar(_d2_factors(params, values, sheet, z_minus_1_sheet)[2])
    k = _one_plus_it(values, t) - 1j * ceps / FOUR_PI * t
    return _scalar((1.0 - 1j * theta0 / FOUR_PI * s) * k + (params.b * params.epsilon / FOUR_PI) ** 2 * t * s)


def d_epsilon_scale(params, values, sheet=0, z_minus_1_sheet=0):
    """Sum of the moduli D_eps is assembled from; its rounding error is a few ulps of this."""
    values, s, t = _branches(values, sheet, z_minus_1_sheet)
    theta0, ceps = params.theta0, params.c * params.epsilon
    if params.d == Dimension.ONE:
        inner = 2.0 * np.abs(_one_plus_it(values, t)) + abs(ceps)
        return _scalar(params.coupling_sq + np.abs(theta0 + 2j * s) * inner)
    if params.d == Dimension.TWO:
        return _scalar(_d2_factors(params, values, sheet, z_minus_1_sheet)[3])
    inner = np.abs(_one_plus_it(values, t)) + abs(ceps) / FOUR_PI * np.abs(t)
    coupling = (params.b * params.epsilon / FOUR_PI) ** 2
    return _scalar(np.abs(1.0 - 1j * theta0 / FOUR_PI * s) * inner + coupling * np.abs(t * s))


def d_epsilon_derivative(params, values, sheet=0, z_minus_1_sheet=0):
    """Closed-form dD_eps/dz on fixed sheets (chain rule through sqrt and ln)."""
    values, s, t = _branches(values, sheet, z_minus_1_sheet)
    theta0, ceps = params.theta0, params.c * params.epsilon
    if params.d == Dimension.ONE:
        return _scalar(-(1j / s) * (2.0 * _one_plus_it(values, t) + ceps) - (theta0 + 2j * s) * (1j / t))
    if params.d == Dimension.TWO:
        p = params.p_coefficient
        u, v, _, _ = _d2_factors(params, values, sheet, z_minus_1_sheet)
        return _scalar(p / (FOUR_PI * values) * v + u * p / (FOUR_PI * (values - 1.0)))
    kappa = 1.0 - ceps / FOUR_PI
    f = 1.0 - 1j * theta0 / FOUR_PI * s
    k = _one_plus_it(values, t) - 1j * ceps / FOUR_PI * t
    coupling = (params.b * params.epsilon / FOUR_PI) ** 2
    return _scalar((-1j * theta0 / FOUR_PI) / (2.0 * s) * k + f * (1j * kappa / (2.0 * t))
                   + coupling * (s / (2.0 * t) + t / (2.0 * s)))


def _check_branch_point(params, z, z_minus_1_sheet):
    check_sheet(z_minus_1_sheet)
    if params.d == Dimension.TWO and z.value in (0, 1):
        raise BranchPointError(f"ln is singular at z = {z.value.real:g} in d=2")


def d_epsilon(params, z, z_minus_1_sheet=0):
    _check_branch_point(params, z, z_minus_1_sheet)
    return complex(d_epsilon_values(params, z.value, z.sheet, z_minus_1_sheet))


def gamma_matrix(params, z, z_minus_1_sheet=0):
    """
    Gamma_eps,ij(z) for the dimension in params.

    Args:
        params (ModelParams): Model parameters
        z (SheetPoint): Energy and sheet of sqrt(z)
        z_minus_1_sheet (int): Sheet of sqrt(z-1)

    Returns:
        GammaMatrix: the three independent entries
    """
    _check_branch_point(params, z, z_minus_1_sheet)
    values, s, t = _branches(z.value, z.sheet, z_minus_1_sheet)
    opi = complex(_one_plus_it(values, t))
    s, t = complex(s), complex(t)
    theta0, c, eps, b = params.theta0, params.c, params.epsilon, params.b
    b2e2 = params.coupling_sq
    if params.d == Dimension.ONE:
        g11 = -2j * s * (-b2e2 + theta0 * (2.0 * opi + c * eps))
        g12 = 4.0 * b * eps * t * s
        g22 = -2j * t * (-b2e2 + (2.0 + c * eps) * (2j * s + theta0))
    elif params.d == Dimension.TWO:
        p = params.p_coefficient
        u, v, _, _ = _d2_factors(params, values, z.sheet, z_minus_1_sheet)
        g11 = complex(v) * p
        g12 = b * eps * p
        g22 = complex(u) * p
    else:
        g11 = theta0 * (opi - 1j * c * eps / FOUR_PI * t) - b2e2 * t / (FOUR_PI * 1j)
        g12 = b * eps
        g22 = (-FOUR_PI + c * eps) * (1.0 - 1j * theta0 / FOUR_PI * s) - b2e2 * s / (FOUR_PI * 1j)
    return GammaMatrix(complex(g11), complex(g12), complex(g22))


def resolvent_correction_kernel(params, z, x, x_prime, i, j, z_minus_1_sheet=0):
    """
    Second term of the resolvent: Gamma_ij/D * G^(z-k_i)(x) * G^(z-k_j)(x').

    Channel 0 has threshold k = 0 and channel 1 has threshold k = 1.

    Raises:
        PoleError: D_eps(z) = 0, i.e. z is a spectral singularity
    """
    if i not in (0, 1) or j not in (0, 1):
        raise InvalidConfigError(f"channels must be 0 or 1, got ({i}, {j})")
    denominator = d_epsilon(params, z, z_minus_1_sheet)
    if denominator == 0 or not np.isfinite(denominator):
        raise PoleError(f"D_eps vanishes at z = {z.value}", z=z.value)
    gamma = gamma_matrix(params, z, z_minus_1_sheet)

    def channel_green(channel, distance):
        if channel == 0:
            return green_kernel(params.d, z, distance)
        return green_kernel(params.d, SheetPoint(z.value - 1.0, z_minus_1_sheet), distance)

    return gamma[i, j] / denominator * channel_green(i, x) * channel_green(j, x_prime)


def decoupled_eigenvalue(params):
    """
    Eigenvalue of the uncoupled (b = 0) Hamiltonian near the origin.

    Returns:
        float: 1 - theta1^2/4 (d=1), 1 - exp(4 pi (1/a - 1/theta1)) (d=2),
            1 - (4 pi)^2/theta1^2 (d=3), with theta1 = theta1_eps
    """
    ceps = params.c * params.epsilon
    if params.d == Dimension.ONE:
        return -ceps * (1.0 + ceps / 4.0)
    theta1 = params.theta1_eps
    if params.d == Dimension.TWO:
        return float(-np.expm1(FOUR_PI * (1.0 / A_CONST - 1.0 / theta1)))
    return 1.0 - (FOUR_PI / theta1) ** 2


def unperturbed_spectrum(params):
    """Point spectrum and threshold bound state of H_0 (eps = 0)."""
    if params.epsilon != 0:
        raise InvalidConfigError("unperturbed_spectrum needs epsilon = 0")
    theta0 = params.theta0
    energies = [0.0]
    if params.d == Dimension.ONE and theta0 > 0:
        energies.insert(0, -theta0 ** 2 / 4.0)
    elif params.d == Dimension.TWO and theta0 != 0:
        energies.insert(0, -float(np.exp(FOUR_PI * (1.0 / A_CONST - 1.0 / theta0))))
    elif params.d == Dimension.THREE and theta0 < 0:
        energies.insert(0, -(FOUR_PI / theta0) ** 2)

    def profile(channel, x):
        if channel == 0:
            return 0j
        if channel == 1:
            return threshold_profile(params.d, x)
        raise InvalidConfigError(f"channel must be 0 or 1, got {channel}")

    return SpectrumSummary(energies, True, profile)


def _one_minus_sqrt1p(lam):
    """1 - sqrt(1 + lam) without cancellation."""
    return -lam / (1.0 + np.sqrt(1.0 + lam))


def negative_axis_d_log(params, mu):
    """d=2 D_eps(-lambda) on sheet 0 as a real function of mu = ln(lambda)."""
    if params.d != Dimension.TWO:
        raise InvalidConfigError("the log-scale evaluator is for d=2")
    mu = np.asarray(mu, dtype=float)
    p = params.p_coefficient
    g0 = mu / FOUR_PI - 1.0 / A_CONST
    g1 = np.logaddexp(0.0, mu) / FOUR_PI - 1.0 / A_CONST
    result = (params.theta1_eps + p * g0) * (params.theta0 + p * g1) - params.coupling_sq
    return result[()] if result.ndim == 0 else result


def negative_axis_d(params, lam):
    """
    D_eps(-lambda) on sheet 0, which is real for lambda > 0.

    Args:
        params (ModelParams): Model parameters
        lam (float or ndarray): lambda >= 0 (> 0 in d=2)

    Returns:
        float or ndarray: D_eps(-lambda)
    """
    lam = np.asarray(lam, dtype=float)
    if params.d == Dimension.TWO:
        if np.any(lam <= 0):
            raise BranchPointError("d=2 D_eps(-lambda) needs lambda > 0")
        return negative_axis_d_log(params, np.log(lam))
    theta0, ceps = params.theta0, params.c * params.epsilon
    root = np.sqrt(lam)
    if params.d == Dimension.ONE:
        result = params.coupling_sq - (theta0 - 2.0 * root) * (2.0 * _one_minus_sqrt1p(lam) + ceps)
    else:
        upper = np.sqrt(1.0 + lam)
        k = _one_minus_sqrt1p(lam) + ceps / FOUR_PI * upper
        result = (1.0 + theta0 * root / FOUR_PI) * k - (params.b * params.epsilon / FOUR_PI) ** 2 * root * upper
    return result[()] if result.ndim == 0 else result


def vertical_asymptote_log(params):
    """
    log(lambda_a,eps) = 4 pi (1/a - A/P) for d=2, where the rearranged
    real-axis equation has its vertical asymptote; None when P = 0 or d != 2.
    """
    if params.d != Dimension.TWO:
        return None
    p = params.p_coefficient
    if p == 0:
        logger.debug("P = 0: no vertical asymptote")
        return None
    return float(FOUR_PI * (1.0 / A_CONST - params.theta1_eps / p))
