"""
Locating spectral singularities of H_eps near the threshold z = 0

Resonances come from fixed-point recursions on the analytically continued
dispersion relation and are cross-checked by Newton's method with a
closed-form derivative. Isolated eigenvalues are bracketed on the negative
real axis, where D_eps is real, and solved with brentq.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from app.config.settings import EPS_MAX, MAX_ITER, NEWTON_MAX_ITER, SCAN_MAX, SCAN_MIN, GRID_N, TOL, logger
from app.services.dispersion import (
    FOUR_PI, d_epsilon_derivative, d_epsilon_scale, d_epsilon_values, decoupled_eigenvalue, negative_axis_d,
    negative_axis_d_log, vertical_asymptote_log,
)
from app.services.errors import (
    BracketError, ConvergenceError, EigenvalueRangeError, IllConditionedError,
    IncompleteClusterError, InvalidConfigError, ResonanceError, SplitBracketError,
    UnsupportedRegimeError,
)
from app.services.riemann import A_CONST, Dimension, branch_sqrt, g_values

# largest mu = ln(lambda) whose exponential is a finite double
LOG_MAX = float(np.log(np.finfo(float).max))
LOG_TINY = float(np.log(np.finfo(float).tiny))
DIVERGENCE_RADIUS = 10.0
RICHARDSON_LEVELS = (1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
# absolute step floor per unit of summand scale
ROUNDING = 16.0 * np.finfo(float).eps
# Newton gives up when |D'| <= ILL_CONDITIONED * |D|
ILL_CONDITIONED = 1e-14


class Sign(str, Enum):
    NEGATIVE = 'neg'
    ZERO = 'zero'
    POSITIVE = 'pos'

    @classmethod
    def of(cls, value):
        if value < 0:
            return cls.NEGATIVE
        if value > 0:
            return cls.POSITIVE
        return cls.ZERO

    @property
    def symbol(self):
        return {'neg': '<0', 'zero': '=0', 'pos': '>0'}[self.value]


class SingularityKind(str, Enum):
    ISOLATED_EIGENVALUE = 'isolated_eigenvalue'
    RESONANCE = 'resonance'
    ZERO_ENERGY_RESONANCE = 'zero_energy_resonance'
    VIRTUAL_STATE = 'virtual_state'


class Method(str, Enum):
    FIXED_POINT = 'fixed_point'
    NEWTON = 'newton'
    BISECTION = 'bisection'
    LIMIT_DETECTOR = 'limit_detector'


@dataclass(frozen=True)
class Regime:
    """One (d, sign c, theta0 class) cell of the near-threshold classification."""
    d: int
    c_sign: Sign
    theta0_class: Sign

    @property
    def label(self):
        return f"d={int(self.d)}, c{self.c_sign.symbol}, theta0{self.theta0_class.symbol}"

    @property
    def case_number(self):
        """
        Numbered case of the classification: 1 (c<0, d<=2, theta0!=0), 2 (c<0, d<=2,
        theta0=0), 3 (c<0, d=3), 4, 5, 6 (c=0 in d=1, 2, 3) and 7 (c>0).
        """
        if self.c_sign == Sign.NEGATIVE:
            if self.d == Dimension.THREE:
                return 3
            return 2 if self.theta0_class == Sign.ZERO else 1
        if self.c_sign == Sign.ZERO:
            return 3 + int(self.d)
        return 7

    @property
    def has_resonance(self):
        if self.c_sign == Sign.NEGATIVE:
            return True
        return (self.c_sign == Sign.ZERO and self.d != Dimension.THREE
                and self.theta0_class == Sign.POSITIVE)

    @property
    def has_cluster(self):
        return self.d == Dimension.ONE and self.c_sign == Sign.ZERO and self.theta0_class == Sign.ZERO

    @property
    def has_threshold_eigenvalue(self):
        if self.c_sign == Sign.POSITIVE:
            return True
        if self.c_sign == Sign.NEGATIVE:
            return self.d != Dimension.THREE and self.theta0_class == Sign.ZERO
        return self.d != Dimension.THREE and self.theta0_class != Sign.POSITIVE

    @property
    def has_runaway_eigenvalue(self):
        return self.d == Dimension.TWO and self.theta0_class == Sign.ZERO

    @property
    def has_zero_resonance(self):
        return self.d == Dimension.THREE and self.c_sign == Sign.ZERO

    @property
    def has_virtual_state(self):
        return self.has_zero_resonance and self.theta0_class == Sign.ZERO

    @property
    def has_continued_zeros(self):
        """Zeros of the continued D_eps on sheet -1 next to the c > 0 eigenvalue."""
        return self.c_sign == Sign.POSITIVE and self.d != Dimension.THREE and self.theta0_class == Sign.ZERO

    @property
    def has_bound_state_continuation(self):
        if self.d == Dimension.ONE:
            return self.theta0_class == Sign.POSITIVE
        if self.d == Dimension.TWO:
            return self.theta0_class != Sign.ZERO
        return self.theta0_class == Sign.NEGATIVE


def classify_regime(params):
    return Regime(params.d, Sign.of(params.c), Sign.of(params.theta0))


@dataclass
class IterationTrace:
    iterates: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    converged: bool = False
    final_residual: float = float('nan')


@dataclass(frozen=True)
class Singularity:
    kind: SingularityKind
    location: complex
    sheet: int
    method: Method
    residual: float
    z_minus_1_sheet: int = 0
    iterations: int = 0

    @property
    def energy(self):
        """Location as a real number for real-axis kinds, complex otherwise."""
        if self.kind in (SingularityKind.ISOLATED_EIGENVALUE, SingularityKind.VIRTUAL_STATE):
            return self.location.real
        return self.location


@dataclass(frozen=True)
class ZeroResonanceReport:
    detected: bool
    coefficient: complex
    behavior: str

    def __iter__(self):
        return iter((self.detected, self.coefficient))


def _residual(params, z, sheet, z_minus_1_sheet=0):
    return float(abs(d_epsilon_values(params, z, sheet, z_minus_1_sheet)))


def _recursion_map(params, z, sheet):
    """
    One step z -> z' of the dimension's recursion, (z-1)-branch on sheet 0.

    Returns:
        tuple: (z', scale), scale bounding the moduli z' is summed from
    """
    theta0, ceps, b2e2 = params.theta0, params.c * params.epsilon, params.coupling_sq
    if params.d == Dimension.ONE:
        s = branch_sqrt(z, sheet)
        u = b2e2 / (2.0 * (theta0 + 2j * s))
        w = u - ceps / 2.0
        return w * (2.0 - w), (abs(u) + abs(ceps) / 2.0) * (2.0 + abs(w))
    if params.d == Dimension.TWO:
        # 1/a - (1 + theta0 g)/(theta1_eps + P g) with the O(1) parts cancelled
        p = params.p_coefficient
        lift = theta0 * ceps - b2e2
        if z == 0:
            r = FOUR_PI * lift / (A_CONST * p)
            scale = abs(r)
        else:
            g = g_values(z, sheet)
            denominator = A_CONST * (params.theta1_eps + p * g)
            r = FOUR_PI * (ceps + lift * g) / denominator
            scale = FOUR_PI * (abs(ceps) + abs(lift * g)) / abs(denominator)
        z_new = -np.expm1(complex(r))
        return z_new, scale * (1.0 + abs(z_new))
    s = branch_sqrt(z, sheet)
    t = branch_sqrt(z - 1.0, 0)
    kappa_minus_1 = -ceps / FOUR_PI
    kappa = 1.0 + kappa_minus_1
    q = (params.b * params.epsilon / FOUR_PI) ** 2 * t * s / (1.0 - 1j * theta0 * s / FOUR_PI)
    z_new = (kappa_minus_1 - q) * (kappa + 1.0 + q) / kappa ** 2
    return z_new, (abs(kappa_minus_1) + abs(q)) * (abs(kappa) + 1.0 + abs(q)) / kappa ** 2


def _iterate(params, z0, sheet, tol, max_iter):
    trace = IterationTrace(iterates=[complex(z0)])
    z = complex(z0)
    previous_step = None
    step = float('nan')
    for k in range(1, max_iter + 1):
        z_new, scale = _recursion_map(params, z, sheet)
        z_new = complex(z_new)
        if not np.isfinite(z_new):
            trace.final_residual = float('nan')
            raise ConvergenceError(f"Recursion left the finite plane at step {k}.", trace)
        step = abs(z_new - z)
        trace.iterates.append(z_new)
        if previous_step:
            trace.ratios.append(step / previous_step)
        previous_step = step
        z = z_new
        # steps cannot shrink below the rounding of the map itself
        if step <= tol * abs(z) + ROUNDING * scale:
            trace.converged = True
            trace.final_residual = _residual(params, z, sheet)
            logger.debug(f"recursion converged after {k} steps: z={z}")
            return z, trace
    trace.final_residual = _residual(params, z, sheet)
    raise ConvergenceError(f"Fixed point iteration did not converge, last step {step:.1e}.", trace)


def _resonance_seed(params, regime):
    if regime.c_sign == Sign.NEGATIVE and regime.theta0_class == Sign.ZERO:
        if params.d == Dimension.ONE:
            return abs(params.c) * params.epsilon
        return FOUR_PI * abs(params.c) * params.epsilon / A_CONST ** 2
    return 0j


def _check_eps(params, eps_max):
    params.require_perturbed()
    if params.epsilon > eps_max:
        raise InvalidConfigError(f"epsilon={params.epsilon} exceeds eps_max={eps_max}")


def resonance_fixed_point(params, regime=None, tol=TOL, max_iter=MAX_ITER, eps_max=EPS_MAX):
    """
    Resonance near the origin as the fixed point of the dimension's recursion.

    The z-branch is on sheet -1 and the (z-1)-branch on sheet 0.

    Args:
        params (ModelParams): Model parameters, eps > 0
        regime (Regime): Cell of params, classified when omitted
        tol (float): Relative step tolerance
        max_iter (int): Iteration cap

    Returns:
        tuple: (Singularity, IterationTrace)

    Raises:
        UnsupportedRegimeError: the cell has no resonance
        ConvergenceError: no convergence within max_iter, carries the trace
    """
    regime = regime or classify_regime(params)
    if not regime.has_resonance:
        raise UnsupportedRegimeError(f"no resonance near threshold for {regime.label}")
    _check_eps(params, eps_max)
    z, trace = _iterate(params, _resonance_seed(params, regime), -1, tol, max_iter)
    if z.imag >= 0:
        logger.warning(f"recursion for {regime.label} converged to z={z} with Im z >= 0")
    logger.info(f"Resonance ({regime.label}, eps={params.epsilon:g}): z={z}, "
                f"{len(trace.iterates) - 1} steps, |D|={trace.final_residual:.2e}")
    singularity = Singularity(SingularityKind.RESONANCE, z, -1, Method.FIXED_POINT,
                              trace.final_residual, 0, len(trace.iterates) - 1)
    return singularity, trace


def _eigenvalue_seed(params, regime):
    eps = params.epsilon
    if params.d == Dimension.ONE and regime.theta0_class == Sign.ZERO:
        return -eps ** (4.0 / 3.0) / 2.0 ** (2.0 / 3.0)
    if params.d == Dimension.ONE:
        return -eps ** 2 / abs(params.theta0)
    return -FOUR_PI * eps ** 2 / (A_CONST ** 2 * abs(params.theta0))


def eigenvalue_fixed_point(params, regime=None, tol=TOL, max_iter=MAX_ITER, eps_max=EPS_MAX):
    """Eigenvalue recursions of the c = 0 cells (d=1 with theta0 <= 0, d=2 with theta0 < 0)."""
    regime = regime or classify_regime(params)
    supported = regime.c_sign == Sign.ZERO and (
        (params.d == Dimension.ONE and regime.theta0_class != Sign.POSITIVE)
        or (params.d == Dimension.TWO and regime.theta0_class == Sign.NEGATIVE))
    if not supported:
        raise UnsupportedRegimeError(f"no eigenvalue recursion for {regime.label}")
    _check_eps(params, eps_max)
    z, trace = _iterate(params, complex(_eigenvalue_seed(params, regime), 0.0), 0, tol, max_iter)
    location = complex(z.real, 0.0)
    singularity = Singularity(SingularityKind.ISOLATED_EIGENVALUE, location, 0, Method.FIXED_POINT,
                              _residual(params, location, 0), 0, len(trace.iterates) - 1)
    return singularity, trace


def _classify_root(z, sheet):
    if sheet == 0:
        return SingularityKind.ISOLATED_EIGENVALUE
    if z.imag == 0 and z.real < 0:
        return SingularityKind.VIRTUAL_STATE
    return SingularityKind.RESONANCE


def newton_oracle(params, seed, sheets=(-1, 0), tol=TOL, max_iter=NEWTON_MAX_ITER):
    """
    Newton's method on D_eps with the closed-form derivative, on fixed sheets.

    Args:
        params (ModelParams): Model parameters
        seed (complex): Starting point, inside |z| < 1/2 for near-threshold roots
        sheets (tuple): (sheet of z, sheet of z-1)
        tol (float): Relative step tolerance
        max_iter (int): Iteration cap

    Returns:
        Singularity: the zero, classified by sheet

    Raises:
        IllConditionedError: derivative vanishes or the step is not finite
        ConvergenceError: divergence or no convergence within max_iter
    """
    n_z, n_z1 = sheets
    z = complex(seed)
    step = float('nan')
    for it in range(1, max_iter + 1):
        value = complex(d_epsilon_values(params, z, n_z, n_z1))
        if value == 0:
            break
        fprime = complex(d_epsilon_derivative(params, z, n_z, n_z1))
        if not np.isfinite(fprime) or abs(fprime) <= ILL_CONDITIONED * abs(value):
            raise IllConditionedError(f"Derivative {fprime} too small against D={value} at z={z}.")
        step = value / fprime
        z = z - step
        if abs(z) > DIVERGENCE_RADIUS:
            raise ConvergenceError(f"Newton iteration diverged to |z|={abs(z):.2e}.")
        # D carries rounding of ROUNDING * scale, which moves z by that over |D'|
        floor = ROUNDING * float(d_epsilon_scale(params, z, n_z, n_z1)) / abs(fprime)
        if abs(step) <= tol * abs(z) + floor:
            break
    else:
        raise ConvergenceError(f"Failed to converge after {max_iter} iterations, last step {abs(step):.1e}.")
    if abs(z.imag) <= 1e-12 * abs(z) and (n_z == 0 or z.real < 0):
        z = complex(z.real, 0.0)
    kind = _classify_root(z, n_z)
    return Singularity(kind, z, n_z, Method.NEWTON, _residual(params, z, n_z, n_z1), n_z1, it)


def _bisection_result(params, lam, residual):
    location = complex(-lam, 0.0)
    logger.info(f"Eigenvalue (d={int(params.d)}, eps={params.epsilon:g}): E={-lam!r}, |D|={residual:.2e}")
    return Singularity(SingularityKind.ISOLATED_EIGENVALUE, location, 0, Method.BISECTION, residual)


def _brentq_signed(func, lo, hi):
    f_lo, f_hi = func(lo), func(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(f"No sign change of D_eps(-lambda) on [{lo!r}, {hi!r}].")
    return brentq(func, lo, hi, xtol=1e-300 + 1e-16 * max(abs(lo), abs(hi)), rtol=4 * np.finfo(float).eps,
                  maxiter=500)


def _mu_bracket_solve(params, mu_lo, mu_hi):
    mu = _brentq_signed(lambda m: float(negative_axis_d_log(params, m)), mu_lo, mu_hi)
    if mu > LOG_MAX:
        raise EigenvalueRangeError(f"eigenvalue at ln(lambda)={mu:.6g} overflows", mu)
    return mu


def eigenvalue_bisection(params, bracket, tol=TOL):
    """
    Isolated eigenvalue -lambda* with lambda* inside bracket.

    Args:
        params (ModelParams): Model parameters
        bracket (tuple): (lambda_lo, lambda_hi), 0 <= lambda_lo < lambda_hi
        tol (float): Residual tolerance relative to the bracket-end scale

    Returns:
        Singularity: kind isolated_eigenvalue on sheet 0

    Raises:
        BracketError: D_eps(-lambda) has no sign change on the bracket
        SplitBracketError: d=2 bracket contains the vertical asymptote lambda_a,eps
    """
    lo, hi = sorted(float(v) for v in bracket)
    if lo < 0 or lo == hi:
        raise InvalidConfigError(f"invalid eigenvalue bracket {bracket}")
    if params.d == Dimension.TWO:
        mu_lo = np.log(lo) if lo > 0 else LOG_TINY
        mu_hi = np.log(hi)
        asymptote = vertical_asymptote_log(params)
        if asymptote is not None and mu_lo < asymptote < mu_hi:
            raise SplitBracketError(
                f"bracket contains lambda_a,eps = exp({asymptote:.6g}); solve on each side", asymptote)
        mu = _mu_bracket_solve(params, mu_lo, mu_hi)
        lam = float(np.exp(mu))
        residual = float(abs(negative_axis_d_log(params, mu)))
        scale = max(abs(float(negative_axis_d_log(params, mu_lo))), abs(float(negative_axis_d_log(params, mu_hi))))
    else:
        func = lambda v: float(negative_axis_d(params, v))
        lam = _brentq_signed(func, lo, hi)
        residual = abs(func(lam))
        scale = max(abs(func(lo)), abs(func(hi)))
    if residual > tol * scale:
        logger.debug(f"bisection residual {residual:.2e} above tol*scale {tol * scale:.2e}")
    return _bisection_result(params, lam, residual)


def expand_bracket(func, lo, hi, growth=2.0, max_tries=40):
    """Widen (lo, hi) geometrically until func changes sign, returning the new bracket."""
    f_lo, f_hi = func(lo), func(hi)
    tries = 0
    while np.sign(f_lo) == np.sign(f_hi):
        if tries >= max_tries:
            raise BracketError(f"No sign change found after {max_tries} expansions.")
        lo, hi = lo / growth, hi * growth
        f_lo, f_hi = func(lo), func(hi)
        tries += 1
    return lo, hi


def regime_brackets(params, regime=None):
    """
    Brackets (lambda_lo, lambda_hi) for the eigenvalues the cell places near threshold.

    Returns:
        list: zero or one bracket
    """
    regime = regime or classify_regime(params)
    eps, c, theta0 = params.epsilon, params.c, params.theta0
    if not regime.has_threshold_eigenvalue:
        return []
    if regime.c_sign == Sign.POSITIVE:
        lam = -decoupled_eigenvalue(params)
        func = lambda v: float(negative_axis_d(params, v))
        return [expand_bracket(func, lam / 2.0, 2.0 * lam)]
    if regime.c_sign == Sign.NEGATIVE:
        if params.d == Dimension.ONE:
            return [(0.0, eps ** 2 / (4.0 * c ** 2))]
        mu_b = -FOUR_PI * abs(c) / eps + FOUR_PI / A_CONST
        if mu_b - 10.0 < LOG_TINY:
            raise EigenvalueRangeError(f"eigenvalue near exp({mu_b:.6g}) underflows", mu_b)
        return [(float(np.exp(mu_b - 10.0)), float(np.exp(mu_b + 1.0)))]
    if params.d == Dimension.ONE:
        if regime.theta0_class == Sign.ZERO:
            lam0 = eps ** (4.0 / 3.0) / 2.0 ** (2.0 / 3.0)
            return [(lam0 / 2.0, 2.0 * lam0)]
        return [(0.0, 2.0 * eps ** 2 / abs(theta0))]
    if regime.theta0_class == Sign.ZERO:
        return [(1e-300, float(np.expm1(FOUR_PI / A_CONST)))]
    upper = FOUR_PI * eps ** 2 / (A_CONST * (A_CONST * abs(theta0) + eps ** 2))
    return [(1e-300, float(np.expm1(upper)))]


def deep_eigenvalue_search(params, max_expansions=60):
    """
    The d=2, theta0 = 0 eigenvalue beyond lambda_a,eps that runs to -infinity as eps -> 0.

    Raises:
        EigenvalueRangeError: lambda_a,eps (or the root) does not fit in a double
    """
    if params.d != Dimension.TWO or params.theta0 != 0:
        raise UnsupportedRegimeError("the runaway eigenvalue exists for d=2, theta0=0")
    params.require_perturbed()
    mu_a = vertical_asymptote_log(params)
    if mu_a > LOG_MAX:
        raise EigenvalueRangeError(f"lambda_a,eps = exp({mu_a:.6g}) overflows", mu_a)
    # D = -b^2 eps^2 F with F(mu_a) = 1
    func = lambda m: float(negative_axis_d_log(params, m))
    width = 1.0
    for _ in range(max_expansions):
        if np.sign(func(mu_a + width)) != np.sign(func(mu_a)):
            break
        width *= 2.0
    else:
        raise BracketError(f"no sign change beyond ln(lambda_a,eps)={mu_a:.6g}")
    mu = _brentq_signed(func, mu_a, mu_a + width)
    if mu > LOG_MAX:
        raise EigenvalueRangeError(f"runaway eigenvalue at ln(lambda)={mu:.6g} overflows", mu_a)
    return _bisection_result(params, float(np.exp(mu)), abs(func(mu)))


def _unperturbed_log_energy(params):
    theta0 = params.theta0
    if params.d == Dimension.ONE:
        return 2.0 * np.log(theta0 / 2.0)
    if params.d == Dimension.TWO:
        return FOUR_PI * (1.0 / A_CONST - 1.0 / theta0)
    return 2.0 * np.log(FOUR_PI / abs(theta0))


def continued_bound_state(params, regime=None, half_width=10.0, points=801):
    """
    Eigenvalue that continues the negative eigenvalue of H_0, away from threshold.

    Sign changes of D_eps(-lambda) are scanned on a log grid around the
    unperturbed value; the one nearest to it is refined by brentq.

    Returns:
        Singularity or None: None when the cell has no such eigenvalue or none is found
    """
    regime = regime or classify_regime(params)
    if not regime.has_bound_state_continuation:
        return None
    mu0 = _unperturbed_log_energy(params)
    grid = np.linspace(mu0 - half_width, min(mu0 + half_width, LOG_MAX), points)
    if params.d == Dimension.TWO:
        func = lambda m: float(negative_axis_d_log(params, m))
        values = negative_axis_d_log(params, grid)
    else:
        func = lambda m: float(negative_axis_d(params, np.exp(m)))
        values = negative_axis_d(params, np.exp(grid))
    changes = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    if changes.size == 0:
        logger.info(f"no continued bound state found near ln(lambda)={mu0:.4g}")
        return None
    index = changes[np.argmin(np.abs(grid[changes] - mu0))]
    mu = _brentq_signed(func, grid[index], grid[index + 1])
    return _bisection_result(params, float(np.exp(mu)), abs(func(mu)))


def virtual_state(params):
    """
    Negative-axis zero on sheet -1 for d=3, c=0, theta0=0: z = -s^2 with
    -s/(1 + sqrt(1+s^2)) + k sqrt(1+s^2) = 0 and k = (b eps/4 pi)^2.
    """
    regime = classify_regime(params)
    if not regime.has_virtual_state:
        raise UnsupportedRegimeError(f"no virtual state for {regime.label}")
    params.require_perturbed()
    k = (params.b * params.epsilon / FOUR_PI) ** 2

    def reduced(s):
        upper = np.sqrt(1.0 + s * s)
        return -s / (1.0 + upper) + k * upper

    s = _brentq_signed(reduced, 0.0, 4.0 * k)
    location = complex(-s * s, 0.0)
    return Singularity(SingularityKind.VIRTUAL_STATE, location, -1, Method.BISECTION,
                       _residual(params, location, -1))


def zero_resonance_detector(params, levels=RICHARDSON_LEVELS):
    """
    Limit of D_eps(z)/sqrt(z) as z -> 0 along arg z = pi, by Richardson extrapolation.

    Args:
        params (ModelParams): d=3 parameters
        levels (tuple): decreasing |z| values

    Returns:
        ZeroResonanceReport: detected with the coefficient when the limit is finite
            and nonzero; behavior "diverging" or "vanishing" otherwise
    """
    if params.d != Dimension.THREE:
        raise UnsupportedRegimeError("zero-energy resonances are detected for d=3")
    t = np.asarray(levels, dtype=float)
    h = np.sqrt(t)
    z = -t + 0j
    f = d_epsilon_values(params, z, 0, 0) / branch_sqrt(z, 0)
    q = h[:-1] / h[1:]
    first = (q * f[1:] - f[:-1]) / (q - 1.0)
    q2 = (q[:-1] * q[1:])
    second = (q2 * first[1:] - first[:-1]) / (q2 - 1.0)
    coefficient = complex(second[-1])
    spread = abs(second[-1] - second[-2])
    if abs(f[-1]) > abs(f[0]):
        behavior = 'diverging'
    elif abs(coefficient) <= max(100.0 * spread, 1e-9 * float(np.max(np.abs(f)))):
        behavior = 'vanishing'
    else:
        behavior = 'finite'
    logger.info(f"zero-resonance limit D/sqrt(z) -> {coefficient} ({behavior})")
    return ZeroResonanceReport(behavior == 'finite', coefficient, behavior)


def resonant_state(params):
    """Zero-energy state (psi_0, psi_1)(r) = (-b eps/(4 pi r), e^(-r)/r) of the d=3, c=0 model."""
    def state(r):
        return -params.b * params.epsilon / (FOUR_PI * r), np.exp(-r) / r
    return state


def _richardson_to_zero(func, r0, levels=4):
    """Extrapolate func(r) -> func(0) from r0, r0/2, ... removing the r and r^2 terms."""
    values = np.array([func(r0 / 2.0 ** k) for k in range(levels)])
    first = 2.0 * values[1:] - values[:-1]
    second = (4.0 * first[1:] - first[:-1]) / 3.0
    return float(second[-1])


def _radial_laplacian(func, r, h=1e-3):
    d1 = (func(r + h) - func(r - h)) / (2.0 * h)
    d2 = (func(r + h) - 2.0 * func(r) + func(r - h)) / h ** 2
    return d2 + 2.0 * d1 / r


def verify_resonant_state(params, state=None, tol=1e-6, check_pde=True):
    """
    Check that a radial two-channel state is a zero-energy resonance of H_eps (d=3, c=0).

    Charges q_j = lim 4 pi r psi_j and regular parts f_j = lim [psi_j - q_j/(4 pi r)]
    are extrapolated to r = 0 and must satisfy q_0 = theta0 f_0 + b eps f_1 and
    q_1 = b eps f_0 + theta1 f_1. Optionally -Delta psi_0 = 0 and (-Delta + 1) psi_1 = 0
    are checked by finite differences on r > 0.

    Returns:
        bool: True when every relation holds
    """
    if params.d != Dimension.THREE or params.c != 0:
        raise UnsupportedRegimeError("the resonant state is defined for d=3, c=0")
    state = state or resonant_state(params)
    r0 = 1e-3
    charges, regular = [], []
    for channel in (0, 1):
        psi = lambda r, ch=channel: float(state(r)[ch])
        q = _richardson_to_zero(lambda r: FOUR_PI * r * psi(r), r0)
        f = _richardson_to_zero(lambda r: psi(r) - q / (FOUR_PI * r), r0)
        charges.append(q)
        regular.append(f)
    be = params.b * params.epsilon
    scale = max(1.0, *(abs(v) for v in charges + regular))
    ok = (abs(charges[0] - (params.theta0 * regular[0] + be * regular[1])) <= tol * scale
          and abs(charges[1] - (be * regular[0] + params.theta1_eps * regular[1])) <= tol * scale)
    logger.info(f"resonant state: q={charges}, f={regular}, boundary conditions {'hold' if ok else 'fail'}")
    if ok and check_pde:
        for r in (0.5, 1.0, 2.0):
            psi0 = lambda x: float(state(x)[0])
            psi1 = lambda x: float(state(x)[1])
            if abs(_radial_laplacian(psi0, r)) > 1e-4 * max(1e-12, abs(psi0(r))):
                ok = False
            if abs(-_radial_laplacian(psi1, r) + psi1(r)) > 1e-4 * abs(psi1(r)):
                ok = False
    return ok


def root_cluster(params, radius=None, tol=TOL):
    """
    The three roots of D_eps near the origin for d=1, c=0, theta0=0.

    Newton starts from radius * e^(i phi) with phi = pi (sheet 0) and
    phi = -pi/3, -5 pi/3 (sheet -1), radius defaulting to eps^(4/3)/2^(2/3).

    Raises:
        IncompleteClusterError: a seed failed or two seeds met the same root
    """
    regime = classify_regime(params)
    if not regime.has_cluster:
        raise UnsupportedRegimeError(f"no threshold root cluster for {regime.label}")
    params.require_perturbed()
    radius = radius or params.epsilon ** (4.0 / 3.0) / 2.0 ** (2.0 / 3.0)
    seeds = ((np.pi, 0), (-np.pi / 3.0, -1), (-5.0 * np.pi / 3.0, -1))
    found, failures = [], []
    for phase, sheet in seeds:
        seed = radius * np.exp(1j * phase)
        try:
            found.append(newton_oracle(params, seed, (sheet, 0), tol=tol))
        except ConvergenceError as e:
            failures.append(f"seed arg={phase:.4f}: {e}")
    distinct = {(round(s.location.real / radius, 6), round(s.location.imag / radius, 6), s.sheet) for s in found}
    if failures or len(distinct) < len(seeds):
        raise IncompleteClusterError(f"threshold cluster incomplete: {failures or 'duplicate roots'}", found)
    return found


def continued_zeros(params, tol=TOL):
    """
    Zeros of D_eps continued through the positive axis (sheet -1) near the origin,
    for d=1, 2 with theta0 = 0 and c > 0.

    In d=1 Newton starts from z = -sigma^2 for the sheet -1 roots of
    sigma^3 - c eps sigma + b^2 eps^2/2 = 0, D_eps truncated at the threshold.
    They are virtual states while eps < 16 c^3/27 and a pair of resonances with
    Re z > 0 beyond. In d=2 the seed is -4 pi (c eps + i b^2 eps^2/2)/a^2.

    Returns:
        list: Singularity on sheet -1, ordered by |z|
    """
    regime = classify_regime(params)
    if not regime.has_continued_zeros:
        raise UnsupportedRegimeError(f"no continued zeros searched for {regime.label}")
    params.require_perturbed()
    ceps = params.c * params.epsilon
    if params.d == Dimension.ONE:
        seeds = []
        for sigma in np.roots([1.0, 0.0, -ceps, params.coupling_sq / 2.0]):
            s = -1j * complex(sigma)
            if -np.pi < np.angle(s) <= 0:
                seeds.append(s * s)
    else:
        seeds = [-FOUR_PI * complex(ceps, params.coupling_sq / 2.0) / A_CONST ** 2]
    found = []
    for seed in seeds:
        root = newton_oracle(params, seed, (-1, 0), tol=tol)
        if all(abs(root.location - other.location) > 1e-8 * abs(root.location) for other in found):
            found.append(root)
    logger.info(f"continued zeros ({regime.label}, eps={params.epsilon:g}): {[s.location for s in found]}")
    return sorted(found, key=lambda s: abs(s.location))


def positive_axis_profile(params, grid=None):
    """|D_eps(lambda + i0)| on a grid of positive energies, both branches on sheet 0."""
    grid = np.geomspace(SCAN_MIN, SCAN_MAX, GRID_N) if grid is None else np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise InvalidConfigError("scan grid must lie in (0, inf)")
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.abs(d_epsilon_values(params, grid + 0j, 0, 0))


def positive_axis_scan(params, grid=None):
    """Minimum of |D_eps| over the grid; strictly positive when no eigenvalue is embedded."""
    return float(np.nanmin(positive_axis_profile(params, grid)))


def scan_window(params):
    """Upper end C of the window (-C, 0) free of isolated eigenvalues in the resonance cells."""
    candidates = [1.0]
    if params.d == Dimension.ONE and params.theta0 > 0:
        candidates.append(params.theta0 ** 2 / 4.0)
    asymptote = vertical_asymptote_log(params)
    if asymptote is not None and asymptote < LOG_MAX:
        candidates.append(float(np.exp(asymptote)))
    if params.d == Dimension.THREE and params.theta0 < 0:
        candidates.append((FOUR_PI / params.theta0) ** 2)
    return min(candidates) / 2.0


def negative_axis_roots(params, lam_max=None, lam_min=1e-14, points=4000):
    """Approximate lambda of the sign changes of D_eps(-lambda) on a log grid of (lam_min, lam_max)."""
    lam_max = lam_max or scan_window(params)
    grid = np.geomspace(lam_min, lam_max, points)
    values = negative_axis_d(params, grid)
    changes = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    return [float(np.sqrt(grid[i] * grid[i + 1])) for i in changes]


def find_singularities(params, regime=None, tol=TOL, max_iter=MAX_ITER):
    """
    Every singularity the cell of params places near the threshold.

    Returns:
        tuple: (list of Singularity, list of notes about skipped searches)
    """
    regime = regime or classify_regime(params)
    params.require_perturbed()
    found, notes = [], []
    if regime.has_resonance:
        found.append(resonance_fixed_point(params, regime, tol, max_iter)[0])
    if regime.has_cluster:
        found.extend(root_cluster(params, tol=tol))
    elif regime.has_threshold_eigenvalue:
        try:
            for bracket in regime_brackets(params, regime):
                found.append(eigenvalue_bisection(params, bracket, tol))
        except EigenvalueRangeError as e:
            notes.append(f"threshold eigenvalue not representable: {e}")
    if regime.has_continued_zeros:
        found.extend(continued_zeros(params, tol))
    if regime.has_runaway_eigenvalue:
        try:
            found.append(deep_eigenvalue_search(params))
        except EigenvalueRangeError as e:
            notes.append(f"runaway eigenvalue beyond exp({e.log_asymptote:.6g})")
    if regime.has_bound_state_continuation:
        try:
            bound = continued_bound_state(params, regime)
        except ResonanceError as e:
            bound = None
            notes.append(f"continued bound state search failed: {e}")
        if bound is not None:
            found.append(bound)
    if regime.has_zero_resonance:
        report = zero_resonance_detector(params)
        if report.detected:
            found.append(Singularity(SingularityKind.ZERO_ENERGY_RESONANCE, 0j, 0, Method.LIMIT_DETECTOR, 0.0))
        else:
            notes.append(f"zero-energy limit {report.behavior}")
    if regime.has_virtual_state:
        found.append(virtual_state(params))
    return found, notes
