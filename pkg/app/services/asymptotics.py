"""
Closed-form small-eps expansions of the near-threshold singularities and a
log-log fitter that measures the order of their remainders
"""
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from app.config.settings import logger
from app.services.dispersion import FOUR_PI
from app.services.errors import InvalidConfigError, UnsupportedRegimeError
from app.services.riemann import A_CONST, Dimension
from app.services.rootfinder import Sign, classify_regime

PARTS = ('full', 'real', 'imag')


class PrecisionFloorWarning(UserWarning):
    """A residual sits at the floating-point floor and was left out of the fit."""


@dataclass(frozen=True)
class Term:
    """coefficient * eps^power * |ln eps|^log_power"""
    coefficient: complex
    power: Fraction
    log_power: int = 0

    def value(self, eps):
        return self.coefficient * eps ** float(self.power) * abs(np.log(eps)) ** self.log_power


@dataclass(frozen=True)
class ExpansionResult:
    """
    Leading terms of a small-eps expansion and the order of its remainder.

    remainder_power None marks an exact closed form. remainder_little_o marks
    o(eps^p |ln eps|^m) remainders, which may share the last term's order.
    """
    leading_terms: tuple
    remainder_power: Fraction = None
    remainder_has_log: bool = False
    remainder_log_power: int = 0
    remainder_little_o: bool = False
    part: str = 'full'
    kind: str = 'resonance'

    def __post_init__(self):
        if self.part not in PARTS:
            raise InvalidConfigError(f"part must be one of {PARTS}, got {self.part!r}")
        powers = [t.power for t in self.leading_terms]
        if any(b <= a for a, b in zip(powers, powers[1:])):
            raise InvalidConfigError("expansion powers must be strictly increasing")
        object.__setattr__(self, 'remainder_has_log', self.remainder_log_power != 0)

    def evaluate(self, eps):
        total = sum(term.value(eps) for term in self.leading_terms)
        if self.part == 'full':
            return complex(total)
        return float(np.real(total))

    def leading_value(self, eps):
        return self.leading_terms[0].value(eps)

    def remainder_scale(self, eps):
        if self.remainder_power is None:
            return 0.0
        return eps ** float(self.remainder_power) * abs(np.log(eps)) ** self.remainder_log_power

    def component(self, part):
        """Restrict a full expansion to its real or imaginary part."""
        if part == self.part:
            return self
        if self.part != 'full':
            raise UnsupportedRegimeError(f"a {self.part} expansion has no {part} part")
        pick = np.real if part == 'real' else np.imag
        terms = tuple(Term(complex(pick(t.coefficient)), t.power, t.log_power)
                      for t in self.leading_terms if pick(t.coefficient) != 0)
        return replace(self, leading_terms=terms, part=part)

    def select(self, value):
        """Part of a numeric location this expansion describes."""
        if self.part == 'real':
            return float(np.real(value))
        if self.part == 'imag':
            return float(np.imag(value))
        return complex(value)


@dataclass(frozen=True)
class OrderFit:
    epsilons: tuple
    residuals: tuple
    fitted_slope: float
    r_squared: float
    expected_power: float = float('nan')
    excluded: tuple = ()


def _f(value):
    return Fraction(value).limit_denominator(6)


def _terms(*triples):
    return tuple(Term(complex(c), _f(p), lp) for c, p, lp in triples)


def _split(real_terms, real_remainder, imag_terms, imag_remainder, part, kind='resonance'):
    if part == 'full':
        raise UnsupportedRegimeError("this cell publishes Re and Im separately; ask for part='real' or 'imag'")
    terms, (power, log_power, little_o) = (real_terms, real_remainder) if part == 'real' else (imag_terms, imag_remainder)
    return ExpansionResult(terms, _f(power), remainder_log_power=log_power,
                           remainder_little_o=little_o, part=part, kind=kind)


def leading_order(params, regime=None, part=None):
    """
    Small-eps expansion of the singularity of the cell (b^2 = 1).

    Args:
        params (ModelParams): Model parameters, only c and theta0 enter
        regime (Regime): Cell of params
        part (str): 'full', 'real' or 'imag'; defaults to 'full' when published,
            else 'real'

    Returns:
        ExpansionResult

    Raises:
        UnsupportedRegimeError: the cell has no published expansion
    """
    regime = regime or classify_regime(params)
    if params.b ** 2 != 1:
        raise UnsupportedRegimeError("expansions are stated for b^2 = 1")
    d, c, theta0 = params.d, params.c, params.theta0
    ac = abs(c)
    a2 = A_CONST ** 2
    split = d == Dimension.TWO and regime.c_sign != Sign.POSITIVE and regime.has_resonance
    part = part or ('real' if split else 'full')

    if split:
        if regime.c_sign == Sign.NEGATIVE and regime.theta0_class != Sign.ZERO:
            result = _split(_terms((FOUR_PI * ac / a2, 1, 0)), (2, 0, False),
                            _terms((-16.0 * np.pi ** 3 / (A_CONST * theta0) ** 2, 2, -2)), (2, -2, True), part)
        elif regime.c_sign == Sign.NEGATIVE:
            result = _split(_terms((FOUR_PI * ac / a2, 1, 0)), (2, 1, False),
                            _terms((-np.pi / a2, 2, 0)), (2, 0, True), part)
        else:
            result = _split(_terms((FOUR_PI / (a2 * theta0), 2, 0)), (2, -1, False),
                            _terms((-4.0 * np.pi ** 3 / (a2 * theta0 ** 2), 2, -2)), (2, -2, True), part)
        return result

    if regime.c_sign == Sign.POSITIVE:
        if d == Dimension.ONE:
            result = ExpansionResult(_terms((-c, 1, 0)), _f(1.5), kind='eigenvalue')
        elif d == Dimension.TWO:
            result = ExpansionResult(_terms((-FOUR_PI * c / a2, 1, 0)), _f(2), remainder_log_power=1,
                                     kind='eigenvalue')
        else:
            result = ExpansionResult(_terms((-c / (2.0 * np.pi), 1, 0)), _f(2), kind='eigenvalue')
    elif regime.c_sign == Sign.NEGATIVE:
        if d == Dimension.THREE:
            result = ExpansionResult(_terms((ac / (2.0 * np.pi), 1, 0),
                                            (-3.0 * c ** 2 / (16.0 * np.pi ** 2), 2, 0),
                                            (-1j / (8.0 * np.pi ** 2) * np.sqrt(ac / (2.0 * np.pi)), 2.5, 0)),
                                     _f(3))
        elif regime.theta0_class != Sign.ZERO:
            result = ExpansionResult(_terms((ac, 1, 0), (1.0 / theta0 - c ** 2 / 4.0, 2, 0),
                                            (-2j * np.sqrt(ac) / theta0 ** 2, 2.5, 0)), _f(4))
        else:
            result = ExpansionResult(_terms((ac, 1, 0), (-1j / (2.0 * np.sqrt(ac)), 1.5, 0)), _f(2))
    elif d == Dimension.ONE:
        if regime.theta0_class == Sign.POSITIVE:
            result = ExpansionResult(_terms((1.0 / theta0, 2, 0), (-2j / theta0 ** 2.5, 3, 0)), _f(4))
        elif regime.theta0_class == Sign.ZERO:
            result = ExpansionResult(_terms((-1.0 / 2.0 ** (2.0 / 3.0), Fraction(4, 3), 0)), Fraction(8, 3),
                                     kind='eigenvalue')
        else:
            result = ExpansionResult(_terms((-1.0 / abs(theta0), 2, 0)), _f(3), kind='eigenvalue')
    elif d == Dimension.TWO:
        if regime.theta0_class == Sign.ZERO:
            result = ExpansionResult(_terms((-2.0 / a2, 2, 1)), _f(2), remainder_log_power=-1,
                                     remainder_little_o=True, kind='eigenvalue')
        else:
            result = ExpansionResult(_terms((-FOUR_PI / (a2 * abs(theta0)), 2, 0)), _f(2),
                                     remainder_log_power=-1, kind='eigenvalue')
    else:
        raise UnsupportedRegimeError(f"no published expansion for {regime.label}")
    return result.component(part)


def decoupled_expansion(params):
    """Expansion of the b = 0 eigenvalue; exact in d=1."""
    c = params.c
    if params.d == Dimension.ONE:
        return ExpansionResult(_terms((-c, 1, 0), (-c ** 2 / 4.0, 2, 0)) if c else (), None, kind='eigenvalue')
    if params.d == Dimension.TWO:
        return ExpansionResult(_terms((-FOUR_PI * c / A_CONST ** 2, 1, 0)), _f(2), kind='eigenvalue')
    return ExpansionResult(_terms((-c / (2.0 * np.pi), 1, 0)), _f(2), kind='eigenvalue')


def eigenvalue_bound(params, regime=None):
    """Lower bound of the c < 0, theta0 = 0 eigenvalue: -eps^2/(4c^2) or -exp(-4 pi |c|/eps + 4 pi/a)."""
    regime = regime or classify_regime(params)
    if regime.c_sign != Sign.NEGATIVE or regime.theta0_class != Sign.ZERO or params.d == Dimension.THREE:
        raise UnsupportedRegimeError(f"no eigenvalue bound for {regime.label}")
    eps, c = params.epsilon, params.c
    if params.d == Dimension.ONE:
        return -eps ** 2 / (4.0 * c ** 2)
    return -float(np.exp(-FOUR_PI * abs(c) / eps + FOUR_PI / A_CONST))


def kernel_singular_coefficient(params, x, x_prime):
    """Coefficient of z^(-1/2) in the channel (1,1) kernel for d=3, c=0."""
    if params.d != Dimension.THREE or params.c != 0:
        raise UnsupportedRegimeError("the z^(-1/2) kernel coefficient is for d=3, c=0")
    return 4j * np.pi / params.coupling_sq * (np.exp(-x) / x) * (np.exp(-x_prime) / x_prime)


def fit_remainder_order(numeric, expansion, min_points=4, min_decades=1.5):
    """
    Least-squares slope of log|numeric - expansion| against log eps.

    Args:
        numeric (dict): eps -> computed location
        expansion (ExpansionResult): expansion to subtract
        min_points (int): minimum ladder length
        min_decades (float): minimum span of the ladder in decades

    Returns:
        OrderFit: slope and r^2 over the points above the precision floor
    """
    eps = np.array(sorted(numeric, reverse=True), dtype=float)
    if len(eps) < min_points:
        raise InvalidConfigError(f"need at least {min_points} ladder points, got {len(eps)}")
    if np.log10(eps[0] / eps[-1]) < min_decades - 1e-9:
        raise InvalidConfigError(f"ladder must span {min_decades} decades")
    kept_eps, kept_res, excluded = [], [], []
    for e in eps:
        value = expansion.select(numeric[e])
        residual = abs(value - expansion.evaluate(e))
        if residual < 100.0 * np.finfo(float).eps * max(abs(value), np.finfo(float).tiny):
            warnings.warn(f"residual {residual:.1e} at eps={e:g} is at the precision floor",
                          PrecisionFloorWarning, stacklevel=2)
            logger.warning(f"eps={e:g} excluded from the order fit (residual {residual:.1e})")
            excluded.append(float(e))
            continue
        if expansion.remainder_log_power:
            residual /= abs(np.log(e)) ** expansion.remainder_log_power
        kept_eps.append(float(e))
        kept_res.append(float(residual))
    if len(kept_eps) < 2:
        raise InvalidConfigError("fewer than two residuals above the precision floor")
    x, y = np.log(kept_eps), np.log(kept_res)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    total = np.sum((y - y.mean()) ** 2)
    r_squared = 1.0 - np.sum((y - fitted) ** 2) / total if total > 0 else 1.0
    expected = float(expansion.remainder_power) if expansion.remainder_power is not None else float('nan')
    logger.info(f"order fit: slope {slope:.3f} (stated {expected:g}), r^2 {r_squared:.4f}")
    return OrderFit(tuple(kept_eps), tuple(kept_res), float(slope), float(r_squared), expected, tuple(excluded))
