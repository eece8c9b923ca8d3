"""
Sheet-aware elementary functions, free Green's functions and the Hankel function H0(1)

Sheet 0 ("physical") carries arg z in [0, 2pi), sheet -1 ("unphysical") carries
arg z in (-2pi, 0]. Every branch choice in the package goes through
branch_sqrt / branch_log so that the two sheets stay consistent, including on
signed zeros. Near the origin ln(z-1) is taken as log1p(-z) plus the sheet offset.
"""
import threading
from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import roots_genlaguerre

from app.config.settings import HANKEL_DPS, HANKEL_SPLIT, logger
from app.services.errors import BranchPointError, HankelOverflowError, InvalidConfigError

A_CONST = 2.0 * np.pi / (np.log(2.0) - np.euler_gamma)

SHEETS = (0, -1)

# exp(-Im eta) stops fitting in a double well before this
HANKEL_IM_FLOOR = -700.0
HANKEL_MIN_TERMS = 30
HANKEL_MAX_TERMS = 2000
LAGUERRE_NODES = 160


class Dimension(IntEnum):
    ONE = 1
    TWO = 2
    THREE = 3

    @classmethod
    def check(cls, d):
        """Return d as a Dimension or raise InvalidConfigError."""
        try:
            return cls(int(d))
        except (TypeError, ValueError):
            raise InvalidConfigError(f"dimension must be 1, 2 or 3, got {d!r}") from None


def check_sheet(sheet):
    if sheet not in SHEETS:
        raise InvalidConfigError(f"sheet must be 0 or -1, got {sheet!r}")
    return int(sheet)


@dataclass(frozen=True)
class SheetPoint:
    """A complex energy together with the Riemann sheet used for sqrt and log."""
    value: complex
    sheet: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, 'value', complex(self.value))
        object.__setattr__(self, 'sheet', check_sheet(self.sheet))

    @property
    def arg(self):
        return float(np.imag(branch_log(self.value, self.sheet))) if self.value != 0 else 0.0


def _phase_flip(values, sheet):
    phase = np.angle(values)
    if sheet == 0:
        return phase < 0
    return phase > 0


def branch_sqrt(values, sheet=0):
    """
    Square root on the requested sheet, elementwise.

    Args:
        values (complex or ndarray): Points z, 0 is mapped to 0
        sheet (int): 0 or -1

    Returns:
        complex or ndarray: |z|^(1/2) exp(i arg(z)/2) with arg taken on the sheet
    """
    values = np.asarray(values, dtype=complex)
    root = np.where(_phase_flip(values, check_sheet(sheet)), -np.sqrt(values), np.sqrt(values))
    return root[()] if root.ndim == 0 else root


def branch_log(values, sheet=0):
    """Logarithm on the requested sheet, elementwise; log 0 is -inf."""
    values = np.asarray(values, dtype=complex)
    sheet = check_sheet(sheet)
    shift = 2j * np.pi if sheet == 0 else -2j * np.pi
    with np.errstate(divide='ignore'):
        result = np.log(values) + shift * _phase_flip(values, sheet)
    return result[()] if result.ndim == 0 else result


def g_values(values, sheet=0):
    """g(z) = ln(z)/(4 pi) - i/4 - 1/a on arrays, used by the d=2 dispersion function."""
    return branch_log(values, sheet) / (4.0 * np.pi) - 0.25j - 1.0 / A_CONST


def _require_nonzero(p):
    if p.value == 0:
        raise BranchPointError("z = 0 is a branch point of sqrt(z) and ln(z)")


def sheet_sqrt(p):
    _require_nonzero(p)
    return complex(branch_sqrt(p.value, p.sheet))


def sheet_log(p):
    _require_nonzero(p)
    return complex(branch_log(p.value, p.sheet))


def g_function(p):
    """
    The d=2 kernel function g(z) = [ln(sqrt z) - i pi/2]/(2 pi) - 1/a.

    Args:
        p (SheetPoint): Energy and sheet

    Returns:
        complex: g evaluated with ln z on p.sheet
    """
    _require_nonzero(p)
    return complex(g_values(p.value, p.sheet))


_contexts = threading.local()


def _series_context(dps):
    """mpmath context owned by the calling thread, set to dps digits."""
    ctx = getattr(_contexts, 'ctx', None)
    if ctx is None:
        ctx = _contexts.ctx = mpmath.MPContext()
    ctx.dps = dps
    return ctx


def hankel_series(eta, dps=None):
    """
    H0(1)(eta) = J0 + i Y0 from the ascending series.

    Summed on a per-thread mpmath context at extended precision, which absorbs the
    J0 / i Y0 cancellation in the upper half plane and leaves the global
    mpmath.mp precision untouched.
    """
    dps = dps or HANKEL_DPS
    ctx = _series_context(dps)
    x = ctx.mpc(complex(eta))
    q = -x * x / 4
    tiny = ctx.mpf(10) ** (-dps)
    term = ctx.mpf(1)
    harmonic = ctx.mpf(0)
    j_terms = [term]
    y_terms = []
    for k in range(1, HANKEL_MAX_TERMS + 1):
        term = term * q / (k * k)
        harmonic += ctx.mpf(1) / k
        j_terms.append(term)
        # (-1)^(k+1) H_k (eta^2/4)^k / (k!)^2
        y_terms.append(-harmonic * term)
        if k >= HANKEL_MIN_TERMS and abs(term) * harmonic < tiny:
            break
    else:
        logger.warning(f"Hankel series truncated at {HANKEL_MAX_TERMS} terms for eta={eta}")
    j0 = ctx.fsum(j_terms)
    y0 = (2 / ctx.pi) * ((ctx.log(x / 2) + ctx.euler) * j0 + ctx.fsum(y_terms))
    return complex(j0 + 1j * y0)


@lru_cache(maxsize=None)
def _laguerre_rule(n):
    return roots_genlaguerre(n, -0.5)


def hankel_laplace(eta):
    """
    H0(1)(eta) from Hankel's Laplace-type integral, for ph(eta) in (-pi/2, 3pi/2).

    The integral over exp(-u) u^(-1/2) (1 + iu/(2 eta))^(-1/2) is done by
    generalized Gauss-Laguerre quadrature.
    """
    eta = complex(eta)
    nodes, weights = _laguerre_rule(LAGUERRE_NODES)
    integral = np.dot(weights, 1.0 / np.sqrt(1.0 + 1j * nodes / (2.0 * eta)))
    prefactor = np.sqrt(2.0 / np.pi) / np.sqrt(eta) * np.exp(1j * (eta - np.pi / 4)) / np.sqrt(np.pi)
    return complex(prefactor * integral)


def hankel_h1_0(eta):
    """
    Hankel function of the first kind and order zero.

    Args:
        eta (complex): Argument, Im(eta) >= 0 in the model

    Returns:
        complex: H0(1)(eta), series below |eta| = HANKEL_SPLIT and Laplace integral above

    Raises:
        BranchPointError: eta = 0
        HankelOverflowError: Im(eta) far below the real axis
    """
    eta = complex(eta)
    if eta == 0:
        raise BranchPointError("H0(1) has a logarithmic singularity at eta = 0")
    if eta.imag < HANKEL_IM_FLOOR:
        raise HankelOverflowError(f"H0(1)({eta}) overflows: Im(eta) < {HANKEL_IM_FLOOR}")
    if abs(eta) < HANKEL_SPLIT or (eta.imag < 0 and eta.real < 0):
        return hankel_series(eta)
    return hankel_laplace(eta)


def green_kernel(d, p, x):
    """
    Free Green's function G^z(x) of -Delta - z in dimension d.

    Args:
        d (int): Dimension 1, 2 or 3
        p (SheetPoint): Energy z and the sheet of sqrt(z)
        x (float): Distance |x| >= 0

    Returns:
        complex: i e^(i k x)/(2k), (i/4) H0(1)(k x) or e^(i k x)/(4 pi x) with k = sqrt(z)
    """
    d = Dimension.check(d)
    if x < 0:
        raise InvalidConfigError(f"distance must be non-negative, got {x}")
    if x == 0 and d != Dimension.ONE:
        raise BranchPointError(f"G^z is singular at x = 0 in d={int(d)}")
    k = sheet_sqrt(p)
    if d == Dimension.ONE:
        return 1j * np.exp(1j * k * x) / (2.0 * k)
    if d == Dimension.TWO:
        return 0.25j * hankel_h1_0(k * x)
    return complex(np.exp(1j * k * x) / (4.0 * np.pi * x))


def threshold_profile(d, x):
    """Upper-channel zero-energy bound state phi_1^th of the uncoupled Hamiltonian."""
    d = Dimension.check(d)
    r = abs(x)
    if d == Dimension.ONE:
        return complex(np.exp(-r))
    if r == 0:
        raise BranchPointError(f"phi_1^th is singular at x = 0 in d={int(d)}")
    if d == Dimension.TWO:
        return 0.5 * np.sqrt(np.pi) * hankel_h1_0(1j * r)
    return complex(np.sqrt(2.0) * np.exp(-r) / (4.0 * np.pi * r))
