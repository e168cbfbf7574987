"""Closed-form asymptotic profiles and the constants attached to them.

Everything here is a pure function of the model parameters: the nonlinear
diffusion wave chi and its self-similar generator chi_star, the exponential
weight eta linearizing convection around the wave, the log-correction
profile V, the slow-tail correction profile Z, and the scalar constants
(d, kappa, mu0, mu1, c_alpha tail limits) that set their amplitudes.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as spi
from scipy.special import erf, erfc

from .core import Field, GridSpec
from .errors import ConfigError, MassMismatchError, NumericsError

__all__ = [
    "ModelParams",
    "ProfileSet",
    "chi_star",
    "chi_star_deriv",
    "chi_star_deriv2",
    "chi_star_deriv3",
    "chi",
    "chi_x",
    "chi_xx",
    "chi_xxx",
    "chi_t",
    "eta_star",
    "eta",
    "V_star",
    "V_star_from_derivative",
    "V_star_deriv",
    "V",
    "V_x",
    "Z_eval",
    "r0_eval",
    "extract_c_alpha",
    "extract_c_alpha_detailed",
    "constants",
    "fM_check",
    "panel_gauss_nodes",
]

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class ModelParams:
    """Physical and asymptotic parameters.

    beta  : convection coefficient; beta = 0 selects the linear limit, where
            the profiles degenerate continuously (chi becomes the heat
            profile carrying mass M and eta becomes 1)
    gamma : dispersion coefficient
    alpha : tail exponent of the initial data, > 1
    mass  : conserved integral of the solution
    """

    beta: float
    gamma: float
    alpha: float
    mass: float

    def __post_init__(self):
        if not (self.alpha > 1.0):
            raise ConfigError(f"alpha must exceed 1, got {self.alpha}")


@dataclass(frozen=True)
class ProfileSet:
    """Derived constants for one parameter set and one choice of tail limits.

    mu0 is only defined for 1 < alpha < 2 and is NaN otherwise.
    """

    params: ModelParams
    c_alpha_plus: float
    c_alpha_minus: float
    d: float
    kappa: float
    mu0: float
    mu1: float


def _denominator(x, p: ModelParams):
    """sqrt(pi) + (e^{beta M / 2} - 1) * int_{x/2}^inf e^{-y^2} dy, always positive."""
    em = math.expm1(0.5 * p.beta * p.mass)
    den = SQRT_PI + em * 0.5 * SQRT_PI * erfc(np.asarray(x) / 2.0)
    if np.any(den <= 0.0):
        raise NumericsError("diffusion-wave denominator lost positivity")
    return em, den


def chi_star(x, p: ModelParams):
    """Self-similar generator of the nonlinear diffusion wave.

    At beta = 0 the removable singularity is filled with the limit value
    (M/2) e^{-x^2/4} / sqrt(pi), the mass-M heat profile.
    """
    x = np.asarray(x, dtype=np.float64)
    em, den = _denominator(x, p)
    coeff = em / p.beta if p.beta != 0.0 else 0.5 * p.mass
    return coeff * np.exp(-(x**2) / 4.0) / den


def chi_star_deriv(x, p: ModelParams):
    """chi_star' via the stationary Burgers relation chi' = -x chi/2 + beta chi^2/2."""
    c = chi_star(x, p)
    return -0.5 * np.asarray(x) * c + 0.5 * p.beta * c * c


def chi_star_deriv2(x, p: ModelParams):
    x = np.asarray(x, dtype=np.float64)
    c = chi_star(x, p)
    c1 = -0.5 * x * c + 0.5 * p.beta * c * c
    return -0.5 * c - 0.5 * x * c1 + p.beta * c * c1


def chi_star_deriv3(x, p: ModelParams):
    x = np.asarray(x, dtype=np.float64)
    c = chi_star(x, p)
    c1 = -0.5 * x * c + 0.5 * p.beta * c * c
    c2 = -0.5 * c - 0.5 * x * c1 + p.beta * c * c1
    return -c1 - 0.5 * x * c2 + p.beta * (c1 * c1 + c * c2)


def chi(x, t, p: ModelParams):
    """Nonlinear diffusion wave at time t >= 0; chi(x, 0) == chi_star(x)."""
    if t < 0:
        raise ConfigError("t must be nonnegative")
    s = math.sqrt(1.0 + t)
    return chi_star(np.asarray(x) / s, p) / s


def chi_x(x, t, p: ModelParams):
    s = math.sqrt(1.0 + t)
    return chi_star_deriv(np.asarray(x) / s, p) / (1.0 + t)


def chi_xx(x, t, p: ModelParams):
    s = math.sqrt(1.0 + t)
    return chi_star_deriv2(np.asarray(x) / s, p) / (1.0 + t) ** 1.5


def chi_xxx(x, t, p: ModelParams):
    s = math.sqrt(1.0 + t)
    return chi_star_deriv3(np.asarray(x) / s, p) / (1.0 + t) ** 2


def chi_t(x, t, p: ModelParams):
    """Time derivative of chi, from the self-similar form."""
    s = math.sqrt(1.0 + t)
    y = np.asarray(x) / s
    return -0.5 * (chi_star(y, p) + y * chi_star_deriv(y, p)) / (1.0 + t) ** 1.5


def eta_star(x, p: ModelParams):
    """Exponential weight exp((beta/2) int_{-inf}^x chi_star), in closed form."""
    x = np.asarray(x, dtype=np.float64)
    em, den = _denominator(x, p)
    out = SQRT_PI * (1.0 + em) / den
    lo = min(1.0, 1.0 + em)
    hi = max(1.0, 1.0 + em)
    slack = 1e-12 * max(1.0, hi)
    if np.any(out < lo - slack) or np.any(out > hi + slack):
        raise NumericsError("eta_star left its analytic bounds")
    return out


def eta(x, t, p: ModelParams):
    return eta_star(np.asarray(x) / math.sqrt(1.0 + t), p)


def V_star(x, p: ModelParams):
    """Generator of the dispersion-induced log correction."""
    x = np.asarray(x, dtype=np.float64)
    return (
        (p.beta * chi_star(x, p) - x)
        * eta_star(x, p)
        * np.exp(-(x**2) / 4.0)
        / (4.0 * SQRT_PI)
    )


def V_star_from_derivative(x, p: ModelParams):
    """Same profile via d/dx(eta_star e^{-x^2/4})/sqrt(4 pi), chain rule expanded."""
    x = np.asarray(x, dtype=np.float64)
    es = eta_star(x, p)
    es_prime = 0.5 * p.beta * chi_star(x, p) * es
    gauss = np.exp(-(x**2) / 4.0)
    return (es_prime * gauss + es * (-0.5 * x) * gauss) / math.sqrt(4.0 * math.pi)


def V_star_deriv(x, p: ModelParams):
    """x-derivative of V_star."""
    x = np.asarray(x, dtype=np.float64)
    cs = chi_star(x, p)
    cs1 = chi_star_deriv(x, p)
    es = eta_star(x, p)
    gauss = np.exp(-(x**2) / 4.0)
    half = 0.5 * (p.beta * cs - x)
    return es * gauss * (half * half + 0.5 * (p.beta * cs1 - 1.0)) / (2.0 * SQRT_PI)


def V(x, t, p: ModelParams, ps: ProfileSet):
    """Second asymptotic profile carrying the (1+t)^{-1} log(1+t) correction."""
    s = math.sqrt(1.0 + t)
    amp = -ps.kappa * ps.d * math.log1p(t) / (1.0 + t)
    return amp * V_star(np.asarray(x) / s, p)


def V_x(x, t, p: ModelParams, ps: ProfileSet):
    s = math.sqrt(1.0 + t)
    amp = -ps.kappa * ps.d * math.log1p(t) / (1.0 + t) ** 1.5
    return amp * V_star_deriv(np.asarray(x) / s, p)


# ---------------------------------------------------------------------------
# Panel Gauss-Legendre quadrature shared by Z and the U-operator.

_GL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


def panel_gauss_nodes(lo: float, hi: float, panel_width: float):
    """Gauss-Legendre nodes/weights on panels covering [lo, hi].

    Panel boundaries are anchored at 0 so that integrand kinks at the origin
    coincide with a panel edge.
    """
    if not (hi > lo):
        raise ConfigError("empty quadrature interval")
    h = float(panel_width)
    edges = []
    if lo < 0.0:
        n_neg = max(1, int(math.ceil(-lo / h)))
        edges.append(np.linspace(min(lo, -n_neg * h), 0.0, n_neg + 1))
    if hi > 0.0:
        n_pos = max(1, int(math.ceil(hi / h)))
        edges.append(np.linspace(0.0, max(hi, n_pos * h), n_pos + 1))
    boundaries = np.unique(np.concatenate(edges))
    a = boundaries[:-1]
    b = boundaries[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def _z_window(t: float, alpha: float, x_min: float, x_max: float):
    """Quadrature window: the prescribed core interval, extended so that the
    Gaussian tail discarded around every evaluation point is below 1e-12."""
    s = math.sqrt(t)
    Y = max(50.0 * s, 50.0 / (alpha - 1.0))
    lo = min(-Y, x_min - 12.0 * s)
    hi = max(Y, x_max + 12.0 * s)
    return lo, hi


def Z_eval(x, t: float, p: ModelParams, ps: ProfileSet, derivative: int = 0):
    """Slow-tail correction profile (and its first x-derivative).

    Evaluates the y-integral of c_alpha(y) (1+|y|)^{1-alpha} against the
    closed-form x-derivatives of G(x-y, t) eta(x, t) by panel Gauss-Legendre
    quadrature.  Only derivative orders 0 and 1 are supported in closed form.
    """
    if t <= 0.0:
        raise ConfigError("Z is defined for t > 0")
    if not (1.0 < p.alpha <= 2.0):
        raise ConfigError("Z requires 1 < alpha <= 2")
    if derivative not in (0, 1):
        raise ConfigError("Z_eval supports derivative orders 0 and 1 only")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if ps.c_alpha_plus == 0.0 and ps.c_alpha_minus == 0.0:
        return np.zeros_like(x)

    lo, hi = _z_window(t, p.alpha, float(x.min()), float(x.max()))
    width = min(max(math.sqrt(1.0 + t), 0.5), 25.0)
    y, w = panel_gauss_nodes(lo, hi, width)
    c_of_y = np.where(y >= 0.0, ps.c_alpha_plus, ps.c_alpha_minus)
    rho_w = w * c_of_y * (1.0 + np.abs(y)) ** (1.0 - p.alpha)

    eta_x = eta(x, t, p)
    chi_xt = chi(x, t, p)
    bc = 0.5 * p.beta
    inv2t = 0.5 / t
    norm = 1.0 / math.sqrt(4.0 * math.pi * t)

    out = np.empty_like(x)
    chunk = 512  # bounds the (chunk x nodes) kernel blocks to a few tens of MB
    for i0 in range(0, x.size, chunk):
        xs = x[i0 : i0 + chunk, None]
        z = xs - y[None, :]
        g = norm * np.exp(-(z * z) * (0.25 / t))
        if derivative == 0:
            # d/dx (G eta) = G eta (-(x-y)/(2t) + beta chi / 2)
            kern = g * (-z * inv2t + bc * chi_xt[i0 : i0 + chunk, None])
        else:
            # d^2/dx^2 (G eta) = eta (G'' + 2 G' h + G (h' + h^2)), h = beta chi / 2
            h = bc * chi_xt[i0 : i0 + chunk, None]
            h1 = bc * chi_x(x[i0 : i0 + chunk], t, p)[:, None]
            gxx = (z * z * inv2t * inv2t - inv2t) * g
            gx = -z * inv2t * g
            kern = gxx + 2.0 * gx * h + g * (h1 + h * h)
        out[i0 : i0 + chunk] = kern @ rho_w
    return eta_x * out


def r0_eval(u0: Field, p: ModelParams) -> Field:
    """Weighted primitive of the deviation from the diffusion wave.

    Requires the mass of u0 to match p.mass (so the primitive decays);
    the primitive is anchored at the left box edge.
    """
    x = u0.grid.x
    dev = u0.values - chi_star(x, p)
    total = u0.grid.dx * dev.sum()
    scale = max(1.0, u0.grid.dx * np.abs(dev).sum())
    if abs(total) > 1e-6 * scale:
        raise MassMismatchError(
            f"integral of u0 - chi_star is {total:.3e}, expected 0 (mass mismatch)"
        )
    prim = spi.cumulative_trapezoid(dev, dx=u0.grid.dx, initial=0.0)
    return Field(u0.grid, prim / eta_star(x, p))


def _tail_windows(grid: GridSpec):
    L = grid.half_width
    x = grid.x
    right = (x >= 0.5 * L) & (x <= 0.7 * L)
    left = (x <= -0.5 * L) & (x >= -0.7 * L)
    return left, right


def extract_c_alpha_detailed(r0: Field, p: ModelParams):
    """Window-averaged tail limits of r0, with the spread over each window."""
    left, right = _tail_windows(r0.grid)
    scaled = (1.0 + np.abs(r0.grid.x)) ** (p.alpha - 1.0) * r0.values
    return {
        "c_plus": float(scaled[right].mean()),
        "c_minus": float(scaled[left].mean()),
        "c_plus_spread": float(scaled[right].std()),
        "c_minus_spread": float(scaled[left].std()),
        "window": [0.5 * r0.grid.half_width, 0.7 * r0.grid.half_width],
    }


def extract_c_alpha(r0: Field, p: ModelParams):
    """Tail limits (c_plus, c_minus) estimated on +-[0.5 L, 0.7 L]."""
    d = extract_c_alpha_detailed(r0, p)
    return d["c_plus"], d["c_minus"]


def _quad_d(p: ModelParams, tol: float) -> float:
    val, err = spi.quad(
        lambda y: chi_star(y, p) ** 3 / eta_star(y, p),
        -np.inf,
        np.inf,
        epsabs=tol,
        epsrel=tol,
        limit=200,
    )
    if err > max(100.0 * tol, 1e-8 * max(1.0, abs(val))):
        raise NumericsError(f"quadrature for d did not converge: error={err:.2e}")
    return val


def constants(
    p: ModelParams,
    u0: Field | None = None,
    c_alpha: tuple[float, float] | None = None,
    quad_tol: float = 1e-10,
) -> ProfileSet:
    """Assemble the ProfileSet: d by adaptive quadrature, kappa = beta^2 gamma / 8,
    tail limits from u0 (via r0) or given explicitly, and mu0/mu1.
    """
    if u0 is not None and c_alpha is not None:
        raise ConfigError("pass either u0 or c_alpha, not both")
    if u0 is not None:
        cp, cm = extract_c_alpha(r0_eval(u0, p), p)
    elif c_alpha is not None:
        cp, cm = float(c_alpha[0]), float(c_alpha[1])
    else:
        cp = cm = 0.0
    d = _quad_d(p, quad_tol)
    kappa = p.beta**2 * p.gamma / 8.0
    if 1.0 < p.alpha < 2.0:
        chi0 = float(chi_star(np.array([0.0]), p)[0])
        mu0 = (cp - cm) * math.gamma(0.5 * (3.0 - p.alpha)) + (
            (cp + cm) * p.beta * chi0 / (2.0 - p.alpha)
        ) * math.gamma(2.0 - 0.5 * p.alpha)
    else:
        mu0 = math.nan
    mu1 = 0.5 * (cp + cm) - kappa * d
    return ProfileSet(p, cp, cm, d, kappa, mu0, mu1)


# ---------------------------------------------------------------------------
# Cross-implementation identities at beta = 1.

def _H_weight(x, M: float):
    return math.cosh(M / 4.0) - math.sinh(M / 4.0) * erf(np.asarray(x) / 2.0)


def _f_M(x, M: float):
    x = np.asarray(x, dtype=np.float64)
    return 2.0 * math.sinh(M / 4.0) * np.exp(-(x**2) / 4.0) / (SQRT_PI * _H_weight(x, M))


def fM_check(p: ModelParams, x=None) -> dict:
    """Deviations of the two historical profile formulas from this module's.

    Evaluates the log-derivative form of the self-similar wave and the
    weighted-integral form of the log-correction generator, and returns the
    max deviation from chi_star and from -kappa d V_star on a reference grid.
    Only defined for beta = 1.
    """
    if p.beta != 1.0:
        raise ConfigError("the historical formulas assume beta = 1")
    if x is None:
        x = np.linspace(-20.0, 20.0, 2001)
    x = np.asarray(x, dtype=np.float64)
    M = p.mass

    f_M = _f_M(x, M)
    dev_f = float(np.abs(f_M - chi_star(x, p)).max())

    integral, _ = spi.quad(
        lambda y: _H_weight(y, M) * _f_M(np.array([y]), M)[0] ** 3,
        -np.inf,
        np.inf,
        epsabs=1e-12,
        epsrel=1e-12,
        limit=200,
    )
    f_tilde = (
        -p.gamma
        * (f_M - x)
        * np.exp(-(x**2) / 4.0)
        / (32.0 * SQRT_PI * _H_weight(x, M))
        * integral
    )
    ps = constants(p)
    dev_ft = float(np.abs(f_tilde + ps.kappa * ps.d * V_star(x, p)).max())
    return {"max_dev_fM": dev_f, "max_dev_fM_tilde": dev_ft}
