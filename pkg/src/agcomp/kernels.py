"""Closed-form comparison functions for CD(K, N) spaces.

Every kernel is written through the reduced variable ``x = K*theta**2/(N-1)``
so that the K > 0, K = 0 and K < 0 branches are one smooth function of x.
Near x = 0 the trigonometric/hyperbolic ratios are replaced by truncated
Taylor series, which keeps the kernels continuous (to rounding) across K = 0.

Functions accept scalars or numpy arrays for the length argument and return
a float for scalar input.  ``math.inf`` is the explicit +infinity value of the
extended-real kernels (``tau``, ``max_diameter``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, InvalidInput

# |x| below this switches to series expansions
SERIES_SWITCH = 1e-6

ExtendedReal = float


@dataclass(frozen=True)
class CurvatureDimension:
    """Curvature lower bound K (1/length^2) and dimension upper bound N > 1."""

    K: float
    N: float

    def __post_init__(self):
        if not (math.isfinite(self.K) and math.isfinite(self.N)):
            raise DomainError(f"K and N must be finite, got K={self.K}, N={self.N}")
        if self.N <= 1:
            raise DomainError(f"N must exceed 1, got {self.N}")

    def scaled(self, lam: float) -> "CurvatureDimension":
        """The pair (lam**2 * K, N) appearing in the scaling identities."""
        return CurvatureDimension(lam * lam * self.K, self.N)


def _out(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


def _reduced(cd: CurvatureDimension, theta):
    return cd.K * np.square(theta) / (cd.N - 1.0)


# --- reduced-variable building blocks -------------------------------------


def _sinc_k(x):
    """sin(sqrt x)/sqrt x, continued to sinh(sqrt -x)/sqrt -x for x < 0."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.abs(x))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        pos = np.sin(r) / r
        neg = np.sinh(r) / r
    ser = 1.0 - x / 6.0 + x * x / 120.0 - x**3 / 5040.0
    return np.where(np.abs(x) < SERIES_SWITCH, ser, np.where(x > 0, pos, neg))


def _log_sinc_k(x):
    """log of :func:`_sinc_k`, overflow free for large negative x."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.abs(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = np.log(np.sin(r) / r)
        neg = r + np.log(-np.expm1(-2.0 * r)) - math.log(2.0) - np.log(r)
    ser = np.log1p(-x / 6.0 + x * x / 120.0 - x**3 / 5040.0)
    return np.where(np.abs(x) < SERIES_SWITCH, ser, np.where(x > 0, pos, neg))


def _cot_k(x):
    """sqrt(x) cot sqrt(x), continued to sqrt(-x) coth sqrt(-x) for x < 0."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.abs(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = r / np.tan(r)
        neg = r / np.tanh(r)
    ser = 1.0 - x / 3.0 - x * x / 45.0 - 2.0 * x**3 / 945.0
    return np.where(np.abs(x) < SERIES_SWITCH, ser, np.where(x > 0, pos, neg))


def _cos_k(x):
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.abs(x))
    with np.errstate(over="ignore"):
        return np.where(x >= 0, np.cos(r), np.cosh(r))


def _check_theta(theta, strict=False):
    theta = np.asarray(theta, dtype=float)
    if np.any(np.isnan(theta)):
        raise InvalidInput("theta is NaN")
    if strict and np.any(theta <= 0):
        raise DomainError("theta must be positive")
    if np.any(theta < 0):
        raise InvalidInput("theta must be nonnegative")
    return theta


# --- public kernels --------------------------------------------------------


def s_model(cd: CurvatureDimension, theta):
    """The model Jacobian s_{K,N}(theta) (sin / identity / sinh profile)."""
    theta = _check_theta(theta)
    if cd.K > 0 and np.any(theta * math.sqrt(cd.K / (cd.N - 1)) > math.pi * (1 + 1e-15)):
        raise DomainError("theta*sqrt(K/(N-1)) exceeds pi")
    return _out(theta * _sinc_k(_reduced(cd, theta)))


def s_model_prime(cd: CurvatureDimension, theta):
    """Derivative of :func:`s_model` in theta."""
    theta = _check_theta(theta)
    return _out(_cos_k(_reduced(cd, theta)))


def s_log_ratio(cd: CurvatureDimension, a, b):
    """log(s(a)/s(b)), overflow free; a, b > 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return _out(np.log(a / b) + _log_sinc_k(_reduced(cd, a)) - _log_sinc_k(_reduced(cd, b)))


def c_model(cd: CurvatureDimension, theta):
    """Laplacian comparison bound for the distance function, K <= 0.

    (N-1)/theta for K = 0 and sqrt(-K(N-1)) coth(theta sqrt(-K/(N-1))) for
    K < 0.  ``theta = inf`` returns the limit value.
    """
    if cd.K > 0:
        raise DomainError("c_model is defined for K <= 0 only")
    theta = _check_theta(theta, strict=True)
    with np.errstate(invalid="ignore"):
        val = (cd.N - 1.0) / theta * _cot_k(_reduced(cd, theta))
    val = np.where(np.isinf(theta), math.sqrt(-cd.K * (cd.N - 1.0)), val)
    return _out(val)


def tau(cd: CurvatureDimension, t, theta):
    """Distortion coefficient tau^{(t)}_{K,N}(theta), values in [0, +inf].

    Returns ``math.inf`` when K*theta**2 >= (N-1)*pi**2.
    """
    t = np.asarray(t, dtype=float)
    theta = _check_theta(theta)
    if np.any((t < 0) | (t > 1)):
        raise InvalidInput("t must lie in [0, 1]")
    t, theta = np.broadcast_arrays(t, theta)
    x = _reduced(cd, theta)
    infinite = x >= math.pi**2
    xs = np.where(infinite, 0.0, x)
    with np.errstate(divide="ignore"):
        log_ratio = _log_sinc_k(t * t * xs) - _log_sinc_k(xs)
        val = t * np.exp((1.0 - 1.0 / cd.N) * log_ratio)
    val = np.where(t == 0, 0.0, val)
    val = np.where(t == 1, 1.0, val)
    return _out(np.where(infinite, math.inf, val))


def tau_tilde(cd: CurvatureDimension, theta):
    """(1 + (N-1) * u cot u)/N with u = theta sqrt(K/(N-1)) (hyperbolic for K < 0)."""
    theta = _check_theta(theta)
    x = _reduced(cd, theta)
    if np.any(x >= math.pi**2):
        raise DomainError("K*theta^2 must stay below (N-1)*pi^2")
    return _out((1.0 + (cd.N - 1.0) * _cot_k(x)) / cd.N)


def log_derivative_s(cd: CurvatureDimension, theta):
    """s'(theta)/s(theta) for theta > 0."""
    theta = _check_theta(theta, strict=True)
    return _out(_cot_k(_reduced(cd, theta)) / theta)


def max_diameter(cd: CurvatureDimension) -> ExtendedReal:
    if cd.K > 0:
        return math.pi * math.sqrt((cd.N - 1.0) / cd.K)
    return math.inf


# --- quadrature for phi and volume integrals ------------------------------

GL_ORDER = 20


@lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def _panels(a: float, b: float, right_sing: float, hmax: float) -> np.ndarray:
    """Breakpoints on [a, b] graded toward the singularities at 0 and right_sing.

    Each panel has half-length at most a quarter of its distance to the
    nearest singularity, so Gauss-Legendre converges geometrically on it.
    """
    pts = [a]
    x = a
    while True:
        gap = right_sing - x
        if math.isfinite(right_sing) and gap <= 1e-14 * max(right_sing, 1.0):
            pts.append(b)
            break
        step = min(hmax, 0.5 * x, 0.4 * gap)
        if x + step >= b * (1 - 1e-15):
            pts.append(b)
            break
        x += step
        pts.append(x)
    return np.asarray(pts)


class _Cumulative:
    """Tail integrals x -> int_x^b f on a graded panel mesh over [a, b]."""

    def __init__(self, f, a: float, b: float, right_sing: float, hmax: float):
        self.f = f
        self.a, self.b = a, b
        self.breaks = _panels(a, b, right_sing, hmax)
        u, w = _gauss_legendre(GL_ORDER)
        lo, hi = self.breaks[:-1], self.breaks[1:]
        nodes = lo[:, None] + (hi - lo)[:, None] * u[None, :]
        vals = f(nodes.ravel()).reshape(nodes.shape)
        panel = (vals * w[None, :]).sum(axis=1) * (hi - lo)
        self.tail = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]])

    def from_(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(self.breaks) - 2)
        top = self.breaks[k + 1]
        u, w = _gauss_legendre(GL_ORDER)
        out = np.empty_like(x)
        for sl in _chunks(len(x), 4096):
            xs, ts = x[sl], top[sl]
            nodes = xs[:, None] + (ts - xs)[:, None] * u[None, :]
            vals = self.f(nodes.ravel()).reshape(nodes.shape)
            out[sl] = (vals * w[None, :]).sum(axis=1) * (ts - xs) + self.tail[k[sl] + 1]
        return out


def _chunks(n, size):
    for i in range(0, n, size):
        yield slice(i, min(n, i + size))


def _quad_setup(cd: CurvatureDimension):
    """Right singularity and panel cap for integrands built from s_{K,N}."""
    right = max_diameter(cd)
    if cd.K < 0:
        hmax = 0.5 * math.pi / math.sqrt(-cd.K / (cd.N - 1.0))
    else:
        hmax = math.inf
    return right, hmax


def _phi0(N: float, r, R: float):
    """Closed form of phi for K = 0, stable across N = 2 (also valid for r > R)."""
    r = np.asarray(r, dtype=float)
    L = np.log(R / r)
    y = -(2.0 - N) * L
    with np.errstate(invalid="ignore", divide="ignore"):
        e1 = np.where(np.abs(y) < 1e-8, 1.0 + y / 2.0 + y * y / 6.0, np.expm1(y) / y)
    return (R * R * L * e1 - (R * R - r * r) / 2.0) / N


class PhiProfile:
    """The comparison potential r -> phi_{K,N}(r, R) on [r_min, r_max].

    ``r_max`` may exceed R; beyond R the same double integral (with reversed
    orientation) gives the smooth continuation of the profile, which is what a
    discrete Laplacian stencil straddling the sphere S_R needs.
    """

    def __init__(self, cd: CurvatureDimension, R: float, r_min: float, r_max: float | None = None):
        if r_max is None:
            r_max = R
        if not (0 < r_min <= R <= r_max):
            raise DomainError(f"need 0 < r_min <= R <= r_max, got {r_min}, {R}, {r_max}")
        if cd.K > 0 and cd.K * r_max**2 >= (cd.N - 1.0) * math.pi**2:
            raise DomainError("K*R^2 must stay below (N-1)*pi^2")
        self.cd, self.R, self.r_min, self.r_max = cd, R, r_min, r_max
        self._exact = cd.K == 0
        if self._exact:
            return
        right, hmax = _quad_setup(cd)
        n1 = cd.N - 1.0
        jac = lambda eta: np.power(_s_raw(cd, eta), n1)  # noqa: E731
        self._jac = _Cumulative(jac, r_min, r_max, right, hmax)
        self._jac_R = float(self._jac.from_(R)[0])
        self._w = _Cumulative(self._mass_ratio, r_min, r_max, right, hmax)
        self._w_R = float(self._w.from_(R)[0])

    def _mass_ratio(self, xi):
        """int_xi^R (s(eta)/s(xi))^{N-1} d eta."""
        v = self._jac.from_(xi) - self._jac_R
        return v / np.power(_s_raw(self.cd, xi), self.cd.N - 1.0)

    def _check(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r_min * (1 - 1e-14)) or np.any(r > self.r_max * (1 + 1e-14)):
            raise DomainError("r outside the profile range")
        return np.clip(r, self.r_min, self.r_max)

    def value(self, r):
        r = self._check(r)
        if self._exact:
            return _out(_phi0(self.cd.N, r, self.R))
        return _out(np.reshape(self._w.from_(r) - self._w_R, r.shape))

    def inner(self, r):
        """int_r^R (s(eta)/s(r))^{N-1} d eta, i.e. minus the first derivative."""
        r = self._check(r)
        N, R = self.cd.N, self.R
        if self._exact:
            return _out((R**N - r**N) / (N * r ** (N - 1.0)))
        return _out(np.reshape(self._mass_ratio(r.ravel()), r.shape))

    def d1(self, r):
        return _out(-np.asarray(self.inner(r)))

    def d2(self, r):
        r = self._check(r)
        w = np.asarray(self.inner(r))
        return _out(1.0 + (self.cd.N - 1.0) * _cot_k(_reduced(self.cd, r)) / r * w)


def _s_raw(cd, theta):
    return np.maximum(theta * _sinc_k(_reduced(cd, theta)), 0.0)


def _check_phi_args(cd, r, R):
    r = np.asarray(r, dtype=float)
    if not R > 0 or np.any(r <= 0) or np.any(r > R):
        raise DomainError("phi requires 0 < r <= R")
    if cd.K > 0 and cd.K * R * R >= (cd.N - 1.0) * math.pi**2:
        raise DomainError("phi requires K*R^2 < (N-1)*pi^2")
    return r


def phi(cd: CurvatureDimension, r, R: float):
    """phi_{K,N}(r, R): the double integral of (s(eta)/s(xi))^{N-1} over r <= xi <= eta <= R."""
    r = _check_phi_args(cd, r, R)
    return PhiProfile(cd, R, float(np.min(r))).value(r)


def phi_d1(cd: CurvatureDimension, r, R: float):
    """d/dr phi_{K,N}(r, R) (nonpositive)."""
    r = _check_phi_args(cd, r, R)
    return PhiProfile(cd, R, float(np.min(r))).d1(r)


def phi_d2(cd: CurvatureDimension, r, R: float):
    """d^2/dr^2 phi_{K,N}(r, R)."""
    r = _check_phi_args(cd, r, R)
    return PhiProfile(cd, R, float(np.min(r))).d2(r)


def jacobian_integral(cd: CurvatureDimension, r: float) -> float:
    """int_0^r s_{K,N}(t)^{N-1} dt, the radial volume profile of the model."""
    if r < 0:
        raise DomainError("r must be nonnegative")
    if r == 0:
        return 0.0
    if cd.K == 0:
        return r**cd.N / cd.N
    right, hmax = _quad_setup(cd)
    if cd.K > 0 and r > right * (1 + 1e-14):
        raise DomainError("r exceeds the model diameter")
    r = min(r, right)
    a = 1e-16 * r
    cum = _Cumulative(lambda t: np.power(_s_raw(cd, t), cd.N - 1.0), a, r, right, hmax)
    # [0, a] contributes ~ a^N / N
    return float(cum.tail[0]) + a**cd.N / cd.N


def bishop_gromov_ratio(cd: CurvatureDimension, r: float, R: float) -> float:
    """Lower bound for m(B_r)/m(B_R); equality holds on the model spaces."""
    if not 0 < r <= R:
        raise DomainError("need 0 < r <= R")
    if R > max_diameter(cd) * (1 + 1e-14):
        raise DomainError("R exceeds pi*sqrt((N-1)/K)")
    if r == R:
        return 1.0
    if cd.K == 0:
        return (r / R) ** cd.N
    return jacobian_integral(cd, r) / jacobian_integral(cd, R)


def psi(N: float, R: float, E: float, l: float, K: float) -> float:
    """Scale-invariant smallness quantity controlling the second excess estimate."""
    if N <= 1 or R <= 0 or E < 0 or K > 0:
        raise DomainError("psi requires N > 1, R > 0, E >= 0, K <= 0")
    if not l > 3 * R:
        raise DomainError(f"psi requires l > 3R, got l={l}, R={R}")
    c = c_model(CurvatureDimension(K, N), l - 3 * R)
    root = math.sqrt(E * R)
    if N > 2:
        return E + root + (E * R ** (N - 2)) ** (1 / (N - 1)) + (c * R**N) ** (1 / (N - 1))
    if N == 2:
        e_term = E * math.log(2 + R / E) if E > 0 else 0.0
        c_term = c * R * R * math.log(2 + 1 / (c * R)) if c > 0 else 0.0
        return e_term + root + c_term
    return E + root + c * R * R
