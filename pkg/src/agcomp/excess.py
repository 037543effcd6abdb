"""Excess bounds for thin triangles on CD(K, N) spaces with K <= 0."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, HypothesisError
from .kernels import CurvatureDimension, PhiProfile, _phi0, c_model, s_model
from .numerics import golden_section


@dataclass(frozen=True)
class TriangleStats:
    """Excess E, height h and distance-to-nearer-endpoint l of a point."""

    E: float
    h: float
    l: float

    def check(self, tol: float = 1e-9) -> None:
        if self.E < -tol or self.h < 0 or self.l < 0:
            raise DomainError(f"negative triangle statistic in {self}")
        if self.E > 2 * self.h + tol:
            raise DomainError(f"excess exceeds twice the height in {self}")
        if self.h > self.l + tol:
            raise DomainError(f"height exceeds endpoint distance in {self}")


@dataclass(frozen=True)
class AG2Hypotheses:
    p_excess: float
    l_p: float
    R: float
    alpha: float
    K: float
    N: float

    def check(self) -> None:
        if self.R <= 0 or self.alpha <= 0 or self.N <= 1 or self.K > 0 or self.p_excess < 0:
            raise DomainError(f"invalid parameters {self}")
        if not self.l_p > 3 * self.R:
            raise HypothesisError("i", f"l(p)={self.l_p} must exceed 3R={3 * self.R}")
        if self.K * self.R**2 < -self.alpha:
            raise HypothesisError("ii", f"K R^2={self.K * self.R**2} below -alpha={-self.alpha}")
        c = c_model(CurvatureDimension(self.K, self.N), self.l_p - 3 * self.R)
        A = a_const(self.N, self.alpha)
        if 2 * self.R * c > A:
            raise HypothesisError("iii", f"2R c={2 * self.R * c} exceeds A(N, alpha)={A}")


def _check_hl(cd: CurvatureDimension, h: float, l: float) -> None:
    if cd.K > 0:
        raise DomainError("excess bounds require K <= 0")
    if not (0 < h < l):
        raise DomainError(f"need 0 < h < l, got h={h}, l={l}")


def d_coefficient(cd: CurvatureDimension, h: float, l: float) -> float:
    """(s(h)/h)^{N-1} c(l - h)/N."""
    _check_hl(cd, h, l)
    ratio = s_model(cd, h) / h
    return ratio ** (cd.N - 1) * c_model(cd, l - h) / cd.N


def theta0(D: float, h: float, N: float) -> float:
    """Unique root in (0, h) of theta^{N-1} = D (h^N - theta^N).

    Solved for w = (theta/h)^{N-1}, where the equation reads
    w = D h (1 - w^{N/(N-1)}).  The root in w is well scaled even when
    theta/h itself underflows towards 0 for N close to 1.
    """
    if not (D > 0 and h > 0 and N > 1):
        raise DomainError("theta0 requires D > 0, h > 0, N > 1")
    beta = D * h
    p = N / (N - 1)
    g = lambda w: w - beta * (1 - w**p)  # noqa: E731
    try:
        w, info = brentq(g, 0.0, 1.0, xtol=1e-300, rtol=1e-15, maxiter=200, full_output=True, disp=False)
    except RuntimeError as exc:  # pragma: no cover - g is strictly increasing
        raise ConvergenceError(str(exc)) from exc
    if not info.converged:
        raise ConvergenceError(f"bracketing failed after {info.iterations} iterations")
    return w ** (1 / (N - 1)) * h


def ag1_bound(cd: CurvatureDimension, h: float, l: float) -> float:
    """Closed-form excess bound on E(x) given h(x) < l(x).

    For N = 2 this is the exact minimum of the comparison objective
    2 theta + 4 D phi_{0,2}(theta, h), which is the logarithmic display
    evaluated at 2D.
    """
    _check_hl(cd, h, l)
    N = cd.N
    D = d_coefficient(cd, h, l)
    if N > 2:
        return 2 * (N - 1) / (N - 2) * (D * h**N) ** (1 / (N - 1))
    if N < 2:
        return N / (2 - N) * D * h * h
    y = 2 * D * h
    q = math.sqrt(1 + y * y)
    return y * h * (1 / (1 + q) + math.log((1 + q) / y))


def pre_ab_minimize(cd: CurvatureDimension, lip: float, a: float, h: float, R: float):
    """Minimize lip*theta + a*phi(theta, R) over theta in (0, h).

    Returns ``(value, theta)``.  R = h is accepted as the limit R -> h+.
    """
    if lip < 0 or a < 0:
        raise DomainError("lip and a must be nonnegative")
    if not (0 < h <= R):
        raise DomainError(f"need 0 < h <= R, got h={h}, R={R}")
    if cd.K > 0 and cd.K * R * R >= (cd.N - 1) * math.pi**2:
        raise DomainError("need K R^2 < (N-1) pi^2")
    theta_min = 1e-12 * h
    if a == 0:
        return lip * theta_min, theta_min
    prof = PhiProfile(cd, R, theta_min)
    obj = lambda t: lip * t + a * prof.value(t)  # noqa: E731
    theta, val = golden_section(obj, theta_min, h, tol=1e-10)
    # Golden section pins the minimizer only to ~sqrt(eps); phi'' > 0 makes the
    # objective strictly convex, so polish on the derivative when it changes sign.
    grad = lambda t: lip + a * prof.d1(t)  # noqa: E731
    if theta_min < theta < h and grad(theta_min) < 0 < grad(h):
        lo, hi = max(theta_min, theta - 1e-6 * h), min(h, theta + 1e-6 * h)
        if not grad(lo) < 0 < grad(hi):
            lo, hi = theta_min, h
        t = brentq(grad, lo, hi, xtol=1e-15 * h, rtol=1e-15, maxiter=200)
        if obj(t) <= val:
            theta, val = t, obj(t)
    return val, theta


def pre_ab_bound(cd: CurvatureDimension, lip: float, a: float, h: float, R: float) -> float:
    """inf over 0 < theta < h of lip*theta + a*phi_{K,N}(theta, R)."""
    return pre_ab_minimize(cd, lip, a, h, R)[0]


def a_const(N: float, alpha: float) -> float:
    """A(N, alpha) = N/2^N * s_{-4 alpha, N}(1)^{1-N}."""
    if N <= 1 or alpha <= 0:
        raise DomainError("a_const requires N > 1, alpha > 0")
    return N / 2**N * s_model(CurvatureDimension(-4 * alpha, N), 1.0) ** (1 - N)


def ag2_terms(hyp: AG2Hypotheses) -> dict:
    """The three case bounds whose sum is :func:`ag2_bound`."""
    hyp.check()
    N, R, E = hyp.N, hyp.R, hyp.p_excess
    if N <= 2:
        raise NotImplementedError("the assembled second excess bound is only available for N > 2")
    c = c_model(CurvatureDimension(hyp.K, N), hyp.l_p - 3 * R)
    A = a_const(N, hyp.alpha)
    p12 = float(_phi0(N, 1.0, 2.0))
    lead = 2 * (N - 1) / (N - 2)
    return {
        "case1": lead * (c * R**N / A) ** (1 / (N - 1)),
        "case2": lead * (E * R ** (N - 2) / (A * p12)) ** (1 / (N - 1)),
        "case3": E + 2 * math.sqrt(E * R / (A * p12)),
    }


def ag2_bound(hyp: AG2Hypotheses) -> float:
    """Explicit upper bound on sup of E over B_R(p), N > 2."""
    t = ag2_terms(hyp)
    return t["case1"] + t["case2"] + t["case3"]
