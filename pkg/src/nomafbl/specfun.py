"""Special-function kernel used by the closed-form capacity expressions.

Self-contained implementations of every transcendental ingredient the
analytical pipeline needs:

  * Gaussian Q-function and its inverse (tail probabilities down to 1e-300)
  * exponential integral Ei on the negative axis, plus the scaled form
    e^z * E1(z) that stays finite for large z
  * Tricomi's confluent hypergeometric function of the second kind,
    evaluated from its integral representation by adaptive Gauss-Legendre
    quadrature (robust for the large negative second parameters that the
    capacity expressions produce)
  * generalized binomial coefficients in sign/log-magnitude form
  * the Beta function via log-Gamma

All functions are pure and thread-safe.  SciPy equivalents exist for most
of them; these evaluators are kept independent so the test suite can
cross-check the two implementations against each other.
"""

from __future__ import annotations

import math

import numpy as np

_EULER_GAMMA = 0.5772156649015329

_SQRT2 = math.sqrt(2.0)


class ConvergenceError(RuntimeError):
    """An adaptive scheme failed to reach its tolerance."""


class InsufficientDataError(ValueError):
    """Not enough qualifying data points for a statistical fit."""


# ---------------------------------------------------------------------------
# Adaptive Gauss-Legendre quadrature
# ---------------------------------------------------------------------------

_GL_LO = np.polynomial.legendre.leggauss(20)
_GL_HI = np.polynomial.legendre.leggauss(41)


def _panel(f, a, b):
    """Low/high order Gauss-Legendre estimates of the integral over [a, b]."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    xl, wl = _GL_LO
    xh, wh = _GL_HI
    lo = half * float(np.dot(wl, f(mid + half * xl)))
    hi = half * float(np.dot(wh, f(mid + half * xh)))
    return lo, hi


def gauss_adaptive(f, a: float, b: float, abs_tol: float = 1e-12,
                   rel_tol: float = 1e-12, max_panels: int = 4096) -> float:
    """Adaptive Gauss-Legendre integration of a vectorized callable on [a, b].

    Panels are bisected until the difference between the order-20 and
    order-41 rules is below ``max(abs_tol * width_fraction, rel_tol * |I|)``.
    Raises ConvergenceError if the panel budget is exhausted.
    """
    if not b > a:
        raise ValueError(f"empty integration interval [{a}, {b}]")
    total_width = b - a
    stack = [(a, b)]
    pieces = []
    panels = 0
    while stack:
        lo_a, lo_b = stack.pop()
        panels += 1
        if panels > max_panels:
            raise ConvergenceError(
                f"adaptive quadrature exceeded {max_panels} panels on [{a}, {b}]")
        coarse, fine = _panel(f, lo_a, lo_b)
        err = abs(fine - coarse)
        budget = max(abs_tol * (lo_b - lo_a) / total_width,
                     rel_tol * abs(fine))
        if err <= budget or (lo_b - lo_a) < 1e-15 * total_width:
            pieces.append(fine)
        else:
            mid = 0.5 * (lo_a + lo_b)
            stack.append((lo_a, mid))
            stack.append((mid, lo_b))
    return math.fsum(pieces)


# ---------------------------------------------------------------------------
# Gaussian Q-function
# ---------------------------------------------------------------------------

def gaussian_q(x: float) -> float:
    """Upper-tail probability Q(x) of the standard normal distribution."""
    return 0.5 * math.erfc(x / _SQRT2)


def gaussian_q_inv(p: float) -> float:
    """Inverse Gaussian Q-function: the x with Q(x) = p, for p in (0, 1).

    Bisection brackets the root, a safeguarded Newton iteration polishes it.
    Accurate to better than 1e-12 relative in Q even for extreme tail
    probabilities.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"gaussian_q_inv requires 0 < p < 1, got {p}")
    if p == 0.5:
        return 0.0
    lo, hi = -40.0, 40.0
    # Q is decreasing: Q(lo) ~ 1, Q(hi) ~ 0.
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if gaussian_q(mid) > p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-2:
            break
    x = 0.5 * (lo + hi)
    for _ in range(60):
        q = gaussian_q(x)
        err = q - p
        if abs(err) <= 1e-14 * p:
            break
        pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if pdf <= 0.0:
            break
        step = err / pdf          # Q'(x) = -pdf, so x_new = x + (Q - p)/pdf
        x_new = x + step
        if not lo <= x_new <= hi:
            x_new = 0.5 * (lo + hi)
        if gaussian_q(x_new) > p:
            lo = x_new
        else:
            hi = x_new
        if x_new == x:
            break
        x = x_new
    return x


# ---------------------------------------------------------------------------
# Exponential integral
# ---------------------------------------------------------------------------

def _e1_series(z: float) -> float:
    """E1(z) by the convergent series, for 0 < z <= 1."""
    total = -_EULER_GAMMA - math.log(z)
    term = 1.0
    for k in range(1, 60):
        term *= -z / k
        increment = -term / k
        total += increment
        if abs(increment) < 1e-17 * abs(total):
            break
    return total


def _e1_cf_scaled(z: float) -> float:
    """e^z * E1(z) by the standard continued fraction, for z > 1."""
    # E1(z) = e^{-z} / (z + 1 - 1/(z + 3 - 4/(z + 5 - 9/(...))))
    tiny = 1e-300
    b = z + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    f = d
    for k in range(1, 200):
        a = -k * k
        b += 2.0
        d = 1.0 / (b + a * d)
        c = b + a / c
        if c == 0.0:
            c = tiny
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            return f
    raise ConvergenceError(f"continued fraction for E1 stalled at z={z}")


def exp_scaled_e1(z: float) -> float:
    """Scaled exponential integral e^z * E1(z) for z > 0 (no overflow)."""
    if z <= 0.0:
        raise ValueError(f"exp_scaled_e1 requires z > 0, got {z}")
    if z <= 1.0:
        return math.exp(z) * _e1_series(z)
    return _e1_cf_scaled(z)


def exp_integral_ei(x: float) -> float:
    """Exponential integral Ei(x) for strictly negative arguments.

    Uses the identity Ei(x) = -E1(-x).  Below x ~ -700 the value underflows
    to zero; that is returned silently since |Ei| < 1e-306 there.
    """
    if x >= 0.0:
        raise ValueError(f"exp_integral_ei requires x < 0, got {x}")
    z = -x
    if z <= 1.0:
        return -_e1_series(z)
    return -math.exp(-z) * _e1_cf_scaled(z)


# ---------------------------------------------------------------------------
# Tricomi confluent hypergeometric function of the second kind
# ---------------------------------------------------------------------------

def tricomi_u(a: float, b: float, z: float, abs_tol: float = 1e-12,
              rel_tol: float = 1e-12) -> float:
    """Confluent hypergeometric function of the second kind.

    Evaluates the Laplace integral

        U(a, b, z) = (1/Gamma(a)) * int_0^inf e^{-z y} y^{a-1} (1+y)^{b-a-1} dy

    valid for a > 0, z > 0 and any real b.  The integral is split at y = 1;
    the head uses the substitution y = w^{1/a} to remove the endpoint
    singularity when a < 1, and the tail is mapped onto (0, 1] by
    y = 1 - ln(u)/z.  Both pieces are integrated by adaptive Gauss-Legendre.
    """
    if a <= 0.0 or z <= 0.0:
        raise ValueError(f"tricomi_u requires a > 0 and z > 0, got a={a}, z={z}")
    power = b - a - 1.0

    if a >= 1.0:
        def head(y):
            return np.exp(-z * y) * y ** (a - 1.0) * (1.0 + y) ** power
    else:
        inv_a = 1.0 / a

        def head(w):
            y = w ** inv_a
            return inv_a * np.exp(-z * y) * (1.0 + y) ** power

    head_val = gauss_adaptive(head, 0.0, 1.0, abs_tol, rel_tol)

    scale = math.exp(-z) / z
    if scale > 0.0:
        def tail(u):
            y = 1.0 - np.log(u) / z
            return y ** (a - 1.0) * (1.0 + y) ** power

        tail_val = scale * gauss_adaptive(tail, 0.0, 1.0, abs_tol, rel_tol)
    else:
        tail_val = 0.0
    return (head_val + tail_val) / math.gamma(a)


# ---------------------------------------------------------------------------
# Binomial and Beta
# ---------------------------------------------------------------------------

def gen_binomial(alpha: float, s: int) -> float:
    """Generalized binomial coefficient C(alpha, s) for real upper index.

    Computed as prod_{j=0}^{s-1} (alpha - j) / s! in sign/log-magnitude form
    so that large indices neither overflow nor lose the sign.  Exact for
    integer alpha >= s >= 0.
    """
    if s < 0:
        raise ValueError(f"gen_binomial requires s >= 0, got {s}")
    if s == 0:
        return 1.0
    if float(alpha).is_integer() and alpha >= 0:
        ai = int(alpha)
        return float(math.comb(ai, s)) if ai >= s else 0.0
    log_mag = 0.0
    sign = 1.0
    for j in range(s):
        factor = alpha - j
        if factor == 0.0:
            return 0.0
        if factor < 0.0:
            sign = -sign
        log_mag += math.log(abs(factor))
    log_mag -= math.lgamma(s + 1.0)
    if log_mag > 709.0:
        return sign * math.inf
    return sign * math.exp(log_mag)


def beta_fn(a: float, b: float) -> float:
    """Beta function B(a, b) = Gamma(a)Gamma(b)/Gamma(a+b) for a, b > 0."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"beta_fn requires positive arguments, got ({a}, {b})")
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
