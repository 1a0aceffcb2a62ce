"""Finite-blocklength rate and the per-sample effective-capacity kernel.

The normal-approximation rate over n channel uses at error probability eps is

    r = log2(1 + gamma) - delta(gamma) * Qinv(eps) / (sqrt(n) * ln 2)   [bits/use]

with channel dispersion root delta = sqrt(1 - (1+gamma)^-2).  Multiplying by
ln 2 gives the same rate in nats per use.

The effective-capacity machinery works with the Laplace-style kernel

    k(gamma) = eps + (1 - eps) * (1 + gamma)^(2 zeta) * exp(beta * delta)

where 2*zeta = -theta*n and beta = theta*sqrt(n)*Qinv(eps), i.e. exactly
exp(-theta * n * r_nats) mixed with the decoding-failure mass eps.  The
effective capacity in bits per channel use is then
-ln E[k] / (theta * n * ln 2).  A widely reproduced typo folds the ln 2 of
the unit conversion into zeta as well; doing both double-counts it and makes
the "capacity" exceed the mean service rate, so the nat-domain zeta is used
here and the single ln 2 stays in the outer transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .specfun import gaussian_q_inv

LN2 = math.log(2.0)


@dataclass(frozen=True)
class KernelParams:
    """Derived per-user constants of the capacity kernel.

    zeta    log-term half exponent, -theta*n/2 (negative for theta > 0)
    beta    dispersion-term coefficient theta*sqrt(n)*Qinv(eps)
    kappa   beta^2/2 + beta, the constant of the quadratic kernel expansion
    """

    zeta: float
    beta: float
    kappa: float


def make_kernel_params(theta: float, n: int, eps: float) -> KernelParams:
    if theta <= 0.0:
        raise ValueError(f"theta must be positive, got {theta}")
    if n < 1:
        raise ValueError(f"blocklength n must be >= 1, got {n}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    beta = theta * math.sqrt(n) * gaussian_q_inv(eps)
    return KernelParams(zeta=-theta * n / 2.0, beta=beta,
                        kappa=beta * beta / 2.0 + beta)


def dispersion_root(gamma):
    """sqrt(1 - (1+gamma)^-2), the square root of the channel dispersion.

    Evaluated as sqrt(gamma*(gamma+2))/(1+gamma) to avoid cancellation at
    small gamma.  Lies in [0, 1) and increases monotonically.
    """
    g = np.asarray(gamma, dtype=float)
    out = np.sqrt(g * (g + 2.0)) / (1.0 + g)
    return float(out) if out.ndim == 0 else out


def fbl_rate(gamma, n: int, eps: float):
    """Normal-approximation achievable rate in bits per channel use.

    May be negative for small gamma; callers clamp if their semantics
    require it (the queue simulator does, the capacity kernel must not).
    """
    if n < 1:
        raise ValueError(f"blocklength n must be >= 1, got {n}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0.0):
        raise ValueError("gamma must be non-negative")
    penalty = dispersion_root(g) * gaussian_q_inv(eps) / (math.sqrt(n) * LN2)
    out = np.log2(1.0 + g) - penalty
    return float(out) if out.ndim == 0 else out


def ec_kernel(gamma, kp: KernelParams, eps: float):
    """Inside-expectation integrand eps + (1-eps)(1+gamma)^(2 zeta) e^(beta delta)."""
    g = np.asarray(gamma, dtype=float)
    val = eps + (1.0 - eps) * (1.0 + g) ** (2.0 * kp.zeta) \
        * np.exp(kp.beta * dispersion_root(g))
    return float(val) if val.ndim == 0 else val


def ec_kernel_approx(gamma, kp: KernelParams, eps: float):
    """Second-order kernel expansion underlying the closed forms.

    Truncates e^(beta delta) to three Maclaurin terms and the dispersion
    root to delta ~ 1 - (1+gamma)^-2 / 2, which regroups into

        eps + (1-eps) [ (1+g)^(2z) (K+1) - (1+g)^(2z-2) (K - beta/2) ].

    Exact when beta = 0; overshoots near gamma = 0 by roughly beta/2.
    """
    g = np.asarray(gamma, dtype=float)
    base = (1.0 + g) ** (2.0 * kp.zeta)
    bracket = base * (kp.kappa + 1.0) \
        - base * (1.0 + g) ** -2.0 * (kp.kappa - kp.beta / 2.0)
    val = eps + (1.0 - eps) * bracket
    return float(val) if val.ndim == 0 else val
