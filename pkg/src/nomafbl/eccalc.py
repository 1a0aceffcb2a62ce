"""Effective-capacity evaluators: Monte-Carlo, quadrature oracle, closed forms.

All three compute the same object,

    C_e = -ln( E[k(gamma)] ) / (theta * n * ln 2)    [bits per channel use],

where the expectation is over the ordered-gain law of the selected user and
k is either the exact kernel or its second-order expansion (fblrate module).
Cross-checking the routes localizes failures: closed form vs quadrature of
the expanded kernel isolates the series algebra, quadrature of the exact
kernel vs Monte-Carlo isolates sampling, and exact vs expanded quadrature
isolates the expansion error itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .channel import (ROLES, SystemConfig, gamma_for_role, ordered_pdf,
                      ordered_quantile)
from .fblrate import (LN2, ec_kernel, ec_kernel_approx, fbl_rate,
                      make_kernel_params)
from .specfun import ConvergenceError, beta_fn, exp_scaled_e1, tricomi_u

_MC_CHUNK = 1 << 16
_MACHEPS = np.finfo(float).eps

METHODS = ("closed_form", "monte_carlo", "quadrature")


@dataclass(frozen=True)
class EvalControls:
    """Numerical policy shared by the evaluators.

    Monte-Carlo sampling is chunked into fixed-size blocks, each driven by
    an independent substream derived from (seed, chunk index), so results
    are reproducible regardless of how the chunks are scheduled.
    """

    mc_samples: int = 200_000
    seed: int = 1234
    quad_rel_tol: float = 1e-9
    series_max_terms: int = 200
    series_rel_tol: float = 1e-10

    def __post_init__(self):
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        if not 0.0 < self.quad_rel_tol < 1.0:
            raise ValueError("quad_rel_tol must lie in (0, 1)")
        if not 0.0 < self.series_rel_tol < 1.0:
            raise ValueError("series_rel_tol must lie in (0, 1)")
        if self.series_max_terms < 2:
            raise ValueError("series_max_terms must be >= 2")


@dataclass
class EcResult:
    """An effective-capacity value with method tag and diagnostics."""

    value: float
    method: str
    std_error: float = 0.0
    series_terms: int | None = None
    converged: bool = True
    tail_bound: float | None = None
    note: str = ""


def _ec_from_mean(mean: float, theta: float, n: int) -> float:
    return -math.log(mean) / (theta * n * LN2)


def _finalize(value, method, **kw) -> EcResult:
    res = EcResult(value=value, method=method, **kw)
    if res.value < 0.0 and not res.note:
        res.note = "negative capacity: delay exponent infeasible at this SNR"
    return res


# ---------------------------------------------------------------------------
# Monte-Carlo estimator
# ---------------------------------------------------------------------------

def _mc_gain_chunks(cfg: SystemConfig, role: str, ctl: EvalControls):
    """Deterministic chunked stream of ordered-gain draws for one role."""
    remaining = ctl.mc_samples
    idx = 0
    col = cfg.order_index(role) - 1
    while remaining > 0:
        m = min(_MC_CHUNK, remaining)
        rng = np.random.default_rng([ctl.seed, idx])
        draws = rng.standard_exponential((m, cfg.V))
        draws.sort(axis=1)
        yield draws[:, col]
        remaining -= m
        idx += 1


def ec_monte_carlo(cfg: SystemConfig, role: str, ctl: EvalControls) -> EcResult:
    """Sample-average estimate of the effective capacity (exact kernel).

    The standard error of the kernel mean is pushed through the log
    transform by the delta method.
    """
    theta = cfg.theta_for(role)
    eps = cfg.eps_for(role)
    if eps == 1.0:
        return _finalize(0.0, "monte_carlo", note="degenerate eps = 1")
    kp = make_kernel_params(theta, cfg.n, eps)
    sums, sums_sq = [], []
    for gains in _mc_gain_chunks(cfg, role, ctl):
        k = ec_kernel(gamma_for_role(gains, cfg, role), kp, eps)
        sums.append(float(np.sum(k)))
        sums_sq.append(float(np.sum(k * k)))
    n_samp = ctl.mc_samples
    mean = math.fsum(sums) / n_samp
    if not math.isfinite(mean) or mean <= 0.0:
        return _finalize(math.nan, "monte_carlo", converged=False,
                         note="non-finite kernel mean")
    mean_sq = math.fsum(sums_sq) / n_samp
    var = max(mean_sq - mean * mean, 0.0)
    if n_samp > 1:
        var *= n_samp / (n_samp - 1)
    se_mean = math.sqrt(var / n_samp)
    value = _ec_from_mean(mean, theta, cfg.n)
    se = se_mean / (mean * theta * cfg.n * LN2)
    return _finalize(value, "monte_carlo", std_error=se)


def mc_mean_fbl_rate(cfg: SystemConfig, role: str, ctl: EvalControls):
    """Plain Monte-Carlo mean of the finite-blocklength rate (unclamped).

    Consumes the random stream exactly like ec_monte_carlo, so with the same
    controls both estimates are built from identical fading draws.
    """
    eps = cfg.eps_for(role)
    sums, sums_sq = [], []
    for gains in _mc_gain_chunks(cfg, role, ctl):
        r = fbl_rate(gamma_for_role(gains, cfg, role), cfg.n, eps)
        sums.append(float(np.sum(r)))
        sums_sq.append(float(np.sum(r * r)))
    n_samp = ctl.mc_samples
    mean = math.fsum(sums) / n_samp
    var = max(math.fsum(sums_sq) / n_samp - mean * mean, 0.0)
    se = math.sqrt(var / n_samp)
    return mean, se


# ---------------------------------------------------------------------------
# Quadrature oracle
# ---------------------------------------------------------------------------

def _kernel_callable(cfg, role, variant):
    theta = cfg.theta_for(role)
    eps = cfg.eps_for(role)
    kp = make_kernel_params(theta, cfg.n, eps)
    kern = ec_kernel if variant == "exact" else ec_kernel_approx

    def k_of_x(x):
        return kern(gamma_for_role(x, cfg, role), kp, eps)

    return k_of_x, kp, theta, eps


def _gamma_to_gain(gamma, cfg, role):
    if role == "strong":
        return gamma / (cfg.alpha_u * cfg.rho)
    denom = cfg.alpha_t - gamma * cfg.alpha_u
    if denom <= 0.0:
        return math.inf
    return gamma / (cfg.rho * denom)


def _kernel_peak_gain(cfg, role, kp, eps, x_hi, variant):
    """Locate an interior kernel maximum (present at large theta) in gain space."""
    g_hi = gamma_for_role(x_hi, cfg, role)
    grid = np.logspace(-8, math.log10(max(g_hi, 1e-6)), 300)
    kern = ec_kernel if variant == "exact" else ec_kernel_approx
    vals = kern(grid, kp, eps)
    i = int(np.argmax(vals))
    if vals[i] <= 1.0:
        return None
    x_star = _gamma_to_gain(float(grid[i]), cfg, role)
    if not 0.0 < x_star < x_hi:
        return None
    return x_star


def ec_quadrature(cfg: SystemConfig, role: str, ctl: EvalControls,
                  kernel_variant: str = "exact") -> EcResult:
    """Adaptive-quadrature evaluation of E[kernel] over the ordered-gain law.

    The domain splits at the 99.9999th percentile of the order statistic;
    beyond it the integrand carries negligible mass and is handled by a
    dedicated semi-infinite panel.
    """
    if kernel_variant not in ("exact", "approx"):
        raise ValueError(f"unknown kernel_variant {kernel_variant!r}")
    theta = cfg.theta_for(role)
    eps = cfg.eps_for(role)
    if eps == 1.0:
        return _finalize(0.0, "quadrature", note="degenerate eps = 1")
    k_of_x, kp, theta, eps = _kernel_callable(cfg, role, kernel_variant)
    k_idx = cfg.order_index(role)

    def integrand(x):
        return k_of_x(x) * ordered_pdf(x, k_idx, cfg.V)

    x_hi = ordered_quantile(1.0 - 1e-6, k_idx, cfg.V)
    pts = [ordered_quantile(q, k_idx, cfg.V)
           for q in (1e-4, 1e-3, 1e-2, 0.1, 0.5, 0.9)]
    peak = _kernel_peak_gain(cfg, role, kp, eps, x_hi, kernel_variant)
    if peak is not None:
        pts.extend([0.5 * peak, peak, 2.0 * peak])
    pts = sorted(p for p in pts if 0.0 < p < x_hi)

    head = integrate.quad(integrand, 0.0, x_hi, points=pts, limit=400,
                          epsabs=1e-300, epsrel=ctl.quad_rel_tol,
                          full_output=1)
    if len(head) > 3:
        raise ConvergenceError(f"head quadrature failed: {head[3]}")
    tail = integrate.quad(integrand, x_hi, np.inf, limit=200,
                          epsabs=1e-300, epsrel=ctl.quad_rel_tol,
                          full_output=1)
    if len(tail) > 3:
        raise ConvergenceError(f"tail quadrature failed: {tail[3]}")
    total = head[0] + tail[0]
    err = head[1] + tail[1]
    if not math.isfinite(total) or total <= 0.0:
        raise ConvergenceError("kernel expectation is non-positive")
    value = _ec_from_mean(total, theta, cfg.n)
    bound = err / (total * theta * cfg.n * LN2)
    return _finalize(value, "quadrature", tail_bound=bound)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def _int_ladder(eta: float, s_max: int) -> np.ndarray:
    """I_s = int_0^inf e^{-eta v} (1+v)^{-s} dv for s = 0 .. s_max.

    The three-term recurrence I_{s+1} = (1 - eta I_s)/s is stable upward for
    s > eta and downward below, so the ladder is seeded at s0 ~ ceil(eta)+1
    (one scaled-E1 call or one Tricomi quadrature) and run in the stable
    direction on each side.
    """
    out = np.empty(s_max + 1)
    out[0] = 1.0 / eta
    if s_max == 0:
        return out
    if eta <= 1.5:
        s0 = 1
        out[1] = exp_scaled_e1(eta)
    else:
        s0 = min(s_max, int(math.ceil(eta)) + 1)
        out[s0] = tricomi_u(1.0, 2.0 - s0, eta)
        for s in range(s0 - 1, 0, -1):
            out[s] = (1.0 - s * out[s + 1]) / eta
    for s in range(s0, s_max):
        out[s + 1] = (1.0 - eta * out[s]) / s
    return out


def _weak_series(c: float, q: float, d: float, ladder: np.ndarray,
                 log_prefactor: float, ctl: EvalControls):
    """One inner series sum_s C(c, s) q^s d I_s, scaled by exp(log_prefactor).

    For c < 0 and q < 0 every term is positive, so the sum is monotone and
    the running term ratio gives an honest geometric tail bound.  Term
    magnitudes are tracked in the log domain: for large |c| the early terms
    underflow while the series peak (near |c q| / (1 - |q|)) may still lie
    far ahead, and only the log trend can tell a genuinely negligible tail
    from a not-yet-reached bulk.  Returns (sum, terms_used, tail_bound,
    status) with status in {"ok", "truncated", "diverging"}.
    """
    log_q = math.log(abs(q))
    sign_q = -1.0 if q < 0.0 else 1.0
    log_coef = log_prefactor          # log |C(c,0) q^0| + prefactor
    sign = 1.0
    total = 0.0
    tail = math.inf
    s_max = min(ctl.series_max_terms, ladder.size - 1)
    prev_log = None
    log_ratio = math.inf
    s_used = 0
    for s in range(s_max + 1):
        if s > 0:
            step = c - (s - 1)
            if step == 0.0:
                return total, s, 0.0, "ok"     # integer c: series is finite
            log_coef += math.log(abs(step)) - math.log(s) + log_q
            sign *= (1.0 if step > 0.0 else -1.0) * sign_q
        log_term = log_coef + math.log(d * ladder[s])
        if log_term > 700.0:
            return total, s, math.inf, "diverging"
        total += sign * math.exp(log_term)
        s_used = s
        if prev_log is not None:
            log_ratio = log_term - prev_log
            if s >= 2 and log_ratio < 0.0:
                ratio = math.exp(log_ratio)
                tail = math.exp(log_term) * ratio / (1.0 - ratio)
                negligible = tail <= ctl.series_rel_tol * abs(total) \
                    or (total == 0.0 and log_term < -700.0)
                if negligible:
                    return total, s, tail, "ok"
        prev_log = log_term
    if log_ratio >= 0.0:
        return total, s_used, math.inf, "diverging"
    return total, s_used, tail, "truncated"


def _weak_expectation(cfg: SystemConfig, c: float, ctl: EvalControls):
    """E[(1 + sinr_weak)^c] via binomial expansion of the ordered density.

    The SINR ratio is rewritten as a scaled (x + a)/(x + b) form whose
    binomial expansion in d/(x + b) converges geometrically at rate
    alpha_t / (alpha_t + alpha_u); each integral moment reduces to the
    I_s ladder above.
    """
    csum = cfg.alpha_t + cfg.alpha_u
    q = (cfg.alpha_u - csum) / csum
    d = 1.0 / (cfg.rho * cfg.alpha_u)
    xi = 1.0 / beta_fn(cfg.t, cfg.V - cfg.t + 1)
    log_pref = c * math.log(csum / cfg.alpha_u)
    parts = []
    abs_parts = []
    tails = []
    terms_used = 0
    worst = "ok"
    rank = {"ok": 0, "truncated": 1, "diverging": 2}
    for r in range(cfg.t):
        lam = cfg.V - cfg.t + 1 + r
        eta = lam * d
        ladder = _int_ladder(eta, ctl.series_max_terms)
        series, s_used, tail, status = _weak_series(c, q, d, ladder,
                                                    log_pref, ctl)
        weight = math.comb(cfg.t - 1, r)
        parts.append(weight * series * (-1.0 if r % 2 else 1.0))
        abs_parts.append(weight * abs(series))
        tails.append(weight * tail)
        terms_used = max(terms_used, s_used + 1)
        if rank[status] > rank[worst]:
            worst = status
    value = xi * math.fsum(parts)
    noise = _MACHEPS * xi * math.fsum(abs_parts)
    tail_total = math.inf if worst == "diverging" else xi * math.fsum(tails)
    return value, terms_used, tail_total + noise, worst


def ec_closed_weak(cfg: SystemConfig, ctl: EvalControls) -> EcResult:
    """Closed-form effective capacity of the weak user.

    Assembles the expanded-kernel expectation from exponential-integral
    moments of the ordered-gain density.  If the series budget is exhausted
    or an intermediate overflows (large theta*n pushes the binomial weights
    out of double range), the returned value falls back to adaptive
    quadrature of the same expanded kernel and the result is flagged
    unconverged so reports can surface it.
    """
    role = "weak"
    theta = cfg.theta_for(role)
    eps = cfg.eps_for(role)
    if eps == 1.0:
        return _finalize(0.0, "closed_form", note="degenerate eps = 1")
    kp = make_kernel_params(theta, cfg.n, eps)
    two_zeta = 2.0 * kp.zeta
    e_main, n1, b1, st1 = _weak_expectation(cfg, two_zeta, ctl)
    e_shift, n2, b2, st2 = _weak_expectation(cfg, two_zeta - 2.0, ctl)
    terms = max(n1, n2)
    bracket = (kp.kappa + 1.0) * e_main - (kp.kappa - kp.beta / 2.0) * e_shift
    err = (kp.kappa + 1.0) * b1 + abs(kp.kappa - kp.beta / 2.0) * b2 \
        + _MACHEPS * ((kp.kappa + 1.0) * abs(e_main)
                      + abs(kp.kappa - kp.beta / 2.0) * abs(e_shift))
    inner = eps + (1.0 - eps) * bracket
    usable = st1 != "diverging" and st2 != "diverging" \
        and math.isfinite(inner) and inner > 0.0 and err < 0.5 * inner
    if not usable:
        fallback = ec_quadrature(cfg, role, ctl, kernel_variant="approx")
        return _finalize(fallback.value, "closed_form", converged=False,
                         series_terms=terms, tail_bound=fallback.tail_bound,
                         note="series unconverged; value from approx-kernel "
                              "quadrature")
    value = _ec_from_mean(inner, theta, cfg.n)
    bound = (1.0 - eps) * err / (inner * theta * cfg.n * LN2)
    if st1 == "truncated" or st2 == "truncated":
        return _finalize(value, "closed_form", series_terms=terms,
                         converged=False, tail_bound=bound,
                         note="series truncated at term budget")
    return _finalize(value, "closed_form", series_terms=terms,
                     tail_bound=bound)


def ec_closed_strong(cfg: SystemConfig, ctl: EvalControls) -> EcResult:
    """Closed-form effective capacity of the strong user.

    The interference-free SNR is linear in the gain, so each moment of the
    expanded kernel is a single Tricomi function; no infinite series is
    involved and the agreement with the quadrature oracle is tight.
    """
    role = "strong"
    theta = cfg.theta_for(role)
    eps = cfg.eps_for(role)
    if eps == 1.0:
        return _finalize(0.0, "closed_form", note="degenerate eps = 1")
    kp = make_kernel_params(theta, cfg.n, eps)
    two_zeta = 2.0 * kp.zeta
    d = 1.0 / (cfg.rho * cfg.alpha_u)
    xi = 1.0 / beta_fn(cfg.u, cfg.V - cfg.u + 1)
    parts = []
    abs_parts = []
    for i in range(cfg.u):
        eta = (cfg.V - cfg.u + 1 + i) * d
        h_main = tricomi_u(1.0, 2.0 + two_zeta, eta)
        h_shift = tricomi_u(1.0, two_zeta, eta)
        combo = h_main * (kp.kappa + 1.0) - h_shift * (kp.kappa - kp.beta / 2.0)
        weight = math.comb(cfg.u - 1, i)
        parts.append(weight * combo * (-1.0 if i % 2 else 1.0))
        abs_parts.append(weight * (h_main * (kp.kappa + 1.0)
                                   + h_shift * abs(kp.kappa - kp.beta / 2.0)))
    bracket = xi * d * math.fsum(parts)
    noise = _MACHEPS * xi * d * math.fsum(abs_parts)
    inner = eps + (1.0 - eps) * bracket
    if not math.isfinite(inner) or inner <= 0.0:
        return _finalize(math.nan, "closed_form", converged=False,
                         note="non-positive kernel expectation")
    value = _ec_from_mean(inner, theta, cfg.n)
    bound = (1.0 - eps) * noise / (inner * theta * cfg.n * LN2)
    return _finalize(value, "closed_form", tail_bound=bound)


def ec_closed(cfg: SystemConfig, role: str, ctl: EvalControls) -> EcResult:
    if role not in ROLES:
        raise ValueError(f"role must be one of {ROLES}, got {role!r}")
    if role == "weak":
        return ec_closed_weak(cfg, ctl)
    return ec_closed_strong(cfg, ctl)


def evaluate(cfg: SystemConfig, role: str, method: str,
             ctl: EvalControls) -> EcResult:
    """Single entry point used by sweeps and reports."""
    if method == "closed_form":
        return ec_closed(cfg, role, ctl)
    if method == "monte_carlo":
        return ec_monte_carlo(cfg, role, ctl)
    if method == "quadrature":
        return ec_quadrature(cfg, role, ctl, kernel_variant="exact")
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
