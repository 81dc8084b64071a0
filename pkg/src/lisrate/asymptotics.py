"""Closed-form asymptotic moments of the uplink SINR and rate.

Everything here is a deterministic function of a frozen Drop: the surface
integrals p and q governing the desired-signal limits, the per-term moment
formulas, the interference-pair covariance, the Taylor-propagated SINR/rate
moments, and the large-M rate bound.

The two-term closed form for q is stated in its dimensionally consistent
form q = L^2/((L^2+z^2)(2L^2+z^2))
      + L (2L^2+3z^2) / (z^2 (L^2+z^2)^{3/2}) * atan(L/sqrt(L^2+z^2)),
which matches the defining integral for all (z, L); the tests check it
against adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mc_engine import Drop, InterferenceLink

UNBOUNDED = math.inf


@dataclass(frozen=True)
class MomentPair:
    mean: float
    variance: float
    clamped: bool = False  # variance clipped at zero (Taylor regime exceeded)


@dataclass(frozen=True)
class LinkMoments:
    """Deterministic moment ingredients of one interference term."""

    mu_los: complex       # mean of the LOS part
    s_los: float          # variance of the LOS part
    s_n1: float           # variance of the channel-side scattered part
    s_n2: float           # variance of the error-times-scattering part
    mean: float           # s_los + s_n1 + s_n2 + |mu_los|^2
    variance: float       # (s_los+s_n1+s_n2)^2 + 2|mu_los|^2 (s_los+s_n1+s_n2)


# ---------------------------------------------------------------------------
#  Surface integrals
# ---------------------------------------------------------------------------

def p_integral(z: float, half_length: float) -> float:
    """Quarter-surface power integral atan(L^2 / (z sqrt(2L^2 + z^2)))."""
    if z <= 0 or half_length <= 0:
        raise ValueError("z and half_length must be positive")
    ll = half_length**2
    return math.atan(ll / (z * math.sqrt(2 * ll + z**2)))


def p_bar(z: float, half_length: float, spacing: float) -> float:
    """Limit of (sum of squared LOS gains)^2: p^2 / (pi^2 spacing^4)."""
    return p_integral(z, half_length) ** 2 / (math.pi**2 * spacing**4)


def q_integral(z: float, half_length: float) -> float:
    """Closed form of the integral of z^2/(x^2+y^2+z^2)^3 over the unit."""
    if z <= 0 or half_length <= 0:
        raise ValueError("z and half_length must be positive")
    ll = half_length**2
    zz = z**2
    t1 = ll / ((ll + zz) * (2 * ll + zz))
    t2 = (half_length * (2 * ll + 3 * zz) / (zz * (ll + zz) ** 1.5)
          * math.atan(half_length / math.sqrt(ll + zz)))
    return t1 + t2


def q_bar(z: float, half_length: float, spacing: float) -> float:
    """Limit of the sum of fourth-power LOS gains: q / (16 pi^2 spacing^2)."""
    return q_integral(z, half_length) / (16 * math.pi**2 * spacing**2)


# ---------------------------------------------------------------------------
#  Per-drop helpers
# ---------------------------------------------------------------------------

def _require_los_desired(drop: Drop) -> np.ndarray:
    if not drop.desired.deterministic:
        raise ValueError("asymptotic moments require a deterministic LOS "
                         "desired channel")
    return drop.desired.h_los


def _beta_sums(drop: Drop, asymptotic: bool) -> tuple[float, float]:
    """(sum beta^2, sum beta^4), either finite-M or their integral limits."""
    if asymptotic:
        if drop.grid is None or drop.target_z is None:
            raise ValueError("drop lacks grid geometry for asymptotic limits")
        z, hl, dl = drop.target_z, drop.grid.half_length, drop.grid.spacing
        return math.sqrt(p_bar(z, hl, dl)), q_bar(z, hl, dl)
    beta2 = np.abs(_require_los_desired(drop)) ** 2
    return float(beta2.sum()), float((beta2**2).sum())


def desired_power(drop: Drop, asymptotic: bool = True) -> float:
    """S, the squared total LOS power of the desired link."""
    return _beta_sums(drop, asymptotic)[0] ** 2


# ---------------------------------------------------------------------------
#  Per-term moments
# ---------------------------------------------------------------------------

def error_leak_moments(drop: Drop, asymptotic: bool = False) -> MomentPair:
    """Moments of the estimation-error leak |e^H h|^2: mean sum(beta^4),
    variance its square (a scaled chi-square with 2 degrees of freedom)."""
    _, b4 = _beta_sums(drop, asymptotic)
    return MomentPair(mean=b4, variance=b4**2)


def interference_term_moments(drop: Drop, link: InterferenceLink) -> LinkMoments:
    """Deterministic moments of one interference term."""
    h = _require_los_desired(drop)
    tau = drop.tau
    k = link.kappa
    beta_k2 = np.abs(h) ** 2
    beta_j2 = np.abs(link.h_los) ** 2

    mu_los = math.sqrt(k * (1 - tau**2) / (k + 1)) * complex(h.conj() @ link.h_los)
    s_los = k * tau**2 / (k + 1) * float(np.sum(beta_k2 * beta_j2))
    if link.num_paths:
        s_n1 = (1 - tau**2) / (k + 1) * float(
            np.sum(np.abs(h.conj() @ link.r_half) ** 2))
        row_power = np.sum(np.abs(link.r_half) ** 2, axis=1)
        s_n2 = tau**2 / (k + 1) * float(np.sum(beta_k2 * row_power))
    else:
        s_n1 = s_n2 = 0.0

    s_sum = s_los + s_n1 + s_n2
    return LinkMoments(
        mu_los=mu_los, s_los=s_los, s_n1=s_n1, s_n2=s_n2,
        mean=s_sum + abs(mu_los) ** 2,
        variance=s_sum**2 + 2 * abs(mu_los) ** 2 * s_sum)


def noise_term_moments(drop: Drop, asymptotic: bool = False) -> MomentPair:
    """Moments of the combined noise term: mean sum(beta^2), variance
    tau^2 (2 - tau^2) sum(beta^4)."""
    b2, b4 = _beta_sums(drop, asymptotic)
    tau = drop.tau
    return MomentPair(mean=b2, variance=tau**2 * (2 - tau**2) * b4)


def interference_pair_covariance(drop: Drop, i: int, j: int) -> float:
    """Asymptotic covariance of the interference terms of devices i and j
    (indices into drop.links); driven entirely by the LOS components."""
    if i == j:
        raise ValueError("interference_pair_covariance needs two distinct interferers")
    h = _require_los_desired(drop)
    tau = drop.tau
    beta_k2 = np.abs(h) ** 2

    def mu_c(link):
        k = link.kappa
        return math.sqrt(k * (1 - tau**2) / (k + 1)) * complex(
            h.conj() @ link.h_los)

    def mu_a(link):
        k = link.kappa
        return math.sqrt(tau**2 * k / (k + 1)) * np.sqrt(beta_k2) * link.h_los

    li, lj = drop.links[i], drop.links[j]
    cross = complex(mu_a(li).conj() @ mu_a(lj))
    return 2.0 * (mu_c(li) * np.conj(mu_c(lj)) * cross).real


def total_interference_moments(drop: Drop, asymptotic: bool = True) -> MomentPair:
    """Deterministic mean and variance of the total interference-plus-noise."""
    b2, b4 = _beta_sums(drop, asymptotic)
    tau = drop.tau
    rho_k = drop.desired.rho
    link_moments = [interference_term_moments(drop, link) for link in drop.links]

    mean = rho_k * tau**2 * b4 + b2 \
        + sum(link.rho * lm.mean for link, lm in zip(drop.links, link_moments))
    var = rho_k**2 * tau**4 * b4**2 + tau**2 * (2 - tau**2) * b4 \
        + sum(link.rho**2 * lm.variance
              for link, lm in zip(drop.links, link_moments))
    for i in range(len(drop.links)):
        for j in range(i + 1, len(drop.links)):
            var += 2 * drop.links[i].rho * drop.links[j].rho \
                * interference_pair_covariance(drop, i, j)
    return MomentPair(mean=mean, variance=var)


# ---------------------------------------------------------------------------
#  Taylor propagation and the rate bound
# ---------------------------------------------------------------------------

def sinr_moments(s: float, rho: float, tau: float,
                 i_moments: MomentPair) -> MomentPair:
    """Second-order Taylor moments of gamma = rho s (1-tau^2) / I."""
    mu_i, var_i = i_moments.mean, i_moments.variance
    if mu_i <= 0:
        raise ValueError("interference mean must be positive")
    num = rho * s * (1 - tau**2)
    mean = num * (1 / mu_i + var_i / mu_i**3)
    var = num**2 * (var_i / mu_i**4 - var_i**2 / mu_i**6)
    return MomentPair(mean=mean, variance=max(var, 0.0), clamped=var < 0.0)


def rate_moments(gamma_moments: MomentPair) -> MomentPair:
    """Second-order Taylor moments of log(1 + gamma), in nats."""
    mu, var = gamma_moments.mean, gamma_moments.variance
    if mu < 0:
        raise ValueError("SINR mean must be nonnegative")
    one = 1.0 + mu
    mean = math.log(one) - var / (2 * one**2)
    rvar = var / one**2 - var**2 / (4 * one**4)
    return MomentPair(mean=mean, variance=max(rvar, 0.0), clamped=rvar < 0.0)


def asymptotic_rate_moments(drop: Drop, use_finite_sums: bool = False) -> MomentPair:
    """Full closed-form pipeline from a drop to the asymptotic rate moments."""
    asymptotic = not use_finite_sums
    s = desired_power(drop, asymptotic=asymptotic)
    i_mom = total_interference_moments(drop, asymptotic=asymptotic)
    g_mom = sinr_moments(s, drop.desired.rho, drop.tau, i_mom)
    return rate_moments(g_mom)


def interference_mean_limit(drop: Drop) -> float:
    """Large-M limit of the normalized interference mean; only the LOS
    components of the interferers survive."""
    h = _require_los_desired(drop)
    m2 = drop.num_antennas**2
    tau = drop.tau
    total = 0.0
    for link in drop.links:
        k = link.kappa
        if k == 0:
            continue
        total += link.rho * k * (1 - tau**2) / (m2 * (1 + k)) \
            * abs(complex(h.conj() @ link.h_los)) ** 2
    return total


def rate_bound(drop: Drop) -> float:
    """Large-M rate bound in nats; UNBOUNDED (inf) when no interferer has a
    LOS component."""
    if drop.grid is None or drop.target_z is None:
        raise ValueError("drop lacks grid geometry for the rate bound")
    mu_hat = interference_mean_limit(drop)
    if mu_hat == 0.0:
        return UNBOUNDED
    p = p_integral(drop.target_z, drop.grid.half_length)
    l4 = drop.grid.half_length**4
    gamma_lim = p**2 * drop.desired.rho * (1 - drop.tau**2) \
        / (16 * l4 * math.pi**2 * mu_hat)
    return math.log1p(gamma_lim)
