"""Closed-form predictions for the critical chain, evaluated in the log domain.

The separation dependence of the teleported energy is governed by

    Delta(n) = (2/pi)^n 2^(2n(n-1)) h(n)^4 / ((4n^2 - 1) h(2n)),
    h(n)     = prod_{k=1}^{n-1} k^(n-k),

whose raw factors overflow doubles beyond n ~ 15, so all products are kept
as log-sums and exponentiated last.  The teleported energy for separation n
and the residual energy left behind by the sender's best local cooling are

    E_B(n) = (2J/pi) [sqrt(1 + (pi Delta(n) / 2)^2) - 1],
    E_r    = (6/pi - 1) J.

Delta decays as a power law, Delta(n) ~ (1/4) e^(1/4) 2^(1/12) c^-3 n^(-9/4)
with c ~ 1.28, hence E_B ~ n^(-9/2): criticality turns the usual exponential
decay into a power law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# c is printed to two decimals in the source material; the value fitted from
# Delta itself (see fit_c) matches the Glaisher-Kinkelin constant.
DEFAULT_C = 1.28
GLAISHER_KINKELIN = 1.2824271291006226


@dataclass(frozen=True)
class AnalyticConfig:
    coupling: float = 1.0
    c_constant: float = DEFAULT_C

    def __post_init__(self):
        if not self.coupling > 0.0:
            raise ValueError("coupling J must be positive")


def log_h(n: int) -> float:
    """ln h(n) = sum_{k=1}^{n-1} (n-k) ln k; zero for n = 1 (empty product)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return 0.0
    k = np.arange(1, n)
    return float(np.dot(n - k, np.log(k)))


def log_delta(n: int) -> float:
    """ln Delta(n), assembled from log-factors to dodge overflow."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (n * math.log(2.0 / math.pi) + 2.0 * n * (n - 1) * math.log(2.0)
            + 4.0 * log_h(n) - math.log(4.0 * n * n - 1.0) - log_h(2 * n))


def delta(n: int) -> float:
    return math.exp(log_delta(n))


def eb_closed_form(cfg: AnalyticConfig, n: int) -> float:
    """Teleported energy at separation n.

    Uses sqrt(1 + x^2) - 1 = x^2 / (sqrt(1 + x^2) + 1) so that tiny Delta
    (large n) loses nothing to cancellation.
    """
    x = 0.5 * math.pi * delta(n)
    return (2.0 * cfg.coupling / math.pi) * x * x / (math.sqrt(1.0 + x * x) + 1.0)


def asymptotic_prefactor(c: float) -> float:
    """(1/4) e^(1/4) 2^(1/12) / c^3."""
    return 0.25 * math.exp(0.25) * 2.0 ** (1.0 / 12.0) / c ** 3


def delta_asymptotic(cfg: AnalyticConfig, n: int) -> float:
    """Large-n form of Delta: prefactor(c) * n^(-9/4)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return asymptotic_prefactor(cfg.c_constant) * float(n) ** -2.25


def residual_energy_analytic(cfg: AnalyticConfig) -> float:
    """E_r = (6/pi - 1) J, the energy the sender cannot locally withdraw."""
    return (6.0 / math.pi - 1.0) * cfg.coupling


def fit_c(n_min: int = 50, n_max: int = 400) -> float:
    """Least-squares fit of c from ln Delta(n) against the asymptotic form.

    ln Delta = ln[(1/4) e^(1/4) 2^(1/12)] - 3 ln c - (9/4) ln n, so the fit
    is a closed-form mean over the sampled range.
    """
    if not 1 <= n_min < n_max:
        raise ValueError("need 1 <= n_min < n_max")
    log_a0 = math.log(0.25 * math.exp(0.25) * 2.0 ** (1.0 / 12.0))
    samples = [(log_a0 - 2.25 * math.log(n) - log_delta(n)) / 3.0
               for n in range(n_min, n_max + 1)]
    return math.exp(sum(samples) / len(samples))


def power_law_slope(cfg: AnalyticConfig, n_min: int = 20, n_max: int = 200) -> float:
    """Regression slope of ln E_B(n) versus ln n; approaches -9/2."""
    ns = np.arange(n_min, n_max + 1)
    log_eb = np.array([math.log(eb_closed_form(cfg, int(n))) for n in ns])
    return float(np.polyfit(np.log(ns.astype(float)), log_eb, 1)[0])
