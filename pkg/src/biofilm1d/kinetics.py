"""Reaction-rate evaluations: growth, substrate conversion, colonization.

All functions are pure and broadcast over a trailing node axis, so they can
be evaluated for a single point ``(n,)`` or a whole grid ``(n, K)`` alike.
Negative concentrations (transient numerical undershoot) are clamped to zero
on the rate side only; state arrays are never mutated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


def _clamped(a, label):
    a = np.asarray(a, dtype=float)
    if np.any(a < 0.0):
        logger.debug("clamped %d negative %s value(s) during rate evaluation",
                     int(np.sum(a < 0.0)), label)
        a = np.maximum(a, 0.0)
    return a


def monod(s, K):
    """Saturating limitation factor s/(K+s), clamped at s = 0."""
    s = _clamped(s, "substrate")
    return s / (K + s)


def dmonod(s, K):
    """d/ds of :func:`monod`; the clamp branch uses the one-sided value 1/K."""
    s = _clamped(s, "substrate")
    return K / (K + s) ** 2


def growth_rates(f, S, cfg):
    """Specific sessile growth rates, one per species (1/day)."""
    a = cfg.arrays
    f = _clamped(f, "fraction")
    s_sel = np.asarray(S, dtype=float)[a["substrate_of"]]
    mu = a["mu_max"].reshape((-1,) + (1,) * (f.ndim - 1))
    K = a["K"].reshape(mu.shape)
    return mu * monod(s_sel, K) * f


def substrate_rates(f, S, cfg):
    """Substrate conversion rates (g/m^3/day), network-weighted."""
    a = cfg.arrays
    r_m = growth_rates(f, S, cfg)
    load = r_m * (a["rho"] / a["Y"]).reshape((-1,) + (1,) * (r_m.ndim - 1))
    return np.tensordot(a["W"], load, axes=(1, 0))


def substrate_rate_jacobian_diag(f, S, cfg):
    """d r_S[j] / d S[j] at each node; used by the elliptic Newton solver."""
    a = cfg.arrays
    f = _clamped(f, "fraction")
    S = np.asarray(S, dtype=float)
    trail = (1,) * (f.ndim - 1)
    mu = a["mu_max"].reshape((-1,) + trail)
    K = a["K"].reshape(mu.shape)
    s_sel = S[a["substrate_of"]]
    dload = mu * dmonod(s_sel, K) * f * (a["rho"] / a["Y"]).reshape(mu.shape)
    out = np.zeros_like(S)
    for i, j in enumerate(a["substrate_of"]):
        out[j] += a["W"][j, i] * dload[i]
    return out


def colonization_rates(Psi, S, cfg):
    """Sessile growth rates fed by planktonic cells (1/day)."""
    a = cfg.arrays
    Psi = _clamped(Psi, "planktonic")
    s_sel = np.asarray(S, dtype=float)[a["substrate_of"]]
    trail = (1,) * (Psi.ndim - 1)
    k_col = a["k_col"].reshape((-1,) + trail)
    K = a["K"].reshape(k_col.shape)
    rho = a["rho"].reshape(k_col.shape)
    return (k_col / rho) * monod(s_sel, K) * Psi


def planktonic_conversion_rates(Psi, S, cfg):
    """Planktonic consumption by the switch to sessile growth (g/m^3/day, <= 0)."""
    a = cfg.arrays
    r = colonization_rates(Psi, S, cfg)
    trail = (1,) * (r.ndim - 1)
    return -(a["rho"] / a["Y_psi"]).reshape((-1,) + trail) * r


def planktonic_sink_coefficients(S, cfg):
    """Coefficients kappa_i >= 0 with r_Psi[i] = -kappa_i * Psi[i] at frozen S."""
    a = cfg.arrays
    s_sel = np.asarray(S, dtype=float)[a["substrate_of"]]
    trail = (1,) * (s_sel.ndim - 1)
    k_col = a["k_col"].reshape((-1,) + trail)
    K = a["K"].reshape(k_col.shape)
    Y_psi = a["Y_psi"].reshape(k_col.shape)
    return (k_col / Y_psi) * monod(s_sel, K)


def _sum_G(r_m, r_col):
    # Fixed left-to-right summation so every caller gets bitwise the same G.
    G = r_m[0] + r_col[0]
    for i in range(1, r_m.shape[0]):
        G = G + (r_m[i] + r_col[i])
    return G


def source_G(f, S, Psi, cfg):
    """Velocity source: total specific volume production (1/day)."""
    return _sum_G(growth_rates(f, S, cfg), colonization_rates(Psi, S, cfg))


@dataclass(frozen=True, eq=False)
class RateBundle:
    """All reaction rates at one point or grid, with their consistent sum G."""

    r_M: np.ndarray    # (n, ...) sessile specific growth rates, 1/day
    r_col: np.ndarray  # (n, ...) colonization rates, 1/day
    r_S: np.ndarray    # (m, ...) substrate conversion rates, g/m^3/day
    r_Psi: np.ndarray  # (n, ...) planktonic conversion rates, g/m^3/day
    G: np.ndarray      # velocity source, 1/day


def rate_bundle(f, S, Psi, cfg) -> RateBundle:
    """Evaluate every rate once; ``G`` is the exact ordered sum of the parts."""
    r_m = growth_rates(f, S, cfg)
    r_col = colonization_rates(Psi, S, cfg)
    r_s = substrate_rates(f, S, cfg)
    r_psi = planktonic_conversion_rates(Psi, S, cfg)
    return RateBundle(r_M=r_m, r_col=r_col, r_S=r_s, r_Psi=r_psi,
                      G=_sum_G(r_m, r_col))
