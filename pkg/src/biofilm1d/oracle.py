"""Short-horizon solver in characteristic coordinates, by fixed-point iteration.

The free-boundary system restricted to the attachment regime is equivalent
to a system of integral equations in the coordinates (t0, t), where t0 labels
the characteristic leaving the interface at time t0 and t >= t0 follows the
parcel.  Unknowns are the sessile concentrations x(t0, t), the dissolved
fields s(t0, t) and psi(t0, t) sampled along characteristics, the interface
position L(t0), the characteristic position c(t0, t) and its t0-derivative.
Successive substitution of the integral map contracts for short horizons;
this module iterates that map on a triangular grid (trapezoidal quadrature)
and estimates the horizon on which contraction is guaranteed by sampling the
integrand bounds and Lipschitz constants over a stated box.

This solver shares only the kinetics with the time stepper, so it serves as
an independent cross-check of the finite-difference path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kinetics
from .errors import DetachmentRegime, NoAttachment, NonConvergence, OutOfDomain
from .stepper import RunResult, attachment_flux, inflow_fractions


def _ctz(A, axis, delta):
    """Cumulative trapezoid along ``axis`` with step ``delta``, leading zero."""
    A = np.asarray(A, dtype=float)
    mids = (np.take(A, range(1, A.shape[axis]), axis=axis)
            + np.take(A, range(0, A.shape[axis] - 1), axis=axis)) * (0.5 * delta)
    zero_shape = list(A.shape)
    zero_shape[axis] = 1
    return np.concatenate([np.zeros(zero_shape), np.cumsum(mids, axis=axis)],
                          axis=axis)


@dataclass(frozen=True, eq=False)
class CharField:
    """Solution on the triangular grid (valid where t index >= t0 index)."""

    times: np.ndarray  # (G+1,) shared grid for t0 and t
    x: np.ndarray      # (n, G+1, G+1) sessile concentrations along characteristics
    s: np.ndarray      # (m, G+1, G+1)
    psi: np.ndarray    # (n, G+1, G+1)
    c: np.ndarray      # (G+1, G+1) characteristic positions
    c_t0: np.ndarray   # (G+1, G+1) d c / d t0
    L: np.ndarray      # (G+1,) interface positions

    @property
    def wedge(self) -> np.ndarray:
        G1 = self.times.size
        return np.triu(np.ones((G1, G1), dtype=bool))


def _iterate_map(cfg, times, mask, X0, S_star, psi_star, Sigma, sigma_a,
                 x, s, psi, L, c, ct0):
    """One application of the integral map; returns the new tuple of fields."""
    delta = times[1] - times[0]
    a = cfg.arrays
    rho = a["rho"][:, None, None]

    f = x / rho
    bundle = kinetics.rate_bundle(f, s, psi, cfg)
    G = bundle.G * mask
    F_x = (rho * (bundle.r_M + bundle.r_col) - x * bundle.G) * mask
    r_S = bundle.r_S * mask
    r_Psi = bundle.r_Psi * mask

    idx = np.arange(times.size)

    # Sessile concentrations: line integrals along each characteristic.
    Cx = _ctz(F_x, axis=2, delta=delta)
    x_new = X0[:, :, None] + Cx - Cx[:, idx, idx][:, :, None]

    # Dissolved fields: double integrals across the slice at fixed t.
    g = G * ct0                       # shared geometric integrand
    def dissolved(rate, Dcoef, bulk_t):
        W = rate * ct0
        I1 = _ctz(W, axis=1, delta=delta)          # over the inner t0 coordinate
        V = ct0[None, :, :] * I1
        C2 = _ctz(V, axis=1, delta=delta)
        diag = C2[:, idx, idx]
        return bulk_t[:, None, :] + (diag[:, None, :] - C2) / Dcoef[:, None, None]

    s_new = dissolved(r_S, a["D"], S_star)
    psi_new = dissolved(r_Psi, a["D_psi"], psi_star)

    # Interface: Sigma plus the time integral of the interface velocity.
    Ig = _ctz(g, axis=0, delta=delta)              # integral over t0 up to row index
    u_iface = Ig[idx, idx]
    L_new = Sigma + _ctz(u_iface, axis=0, delta=delta)

    # Characteristic positions and their t0 derivative.
    Q = _ctz(Ig, axis=1, delta=delta)
    c_new = L_new[:, None] + Q - Q[idx, idx][:, None]
    R = _ctz(g, axis=1, delta=delta)
    ct0_new = sigma_a[:, None] + R - R[idx, idx][:, None]

    return x_new, s_new, psi_new, L_new, c_new, ct0_new


def _distance(mask, old, new):
    """Summed per-component sup distances over the valid wedge."""
    total = 0.0
    for A, B in zip(old, new):
        if A.ndim == 1:
            total += float(np.max(np.abs(B - A)))
        else:
            diff = np.abs(B - A)
            if diff.ndim == 3:
                for comp in diff:
                    total += float(np.max(comp[mask]))
            else:
                total += float(np.max(diff[mask]))
    return total


def picard_solve(cfg, T_o: float, grid_n: int, tol: Optional[float] = None,
                 max_iter: Optional[int] = None,
                 zeroth: Optional[tuple] = None):
    """Iterate the integral map on [0, T_o] until the iterates settle.

    Returns ``(CharField, history)`` where ``history`` lists successive
    iterate distances.  Raises :class:`NonConvergence` when the distance
    fails to decrease three times in a row (the horizon is too long for
    contraction) and :class:`DetachmentRegime` when the configuration
    leaves the attachment regime on the horizon.

    ``zeroth`` optionally replaces the default starting iterate with a
    ``(x, s, psi, L, c, c_t0)`` tuple of matching shapes (used to witness
    uniqueness: admissible starts converge to the same fixed point).
    """
    if T_o <= 0:
        raise ValueError("oracle horizon must be positive")
    nm = cfg.numerics
    tol = nm.picard_tol if tol is None else tol
    max_iter = nm.picard_max_iter if max_iter is None else max_iter

    G1 = grid_n + 1
    times = np.linspace(0.0, T_o, G1)
    mask = np.triu(np.ones((G1, G1), dtype=bool))

    psi_b = np.stack([cfg.psi_star(t) for t in times], axis=1)   # (n, G+1)
    S_b = np.stack([cfg.s_star(t) for t in times], axis=1)       # (m, G+1)
    sigma_a = np.array([attachment_flux(psi_b[:, k], cfg) for k in range(G1)])
    if np.any(sigma_a <= 0.0):
        raise NoAttachment("attachment flux must stay positive on the horizon")
    X0 = np.stack([cfg.arrays["rho"] * inflow_fractions(psi_b[:, k], cfg)
                   for k in range(G1)], axis=1)                  # (n, G+1)
    Sigma = _ctz(sigma_a, axis=0, delta=times[1] - times[0])

    # Zeroth iterate: boundary data swept across the wedge.
    ones = np.ones((G1, G1))
    if zeroth is None:
        x = X0[:, :, None] * ones
        s = S_b[:, None, :] * ones
        psi = psi_b[:, None, :] * ones
        L = Sigma.copy()
        c = Sigma[:, None] * ones
        ct0 = sigma_a[:, None] * ones
    else:
        x, s, psi, L, c, ct0 = (np.array(a, dtype=float) for a in zeroth)

    history = []
    stall = 0
    for _ in range(max_iter):
        new = _iterate_map(cfg, times, mask, X0, S_b, psi_b, Sigma, sigma_a,
                           x, s, psi, L, c, ct0)
        d = _distance(mask, (x, s, psi, L, c, ct0), new)
        history.append(d)
        x, s, psi, L, c, ct0 = new
        if len(history) >= 2 and d >= history[-2]:
            stall += 1
            if stall >= 3:
                raise NonConvergence(
                    "iterate distances stopped decreasing (horizon outside "
                    "the contraction window)", iterations=len(history),
                    residual=d)
        else:
            stall = 0
        if d < tol:
            break
    else:
        raise NonConvergence("fixed-point iteration exceeded max_iter",
                             iterations=max_iter, residual=history[-1])

    if np.any(sigma_a - cfg.delta * L ** 2 <= 0.0):
        raise DetachmentRegime(
            "detachment would dominate on this horizon; the characteristic "
            "formulation only covers the attachment regime")

    fields = CharField(times=times, x=x * mask, s=s * mask, psi=psi * mask,
                       c=c * mask, c_t0=ct0 * mask, L=L)
    return fields, history


# ---------------------------------------------------------------------------
# Characteristic paths through a finite-difference run
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CharPath:
    t: np.ndarray
    z: np.ndarray


def _velocity_field(profiles):
    """Bilinear u(z, t) interpolator over recorded profiles."""
    pt, pL, pu = profiles.t, profiles.L, profiles.u
    zeta = np.linspace(0.0, 1.0, pu.shape[1])

    def u_at(z, t):
        k = int(np.searchsorted(pt, t, side="right") - 1)
        k = max(0, min(k, pt.size - 2))
        w = 0.0 if pt[k + 1] == pt[k] else (t - pt[k]) / (pt[k + 1] - pt[k])
        w = min(max(w, 0.0), 1.0)
        ua = np.interp(z, zeta * pL[k], pu[k])
        ub = np.interp(z, zeta * pL[k + 1], pu[k + 1])
        return (1.0 - w) * ua + w * ub

    return u_at


def characteristic_trace(run_output: RunResult, t0: float,
                         t_end: Optional[float] = None) -> CharPath:
    """Integrate a material path dz/dt = u(z, t) from the interface at t0.

    Uses the dense profiles recorded by :func:`biofilm1d.stepper.run`
    (midpoint rule on the recorded time grid); the path is clamped inside
    [0, L(t)].
    """
    profiles = run_output.profiles
    if profiles is None or profiles.t.size < 2:
        raise OutOfDomain("run was not recorded with dense profiles")
    pt, pL = profiles.t, profiles.L
    t_end = float(pt[-1]) if t_end is None else float(t_end)
    if not (pt[0] <= t0 <= pt[-1]) or t_end > pt[-1] + 1e-12 or t_end < t0:
        raise OutOfDomain("requested path leaves the recorded time span")

    u_at = _velocity_field(profiles)
    L_at = lambda t: float(np.interp(t, pt, pL))

    ts = [t0]
    k0 = int(np.searchsorted(pt, t0, side="right"))
    ts.extend(float(t) for t in pt[k0:] if t <= t_end + 1e-15)
    if ts[-1] < t_end - 1e-15:
        ts.append(t_end)

    z = L_at(t0)
    path_t = [t0]
    path_z = [z]
    for ta, tb in zip(ts[:-1], ts[1:]):
        dt = tb - ta
        if dt <= 0.0:
            continue
        z_mid = z + 0.5 * dt * u_at(z, ta)
        z = z + dt * u_at(z_mid, ta + 0.5 * dt)
        z = min(max(z, 0.0), L_at(tb))
        path_t.append(tb)
        path_z.append(z)
    return CharPath(t=np.array(path_t), z=np.array(path_z))


def map_run_to_char_grid(run_output: RunResult, times: np.ndarray):
    """Sample a recorded run on the oracle's (t0, t) grid.

    Returns ``(x, c, L)`` with the same layout as :class:`CharField`; entries
    outside the wedge are zero.
    """
    profiles = run_output.profiles
    if profiles is None:
        raise OutOfDomain("run was not recorded with dense profiles")
    cfg = run_output.cfg
    rho = cfg.arrays["rho"]
    n = rho.size
    G1 = times.size
    zeta = np.linspace(0.0, 1.0, profiles.u.shape[1])

    def f_at(z, t):
        k = int(np.searchsorted(profiles.t, t, side="right") - 1)
        k = max(0, min(k, profiles.t.size - 2))
        span = profiles.t[k + 1] - profiles.t[k]
        w = 0.0 if span == 0 else min(max((t - profiles.t[k]) / span, 0.0), 1.0)
        fa = np.array([np.interp(z, zeta * profiles.L[k], profiles.f[k, i])
                       for i in range(n)])
        fb = np.array([np.interp(z, zeta * profiles.L[k + 1], profiles.f[k + 1, i])
                       for i in range(n)])
        return (1.0 - w) * fa + w * fb

    x = np.zeros((n, G1, G1))
    c = np.zeros((G1, G1))
    L = np.interp(times, profiles.t, profiles.L)
    for i, t0 in enumerate(times):
        path = characteristic_trace(run_output, float(t0), float(times[-1]))
        for j in range(i, G1):
            zj = float(np.interp(times[j], path.t, path.z))
            c[i, j] = zj
            x[:, i, j] = rho * f_at(zj, float(times[j]))
    return x, c, L


# ---------------------------------------------------------------------------
# Contraction-window estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContractionBox:
    """Sup-norm deviation bounds around the boundary data."""

    h_x: tuple
    h_s: tuple
    h_psi: tuple
    h_L: float
    h_c1: float
    h_c2: float


@dataclass(frozen=True, eq=False)
class ContractionEstimate:
    M_x: np.ndarray
    M_s: np.ndarray
    M_psi: np.ndarray
    M_L: float
    M_c1: float
    M_c2: float
    lam_x: np.ndarray
    lam_s: np.ndarray
    lam_psi: np.ndarray
    lam_L: float
    lam_c1: float
    lam_c2: float
    a: float
    b: float
    caps: dict
    T_star: float
    samples: int

    def contraction_factor(self, T: float) -> float:
        return self.a * T * T + self.b * T


def window_root(a: float, b: float) -> float:
    """Largest T with a T^2 + b T < 1 (open bound; inf when a = b = 0)."""
    if a > 0.0:
        return (-b + math.sqrt(b * b + 4.0 * a)) / (2.0 * a)
    if b > 0.0:
        return 1.0 / b
    return math.inf


def estimate_contraction(cfg, box: ContractionBox, t_max: Optional[float] = None,
                         T1: Optional[float] = None, n_samples: int = 4096,
                         seed: int = 0) -> ContractionEstimate:
    """Bound and Lipschitz estimates for the integral-map kernels over a box.

    Bounds ``M`` come from dense random sampling of the kernels over the box
    (plus its corners); Lipschitz constants come from symmetric difference
    quotients along each argument, taking the worst sample.  The window
    ``T_star`` is the least of the per-component caps and the positive root
    of the contraction condition, shrunk by a 1 percent safety margin.
    """
    a_ = cfg.arrays
    n, m = cfg.n, cfg.m
    horizon = cfg.horizon if t_max is None else t_max
    tgrid = np.linspace(0.0, max(horizon, 1e-12), 257)

    psi_b = np.stack([cfg.psi_star(t) for t in tgrid], axis=1)
    S_b = np.stack([cfg.s_star(t) for t in tgrid], axis=1)
    sig = np.array([attachment_flux(psi_b[:, k], cfg) for k in range(tgrid.size)])
    if np.any(sig <= 0.0):
        raise NoAttachment("attachment flux must stay positive for the window")
    X0 = np.stack([a_["rho"] * inflow_fractions(psi_b[:, k], cfg)
                   for k in range(tgrid.size)], axis=1)

    lo = np.concatenate([
        np.maximum(X0.min(axis=1) - np.asarray(box.h_x), 0.0),
        np.maximum(S_b.min(axis=1) - np.asarray(box.h_s), 0.0),
        np.maximum(psi_b.min(axis=1) - np.asarray(box.h_psi), 0.0),
        [max(sig.min() - box.h_c2, 0.0)],
    ])
    hi = np.concatenate([
        X0.max(axis=1) + np.asarray(box.h_x),
        S_b.max(axis=1) + np.asarray(box.h_s),
        psi_b.max(axis=1) + np.asarray(box.h_psi),
        [sig.max() + box.h_c2],
    ])
    dim = lo.size
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((n_samples, dim))
    # Corner points sharpen the bound estimates for monotone kernels.
    if dim <= 12:
        corners = np.array(np.meshgrid(*[(l, h) for l, h in zip(lo, hi)],
                                       indexing="ij")).reshape(dim, -1).T
        pts = np.vstack([pts, corners])

    sl_x = slice(0, n)
    sl_s = slice(n, n + m)
    sl_psi = slice(n + m, n + m + n)
    i_c = n + m + n

    def kernels(P):
        x = P[:, sl_x].T
        s = P[:, sl_s].T
        psi = P[:, sl_psi].T
        ct0 = P[:, i_c]
        f = x / a_["rho"][:, None]
        bundle = kinetics.rate_bundle(f, s, psi, cfg)
        F_x = a_["rho"][:, None] * (bundle.r_M + bundle.r_col) - x * bundle.G
        F_s = bundle.r_S * ct0[None, :] ** 2 / a_["D"][:, None]
        F_psi = bundle.r_Psi * ct0[None, :] ** 2 / a_["D_psi"][:, None]
        F_geo = bundle.G * ct0
        return F_x, F_s, F_psi, F_geo

    F_x, F_s, F_psi, F_geo = kernels(pts)
    M_x = np.max(np.abs(F_x), axis=1)
    M_s = np.max(np.abs(F_s), axis=1)
    M_psi = np.max(np.abs(F_psi), axis=1)
    M_geo = float(np.max(np.abs(F_geo)))

    lam_x = np.zeros(n)
    lam_s = np.zeros(m)
    lam_psi = np.zeros(n)
    lam_geo = 0.0
    width = hi - lo
    for d in range(dim):
        if width[d] == 0.0:
            continue
        step = max(1e-6 * width[d], 1e-12)
        inner = pts.copy()
        inner[:, d] = np.clip(inner[:, d], lo[d] + step, hi[d] - step)
        plus = inner.copy()
        plus[:, d] += step
        minus = inner.copy()
        minus[:, d] -= step
        Fxp, Fsp, Fpp, Fgp = kernels(plus)
        Fxm, Fsm, Fpm, Fgm = kernels(minus)
        scale = 1.0 / (2.0 * step)
        # The x-kernel ignores ct0; the dissolved kernels ignore the
        # arguments outside their signature, so slopes there are zero anyway.
        lam_x = np.maximum(lam_x, np.max(np.abs(Fxp - Fxm), axis=1) * scale)
        lam_s = np.maximum(lam_s, np.max(np.abs(Fsp - Fsm), axis=1) * scale)
        lam_psi = np.maximum(lam_psi, np.max(np.abs(Fpp - Fpm), axis=1) * scale)
        lam_geo = max(lam_geo, float(np.max(np.abs(Fgp - Fgm))) * scale)

    a_sum = float(np.sum(lam_s) + np.sum(lam_psi) + lam_geo + 2.0 * lam_geo)
    b_sum = float(np.sum(lam_x) + lam_geo)

    def cap_div(h, M):
        return math.inf if M == 0.0 else h / M

    def cap_sqrt(h, M):
        return math.inf if M == 0.0 else math.sqrt(h / M)

    caps = {}
    for i in range(n):
        caps[f"x{i + 1}"] = cap_div(box.h_x[i], M_x[i])
    for j in range(m):
        caps[f"s{j + 1}"] = cap_sqrt(box.h_s[j], M_s[j])
    for i in range(n):
        caps[f"psi{i + 1}"] = cap_sqrt(box.h_psi[i], M_psi[i])
    caps["L"] = cap_sqrt(box.h_L, M_geo)
    caps["c1"] = math.inf if M_geo == 0.0 else math.sqrt(box.h_c1 / (2.0 * M_geo))
    caps["c2"] = cap_div(box.h_c2, M_geo)
    caps["contraction"] = window_root(a_sum, b_sum)
    if T1 is not None:
        caps["T1"] = T1

    T_min = min(caps.values())
    T_star = T_min if math.isinf(T_min) else 0.99 * T_min

    return ContractionEstimate(
        M_x=M_x, M_s=M_s, M_psi=M_psi, M_L=M_geo, M_c1=M_geo, M_c2=M_geo,
        lam_x=lam_x, lam_s=lam_s, lam_psi=lam_psi,
        lam_L=lam_geo, lam_c1=lam_geo, lam_c2=lam_geo,
        a=a_sum, b=b_sum, caps=caps, T_star=T_star, samples=pts.shape[0])


def box_from_run(run_output: RunResult, margin: float = 2.0) -> ContractionBox:
    """Deviation bounds observed in a recorded run, widened by ``margin``.

    A practical way to feed :func:`estimate_contraction`: the box then covers
    the region the solution actually inhabits on the run's horizon.
    """
    profiles = run_output.profiles
    if profiles is None:
        raise OutOfDomain("run was not recorded with dense profiles")
    cfg = run_output.cfg
    a_ = cfg.arrays
    bnd = run_output.boundary
    span = float(profiles.t[-1] - profiles.t[0])

    dev_x = np.zeros(cfg.n)
    dev_s = np.zeros(cfg.m)
    dev_psi = np.zeros(cfg.n)
    for k, t in enumerate(profiles.t):
        X0 = a_["rho"] * inflow_fractions(cfg.psi_star(float(t)), cfg)
        dev_x = np.maximum(dev_x, np.max(np.abs(
            a_["rho"][:, None] * profiles.f[k] - X0[:, None]), axis=1))
        dev_s = np.maximum(dev_s, np.max(np.abs(
            profiles.S[k] - cfg.s_star(float(t))[:, None]), axis=1))
        dev_psi = np.maximum(dev_psi, np.max(np.abs(
            profiles.Psi[k] - cfg.psi_star(float(t))[:, None]), axis=1))

    Sigma = np.concatenate([[0.0], np.cumsum(
        (bnd.sigma_a[1:] + bnd.sigma_a[:-1]) * 0.5 * np.diff(bnd.t))])
    dev_L = float(np.max(np.abs(bnd.L - Sigma)))
    u_max = float(np.max(np.abs(bnd.u_L)))
    with np.errstate(divide="ignore", invalid="ignore"):
        G_max = float(np.nanmax(np.where(bnd.L > 0, bnd.u_L / bnd.L, 0.0)))
    sig_max = float(np.max(bnd.sigma_a))

    floor = 1e-9
    h_x = tuple(margin * max(v, 1e-3 * r) for v, r in zip(dev_x, a_["rho"]))
    h_s = tuple(margin * max(v, floor) for v in dev_s)
    h_psi = tuple(margin * max(v, floor) for v in dev_psi)
    h_L = margin * max(dev_L, floor)
    h_c1 = margin * max(dev_L + u_max * span, floor)
    h_c2 = margin * max(sig_max * (math.exp(max(G_max, 0.0) * span) - 1.0),
                        0.05 * sig_max, floor)
    return ContractionBox(h_x=h_x, h_s=h_s, h_psi=h_psi,
                          h_L=h_L, h_c1=h_c1, h_c2=h_c2)
