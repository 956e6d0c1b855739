"""Domain types: scenario parameters, moving-grid state, snapshots.

All types are immutable value objects; ndarray fields are frozen after
construction so states can be shared between threads or cached safely.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NoAttachment
from .traces import BulkTraces

#: Absolute tolerance on the nodewise volume-fraction sum constraint.  Tight
#: enough to catch scheme bugs, loose enough for accumulated round-off over
#: very long runs.
CONSTRAINT_TOL = 1e-8


class Regime(enum.Enum):
    """Interface regime by sign of the net interface flux (ties detach)."""

    ATTACHMENT = "attachment"
    DETACHMENT = "detachment"

    @staticmethod
    def classify(sigma_a: float, sigma_d: float) -> "Regime":
        return Regime.ATTACHMENT if sigma_a - sigma_d > 0.0 else Regime.DETACHMENT


@dataclass(frozen=True)
class SpeciesParams:
    """Kinetic and transfer parameters of one microbial species."""

    mu_max: float  # maximum specific growth rate, 1/day
    K: float       # half-saturation constant of its growth substrate, g/m^3
    Y: float       # yield of sessile biomass on substrate
    rho: float     # sessile density, g/m^3
    v_a: float = 0.0     # attachment velocity, m/day
    k_col: float = 0.0   # maximum colonization rate, 1/day
    Y_psi: float = 1.0   # yield of sessile biomass on planktonic biomass
    D_psi: float = 1e-5  # planktonic diffusivity within the biofilm, m^2/day


@dataclass(frozen=True)
class SubstrateParams:
    """Transport parameters of one dissolved substrate."""

    D: float  # diffusivity within the biofilm, m^2/day


@dataclass(frozen=True)
class Stoichiometry:
    """Reaction network wiring.

    ``substrate_of[i]`` is the (0-based) index of the substrate limiting
    species ``i`` (both growth and colonization), and ``production[j][i]``
    is the signed coefficient of species ``i`` in the conversion rate of
    substrate ``j``:  r_S[j] = sum_i production[j][i] * rho_i * r_M[i] / Y_i.
    """

    substrate_of: tuple
    production: tuple
    kind: str = "custom"

    @staticmethod
    def builtin3x3() -> "Stoichiometry":
        """Three species, three substrates: species i grows on substrate i,
        species 1 consumes substrate 1 and produces substrate 3, which
        species 3 consumes."""
        return Stoichiometry(
            substrate_of=(0, 1, 2),
            production=((-1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (1.0, 0.0, -1.0)),
            kind="builtin3x3",
        )


@dataclass(frozen=True)
class NumericsConfig:
    """Discretization controls."""

    N: int = 200             # interior grid intervals (N+1 nodes)
    dt_max: float = 1e-3     # time-step cap, day
    cfl: float = 0.5         # Courant safety factor for the upwind path
    L_eps: float = 1e-9      # seed thickness replacing the L(0)=0 singularity, m
    newton_tol: float = 1e-9     # relative elliptic residual tolerance
    newton_max_iter: int = 50
    picard_tol: float = 1e-8     # fixed-point iterate distance tolerance
    picard_max_iter: int = 200
    transport: str = "characteristics"  # "characteristics" | "upwind"


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulation run."""

    species: tuple
    substrates: tuple
    delta: float          # detachment coefficient, 1/(m day)
    bulk: BulkTraces
    stoichiometry: Stoichiometry
    numerics: NumericsConfig
    horizon: float        # final time, day
    snapshot_times: tuple

    @property
    def n(self) -> int:
        return len(self.species)

    @property
    def m(self) -> int:
        return len(self.substrates)

    # Array views used by the vectorized kinetics; cached, read-only.
    @cached_property
    def arrays(self):
        def col(attr):
            a = np.array([getattr(sp, attr) for sp in self.species], dtype=float)
            a.flags.writeable = False
            return a

        D = np.array([sb.D for sb in self.substrates], dtype=float)
        W = np.array(self.stoichiometry.production, dtype=float)
        sigma = np.array(self.stoichiometry.substrate_of, dtype=int)
        for a in (D, W, sigma):
            a.flags.writeable = False
        return {
            "mu_max": col("mu_max"), "K": col("K"), "Y": col("Y"),
            "rho": col("rho"), "v_a": col("v_a"), "k_col": col("k_col"),
            "Y_psi": col("Y_psi"), "D_psi": col("D_psi"),
            "D": D, "W": W, "substrate_of": sigma,
        }

    def psi_star(self, t: float) -> np.ndarray:
        return np.array(self.bulk.psi(t), dtype=float)

    def s_star(self, t: float) -> np.ndarray:
        return np.array(self.bulk.s(t), dtype=float)


def _frozen(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class BiofilmState:
    """Instantaneous solution on the normalized moving grid zeta = z/L."""

    t: float
    L: float
    zeta: np.ndarray   # (N+1,) uniform, zeta_k = k/N
    f: np.ndarray      # (n, N+1) volume fractions
    S: np.ndarray      # (m, N+1) substrate concentrations
    Psi: np.ndarray    # (n, N+1) planktonic concentrations
    u: np.ndarray      # (N+1,) advective velocity samples, m/day

    def __post_init__(self):
        for name in ("zeta", "f", "S", "Psi", "u"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def N(self) -> int:
        return self.zeta.size - 1

    def z(self) -> np.ndarray:
        """Physical node positions."""
        return self.zeta * self.L

    def sum_f_drift(self) -> float:
        """Max nodewise deviation of the volume-fraction sum from one."""
        return float(np.max(np.abs(self.f.sum(axis=0) - 1.0)))


@dataclass(frozen=True, eq=False)
class Snapshot:
    """State at a scheduled output time plus interface diagnostics."""

    state: BiofilmState
    sigma_a: float
    sigma_d: float
    u_L: float
    regime: Regime


@dataclass(frozen=True)
class Violation:
    field: str
    constraint: str

    def __str__(self):
        return f"{self.field}: {self.constraint}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def validate_config(cfg: ScenarioConfig) -> ValidationReport:
    """Check every declared invariant of a scenario; report, never raise."""
    bad = []

    def check(ok, field_name, constraint):
        if not ok:
            bad.append(Violation(field_name, constraint))

    check(cfg.n >= 1, "species", "at least one species required")
    check(cfg.m >= 1, "substrates", "at least one substrate required")
    for i, sp in enumerate(cfg.species, start=1):
        tag = f"species.{i}"
        check(sp.mu_max >= 0, f"{tag}.mu_max", "mu_max must be >= 0")
        check(sp.K > 0, f"{tag}.K", "K must be > 0")
        check(sp.Y > 0, f"{tag}.Y", "Y must be > 0")
        check(sp.rho > 0, f"{tag}.rho", "rho must be > 0")
        check(sp.v_a >= 0, f"{tag}.v_a", "v_a must be >= 0")
        check(sp.k_col >= 0, f"{tag}.k_col", "k_col must be >= 0")
        check(sp.Y_psi > 0, f"{tag}.Y_psi", "Y_psi must be > 0")
        check(sp.D_psi > 0, f"{tag}.D_psi", "D_psi must be > 0")
    for j, sb in enumerate(cfg.substrates, start=1):
        check(sb.D > 0, f"substrate.{j}.D", "D must be > 0")
    check(cfg.delta >= 0, "scenario.delta", "delta must be >= 0")
    check(cfg.horizon >= 0, "scenario.horizon", "horizon must be >= 0")

    snaps = cfg.snapshot_times
    check(all(b >= a for a, b in zip(snaps, snaps[1:])),
          "scenario.snapshot_times", "snapshot times must be sorted ascending")
    check(all(0.0 <= s <= cfg.horizon for s in snaps),
          "scenario.snapshot_times", "snapshot outside horizon")

    check(len(cfg.bulk.psi_star) == cfg.n, "bulk.psi", "one trace per species required")
    check(len(cfg.bulk.s_star) == cfg.m, "bulk.s", "one trace per substrate required")
    for i, tr in enumerate(cfg.bulk.psi_star, start=1):
        check(tr.lower_bound(cfg.horizon) >= 0, f"bulk.psi.{i}",
              "bulk trace must stay >= 0 over the horizon")
    for j, tr in enumerate(cfg.bulk.s_star, start=1):
        check(tr.lower_bound(cfg.horizon) >= 0, f"bulk.s.{j}",
              "bulk trace must stay >= 0 over the horizon")

    st = cfg.stoichiometry
    check(len(st.substrate_of) == cfg.n, "stoichiometry.substrate_of",
          "needs one substrate index per species")
    check(all(0 <= k < cfg.m for k in st.substrate_of), "stoichiometry.substrate_of",
          "substrate index out of range")
    check(len(st.production) == cfg.m, "stoichiometry.production",
          "needs one row per substrate")
    check(all(len(row) == cfg.n for row in st.production), "stoichiometry.production",
          "each row needs one coefficient per species")

    nm = cfg.numerics
    check(nm.N >= 8, "numerics.N", "N must be >= 8")
    check(0 < nm.cfl <= 1, "numerics.cfl", "cfl must be in (0, 1]")
    check(nm.dt_max > 0, "numerics.dt_max", "dt_max must be > 0")
    check(nm.L_eps > 0, "numerics.L_eps", "L_eps must be > 0")
    check(nm.newton_tol > 0, "numerics.newton_tol", "newton_tol must be > 0")
    check(nm.newton_max_iter > 0, "numerics.newton_max_iter", "newton_max_iter must be > 0")
    check(nm.picard_tol > 0, "numerics.picard_tol", "picard_tol must be > 0")
    check(nm.picard_max_iter > 0, "numerics.picard_max_iter", "picard_max_iter must be > 0")
    check(nm.transport in ("characteristics", "upwind"), "numerics.transport",
          "transport must be 'characteristics' or 'upwind'")

    return ValidationReport(tuple(bad))


def initial_state(cfg: ScenarioConfig) -> BiofilmState:
    """Seed state at t = 0.

    The vanishing initial thickness is replaced by the seed ``L_eps`` (one
    attachment step at any practical dt dwarfs it), volume fractions are the
    attachment inflow fractions at t = 0, and the dissolved fields start at
    their bulk values.

    Raises :class:`NoAttachment` when nothing attaches at t = 0, in which
    case no biofilm can nucleate.
    """
    from .stepper import attachment_flux, inflow_fractions

    psi0 = cfg.psi_star(0.0)
    if attachment_flux(psi0, cfg) <= 0.0:
        raise NoAttachment("total attachment flux at t = 0 is zero")
    f0 = inflow_fractions(psi0, cfg)

    N = cfg.numerics.N
    zeta = np.arange(N + 1, dtype=float) / N
    ones = np.ones(N + 1)
    return BiofilmState(
        t=0.0,
        L=cfg.numerics.L_eps,
        zeta=zeta,
        f=np.outer(f0, ones),
        S=np.outer(cfg.s_star(0.0), ones),
        Psi=np.outer(psi0, ones),
        u=np.zeros(N + 1),
    )
