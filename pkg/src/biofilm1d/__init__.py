"""One-dimensional free-boundary simulator for multispecies biofilms.

The model couples hyperbolic transport of sessile volume fractions on a
moving domain, quasi-static diffusion of substrates and planktonic cells,
Monod growth and colonization kinetics, and an ODE for the biofilm
thickness driven by attachment, detachment and internal expansion.  A
fixed-point solver in characteristic coordinates cross-validates the time
stepper on short horizons and quantifies the contraction window on which
the integral formulation is provably well posed.
"""

from .errors import (Biofilm1dError, BoundaryLayerResolutionWarning, CflViolation,
                     ConfigError, DetachmentRegime, IoFailure, NoAttachment,
                     NonConvergence, NumericalBlowup, OutOfDomain, SingularJacobian,
                     UnknownPreset)
from .kinetics import (RateBundle, colonization_rates, growth_rates, monod,
                       planktonic_conversion_rates, rate_bundle, source_G,
                       substrate_rates)
from .model import (CONSTRAINT_TOL, BiofilmState, NumericsConfig, Regime,
                    ScenarioConfig, Snapshot, SpeciesParams, Stoichiometry,
                    SubstrateParams, ValidationReport, initial_state,
                    validate_config)
from .elliptic import (EllipticProblem, EllipticSolution, solve_planktonic,
                       solve_substrates, tridiagonal_solve)
from .stepper import (BoundaryTrace, ProfileTrace, RunResult, StepDiagnostics,
                      advance_biomass, advance_boundary, attachment_flux,
                      compute_velocity, detachment_flux, inflow_fractions,
                      make_snapshot, run, step)
from .oracle import (CharField, CharPath, ContractionBox, ContractionEstimate,
                     box_from_run, characteristic_trace, estimate_contraction,
                     map_run_to_char_grid, picard_solve, window_root)
from .presets import DEFAULT_T1, PRESET_IDS, CasePreset, build_preset
from .traces import (BulkTraces, ConstantTrace, RampTrace, TableTrace,
                     parse_descriptor, psi3_ramp)
from .output import OutputBundle, emit
from . import configio

__version__ = "0.1.0"
