import dataclasses

import numpy as np
import pytest

from biofilm1d.errors import NoAttachment
from biofilm1d.model import (CONSTRAINT_TOL, NumericsConfig, Regime,
                             ScenarioConfig, SpeciesParams, Stoichiometry,
                             SubstrateParams, initial_state, validate_config)
from biofilm1d.presets import build_preset
from biofilm1d.traces import BulkTraces, ConstantTrace


def make_cfg(psi=(100.0, 100.0, 0.0), v_a=(0.025, 0.025, 0.025), **overrides):
    species = tuple(
        SpeciesParams(mu_max=0.4, K=1.0, Y=0.4, rho=5000.0, v_a=v,
                      k_col=0.0, Y_psi=2e-7, D_psi=1e-5)
        for v in v_a)
    base = dict(
        species=species,
        substrates=(SubstrateParams(1e-5),) * 3,
        delta=2000.0,
        bulk=BulkTraces(psi_star=tuple(ConstantTrace(p) for p in psi),
                        s_star=(ConstantTrace(100.0),) * 3),
        stoichiometry=Stoichiometry.builtin3x3(),
        numerics=NumericsConfig(N=32),
        horizon=1.0,
        snapshot_times=(0.5, 1.0),
    )
    base.update(overrides)
    return ScenarioConfig(**base)


class TestValidateConfig:
    def test_presets_are_valid(self):
        for pid in ("case1", "case2", "case3"):
            assert validate_config(build_preset(pid).cfg).ok

    def test_zero_half_saturation_flagged(self):
        cfg = make_cfg()
        bad = (dataclasses.replace(cfg.species[0], K=0.0),) + cfg.species[1:]
        report = validate_config(dataclasses.replace(cfg, species=bad))
        assert not report.ok
        assert any(v.field == "species.1.K" and "K must be > 0" in v.constraint
                   for v in report.violations)

    def test_snapshot_outside_horizon_flagged(self):
        report = validate_config(make_cfg(horizon=10.0, snapshot_times=(11.0,)))
        assert any("snapshot outside horizon" in v.constraint
                   for v in report.violations)

    def test_unsorted_snapshots_flagged(self):
        report = validate_config(make_cfg(snapshot_times=(0.5, 0.25)))
        assert any("sorted" in v.constraint for v in report.violations)

    def test_reports_do_not_raise(self):
        cfg = make_cfg(delta=-1.0)
        report = validate_config(cfg)
        assert not report.ok
        assert "delta" in str(report)


class TestInitialState:
    def test_equal_velocities_split_by_bulk_abundance(self):
        st = initial_state(make_cfg(psi=(100.0, 100.0, 0.0)))
        np.testing.assert_array_equal(st.f[:, 0], [0.5, 0.5, 0.0])
        assert st.sum_f_drift() == 0.0

    def test_single_attaching_species(self):
        st = initial_state(make_cfg(psi=(100.0, 0.0, 0.0)))
        np.testing.assert_array_equal(st.f[:, 0], [1.0, 0.0, 0.0])

    def test_three_way_split_and_flux(self):
        from biofilm1d.stepper import attachment_flux
        cfg = make_cfg(psi=(100.0, 100.0, 100.0))
        st = initial_state(cfg)
        np.testing.assert_allclose(st.f[:, 0], [1 / 3, 1 / 3, 1 / 3], rtol=1e-15)
        # sigma_a = 3 * v_a * psi / rho = 3 * 0.025 * 100 / 5000
        assert attachment_flux(cfg.psi_star(0.0), cfg) == pytest.approx(1.5e-3, rel=1e-14)

    def test_seed_geometry(self):
        cfg = make_cfg()
        st = initial_state(cfg)
        assert st.t == 0.0
        assert st.L == cfg.numerics.L_eps
        N = cfg.numerics.N
        np.testing.assert_array_equal(st.zeta, np.arange(N + 1) / N)
        np.testing.assert_array_equal(st.S, np.full((3, N + 1), 100.0))
        np.testing.assert_array_equal(st.u, np.zeros(N + 1))

    def test_deterministic(self):
        a = initial_state(make_cfg())
        b = initial_state(make_cfg())
        for name in ("zeta", "f", "S", "Psi", "u"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))

    def test_no_attachment_rejected(self):
        with pytest.raises(NoAttachment):
            initial_state(make_cfg(psi=(0.0, 0.0, 0.0)))

    def test_state_arrays_frozen(self):
        st = initial_state(make_cfg())
        with pytest.raises(ValueError):
            st.f[0, 0] = 2.0

    def test_constraint_tolerance_value(self):
        assert CONSTRAINT_TOL == 1e-8


class TestRegime:
    def test_classification_and_tie(self):
        assert Regime.classify(2.0, 1.0) is Regime.ATTACHMENT
        assert Regime.classify(1.0, 2.0) is Regime.DETACHMENT
        assert Regime.classify(1.0, 1.0) is Regime.DETACHMENT
