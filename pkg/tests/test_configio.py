import pytest

from biofilm1d import configio
from biofilm1d.errors import ConfigError
from biofilm1d.model import Stoichiometry, validate_config
from biofilm1d.presets import build_preset
from biofilm1d.traces import TableTrace

import dataclasses


class TestRoundTrip:
    @pytest.mark.parametrize("pid", ["case1", "case2", "case3"])
    def test_presets_round_trip_exactly(self, pid):
        cfg = build_preset(pid).cfg
        assert configio.loads(configio.dumps(cfg)) == cfg

    def test_awkward_floats_round_trip(self):
        cfg = build_preset("case1").cfg
        species = (dataclasses.replace(cfg.species[0], mu_max=0.1 + 0.2,
                                       K=1.0 / 3.0),) + cfg.species[1:]
        cfg = dataclasses.replace(cfg, species=species, delta=1e-300)
        assert configio.loads(configio.dumps(cfg)) == cfg

    def test_custom_stoichiometry_and_table_round_trip(self):
        cfg = build_preset("case2").cfg
        bulk = dataclasses.replace(
            cfg.bulk, s_star=(TableTrace((0.0, 5.0), (100.0, 50.0)),)
            + cfg.bulk.s_star[1:])
        stoich = Stoichiometry(substrate_of=(0, 1, 2),
                               production=((-1.0, 0.0, 0.0),
                                           (0.5, -1.0, 0.0),
                                           (1.0, 0.0, -1.0)))
        cfg = dataclasses.replace(cfg, bulk=bulk, stoichiometry=stoich)
        back = configio.loads(configio.dumps(cfg))
        assert back == cfg
        assert validate_config(back).ok

    def test_file_round_trip(self, tmp_path):
        cfg = build_preset("case3").cfg
        path = tmp_path / "scenario.cfg"
        configio.save(cfg, path)
        assert configio.load(path) == cfg


class TestParsing:
    def test_comments_and_blank_lines(self):
        text = configio.dumps(build_preset("case1").cfg)
        noisy = "# leading comment\n\n" + text.replace(
            "scenario.delta = 2000.0",
            "scenario.delta = 2000.0   # trailing comment")
        assert configio.loads(noisy) == build_preset("case1").cfg

    def test_unknown_key_rejected(self):
        text = configio.dumps(build_preset("case1").cfg) + "scenario.bogus = 1\n"
        with pytest.raises(ConfigError, match="unknown key"):
            configio.loads(text)

    def test_duplicate_key_rejected(self):
        text = configio.dumps(build_preset("case1").cfg)
        with pytest.raises(ConfigError, match="duplicate"):
            configio.loads(text + "scenario.delta = 1.0\n")

    def test_missing_required_key_rejected(self):
        text = configio.dumps(build_preset("case1").cfg)
        text = text.replace("scenario.horizon = 10.0\n", "")
        with pytest.raises(ConfigError, match="scenario.horizon"):
            configio.loads(text)

    def test_noncontiguous_species_rejected(self):
        text = configio.dumps(build_preset("case1").cfg)
        text = text.replace("species.2.", "species.7.")
        with pytest.raises(ConfigError, match="contiguous"):
            configio.loads(text)

    def test_malformed_line_rejected(self):
        with pytest.raises(ConfigError, match="key = value"):
            configio.loads("scenario.delta 2000\n")
