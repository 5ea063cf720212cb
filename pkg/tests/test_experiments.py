import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from envelope_lab.ansatz import ProfileSpec
from envelope_lab.experiments.config import ConfigError, RunConfig, config_from_dict, load_config, worker_count
from envelope_lab.experiments.report import (
    ConvergenceReport, csv_text, emit_outputs, fit_slope, json_text, parse_csv, svg_text,
)
from envelope_lab.experiments.studies import (
    SOURCES, amplitude_grid, energy_point, high_part_norm, remainder_point, run_energy_drift,
    run_highfreq_core, run_linear_convergence, run_main_convergence,
)
from envelope_lab.spectral import Field, TorusGrid

SMALL = RunConfig(study="converge-main", eps_list=(0.5, 0.25, 0.125), n_slow=256, samples=8, T=0.25)


class TestFitSlope:
    def test_exact_power(self):
        slope, res = fit_slope([(0.1, 0.01), (0.2, 0.04)])
        assert slope == pytest.approx(2.0, abs=1e-12) and res < 1e-12

    def test_constant(self):
        assert fit_slope([(h, 3.0) for h in (0.1, 0.2, 0.4)])[0] == pytest.approx(0.0, abs=1e-12)

    @given(st.floats(-3, 3), st.floats(0.01, 100))
    @settings(max_examples=50, deadline=None)
    def test_collinear(self, p, c):
        slope, res = fit_slope([(h, c * h ** p) for h in (0.5, 0.25, 0.125)])
        assert slope == pytest.approx(p, abs=1e-9)
        assert res < 1e-12

    @pytest.mark.parametrize("pts", [[(0.1, 1.0)], [(0.1, 0.0), (0.2, 1.0)], [(-0.1, 1.0), (0.2, 1.0)],
                                     [(0.1, 1.0), (0.1, 2.0)]])
    def test_rejects(self, pts):
        with pytest.raises(ValueError):
            fit_slope(pts)


class TestReport:
    def make(self, n=3):
        eps = [0.25, 0.125, 0.0625][:n]
        return ConvergenceReport("demo", eps=eps, values=[0.1 * e ** 1.5 for e in eps],
                                 series={"aux": [1 / 3, 2 / 3, 1.0][:n]}, predicted=1.5,
                                 predicted_source="power law", band=(1.35, 1.65)).finalize()

    def test_slope_needs_three_points(self):
        assert self.make(2).slope is None
        assert self.make(2).passed is False
        rep = self.make(3)
        assert rep.slope == pytest.approx(1.5) and rep.passed

    def test_json_round_trip(self):
        rep = self.make()
        back = ConvergenceReport.from_dict(json.loads(json_text(rep)))
        assert back.to_dict() == rep.to_dict()

    def test_csv_round_trip_is_exact(self):
        rep = self.make()
        header, rows = parse_csv(csv_text(rep))
        assert header == list(rep.table()[0])
        assert rows == [list(r) for r in rep.table()[1]]

    def test_svg(self):
        text = svg_text(self.make())
        assert text.startswith("<?xml") and "<svg" in text
        assert svg_text(self.make()) == text

    def test_empty_report_manifest(self, tmp_path):
        man = emit_outputs(ConvergenceReport("empty"), tmp_path)
        assert man["artifacts"] == []
        assert sorted(p.name for p in tmp_path.iterdir()) == ["manifest.json"]

    def test_manifest_hashes(self, tmp_path):
        import hashlib
        man = emit_outputs(self.make(), tmp_path, ("csv", "json"))
        for art in man["artifacts"]:
            data = (tmp_path / art["path"]).read_bytes()
            assert hashlib.sha256(data).hexdigest() == art["sha256"]
        assert "runtime" not in json.loads((tmp_path / "demo.json").read_text())

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            emit_outputs(self.make(), tmp_path, ("pdf",))

    def test_unwritable_directory_names_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match="file"):
            emit_outputs(self.make(), blocker / "sub")


class TestConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.periods == 16 and cfg.n_slow == 1024 and cfg.T == 1.0 and cfg.eta == 0.05
        assert cfg.samples >= 64

    @pytest.mark.parametrize("kw", [dict(eps_list=(0.3,)), dict(eps_list=()), dict(eta=0.3), dict(T=0),
                                    dict(n_slow=1000), dict(eps_list=(2.0,))])
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            RunConfig(**kw)

    def test_hash_ignores_output_dir(self):
        assert RunConfig(out_dir="a").hash() == RunConfig(out_dir="b").hash()
        assert RunConfig(seed=1).hash() != RunConfig(seed=2).hash()

    def test_json_and_toml(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({"eps_list": [0.5, 0.25], "profile": {"family": "sech"}}))
        (tmp_path / "c.toml").write_text('eps_list = [0.5, 0.25]\n[profile]\nfamily = "sech"\n')
        a = load_config(tmp_path / "c.json")
        b = load_config(tmp_path / "c.toml")
        assert a == b and a.profile.family == "sech" and a.eps_list == (0.5, 0.25)

    def test_bad_inputs(self, tmp_path):
        with pytest.raises(ConfigError):
            config_from_dict({"nonsense": 1})
        with pytest.raises(ConfigError):
            config_from_dict({"profile": {"family": "box"}})
        (tmp_path / "bad.json").write_text("{")
        with pytest.raises(ConfigError):
            load_config(tmp_path / "bad.json")
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")

    def test_infinite_s_survives_json(self):
        cfg = RunConfig()
        back = config_from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert math.isinf(back.profile.s) and back == cfg

    def test_thread_cap(self, monkeypatch):
        monkeypatch.setenv("ENVELOPE_LAB_THREADS", "2")
        assert worker_count(5) == 2 and worker_count(1) == 1
        monkeypatch.setenv("ENVELOPE_LAB_THREADS", "zero")
        with pytest.raises(ConfigError):
            worker_count(3)


class TestStudies:
    def test_sources_are_descriptive(self):
        assert all(SOURCES.values())

    def test_determinism(self, tmp_path):
        a = run_main_convergence(SMALL)
        b = run_main_convergence(SMALL)
        assert csv_text(a) == csv_text(b)
        assert json_text(a) == json_text(b)

    def test_main_reports_both_modes(self):
        rep = run_main_convergence(SMALL)
        assert rep.slope is not None and len(rep.series["h1"]) == 3
        assert rep.predicted == pytest.approx(1.45)
        assert rep.band == pytest.approx((1.3, 1.6))

    def test_linear_gaussian_slope(self):
        rep = run_linear_convergence(RunConfig(study="converge-linear", eps_list=(0.25, 0.125, 0.0625, 1 / 32)))
        assert rep.slope >= 0.9

    def test_zero_profile_remainder(self):
        cfg = SMALL.with_(profile=ProfileSpec(amplitude=0.0), T=0.05)
        out = remainder_point(cfg, 0.25)
        assert out["r"] == 0 and out["psi_high"] == 0

    def test_zero_profile_energy(self):
        cfg = SMALL.with_(profile=ProfileSpec(amplitude=0.0), T=0.05)
        assert energy_point(cfg, 0.25)["drift"] == 0

    def test_energy_small(self):
        rep = run_energy_drift(SMALL.with_(eps_list=(0.25,), T=0.1, samples=4))
        assert rep.values[0] <= 1e-7
        assert rep.series["refinement_factor"][0] >= 8

    def test_band_limited_high_part_vanishes(self):
        g = TorusGrid.from_periods(16, 256)
        c = np.where(np.abs(g.xi) <= 0.5, 1.0, 0.0)
        psi = Field(g, spectrum=c)
        for eps in (0.25, 0.125, 0.0625):
            assert high_part_norm(psi, 0.5 * eps ** (-1 / 3), eps) == 0
            assert high_part_norm(psi, 0.5 * eps ** (-1 / 3), eps, smooth=True) > 0

    def test_highfreq_small(self):
        cfg = SMALL.with_(study="highfreq-core", T=0.1, deltas=(1.0,))
        rep = run_highfreq_core(cfg)
        assert set(rep.series) == {"high_1", "m_weighted_1", "initial_high_1"}
        assert rep.notes["strictly_decreasing"]["1"]

    def test_amplitude_grid_carries_bands(self):
        g = TorusGrid.from_periods(16, 256)
        psi = Field.from_function(g, lambda x: np.exp(-((x - g.length / 2) ** 2)))
        for eps in (0.25, 0.0625):
            ga = amplitude_grid(psi, eps)
            assert ga.xi_max >= 4 / eps and ga.length == g.length
