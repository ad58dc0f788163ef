import io
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifbsa.bsa import Bell
from ifbsa.errors import ConfigInvalid, DegenerateDesign, GridMismatch
from ifbsa.harness import (
    ExperimentConfig,
    ScanSpec,
    build_report,
    fit_fringe,
    noise_subtract,
    read_csv,
    run_scan,
    write_csv,
)
from ifbsa.harness.config import load_json
from ifbsa.harness.fitting import wrap
from ifbsa.harness.report import fidelity, fit_only_report
from ifbsa.harness.scan import ScanRecord, bell_aggregate, bell_mapping, group_points, records_to_csv
from ifbsa.noise import NoiseConfig
from ifbsa.teleport import PhaseConfig

FIXTURES = Path(__file__).parent / "fixtures"
TAU = 2 * math.pi


def fringe(r, v, rho, phases):
    return [(p, r * (1 + v * math.cos(p + rho))) for p in phases]


def grid(n):
    return [TAU * k / n for k in range(n)]


def by_outcome(records, label, column="net"):
    return group_points(records, column)[label]


class TestFitFringe:
    def test_constant(self):
        f = fit_fringe([(p, 7.0) for p in grid(6)])
        assert f.R == pytest.approx(7, abs=1e-12)
        assert f.V == pytest.approx(0, abs=1e-12)

    def test_known_fringe(self):
        f = fit_fringe(fringe(10, 0.5, 1.0, grid(8)))
        assert (f.R, f.V, f.rho) == pytest.approx((10, 0.5, 1.0), abs=1e-9)
        assert f.n_points == 8

    def test_negative_quadrant(self):
        f = fit_fringe(fringe(5, 0.9, 4.0, grid(8)))
        assert f.rho == pytest.approx(4.0, abs=1e-9)
        assert f.V == pytest.approx(0.9, abs=1e-9)

    @settings(max_examples=50)
    @given(st.floats(1, 1e5), st.floats(0, 1), st.floats(0, TAU, exclude_max=True), st.integers(5, 24))
    def test_round_trip(self, r, v, rho, n):
        f = fit_fringe(fringe(r, v, rho, grid(n)))
        assert f.R == pytest.approx(r, rel=1e-9)
        assert f.V == pytest.approx(v, abs=1e-9)
        if v > 1e-3:
            assert wrap(f.rho - rho) == pytest.approx(0, abs=1e-6)
        assert 0 <= f.rho < TAU

    def test_uneven_grid(self):
        phases = [0.1, 0.5, 1.7, 2.2, 3.9, 5.0]
        f = fit_fringe(fringe(3, 0.7, 2.5, phases))
        assert (f.R, f.V, f.rho) == pytest.approx((3, 0.7, 2.5), abs=1e-9)

    def test_too_few_points(self):
        with pytest.raises(DegenerateDesign):
            fit_fringe(fringe(1, 0.5, 0, grid(4)))

    def test_identical_phases(self):
        with pytest.raises(DegenerateDesign):
            fit_fringe([(0.3, float(k)) for k in range(6)])

    def test_opposite_phases_only(self):
        with pytest.raises(DegenerateDesign):
            fit_fringe([(0.0, 1.0), (math.pi, 2.0)] * 3)

    def test_sigma_checked(self):
        with pytest.raises(ValueError):
            fit_fringe(fringe(1, 0.5, 0, grid(6)), sigma=[1.0] * 5)

    def test_errors_scale_with_sigma(self):
        pts = fringe(100, 0.5, 1.0, grid(8))
        rng = np.random.default_rng(3)
        noisy = [(p, y + rng.normal(0, 1)) for p, y in pts]
        f1 = fit_fringe(noisy, sigma=[1.0] * 8)
        f2 = fit_fringe(noisy, sigma=[2.0] * 8)
        assert f2.R_err == pytest.approx(2 * f1.R_err)
        assert f2.chi2_dof == pytest.approx(f1.chi2_dof / 4)

    def test_model(self):
        f = fit_fringe(fringe(10, 0.5, 1.0, grid(8)))
        assert f.model(0.3) == pytest.approx(10 * (1 + 0.5 * math.cos(1.3)))


class TestNoiseSubtract:
    def test_zero_background(self):
        raw = fringe(50, 0.6, 2.0, grid(10))
        sub = noise_subtract(raw, [(p, 0.0) for p, _ in raw])
        f = fit_fringe(raw)
        assert (sub.fit.R, sub.fit.V, sub.fit.rho) == pytest.approx((f.R, f.V, f.rho), abs=1e-9)
        assert not sub.clamped

    @pytest.mark.parametrize("r,v,b", [(100, 0.9, 50), (20, 1.0, 200), (1000, 0.3, 1)])
    def test_flat_background(self, r, v, b):
        phases = grid(12)
        raw = [(p, y + b) for p, y in fringe(r, v, 0.7, phases)]
        assert fit_fringe(raw).V == pytest.approx(r * v / (r + b), abs=1e-9)
        sub = noise_subtract(raw, [(p, b) for p in phases])
        assert sub.fit.V == pytest.approx(v, abs=1e-9)
        assert sub.fit.R == pytest.approx(r, rel=1e-9)

    def test_grid_mismatch(self):
        raw = fringe(1, 0.5, 0, grid(6))
        with pytest.raises(GridMismatch):
            noise_subtract(raw, [(p + 0.01, 0.0) for p, _ in raw])
        with pytest.raises(GridMismatch):
            noise_subtract(raw, raw[:-1])

    def test_clamps_and_flags(self, caplog):
        raw = fringe(10, 1.0, 0, grid(8))
        sub = noise_subtract(raw, [(p, 5.0) for p, _ in raw])
        assert sub.clamped
        assert min(y for _, y in sub.points) == 0
        assert "clamped" in caplog.text

    def test_summed_psi_plus_background_is_flat(self):
        cfg = ExperimentConfig(PhaseConfig(0, 0.4, -0.2), noise=NoiseConfig(d1=2e-4, d2=2e-4))
        recs = run_scan(cfg, ScanSpec.uniform("alpha", 12))
        bg = [a[1] + b[1] for a, b in zip(by_outcome(recs, "01", "background"), by_outcome(recs, "10", "background"))]
        assert np.ptp(bg) < 1e-12 * np.mean(bg)


class TestRunScan:
    def test_psi_plus_outcome_follows_alpha_plus_beta(self):
        beta = 0.6
        cfg = ExperimentConfig(PhaseConfig(0, beta, -0.3))
        pts = by_outcome(run_scan(cfg, ScanSpec.uniform("alpha", 12)), "01")
        r = pts[0][1] / (1 + math.cos(beta))
        for a, y in pts:
            assert y == pytest.approx(r * (1 + math.cos(a + beta)), abs=1e-9 * r)

    def test_outcomes_with_dead_time(self):
        recs = run_scan(ExperimentConfig(), ScanSpec.uniform("alpha", 6))
        assert sorted({r.outcome for r in recs}) == ["01", "02", "10", "11", "12", "20", "21"]

    def test_expected_has_no_background_without_noise(self):
        for r in run_scan(ExperimentConfig(), ScanSpec.uniform("alpha", 6)):
            assert r.background == 0 and r.raw == r.net

    def test_integration_scale(self):
        cfg = ExperimentConfig(integration=1234.0)
        recs = run_scan(cfg, ScanSpec.uniform("alpha", 8))
        assert sum(r.net for r in recs) / 8 == pytest.approx(1234.0, rel=1e-12)

    def test_deterministic(self):
        cfg = ExperimentConfig(noise=NoiseConfig(), seed=11)
        scan = ScanSpec.uniform("alpha", 8)
        assert run_scan(cfg, scan, "sampled") == run_scan(cfg, scan, "sampled")
        assert run_scan(cfg, scan, "sampled") != run_scan(cfg.replace(seed=12), scan, "sampled")

    def test_sampled_counts_are_integers(self):
        recs = run_scan(ExperimentConfig(noise=NoiseConfig()), ScanSpec.uniform("alpha", 6), "sampled")
        assert all(r.raw == int(r.raw) and r.background == int(r.background) for r in recs)

    def test_unknown_mode(self):
        with pytest.raises(ConfigInvalid):
            run_scan(ExperimentConfig(), ScanSpec.uniform(), "simulated")

    @pytest.mark.parametrize("beta,delta", [(0.0, 0.0), (0.5, -0.5), (1.2, 0.4)])
    def test_round_trip_per_outcome(self, beta, delta):
        cfg = ExperimentConfig(PhaseConfig(0, beta, delta))
        recs = run_scan(cfg, ScanSpec.uniform("alpha", 12))
        f01 = fit_fringe(by_outcome(recs, "01"))
        f11 = fit_fringe(by_outcome(recs, "11"))
        assert f01.V == pytest.approx(1, abs=1e-9)
        assert wrap(f01.rho - beta) == pytest.approx(0, abs=1e-9)
        assert wrap(f11.rho + beta + 2 * delta) == pytest.approx(0, abs=1e-9)

    def test_sampled_coverage(self):
        # a short version of the 200-seed coverage check
        scan = ScanSpec.uniform("alpha", 12)
        hits = 0
        n = 40
        for seed in range(n):
            recs = run_scan(ExperimentConfig(seed=seed), scan, "sampled")
            f = fit_fringe(by_outcome(recs, "11", "raw"))
            hits += abs(f.V - 1) <= 2 * f.V_err
        assert hits >= 0.8 * n

    def test_transmission_fixture(self):
        cfg = ExperimentConfig.from_dict(load_json(FIXTURES / "electronic_loss.json"))
        scan = ScanSpec.uniform("alpha", 6)
        lossy = run_scan(cfg, scan)
        clean = run_scan(cfg.replace(transmission={}), scan)
        for a, b in zip(lossy, clean):
            assert a.net == pytest.approx(cfg.transmission_for(a.outcome) * b.net, abs=1e-12)

    def test_unaligned_photons_flatten_shared_rows(self):
        cfg = ExperimentConfig(noise=NoiseConfig(aligned=False))
        recs = run_scan(cfg, ScanSpec.uniform("alpha", 8))
        vals = [y for _, y in by_outcome(recs, "02")]
        assert np.ptp(vals) < 1e-9 * np.mean(vals)


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            {"analyzer": "pbs"},
            {"integration": 0},
            {"integration": float("inf")},
            {"seed": -1},
            {"transmission": {"01": 0.0}},
            {"transmission": {"01": 1.2}},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigInvalid):
            ExperimentConfig(**kw)

    def test_round_trip(self):
        cfg = ExperimentConfig(PhaseConfig(0.1, 0.2, 0.3), NoiseConfig(), "bs", False, 500.0, 9, {"01": 0.5})
        assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg

    def test_degrees(self):
        cfg = ExperimentConfig.from_dict({"schema": 1, "unit": "deg", "phases": {"alpha": 90, "beta": 180}})
        assert (cfg.phases.alpha, cfg.phases.beta) == pytest.approx((math.pi / 2, math.pi))

    @pytest.mark.parametrize(
        "d",
        [
            {"schema": 2},
            {"unit": "grad", "phases": {"alpha": 1}},
            {"noise": {"p_alice": 2}},
            {"noise": {"colour": 1}},
            [],
        ],
    )
    def test_bad_dicts(self, d):
        with pytest.raises(ConfigInvalid):
            ExperimentConfig.from_dict(d)

    def test_scan_spec(self):
        s = ScanSpec.from_dict(load_json(FIXTURES / "scan_alpha.json"))
        assert s.scanned_phase == "alpha" and len(s.values) == 12
        assert s.values[1] == pytest.approx(math.radians(30))
        assert ScanSpec.from_dict(s.to_dict()) == s

    @pytest.mark.parametrize(
        "d", [{"scanned_phase": "delta", "values": [0, 1, 2, 3, 4]}, {"values": [0, 1, 2]}, {"start": 0}]
    )
    def test_bad_scan(self, d):
        with pytest.raises(ConfigInvalid):
            ScanSpec.from_dict(d)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            load_json(tmp_path / "nope.json")


class TestCsv:
    def test_round_trip(self):
        recs = run_scan(ExperimentConfig(noise=NoiseConfig()), ScanSpec.uniform("alpha", 7))
        back = read_csv(io.StringIO(records_to_csv(recs)))
        assert len(back) == len(recs)
        for a, b in zip(recs, back):
            assert a.outcome == b.outcome
            assert (b.phase, b.raw, b.background, b.net) == pytest.approx((a.phase, a.raw, a.background, a.net), rel=1e-11)

    def test_format(self):
        text = records_to_csv([ScanRecord(math.pi, "01", 1.0, 0.5, 0.5)])
        assert text == "phase_rad,outcome,raw,background,net\n3.14159265359,01,1,0.5,0.5\n"

    def test_bad_header(self):
        with pytest.raises(ConfigInvalid):
            read_csv(io.StringIO("phase,outcome\n"))

    def test_bad_number(self):
        with pytest.raises(ConfigInvalid):
            read_csv(io.StringIO("phase_rad,outcome,raw,background,net\n0,01,x,0,0\n"))

    def test_write_to_handle(self):
        buf = io.StringIO()
        write_csv([], buf)
        assert buf.getvalue() == "phase_rad,outcome,raw,background,net\n"


class TestBellAggregate:
    def aggregated(self, beta=0.4, delta=-0.9):
        cfg = ExperimentConfig(PhaseConfig(0, beta, delta))
        recs = run_scan(cfg, ScanSpec.uniform("alpha", 12))
        return bell_aggregate(recs, bell_mapping("if", True))

    def test_psi_plus(self):
        f = fit_fringe(by_outcome(self.aggregated(beta=0.4), "psi+"))
        assert f.V == pytest.approx(1, abs=1e-9)
        assert wrap(f.rho - 0.4) == pytest.approx(0, abs=1e-9)

    def test_psi_pair_in_antiphase(self):
        agg = self.aggregated()
        fp = fit_fringe(by_outcome(agg, "psi+"))
        fm = fit_fringe(by_outcome(agg, "psi-"))
        assert abs(wrap(fp.rho - fm.rho)) == pytest.approx(math.pi, abs=1e-9)

    def test_normalized_probabilities(self):
        agg = self.aggregated()
        totals = {b.value: sum(r.net for r in agg if r.outcome == b.value) for b in (Bell.PSI_PLUS, Bell.PSI_MINUS, Bell.PHI_PLUS)}
        s = sum(totals.values())
        assert {k: v / s for k, v in totals.items()} == pytest.approx({"psi+": 0.4, "psi-": 0.2, "phi+": 0.4}, abs=1e-12)

    def test_matches_sum_of_constituents(self):
        cfg = ExperimentConfig(PhaseConfig(0, 0.4, -0.9), noise=NoiseConfig())
        recs = run_scan(cfg, ScanSpec.uniform("alpha", 6))
        agg = {(r.phase, r.outcome): r for r in bell_aggregate(recs, bell_mapping("if", True))}
        for ph in {r.phase for r in recs}:
            want = sum(r.raw for r in recs if r.phase == ph and r.outcome in ("01", "10", "12", "21"))
            assert agg[(ph, "psi+")].raw == pytest.approx(want)

    def test_unmapped_outcomes_dropped(self):
        recs = [ScanRecord(0.0, "D1:00", 3, 0, 3), ScanRecord(0.0, "11", 2, 0, 2)]
        assert bell_aggregate(recs) == [ScanRecord(0.0, "phi+", 2, 0, 2)]


class TestReport:
    @pytest.mark.parametrize("scanned", ["alpha", "beta"])
    @pytest.mark.parametrize("delta", [0.0, 0.8, 2.9])
    def test_delta_recovery(self, scanned, delta):
        cfg = ExperimentConfig(PhaseConfig(0.3, 0.5, delta))
        scan = ScanSpec.uniform(scanned, 12)
        rec = build_report(run_scan(cfg, scan), cfg, scan)["delta_recovery"]
        diff = (rec["delta"] - delta) % math.pi
        assert min(diff, math.pi - diff) < 1e-6

    def test_seventy_degree_shift(self):
        scan = ScanSpec.uniform("alpha", 12)
        reports = []
        for d in (0.0, math.radians(70)):
            cfg = ExperimentConfig(PhaseConfig(0, 0.2, d))
            reports.append(build_report(run_scan(cfg, scan), cfg, scan)["bell_states"])
        rho = {k: [r[k]["net"]["rho"] for r in reports] for k in ("phi+", "psi+", "psi-")}
        assert wrap(rho["phi+"][0] - rho["phi+"][1]) == pytest.approx(math.radians(140), abs=1e-9)
        for k in ("psi+", "psi-"):
            assert wrap(rho[k][0] - rho[k][1]) == pytest.approx(0, abs=1e-9)

    def test_fidelity(self):
        fit = fit_fringe(fringe(10, 0.34, 0, grid(8)))
        assert fidelity(fit)["F"] == pytest.approx(0.67, abs=1e-9)

    def test_fidelity_clips(self):
        fit = fit_fringe([(p, y) for p, y in fringe(10, 1.0, 0, grid(8))])
        assert fidelity(fit)["F"] <= 1.0

    def test_structure(self):
        cfg = ExperimentConfig(noise=NoiseConfig())
        scan = ScanSpec.uniform("alpha", 8)
        rep = build_report(run_scan(cfg, scan), cfg, scan)
        assert rep["schema"] == 1
        assert "1 standard deviation" in rep["uncertainty"]
        assert set(rep["bell_states"]) == {"psi+", "psi-", "phi+"}
        assert set(rep["phase_differences"]) == {"psi+ - psi-", "phi+ - psi-", "phi+ - psi+"}
        assert abs(rep["phase_differences"]["psi+ - psi-"]["diff"]) == pytest.approx(math.pi, abs=1e-6)
        json.dumps(rep)

    def test_fit_only(self):
        recs = run_scan(ExperimentConfig(dead_time=False), ScanSpec.uniform("alpha", 8))
        rep = fit_only_report(recs)
        assert rep["bell_states"]["psi+"]["fidelity"]["F"] == pytest.approx(1, abs=1e-9)
        assert "D1:01" in rep["outcomes"]


class TestMeasuredNoiseFixture:
    """Measured noise counts used as flat backgrounds for the fitting pipeline."""

    data = json.loads((FIXTURES / "measured_noise.json").read_text())

    @pytest.mark.parametrize("scenario", ["alice_blocked", "epr_to_bob_blocked", "epr_to_bsa_blocked"])
    def test_subtraction_restores_visibility(self, scenario):
        phases = grid(12)
        for label, bg in zip(self.data["outcomes"], self.data[scenario]["mean"]):
            raw = [(p, y + bg) for p, y in fringe(200, 0.9, 1.0, phases)]
            sub = noise_subtract(raw, [(p, bg) for p in phases])
            assert fit_fringe(raw).V == pytest.approx(180 / (200 + bg), abs=1e-9), label
            assert sub.fit.V == pytest.approx(0.9, abs=1e-9), label

    def test_raw_visibility_average(self):
        vs = [v for v, _ in self.data["raw_bell_visibility"].values()]
        assert sum(vs) / len(vs) == pytest.approx(0.34, abs=0.005)
