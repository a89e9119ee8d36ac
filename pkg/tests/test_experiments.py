import csv
import json
import math
from pathlib import Path

import pytest

from fracnehari.experiments import (Report, compare_reports, default_grid, explore_2nlfs_fkdv,
                                    phi_u0_rescaled, replay, sweep,
                                    verify_semi_trivial_fixed_point,
                                    verify_theorem_ground_state_beta_large,
                                    verify_theorem_lambda2_large, verify_n_system)
from fracnehari.model import SystemParams
from fracnehari.nehari import SolveOptions
from fracnehari.spectral import GridSpec
from fracnehari.storage import load_field, sha256_file

REGRESSION = json.loads((Path(__file__).parent / "data" / "regression.json").read_text())
# moments of 2/(1+x^2): int V^2 = 2 pi, int V^3 = 3 pi, int V^4 = 5 pi
EXACT_MOMENTS = {2: 2 * math.pi, 3: 3 * math.pi, 4: 5 * math.pi}


@pytest.fixture(scope="module")
def th1(tmp_path_factory):
    out = tmp_path_factory.mktemp("th1")
    p = SystemParams.two_eq(0.5, 1.0, 1.0, 10.0)
    return verify_theorem_ground_state_beta_large(p, out_dir=out), out


class TestTheoremBetaLarge:
    def test_passes(self, th1):
        rep, _ = th1
        assert rep.status == "pass", rep.failures()

    def test_semi_trivial_energy(self, th1):
        rep, _ = th1
        assert rep.values["phi_v2"] == pytest.approx(2 * math.pi, rel=1e-3)
        assert rep.values["phi_v2"] == pytest.approx(rep.values["phi_v2_cubic_form"], rel=1e-10)

    def test_gap_and_regression(self, th1):
        rep, _ = th1
        ref = REGRESSION["th1_two_eq"]
        assert rep.values["gap"] > 0
        assert rep.values["phi_ground"] == pytest.approx(ref["phi_ground"], rel=ref["rtol"])

    def test_artifacts_hashed(self, th1):
        rep, out = th1
        arts = rep.manifest.artifacts
        for name in ("u.fld", "v.fld", "V2.fld", "trace.csv", "u_slice.csv"):
            assert arts[name] == sha256_file(out / name)
        f, _ = load_field(out / "u.fld")
        assert f.min() > 0
        with open(out / "u_slice.csv") as fh:
            assert next(csv.reader(fh)) == ["x", "value"]
        d = json.loads((out / "report.json").read_text())
        assert d["status"] == "pass" and d["manifest"]["params"]["betas"] == [10.0]

    def test_replay_reproduces(self, th1):
        rep, _ = th1
        again = replay(json.loads(rep.to_json())["manifest"])
        assert again.status == rep.status
        assert compare_reports(rep, again, rtol=1e-9) == []

    def test_precondition(self):
        p = SystemParams.two_eq(0.5, 1.0, 1.0, 0.2)
        rep = verify_theorem_ground_state_beta_large(p)
        assert rep.status == "precondition-failed"
        assert not rep.passed

    def test_double_threshold(self):
        p = SystemParams.two_eq(0.5, 1.0, 1.0, 1.0)  # Lambda = 1/2 when lambda1 = lambda2
        rep = verify_theorem_ground_state_beta_large(p)
        assert rep.values["Lambda"] == pytest.approx(0.5, rel=1e-9)
        checks = {c["name"]: c["passed"] for c in rep.checks}
        assert checks["semi_trivial_is_saddle"] and checks["escapes_from_perturbation"]

    def test_semi_trivial_fixed_point(self):
        p = SystemParams.two_eq(0.5, 1.0, 1.0, 0.25)
        rep = verify_semi_trivial_fixed_point(p)
        assert rep.status == "pass" and rep.values["semi_trivial"]


@pytest.fixture(scope="module")
def th2():
    return verify_theorem_lambda2_large(SystemParams.two_eq(0.5, 1.0, 1.0, 0.3))


class TestTheoremLambda2:
    def test_rescaled_formula_against_closed_form(self):
        r = phi_u0_rescaled(EXACT_MOMENTS, 1.0, 1.0, 1.0, 1, 0.5)
        t = (-6 + math.sqrt(156)) / 20
        assert r["t"] == pytest.approx(t, rel=1e-14)
        assert r["phi_u0"] == pytest.approx(4 * math.pi * t**2 + 20 * math.pi / 3 * t**4, rel=1e-14)
        assert r["phi_v2"] == pytest.approx(2 * math.pi, rel=1e-14)

    @pytest.mark.parametrize("lam2", [0.3, 2.0, 7.0])
    def test_rescaled_formula_against_direct_projection(self, lam2):
        # independent route: project t (V2, V2) with V2 = 4 lam2 / (1 + lam2^2 x^2)
        from fracnehari.model import CoupledState, energy_phi
        from fracnehari.nehari import project_to_nehari
        from fracnehari.spectral import Field
        g = GridSpec(1, 2**15, 4000.0 / lam2)
        x = g.axis()
        v2 = Field(g, 4 * lam2 / (1 + (lam2 * x) ** 2))
        p = SystemParams.two_eq(0.5, 1.0, lam2, 0.4)
        t, u0 = project_to_nehari(p, CoupledState.of(v2, v2))
        r = phi_u0_rescaled(EXACT_MOMENTS, 1.0, lam2, 0.4, 1, 0.5)
        assert t == pytest.approx(r["t"], rel=1e-4)
        assert energy_phi(p, u0).phi == pytest.approx(r["phi_u0"], rel=1e-4)

    def test_passes(self, th2):
        assert th2.status == "pass", th2.failures()

    def test_flip_inside_bracket(self, th2):
        lo, hi = th2.values["W_at_bracket"]
        assert lo > 0 > hi
        assert 0.1 < th2.values["lambda2_empirical"] < 100

    def test_sweep_rows(self, th2):
        rows = th2.values["sweep"]
        for r in rows:
            assert r["difference_direct"] == pytest.approx(r["difference_rescaled"], rel=1e-6)
            assert r["below"] == (r["lambda2"] > th2.values["lambda2_empirical"])

    def test_ordering(self, th2):
        v = th2.values
        assert v["phi_ground"] <= v["phi_u0_solve"] < v["phi_v2_solve"]

    def test_bracket_exhausted(self):
        rep = verify_theorem_lambda2_large(SystemParams.two_eq(0.5, 1.0, 1.0, 0.3),
                                           lambda2_values=(2.0,), consistency_values=(),
                                           bracket=(2.0, 50.0))
        assert rep.status == "bracket-exhausted"


class TestNSystem:
    def test_three_components(self):
        p = SystemParams.star(0.5, 1.0, (1.0, 1.0), (10.0, 10.0))
        rep = verify_n_system(p)
        assert rep.status == "pass", rep.failures()
        ref = REGRESSION["star_three"]
        assert rep.values["phi_ground"] == pytest.approx(ref["phi_ground"], rel=ref["rtol"])
        assert min(rep.values["phi_semi_single"]) == pytest.approx(2 * math.pi, rel=1e-3)
        assert rep.values["positive_ground_state_found"]

    def test_decoupled_has_no_positive_ground_state(self):
        p = SystemParams.star(0.5, 1.0, (1.0, 1.0), (0.0, 0.0))
        rep = verify_n_system(p)
        assert rep.values["positive_ground_state_found"] is False
        assert rep.values["semi_trivial"] is True
        assert rep.status == "fail"

    def test_lambdas_large_mode(self):
        p = SystemParams.star(0.5, 1.0, (4.0, 4.0), (0.3, 0.3))
        rep = verify_n_system(p, mode="LambdasLarge")
        checks = {c["name"]: c["passed"] for c in rep.checks}
        assert checks["semi_trivial_sum"] and checks["test_state_below_semi_trivial"]

    def test_four_components_smoke(self):
        p = SystemParams.star(0.5, 1.0, (1.0, 1.5, 2.0), (10.0, 10.0, 10.0))
        rep = verify_n_system(p, grid=GridSpec(1, 2048, 100.0))
        assert rep.values["positive_ground_state_found"], rep.failures()

    def test_variant_checked(self):
        with pytest.raises(ValueError):
            verify_n_system(SystemParams.two_eq(0.5))


class TestExplore:
    @pytest.mark.parametrize("b12", [0.0, 3.0, -0.5])
    def test_decoupled_blocks_strict_min(self, b12):
        p = SystemParams.two_nlfs_fkdv(0.5, 1.0, 1.0, 1.0, b12, 0.0, 0.0)
        rep = explore_2nlfs_fkdv(p, grid=GridSpec(1, 1024, 100.0))
        assert rep.values["classification"] == "StrictMin"
        assert rep.values["existence_asserted"] is False
        assert rep.status == "exploratory"

    def test_large_coupling_saddle(self):
        p = SystemParams.two_nlfs_fkdv(0.5, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0)
        rep = explore_2nlfs_fkdv(p, grid=GridSpec(1, 1024, 100.0))
        assert rep.values["Lambda1"] < 1.0
        assert rep.values["classification"] == "Saddle"
        assert rep.values["existence_asserted"] is False


class TestSweepAndReports:
    def test_sweep_csv(self, tmp_path):
        p = SystemParams.two_eq(0.5, 1.0, 1.0, 0.0)
        g = GridSpec(1, 1024, 100.0)
        rows = sweep(p, "beta", [0.0, 2.0], g, SolveOptions(restarts=2), csv_path=tmp_path / "s.csv")
        assert rows[0]["semi_trivial"] and not rows[1]["semi_trivial"]
        assert rows[1]["gap"] > 0
        with open(tmp_path / "s.csv") as fh:
            data = list(csv.DictReader(fh))
        assert list(data[0])[:3] == ["beta", "Lambda", "phi_v2"]
        assert len(data) == 2

    def test_sweep_key_checked(self):
        with pytest.raises(ValueError):
            sweep(SystemParams.two_eq(0.5), "gamma", [1.0])

    def test_compare_reports(self):
        a, b = Report("x"), Report("x")
        a.values = {"p": 1.0, "q": [1.0, 2.0]}
        b.values = {"p": 1.0 + 1e-12, "q": [1.0, 2.5]}
        assert compare_reports(a, b, rtol=1e-9) == ["q.1"]

    def test_default_grid(self):
        assert default_grid(1) == GridSpec(1, 8192, 200.0)
        assert default_grid(2).points_per_dim == 256
