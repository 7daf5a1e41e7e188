from __future__ import annotations

import math

import numpy as np
import pytest

from measengine.calibration import (
    FIXTURE_CHI,
    FIXTURE_KAPPA,
    STARK_PHOTON_NUMBERS,
    REFLECTION_FIXTURE,
    STARK_FIXTURE,
    DispersiveConfig,
    epsilon_for_photon_number,
    fit_reflection,
    fit_stark,
    load_reflection_csv,
    load_stark_csv,
    pointer_states,
    reflection_detunings,
    reflection_model,
    stark_and_dephasing,
    stark_detunings,
    synthetic_reflection,
    synthetic_stark,
    write_reflection_csv,
)
from measengine.errors import DataFormatError, InvalidArgument

TWO_PI = 2 * math.pi
GC = TWO_PI * 383.0
G1 = 1 / 25.4e-6
G2 = 1 / 32e-6


class TestReflectionModel:
    def test_resonant_weak_drive(self):
        r = reflection_model(0.0, GC, G1, G2, 0.0, 1.0)
        assert r == pytest.approx(1 - GC / G2, rel=1e-15)
        assert r.real == pytest.approx(0.923, abs=5e-4)

    def test_far_detuned(self):
        assert abs(reflection_model(1e12, GC, G1, G2, 1e4) - 1) < 1e-8

    def test_hermitian_symmetry_and_bound(self):
        d = np.linspace(-10 * G2, 10 * G2, 201)
        for om in (0.0, 1e4, 1e5):
            r = reflection_model(d, GC, G1, G2, om)
            np.testing.assert_allclose(r[::-1], np.conj(r), atol=1e-15)
            assert np.all(np.abs(r) <= 1 + GC / G2)

    def test_validation(self):
        with pytest.raises(InvalidArgument):
            reflection_model(0.0, GC, 0.0, G2, 0.0)
        with pytest.raises(InvalidArgument):
            reflection_model(0.0, GC, G1, G2, 0.0, p_pol=1.5)

    def test_purcell_limit(self):
        assert 1 / GC == pytest.approx(416e-6, rel=0.01)


class TestReflectionFit:
    def test_noiseless_round_trip(self):
        pts = synthetic_reflection(reflection_detunings(n=201), GC, G1, G2, TWO_PI * 3e3)
        fit = fit_reflection(pts, G1, G2)
        assert fit.converged
        assert fit.params["gamma_c"] == pytest.approx(GC, rel=1e-6)
        assert abs(fit.params["omega"]) == pytest.approx(TWO_PI * 3e3, rel=1e-6)

    def test_random_ground_truths(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            gc = TWO_PI * rng.uniform(50, 1500)
            om = TWO_PI * 10 ** rng.uniform(2.5, 4.5)
            fit = fit_reflection(synthetic_reflection(reflection_detunings(n=101), gc, G1, G2, om), G1, G2)
            assert fit.converged and fit.params["gamma_c"] == pytest.approx(gc, rel=1e-6)

    def test_uncertainty_is_reported(self):
        pts = synthetic_reflection(reflection_detunings(n=401), GC, G1, G2, TWO_PI * 1e3, noise=0.01, rng=np.random.default_rng(1))
        fit = fit_reflection(pts, G1, G2)
        assert 0 < fit.sigma["gamma_c"] < 0.1 * GC
        assert fit.correlation.shape == (2, 2) and math.isfinite(fit.condition_number)

    def test_too_few_points(self):
        with pytest.raises(InvalidArgument):
            fit_reflection(synthetic_reflection(np.linspace(-1, 1, 5), GC, G1, G2, 1.0), G1, G2)


class TestDispersive:
    def test_no_dispersive_shift(self):
        a, b = pointer_states(DispersiveConfig(0.0, 1e7, 1e6, 3e6))
        assert a == b

    def test_conjugate_pair_at_zero_detuning(self):
        a, b = pointer_states(DispersiveConfig(FIXTURE_CHI, FIXTURE_KAPPA, 1e6, 0.0))
        assert a == pytest.approx(b.conjugate(), rel=1e-15)

    def test_photon_number(self):
        eps = epsilon_for_photon_number(3e-3, FIXTURE_CHI, FIXTURE_KAPPA)
        a, b = pointer_states(DispersiveConfig(FIXTURE_CHI, FIXTURE_KAPPA, eps, 0.0))
        assert abs(a) ** 2 == pytest.approx(3e-3, rel=1e-12) and abs(b) ** 2 == pytest.approx(3e-3, rel=1e-12)

    def test_no_drive(self):
        assert stark_and_dephasing(DispersiveConfig(FIXTURE_CHI, FIXTURE_KAPPA, 0.0, 1e6)) == (0.0, 0.0)

    @pytest.mark.parametrize("chi, kappa", [(3.3e6, 9e6), (9e6, 3.3e6)])
    def test_zero_detuning_signs(self, chi, kappa):
        c = DispersiveConfig(TWO_PI * chi, TWO_PI * kappa, 1e6, 0.0)
        w, g = stark_and_dephasing(c)
        # alpha_-^* alpha_+ = eps^2 / ((kappa^2 - chi^2)/4 - i kappa chi / 2)
        expected = c.chi * c.epsilon**2 / complex((c.kappa**2 - c.chi**2) / 4, -c.kappa * c.chi / 2)
        assert (w, g) == pytest.approx((expected.real, expected.imag), rel=1e-12)
        assert g > 0 and math.copysign(1, w) == math.copysign(1, kappa - chi)

    def test_dephasing_is_non_negative(self):
        for dw in np.linspace(-50e6, 50e6, 401):
            _, g = stark_and_dephasing(DispersiveConfig(FIXTURE_CHI, FIXTURE_KAPPA, 3e6, TWO_PI * dw))
            assert g >= 0

    def test_engine_calibration_point(self):
        dw = TWO_PI * -10e6
        unit = stark_and_dephasing(DispersiveConfig(FIXTURE_CHI, FIXTURE_KAPPA, 1.0, dw))[0]
        eps = math.sqrt(TWO_PI * 1e6 / unit)
        w, g = stark_and_dephasing(DispersiveConfig(FIXTURE_CHI, FIXTURE_KAPPA, eps, dw))
        assert w / TWO_PI == pytest.approx(1e6, rel=1e-12)
        # the closed form gives 0.126 MHz for the quoted 0.14 MHz
        assert g / TWO_PI == pytest.approx(0.14e6, rel=0.15)


class TestStarkFit:
    @pytest.fixture
    def eps(self):
        return [epsilon_for_photon_number(n, FIXTURE_CHI, FIXTURE_KAPPA) for n in STARK_PHOTON_NUMBERS]

    def test_noiseless_round_trip(self, eps):
        fit = fit_stark(synthetic_stark(stark_detunings(), FIXTURE_CHI, FIXTURE_KAPPA, eps))
        assert fit.converged
        assert fit.params["chi"] == pytest.approx(FIXTURE_CHI, rel=1e-6)
        assert fit.params["kappa"] == pytest.approx(FIXTURE_KAPPA, rel=1e-6)
        for g, e in enumerate(eps):
            assert fit.params[f"epsilon_sq_{g}"] == pytest.approx(e**2, rel=1e-6)

    def test_random_ground_truths(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            chi, kappa = TWO_PI * rng.uniform(1e6, 8e6), TWO_PI * rng.uniform(3e6, 15e6)
            eps = [epsilon_for_photon_number(n, chi, kappa) for n in (0.01, 0.05)]
            fit = fit_stark(synthetic_stark(stark_detunings(), chi, kappa, eps))
            assert fit.params["chi"] == pytest.approx(chi, rel=1e-6)
            assert fit.params["kappa"] == pytest.approx(kappa, rel=1e-6)

    def test_single_group_degeneracy_is_reported(self, eps):
        one = fit_stark(synthetic_stark(stark_detunings(), FIXTURE_CHI, FIXTURE_KAPPA, eps[:1], 0.01, np.random.default_rng(2)))
        many = fit_stark(synthetic_stark(stark_detunings(), FIXTURE_CHI, FIXTURE_KAPPA, eps, 0.01, np.random.default_rng(2)))
        assert abs(one.correlation[0, 2]) > 0.9
        assert one.sigma["chi"] / one.params["chi"] > many.sigma["chi"] / many.params["chi"]


class TestFiles:
    def test_bundled_fixtures(self):
        refl = fit_reflection(load_reflection_csv(REFLECTION_FIXTURE), G1, G2)
        assert refl.params["gamma_c"] / TWO_PI == pytest.approx(383.0, rel=0.01)
        stark = fit_stark(load_stark_csv(STARK_FIXTURE))
        assert stark.params["chi"] / TWO_PI == pytest.approx(3.3e6, rel=0.01)
        assert stark.params["kappa"] / TWO_PI == pytest.approx(9e6, rel=0.01)

    def test_csv_round_trip(self, tmp_path):
        pts = synthetic_reflection(np.linspace(-1e5, 1e5, 9), GC, G1, G2, 1e4)
        write_reflection_csv(tmp_path / "r.csv", pts)
        back = load_reflection_csv(tmp_path / "r.csv")
        assert [p.r for p in back] == pytest.approx([p.r for p in pts], rel=1e-8)

    def test_empty_file(self, tmp_path):
        (tmp_path / "e.csv").write_text("")
        with pytest.raises(DataFormatError, match="empty"):
            load_reflection_csv(tmp_path / "e.csv")

    def test_malformed_row_reports_line(self, tmp_path):
        (tmp_path / "m.csv").write_text("detuning_hz,re_r,im_r\n1,0.9,0.0\n2,abc,0.1\n")
        with pytest.raises(DataFormatError, match=r"m\.csv:3"):
            load_reflection_csv(tmp_path / "m.csv")

    def test_missing_column(self, tmp_path):
        (tmp_path / "s.csv").write_text("detuning_hz,gamma_ac_hz,omega_ac_hz\n1,2,3\n")
        with pytest.raises(DataFormatError, match="group_id"):
            load_stark_csv(tmp_path / "s.csv")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_stark_csv(tmp_path / "nope.csv")
