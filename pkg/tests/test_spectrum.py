import json
import math

import numpy as np
import pytest

from fracnehari.model import SystemParams, UnsupportedVariantError
from fracnehari.scalar_gs import quadratic_ground_state
from fracnehari.spectral import (Field, GridSpec, ParameterDomainError, integral_power, reflect,
                                 weighted_inner)
from fracnehari.spectrum import (IndeterminateClassificationError, Verdict, classify_semitrivial,
                                 dense_threshold, h1_block_min, h2_block_samples,
                                 lambda_threshold, random_even_fields)

COARSE = GridSpec(1, 256, 60.0)


@pytest.fixture(scope="module")
def v2_coarse():
    return quadratic_ground_state(0.5, 1.0, COARSE)


@pytest.fixture(scope="module")
def closed_weight():
    x = COARSE.axis()
    return Field(COARSE, 4 / (1 + x * x))


def rayleigh(phi, s, lam, w):
    return weighted_inner(phi, phi, s, lam) / float(COARSE.cell_volume * np.sum(w.values * phi.values**2))


class TestThreshold:
    @pytest.mark.parametrize("c", [0.5, 2.0])
    def test_constant_weight(self, c):
        r = lambda_threshold(0.5, 1.3, Field.constant(COARSE, c))
        assert r.Lambda == pytest.approx(1.3 / c, rel=1e-12)
        vals = r.minimizer.values
        assert np.allclose(vals, vals.mean(), rtol=1e-8)

    def test_dense_oracle(self, closed_weight):
        r = lambda_threshold(0.5, 1.0, closed_weight)
        mu, _ = dense_threshold(0.5, 1.0, closed_weight)
        assert r.Lambda == pytest.approx(mu, rel=1e-6)

    def test_dense_oracle_other_exponent(self, v2_coarse):
        r = lambda_threshold(0.7, 2.0, v2_coarse)
        mu, _ = dense_threshold(0.7, 2.0, v2_coarse)
        assert r.Lambda == pytest.approx(mu, rel=1e-6)

    def test_equal_frequencies_give_one_half(self, v2_coarse):
        # V2 itself is the ground eigenfunction: A V2 = V2^2 / 2
        assert lambda_threshold(0.5, 1.0, v2_coarse).Lambda == pytest.approx(0.5, rel=1e-9)

    def test_monotone_in_lambda1(self, closed_weight):
        a = lambda_threshold(0.5, 1.0, closed_weight).Lambda
        b = lambda_threshold(0.5, 2.0, closed_weight).Lambda
        assert b > a > 0

    def test_minimizer(self, closed_weight):
        r = lambda_threshold(0.5, 1.0, closed_weight)
        phi = r.minimizer
        assert phi.min() > 0
        assert np.abs(phi.values - reflect(phi.values)).max() < 1e-10 * phi.max()
        assert integral_power(phi, 2) == pytest.approx(1.0, rel=1e-12)
        assert rayleigh(phi, 0.5, 1.0, closed_weight) == pytest.approx(r.Lambda, rel=1e-10)

    def test_minimizer_beats_random_fields(self, closed_weight):
        r = lambda_threshold(0.5, 1.0, closed_weight)
        for h in random_even_fields(COARSE, 20, seed=3):
            assert rayleigh(Field(COARSE, h), 0.5, 1.0, closed_weight) >= r.Lambda * (1 - 1e-12)

    def test_rejects_bad_weight(self):
        w = np.ones(COARSE.shape)
        w[3] = 0.0
        with pytest.raises(ParameterDomainError):
            lambda_threshold(0.5, 1.0, Field(COARSE, w))

    def test_report(self, closed_weight):
        r = lambda_threshold(0.5, 1.0, closed_weight, lambda2=1.0)
        d = json.loads(r.to_json())
        assert set(d) == {"s", "n", "lambda1", "lambda2", "Lambda", "iterations", "residual"}
        lam, phi = r
        assert lam == r.Lambda and phi is r.minimizer

    def test_dense_cap(self):
        with pytest.raises(ValueError):
            dense_threshold(0.5, 1.0, Field.constant(GridSpec(1, 1024, 10.0), 1.0))


class TestBlocks:
    def test_h1_block_shift(self, v2_coarse):
        r = lambda_threshold(0.5, 1.0, v2_coarse)
        beta = 0.8
        probes = [Field(COARSE, h) for h in random_even_fields(COARSE, 30, seed=1)]
        probes.append(r.minimizer)

        def q(h):
            den = float(COARSE.cell_volume * np.sum(v2_coarse.values * h.values**2))
            return (weighted_inner(h, h, 0.5, 1.0) - beta * den) / den

        best = min(q(h) for h in probes)
        assert best == pytest.approx(h1_block_min(r.Lambda, beta), rel=1e-4)

    def test_h2_block_positive(self, v2_coarse):
        ratios = h2_block_samples(v2_coarse, 0.5, 1.0, count=60)
        assert len(ratios) == 60
        assert ratios.min() > 0


class TestClassify:
    P = SystemParams.two_eq(0.5, 1.0, 1.0, 0.0)

    def test_decoupled_is_strict_min(self, v2_coarse):
        c = classify_semitrivial(self.P, 0.0, grid=COARSE, v2=v2_coarse)
        assert c.verdict is Verdict.STRICT_MIN
        assert c.h2_min_ratio > 0

    def test_double_threshold_is_saddle(self, v2_coarse):
        thr = lambda_threshold(0.5, 1.0, v2_coarse)
        c = classify_semitrivial(self.P, 2 * thr.Lambda, grid=COARSE, v2=v2_coarse, threshold=thr)
        assert c.verdict is Verdict.SADDLE and c.min_eig < 0
        w = c.witness[0].values
        m = thr.minimizer.values
        cos = abs(np.dot(w, m)) / (np.linalg.norm(w) * np.linalg.norm(m))
        assert cos == pytest.approx(1.0, abs=1e-12)
        assert not np.any(c.witness[1].values)

    def test_sign_flip_location(self, v2_coarse):
        thr = lambda_threshold(0.5, 1.0, v2_coarse)
        betas = np.linspace(0.5, 1.5, 41) * thr.Lambda
        signs = []
        for b in betas:
            try:
                signs.append(classify_semitrivial(self.P, b, grid=COARSE, v2=v2_coarse,
                                                  threshold=thr).verdict)
            except IndeterminateClassificationError:
                signs.append(None)
        flips = [0.5 * (betas[i] + betas[i + 1]) for i in range(len(betas) - 1)
                 if signs[i] is Verdict.STRICT_MIN and signs[i + 1] is not Verdict.STRICT_MIN]
        assert len(flips) == 1
        assert abs(flips[0] - thr.Lambda) <= 0.02 * thr.Lambda

    def test_indeterminate(self, v2_coarse):
        thr = lambda_threshold(0.5, 1.0, v2_coarse)
        with pytest.raises(IndeterminateClassificationError) as exc:
            classify_semitrivial(self.P, thr.Lambda, grid=COARSE, v2=v2_coarse, threshold=thr)
        assert exc.value.h1_value is not None

    def test_other_variants_rejected(self):
        p = SystemParams.star(0.5, 1.0, (1.0, 1.0), (1.0, 1.0))
        with pytest.raises(UnsupportedVariantError):
            classify_semitrivial(p, grid=COARSE)
