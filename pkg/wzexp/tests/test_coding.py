import math
import unittest

import numpy as np

from wzexp.shared import WzGuardError, WzValidationError
from wzexp.prob import SourceModel
from wzexp.simplex import OptimizerConfig
from wzexp.exponent import ExponentResult, TiltParams
from wzexp.coding.search import Z_95
from wzexp.coding import (
    BlockSpace,
    CodeSearch,
    CodingScheme,
    SpectrumChoices,
    canonical_encoders,
    codebook_size,
    encoder_count,
    g_n_exhaustive,
    g_n_random_binning,
    markov_lemma_check,
    optimal_decoder_for,
    pc_exact,
    recursion_check,
    spectrum_bound_check,
    spectrum_lemma_check,
    subadditivity_check,
    trial_rng,
    verify_theorem,
)

LN_4_3 = math.log(4.0 / 3.0)


class TestBlocks(unittest.TestCase):
    @staticmethod
    def src():
        return SourceModel.dsbs(0.25)

    def test_codebook_size(self):
        self.assertEqual(codebook_size(3, 0.34), 2)
        self.assertEqual(codebook_size(2, math.log(2.0)), 4)
        self.assertEqual(codebook_size(5, 0.0), 1)
        with self.assertRaises(WzValidationError):
            codebook_size(1, -0.1)

    def test_block_space(self):
        src = self.src()
        one = BlockSpace(src, 1)
        np.testing.assert_allclose(one.pxy, src.pxy)
        np.testing.assert_allclose(one.dist, src.dist)
        two = BlockSpace(src, 2)
        self.assertEqual(two.xs.tolist(), [[0, 0], [0, 1], [1, 0], [1, 1]])
        self.assertAlmostEqual(float(two.pxy.sum()), 1.0)
        self.assertEqual(two.dist[0, 3], 2.0)
        self.assertEqual(two.correct(0.4)[0].tolist(), [1.0, 0.0, 0.0, 0.0])
        with self.assertRaises(WzValidationError):
            BlockSpace(src, 0)
        with self.assertRaises(WzGuardError):
            BlockSpace(src, 24)

    def test_encoders(self):
        self.assertEqual(encoder_count(4, 2), 8)
        self.assertEqual(encoder_count(8, 2), 128)
        self.assertEqual(encoder_count(3, 3), 5)
        found = [tuple(e) for e in canonical_encoders(4, 2)]
        self.assertEqual(len(found), 8)
        self.assertEqual(len(set(found)), 8)
        self.assertEqual(found[0], (0, 0, 0, 0))
        self.assertTrue(all(e[0] == 0 for e in found))
        self.assertEqual(len(list(canonical_encoders(3, 3))), 5)
        self.assertEqual(list(map(tuple, canonical_encoders(3, 1))), [(0, 0, 0)])


class TestSimulation(unittest.TestCase):
    @staticmethod
    def src():
        return SourceModel.dsbs(0.25)

    def test_pc_exact(self):
        src = self.src()
        scheme = CodingScheme(1, 1, [0, 0], [[0, 1]])
        report = pc_exact(scheme, src, 0.5)
        self.assertAlmostEqual(report.p_c, 0.75, places=12)
        self.assertAlmostEqual(report.p_e, 0.25, places=12)
        self.assertAlmostEqual(report.g_n, LN_4_3, places=12)
        report.compare(0.1)
        self.assertAlmostEqual(report.margin, 5 * math.exp(-0.1) + 1e-9 - 0.75)

    def test_pc_exact_zero_delta(self):
        src = self.src()
        scheme = CodingScheme(1, 2, [0, 1], [[0, 0], [1, 1]])
        exact = pc_exact(scheme, src, 0.0)
        self.assertEqual(exact.p_c, 0.0)
        self.assertAlmostEqual(exact.p_e, 1.0, places=12)
        self.assertEqual(exact.g_n, math.inf)
        lossless = pc_exact(scheme, src, 0.5)
        self.assertAlmostEqual(lossless.p_c, 1.0, places=12)
        self.assertAlmostEqual(lossless.g_n, 0.0, places=12)

    def test_optimal_decoder_beats_stochastic(self):
        src = self.src()
        space = BlockSpace(src, 2)
        for Delta in (0.3, 0.75):
            rng = trial_rng(6, int(Delta * 100))
            encoder = rng.integers(0, 2, size=space.x_count)
            decoder = optimal_decoder_for(encoder, src, 2, 2, Delta, space=space)
            best = pc_exact(CodingScheme(2, 2, encoder, decoder), src, Delta, space=space).p_c
            correct = space.correct(Delta)
            for _ in range(100):
                w = rng.dirichlet(np.ones(space.z_count), size=(2, space.y_count))
                p_c = float(np.einsum("xy,xyz,xz->", space.pxy, w[encoder], correct))
                self.assertLessEqual(p_c, best + 1e-12)

    def test_confidence_quantile(self):
        self.assertAlmostEqual(Z_95, 1.959964, places=6)

    def test_scheme_validation(self):
        src = self.src()
        with self.assertRaises(WzValidationError):
            CodingScheme(1, 1, [0, 1], [[0, 1]])
        with self.assertRaises(WzValidationError):
            CodingScheme(1, 2, [0, 1], [[0, 1]])
        with self.assertRaises(WzValidationError):
            pc_exact(CodingScheme(1, 1, [0, 0, 0], [[0, 1]]), src, 0.5)
        with self.assertRaises(WzValidationError):
            pc_exact(CodingScheme(1, 1, [0, 0], [[0, 2]]), src, 0.5)

    def test_optimal_decoder(self):
        src = self.src()
        decoder = optimal_decoder_for([0, 0], src, 1, 1, 0.5)
        self.assertEqual(decoder.tolist(), [[0, 1]])
        decoder = optimal_decoder_for([0, 1], src, 1, 2, 0.5)
        self.assertEqual(decoder.tolist(), [[0, 0], [1, 1]])
        uniform = SourceModel([[0.25, 0.25], [0.25, 0.25]], SourceModel.hamming(2))
        self.assertEqual(optimal_decoder_for([0, 0], uniform, 1, 1, 0.5).tolist(), [[0, 0]])

    def test_exhaustive(self):
        src = self.src()
        r = g_n_exhaustive(src, 1, 0.0, 0.5)
        self.assertAlmostEqual(r.p_c, 0.75, places=12)
        self.assertAlmostEqual(r.g_n, LN_4_3, places=9)
        self.assertEqual(r.encoders_checked, 1)
        lossless = g_n_exhaustive(src, 1, math.log(2.0), 0.5)
        self.assertAlmostEqual(lossless.p_c, 1.0, places=12)
        self.assertEqual(lossless.scheme.m, 2)
        three = g_n_exhaustive(src, 3, 0.34, 0.05)
        self.assertEqual(three.encoders_checked, 128)
        self.assertGreater(three.p_c, 0.0)

    def test_exhaustive_guard(self):
        with self.assertRaises(WzGuardError):
            g_n_exhaustive(self.src(), 6, 0.5, 0.3)

    def test_random_binning_exact(self):
        src = self.src()
        one = g_n_random_binning(src, 2, 0.5, 0.3, trials=4, seed=5)
        two = g_n_random_binning(src, 2, 0.5, 0.3, trials=4, seed=5)
        self.assertTrue(one.exact)
        self.assertEqual(one.g_n, two.g_n)
        self.assertEqual(one.half_width, 0.0)
        best = g_n_exhaustive(src, 2, 0.5, 0.3)
        self.assertGreaterEqual(one.g_n, best.g_n - 1e-12)
        with self.assertRaises(WzValidationError):
            g_n_random_binning(src, 2, 0.5, 0.3, trials=0, seed=5)

    def test_random_binning_monte_carlo(self):
        src = self.src()
        r = g_n_random_binning(src, 12, 0.34, 0.5, trials=1, seed=2, samples=400)
        self.assertFalse(r.exact)
        self.assertGreater(r.p_c, 0.0)
        self.assertLessEqual(r.p_c, 1.0)
        self.assertTrue(math.isfinite(r.half_width))
        again = g_n_random_binning(src, 12, 0.34, 0.5, trials=1, seed=2, samples=400)
        self.assertEqual(r.p_c, again.p_c)

    def test_trial_rng(self):
        a = trial_rng(3, 0).integers(0, 1000, size=5)
        b = trial_rng(3, 0).integers(0, 1000, size=5)
        c = trial_rng(3, 1).integers(0, 1000, size=5)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))

    def test_theorem(self):
        src = self.src()
        f_hat = ExponentResult(0.2, TiltParams(0.5, 0.5, 1.0), 0.0, {})
        rows = verify_theorem(src, [1, 2, 3], 0.0, 0.1, f_hat)
        self.assertEqual([r.n for r in rows], [1, 2, 3])
        for r in rows:
            self.assertTrue(r.passed)
            self.assertAlmostEqual(r.margin, r.bound + 1e-9 - r.p_c)
            self.assertGreaterEqual(r.g_n, 0.2 - math.log(5.0) / r.n)

    def test_subadditivity(self):
        rows = subadditivity_check(self.src(), 0.2, 0.3, [(1, 1), (1, 2), (2, 1)])
        for r in rows:
            self.assertTrue(r.passed)

    def test_search_caches_spaces(self):
        search = CodeSearch(self.src())
        self.assertIs(search.space(2), search.space(2))


class TestLemmas(unittest.TestCase):
    @staticmethod
    def src():
        return SourceModel.dsbs(0.25)

    def test_spectrum_induced(self):
        src = self.src()
        encoder = [0, 1, 1, 0]
        for eta in (0.05, 0.2):
            r = spectrum_lemma_check(src, encoder, 2, eta)
            self.assertTrue(r.all_hold)
            self.assertEqual(len(r.probabilities), 4)
            self.assertAlmostEqual(r.bound, math.exp(-2 * eta))

    def test_spectrum_random(self):
        src = self.src()
        space = BlockSpace(src, 2)
        for trial in range(20):
            rng = trial_rng(11, trial)
            encoder = rng.integers(0, 2, size=4)
            m = int(encoder.max()) + 1
            choices = SpectrumChoices.random(rng, m, space)
            for eta in (0.05, 0.2):
                r = spectrum_lemma_check(src, encoder, 2, eta, q_choices=choices)
                self.assertTrue(r.all_hold, r.serialize())

    def test_spectrum_concentrated(self):
        src = self.src()
        space = BlockSpace(src, 2)
        choices = SpectrumChoices(
            [1.0, 0.0, 0.0, 0.0],
            np.full((2, 4, 4), 0.25),
            np.full((2, 4, 4, 4), 0.25),
            np.full((2, 4, 4), 0.25),
            2,
            space,
        )
        r = spectrum_lemma_check(src, [0, 1, 1, 0], 2, 0.05, q_choices=choices)
        self.assertAlmostEqual(r.probabilities[0], 0.25, places=12)
        self.assertTrue(r.all_hold, r.serialize())

    def test_spectrum_bound(self):
        src = self.src()
        scheme = self.scheme(src, 2)
        p_c = pc_exact(scheme, src, 0.5).p_c
        for eta in (0.05, 0.2):
            r = spectrum_bound_check(src, scheme, 0.5, eta)
            self.assertTrue(r.holds, r)
            self.assertAlmostEqual(r.p_c, p_c, places=12)
            self.assertLessEqual(r.event, r.p_c + 1e-15)
            self.assertAlmostEqual(r.bound, r.event + 4 * math.exp(-2 * eta), places=12)
        loose = spectrum_bound_check(src, scheme, 0.5, 20.0)
        self.assertAlmostEqual(loose.event, loose.p_c, places=12)

    def test_spectrum_bound_random(self):
        src = self.src()
        space = BlockSpace(src, 2)
        for trial in range(10):
            rng = trial_rng(12, trial)
            encoder = rng.integers(0, 2, size=4)
            Delta = float(rng.uniform(0.0, 1.0))
            scheme = CodingScheme(2, 2, encoder, optimal_decoder_for(encoder, src, 2, 2, Delta))
            choices = SpectrumChoices.random(rng, 2, space)
            for eta in (0.05, 0.2):
                r = spectrum_bound_check(src, scheme, Delta, eta, q_choices=choices)
                self.assertTrue(r.holds, r.serialize())

    def test_spectrum_validation(self):
        space = BlockSpace(self.src(), 1)
        with self.assertRaises(WzValidationError):
            SpectrumChoices(
                [0.6, 0.6],
                np.full((1, 2, 2), 0.5),
                np.full((1, 2, 2, 2), 0.5),
                np.full((1, 2, 2), 0.5),
                1,
                space,
            )

    def test_markov(self):
        src = self.src()
        for n in (2, 3):
            for trial in range(10):
                encoder = trial_rng(4, trial).integers(0, 2, size=2 ** n)
                self.assertLessEqual(markov_lemma_check(src, encoder, n), 1e-12)

    @staticmethod
    def scheme(src, n):
        encoder = np.arange(2 ** n) % 2
        return CodingScheme(n, 2, encoder, optimal_decoder_for(encoder, src, n, 2, 0.5))

    def test_recursion(self):
        src = self.src()
        cfg = OptimizerConfig(starts=1, max_iters=50)
        for n in (1, 2):
            r = recursion_check(src, self.scheme(src, n), None, 0.5, 0.5, 0.5, cfg=cfg)
            self.assertLessEqual(r.lambda_product_residual, 1e-10)
            self.assertGreaterEqual(r.prop2_margin, -1e-6)
            self.assertEqual(len(r.lambdas), n)
            self.assertEqual(len(r.holder_margins), n)
            self.assertAlmostEqual(math.exp(-r.omega_n), float(np.prod(r.lambdas)), places=10)

    def test_recursion_validation(self):
        src = self.src()
        with self.assertRaises(WzValidationError):
            recursion_check(src, self.scheme(src, 2), [], 0.5, 0.5, 0.5)
        with self.assertRaises(WzValidationError):
            recursion_check(src, self.scheme(src, 1), None, 0.5, 0.5, 3.0)


if __name__ == "__main__":
    unittest.main()
