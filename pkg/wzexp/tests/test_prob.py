import json
import math
import os
import tempfile
import unittest

import numpy as np
from scipy.stats import entropy

from wzexp.shared import WzValidationError
from wzexp.prob import (
    JointQ,
    Marginals,
    SourceModel,
    SupportMap,
    conditionals,
    d_qx_px,
    i_x_u_given_y,
    info_measures,
    kl_divergence,
    load_source,
    total_variation,
)

BUNDLED = os.path.join(os.path.dirname(__file__), "..", "..", "sources", "dsbs025.json")
H_025 = -(0.25 * math.log(0.25) + 0.75 * math.log(0.75))


class TestSource(unittest.TestCase):
    @staticmethod
    def dsbs():
        return SourceModel.dsbs(0.25)

    def test_derived(self):
        src = self.dsbs()
        self.assertEqual((src.x_size, src.y_size, src.z_size), (2, 2, 2))
        self.assertEqual(src.d_max, 1.0)
        np.testing.assert_allclose(src.px, [0.5, 0.5])
        np.testing.assert_allclose(src.py_x, [[0.75, 0.25], [0.25, 0.75]])
        np.testing.assert_allclose(src.px_y, [[0.75, 0.25], [0.25, 0.75]])

    def test_zero_mass_rows(self):
        src = SourceModel([[0.5, 0.5], [0.0, 0.0]], SourceModel.hamming(2))
        np.testing.assert_array_equal(src.py_x[1], [0.0, 0.0])
        np.testing.assert_allclose(src.px_y[0], [1.0, 1.0])

    def test_invalid(self):
        tests = (
            ([[0.5, 0.6], [-0.1, 0.0]], SourceModel.hamming(2)),
            ([[0.5, 0.5], [0.5, 0.5]], SourceModel.hamming(2)),
            ([[0.25, 0.25], [0.25, 0.25]], [[0.0, math.inf], [1.0, 0.0]]),
            ([[0.25, 0.25], [0.25, 0.25]], [[0.0, 1.0]]),
            ([[0.25, 0.25], [0.25, "x"]], SourceModel.hamming(2)),
        )
        for pxy, dist in tests:
            with self.assertRaises(WzValidationError):
                SourceModel(pxy, dist)

    def test_deserialize(self):
        obj = self.dsbs().serialize()
        self.assertEqual(SourceModel.deserialize(obj).fingerprint(), self.dsbs().fingerprint())
        missing = dict(obj)
        del missing["dist"]
        with self.assertRaises(WzValidationError):
            SourceModel.deserialize(missing)
        wrong = dict(obj, z_size=3)
        with self.assertRaises(WzValidationError):
            SourceModel.deserialize(wrong)

    def test_bundled(self):
        src = load_source(BUNDLED)
        self.assertEqual(src.fingerprint(), self.dsbs().fingerprint())

    def test_load_errors(self):
        with tempfile.TemporaryDirectory() as d:
            with self.assertRaises(WzValidationError):
                load_source(os.path.join(d, "missing.json"))
            path = os.path.join(d, "bad.json")
            with open(path, "w") as f:
                f.write("{not json")
            with self.assertRaises(WzValidationError):
                load_source(path)
            with open(path, "w") as f:
                json.dump([1, 2], f)
            with self.assertRaises(WzValidationError):
                load_source(path)


class TestJoint(unittest.TestCase):
    @staticmethod
    def src():
        return SourceModel.dsbs(0.25)

    @staticmethod
    def constant_u(src):
        """p_XY with a constant auxiliary and Z = X."""
        q = np.zeros((1, 2, 2, 2))
        for x in range(2):
            q[0, x, :, x] = src.pxy[x]
        return JointQ(q, src)

    @staticmethod
    def u_equals_x(src):
        q = np.zeros((2, 2, 2, 2))
        for x in range(2):
            q[x, x, :, x] = src.pxy[x]
        return JointQ(q, src)

    def test_validation(self):
        src = self.src()
        with self.assertRaises(WzValidationError):
            JointQ(np.full((1, 2, 2, 2), 0.2))
        bad = np.full((1, 2, 2, 2), 1.0 / 8)
        bad[0, 0, 0, 0] = -1.0 / 8
        bad[0, 0, 0, 1] = 3.0 / 8
        with self.assertRaises(WzValidationError):
            JointQ(bad)
        with self.assertRaises(WzValidationError):
            JointQ(np.full((1, 2, 2, 3), 1.0 / 12), src)
        with self.assertRaises(WzValidationError):
            JointQ(np.full((9, 2, 2, 2), 1.0 / 72), src, bounded=True)
        narrow = SourceModel([[0.5, 0.0], [0.0, 0.5]], SourceModel.hamming(2))
        with self.assertRaises(WzValidationError):
            JointQ(np.full((1, 2, 2, 2), 1.0 / 8), narrow, support=True)

    def test_conditionals_uniform(self):
        c = conditionals(np.full((2, 2, 2, 2), 1.0 / 16))
        for table in (c.qx_uy, c.qy_xu, c.qx_uyz):
            np.testing.assert_allclose(table, 0.5)
        np.testing.assert_allclose(c.qx, [0.5, 0.5])
        self.assertTrue(np.all(c.uy_defined))

    def test_conditionals_normalized(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            c = conditionals(rng.dirichlet(np.ones(16)).reshape(2, 2, 2, 2))
            self.assertAlmostEqual(float(c.qx.sum()), 1.0, delta=1e-12)
            np.testing.assert_allclose(c.qx_uy.sum(axis=1), 1.0, atol=1e-12)
            np.testing.assert_allclose(c.qy_xu.sum(axis=2), 1.0, atol=1e-12)
            np.testing.assert_allclose(c.qx_uyz.sum(axis=1), 1.0, atol=1e-12)

    def test_conditionals_decoded_z(self):
        rng = np.random.default_rng(20)
        decoder = [[0, 1], [1, 1]]
        q = JointQ.with_decoder(rng.dirichlet(np.ones(8)).reshape(2, 2, 2), decoder, 2)
        c = conditionals(q)
        for u in range(2):
            for y in range(2):
                z = decoder[u][y]
                np.testing.assert_allclose(c.qx_uyz[u, :, y, z], c.qx_uy[u, :, y], atol=1e-12)
                self.assertFalse(c.uyz_defined[u, y, 1 - z])

    def test_undefined_rows(self):
        q = np.zeros((2, 2, 2, 2))
        q[0] = 1.0 / 8
        c = conditionals(q)
        self.assertFalse(np.any(c.uy_defined[1]))
        np.testing.assert_array_equal(c.qx_uy[1], 0.0)

    def test_info_constant_u(self):
        src = self.src()
        info = info_measures(self.constant_u(src), src)
        self.assertAlmostEqual(info.i_x_u_given_y, 0.0, places=12)
        self.assertAlmostEqual(info.i_x_z_given_uy, H_025, places=12)
        self.assertAlmostEqual(info.d_qx_px, 0.0, places=12)
        self.assertAlmostEqual(info.d_qyxu_pyx, 0.0, places=12)
        self.assertAlmostEqual(info.d_qxuy_pxy, 0.0, places=12)
        self.assertAlmostEqual(info.exp_dist, 0.0, places=12)
        self.assertAlmostEqual(info.tv, 0.0, places=12)

    def test_info_u_equals_x(self):
        src = self.src()
        info = info_measures(self.u_equals_x(src), src)
        self.assertAlmostEqual(info.i_x_u_given_y, H_025, places=12)
        self.assertAlmostEqual(info.i_x_z_given_uy, 0.0, places=12)

    @staticmethod
    def entropy_of(q, summed=()):
        """H of the marginal of q(u,x,y,z) left after summing `summed` out."""
        return float(entropy(q.sum(axis=summed).ravel()) if summed else entropy(q.ravel()))

    def test_entropy_oracle(self):
        rng = np.random.default_rng(21)
        h = self.entropy_of
        for _ in range(100):
            pxy = rng.dirichlet(np.ones(4)).reshape(2, 2)
            src = SourceModel(pxy, SourceModel.hamming(2))
            q = rng.dirichlet(np.ones(16)).reshape(2, 2, 2, 2)
            info = info_measures(JointQ(q), src)
            qxy = q.sum(axis=(0, 3))
            h_y = h(q, (0, 1, 3))
            h_xy, h_uy, h_ux = h(q, (0, 3)), h(q, (1, 3)), h(q, (2, 3))
            h_uxy, h_uyz, h_all = h(q, (3,)), h(q, (1,)), h(q)
            expected = {
                "i_x_u_given_y": h_xy + h_uy - h_uxy - h_y,
                "i_x_z_given_uy": h_uxy + h_uyz - h_all - h_uy,
                "d_qx_px": -h(q, (0, 2, 3)) - float(qxy.sum(axis=1) @ np.log(src.px)),
                "d_qyxu_pyx": h_ux - h_uxy - float((qxy * np.log(src.py_x)).sum()),
                "d_qxuy_pxy": h_uy - h_uxy - float((qxy * np.log(src.px_y)).sum()),
                "d_qxy_pxy": -h_xy - float((qxy * np.log(pxy)).sum()),
                "exp_dist": float((q.sum(axis=(0, 2)) * src.dist).sum()),
            }
            for name, value in expected.items():
                self.assertAlmostEqual(getattr(info, name), value, delta=1e-10, msg=name)

    def test_infinite_divergence(self):
        narrow = SourceModel([[0.5, 0.0], [0.0, 0.5]], SourceModel.hamming(2))
        q = JointQ(np.full((1, 2, 2, 2), 1.0 / 8))
        self.assertEqual(info_measures(q, narrow).d_qyxu_pyx, math.inf)

    def test_batched(self):
        src = self.src()
        rng = np.random.default_rng(3)
        stack = rng.dirichlet(np.ones(16), size=3).reshape(3, 2, 2, 2, 2)
        m = Marginals(stack)
        together = i_x_u_given_y(m)
        kl = d_qx_px(m, src)
        for k in range(3):
            single = Marginals(stack[k])
            self.assertAlmostEqual(float(together[k]), float(i_x_u_given_y(single)), places=12)
            self.assertAlmostEqual(float(kl[k]), float(d_qx_px(single, src)), places=12)

    def test_pinsker(self):
        src = self.src()
        rng = np.random.default_rng(11)
        for _ in range(20):
            q = JointQ(rng.dirichlet(np.ones(16)).reshape(2, 2, 2, 2))
            info = info_measures(q, src)
            self.assertGreaterEqual(info.d_qxy_pxy + 1e-12, info.tv ** 2 / 2.0)

    def test_divergence_helpers(self):
        self.assertAlmostEqual(kl_divergence([0.5, 0.5], [0.5, 0.5]), 0.0)
        self.assertAlmostEqual(kl_divergence([1.0, 0.0], [0.5, 0.5]), math.log(2.0))
        self.assertEqual(kl_divergence([0.5, 0.5], [1.0, 0.0]), math.inf)
        self.assertAlmostEqual(total_variation([1.0, 0.0], [0.0, 1.0]), 2.0)

    def test_embed_and_support_map(self):
        src = self.src()
        q = self.u_equals_x(src)
        wide = q.embed(5)
        self.assertEqual(wide.u_size, 5)
        self.assertAlmostEqual(float(wide.q.sum()), 1.0)
        with self.assertRaises(WzValidationError):
            wide.embed(2)
        space = SupportMap(src)
        self.assertEqual(space.shape, (8, 2, 2, 2))
        self.assertEqual(space.size, 64)
        np.testing.assert_allclose(space.expand(space.compress(q)), q.embed(8).q)

    def test_with_decoder(self):
        src = self.src()
        quxy = src.pxy[None, :, :]
        q = JointQ.with_decoder(quxy, [[0, 1]], 2)
        np.testing.assert_allclose(q.q[0, :, 0, 0], src.pxy[:, 0])
        np.testing.assert_allclose(q.q[0, :, 1, 1], src.pxy[:, 1])
        self.assertAlmostEqual(float(q.q[0, :, 0, 1].sum()), 0.0)


if __name__ == "__main__":
    unittest.main()
