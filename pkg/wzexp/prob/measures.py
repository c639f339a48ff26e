"""Exact information measures over q(u,x,y,z).

Array-level functions accept tensors of shape (..., U, X, Y, Z) so that a
whole stack of candidate distributions can be scored in one call. All
quantities are in nats; 0 log 0 = 0 via scipy's rel_entr, and mass on a
zero reference cell gives +inf.
"""
import numpy as np
from scipy.special import rel_entr

from .joint import JointQ, ratio
from .source import SourceModel

AXES3 = (-3, -2, -1)
AXES4 = (-4, -3, -2, -1)


class Marginals:
    def __init__(self, q: np.ndarray) -> None:
        self.q = q
        self.uxy = q.sum(axis=-1)
        self.uyz = q.sum(axis=-3)
        self.uy = self.uxy.sum(axis=-2)
        self.ux = self.uxy.sum(axis=-1)
        self.xy = self.uxy.sum(axis=-3)
        self.x = self.xy.sum(axis=-1)
        self.y = self.xy.sum(axis=-2)


class Conditionals:
    """q_X, q_{X|UY}, q_{Y|XU} (axes u,x,y) and q_{X|UYZ} (axes u,x,y,z).

    Rows whose conditioning event has zero mass are zero and flagged
    undefined by the `*_defined` masks.
    """

    def __init__(self, m: Marginals) -> None:
        self.qx = m.x
        self.qx_uy = ratio(m.uxy, m.uy[..., :, None, :])
        self.qy_xu = ratio(m.uxy, m.ux[..., :, :, None])
        self.qx_uyz = ratio(m.q, m.uyz[..., :, None, :, :])
        self.uy_defined = m.uy > 0
        self.ux_defined = m.ux > 0
        self.uyz_defined = m.uyz > 0


def conditionals(q) -> Conditionals:
    if isinstance(q, JointQ):
        q = q.q
    return Conditionals(Marginals(np.asarray(q)))


def i_x_u_given_y(m: Marginals) -> np.ndarray:
    ref = ratio(m.uy[..., :, None, :] * m.xy[..., None, :, :], m.y[..., None, None, :])
    return rel_entr(m.uxy, ref).sum(axis=AXES3)


def i_x_z_given_uy(m: Marginals) -> np.ndarray:
    ref = ratio(
        m.uxy[..., None] * m.uyz[..., :, None, :, :], m.uy[..., :, None, :, None]
    )
    return rel_entr(m.q, ref).sum(axis=AXES4)


def d_qx_px(m: Marginals, src: SourceModel) -> np.ndarray:
    return rel_entr(m.x, src.px).sum(axis=-1)


def d_qyxu_pyx(m: Marginals, src: SourceModel) -> np.ndarray:
    """D(q_{Y|XU} || p_{Y|X} | q_{XU})"""
    return rel_entr(m.uxy, m.ux[..., None] * src.py_x).sum(axis=AXES3)


def d_qxuy_pxy(m: Marginals, src: SourceModel) -> np.ndarray:
    """D(q_{X|UY} || p_{X|Y} | q_{UY})"""
    return rel_entr(m.uxy, m.uy[..., :, None, :] * src.px_y).sum(axis=AXES3)


def d_qxy_pxy(m: Marginals, src: SourceModel) -> np.ndarray:
    return rel_entr(m.xy, src.pxy).sum(axis=(-2, -1))


def expected_distortion(q: np.ndarray, src: SourceModel) -> np.ndarray:
    return (q * src.dist[:, None, :]).sum(axis=AXES4)


def kl_divergence(p, q) -> float:
    return float(rel_entr(np.asarray(p, dtype=np.float64), np.asarray(q)).sum())


def total_variation(p, q) -> float:
    """L1 distance, in [0, 2]."""
    return float(np.abs(np.asarray(p, dtype=np.float64) - np.asarray(q)).sum())


class InfoBundle:
    def __init__(self, q: JointQ, src: SourceModel) -> None:
        m = Marginals(q.q)
        self.i_x_u_given_y = max(0.0, float(i_x_u_given_y(m)))
        self.i_x_z_given_uy = max(0.0, float(i_x_z_given_uy(m)))
        self.d_qx_px = max(0.0, float(d_qx_px(m, src)))
        self.d_qyxu_pyx = max(0.0, float(d_qyxu_pyx(m, src)))
        self.d_qxuy_pxy = max(0.0, float(d_qxuy_pxy(m, src)))
        self.d_qxy_pxy = max(0.0, float(d_qxy_pxy(m, src)))
        self.exp_dist = float(expected_distortion(q.q, src))
        self.tv = total_variation(m.xy, src.pxy)

    def __repr__(self):
        return "InfoBundle(%s)" % ", ".join(
            "%s=%.6g" % (k, v) for k, v in sorted(vars(self).items())
        )


def info_measures(q: JointQ, src: SourceModel) -> InfoBundle:
    return InfoBundle(q, src)
