"""Exact small-n checks of the converse machinery: the four
information-spectrum sets and the P_c bound they give, the Markov chain
behind the auxiliary U_t = (S, X^{t-1}, Y_{t+1}^n), and the telescoping
of the multi-letter Omega into per-letter factors."""
import math
from typing import List, Sequence

import numpy as np
from scipy.special import rel_entr

from wzexp.shared import WzValidationError
from wzexp.prob import JointQ, Marginals, SourceModel, ratio
from wzexp.exponent import TiltParams, omega_min, omega_of_q
from wzexp.simplex import OptimizerConfig
from .blocks import BlockSpace, guard
from .scheme import CodingScheme, optimal_decoder_for, pc_exact

ROW_TOLERANCE = 1e-9


def _log(a: np.ndarray) -> np.ndarray:
    return np.log(a, out=np.zeros(a.shape), where=a > 0)


class BlockLaw:
    """Joint law of (S, X^n, Y^n, Z^n) induced by a deterministic scheme."""

    def __init__(self, src: SourceModel, encoder, n: int, decoder=None, Delta: float = None, m: int = None) -> None:
        self.space = BlockSpace(src, n)
        self.n = n
        self.encoder = np.asarray(encoder, dtype=np.int64)
        if self.encoder.shape != (self.space.x_count,):
            raise WzValidationError("encoder must have %d entries" % self.space.x_count)
        self.m = int(self.encoder.max()) + 1 if m is None else int(m)
        if np.any(self.encoder < 0) or np.any(self.encoder >= self.m):
            raise WzValidationError("encoder values must lie in 0..%d" % (self.m - 1))
        guard("(s, x^n, y^n) cells", self.m * self.space.x_count * self.space.y_count)
        if decoder is None:
            if Delta is None:
                Delta = src.d_max / 2.0
            decoder = optimal_decoder_for(self.encoder, src, n, self.m, Delta, space=self.space)
        self.decoder = np.asarray(decoder, dtype=np.int64)
        sp = self.space
        self.pxy = sp.pxy
        self.s = np.repeat(self.encoder[:, None], sp.y_count, axis=1)
        self.z = self.decoder[self.s, np.arange(sp.y_count)[None, :]]
        self.psy = np.zeros((self.m, sp.y_count))
        np.add.at(self.psy, self.encoder, self.pxy)
        self.py_x = ratio(self.pxy, sp.px[:, None])
        self.px_y = ratio(self.pxy, sp.py[None, :])
        self.px_sy = ratio(self.pxy, self.psy[self.s, np.arange(sp.y_count)[None, :]])


def _stochastic(name: str, table, axis_size: int) -> np.ndarray:
    table = np.asarray(table, dtype=np.float64)
    if table.shape[-1] != axis_size:
        raise WzValidationError("%s rows must have %d entries" % (name, axis_size))
    if not np.all(np.isfinite(table)) or np.any(table < 0):
        raise WzValidationError("%s has a negative or non-finite entry" % name)
    if np.any(np.abs(table.sum(axis=-1) - 1.0) > ROW_TOLERANCE):
        raise WzValidationError("%s has a row that does not sum to 1" % name)
    return table


class SpectrumChoices:
    """q1 over x^n; q2[s, x^n] over y^n; q3[s, y^n, z^n] over x^n;
    q4[s, y^n] over x^n."""

    def __init__(self, q1, q2, q3, q4, m: int, space: BlockSpace) -> None:
        xc, yc, zc = space.x_count, space.y_count, space.z_count
        self.q1 = _stochastic("q1", q1, xc)
        self.q2 = _stochastic("q2", q2, yc)
        self.q3 = _stochastic("q3", q3, xc)
        self.q4 = _stochastic("q4", q4, xc)
        shapes = ((self.q1, (xc,)), (self.q2, (m, xc, yc)), (self.q3, (m, yc, zc, xc)), (self.q4, (m, yc, xc)))
        for table, shape in shapes:
            if table.shape != shape:
                raise WzValidationError("q table shape %r, expected %r" % (table.shape, shape))

    @classmethod
    def induced(cls, law: BlockLaw) -> "SpectrumChoices":
        """The true conditionals of the induced law; undefined rows uniform."""
        sp = law.space
        xc, yc, zc = sp.x_count, sp.y_count, sp.z_count
        q2 = np.where(sp.px[:, None] > 0, law.py_x, 1.0 / yc)
        q2 = np.broadcast_to(q2, (law.m, xc, yc))
        qx_sy = np.zeros((law.m, yc, xc))
        for s in range(law.m):
            mass = law.pxy * (law.encoder == s)[:, None]
            qx_sy[s] = ratio(mass, mass.sum(axis=0)[None, :]).T
        qx_sy[law.psy <= 0] = 1.0 / xc
        q3 = np.broadcast_to(qx_sy[:, :, None, :], (law.m, yc, zc, xc))
        return cls(sp.px, q2, q3, qx_sy, law.m, sp)

    @classmethod
    def random(cls, rng: np.random.Generator, m: int, space: BlockSpace) -> "SpectrumChoices":
        xc, yc, zc = space.x_count, space.y_count, space.z_count
        return cls(
            rng.dirichlet(np.ones(xc)),
            rng.dirichlet(np.ones(yc), size=(m, xc)),
            rng.dirichlet(np.ones(xc), size=(m, yc, zc)),
            rng.dirichlet(np.ones(xc), size=(m, yc)),
            m,
            space,
        )


class SpectrumReport:
    def __init__(self, eta: float, n: int, probabilities: Sequence[float]) -> None:
        self.eta = eta
        self.bound = math.exp(-n * eta)
        self.probabilities = tuple(probabilities)
        self.holds = tuple(p <= self.bound + 1e-12 for p in self.probabilities)

    @property
    def all_hold(self) -> bool:
        return all(self.holds)

    def serialize(self) -> dict:
        return {
            "eta": self.eta,
            "bound": self.bound,
            "complement_probabilities": dict(zip("ABCD", self.probabilities)),
            "holds": dict(zip("ABCD", self.holds)),
        }


def _complement_masks(law: BlockLaw, q_choices: SpectrumChoices, eta: float):
    """(x^n, y^n) masks of the complements of A, B, C and D."""
    sp = law.space
    n = law.n
    low = math.exp(-n * eta)
    xi = np.arange(sp.x_count)[:, None]
    yi = np.arange(sp.y_count)[None, :]
    shape = law.pxy.shape
    a = np.broadcast_to(sp.px[:, None] < low * q_choices.q1[:, None], shape)
    b = law.py_x < low * q_choices.q2[law.s, xi, yi]
    c = law.px_sy < low * q_choices.q3[law.s, yi, law.z, xi]
    d = q_choices.q4[law.s, yi, xi] > law.m * math.exp(n * eta) * law.px_y
    return a, b, c, d


def spectrum_lemma_check(
    src: SourceModel,
    encoder,
    n: int,
    eta: float,
    q_choices: SpectrumChoices = None,
    decoder=None,
    Delta: float = None,
    law: BlockLaw = None,
) -> SpectrumReport:
    """Exact probabilities of the complements of the four sets
        A: p(x^n) >= e^{-n eta} q1(x^n)
        B: p(y^n|x^n) >= e^{-n eta} q2(y^n|s,x^n)
        C: p(x^n|s,y^n) >= e^{-n eta} q3(x^n|s,y^n,z^n)
        D: q4(x^n|s,y^n) <= M e^{n eta} p(x^n|y^n)
    each of which is at most e^{-n eta}."""
    if law is None:
        law = BlockLaw(src, encoder, n, decoder=decoder, Delta=Delta)
    if q_choices is None:
        q_choices = SpectrumChoices.induced(law)
    p = law.pxy
    masks = _complement_masks(law, q_choices, eta)
    return SpectrumReport(eta, n, [float(p[mask].sum()) for mask in masks])


class SpectrumBoundReport:
    def __init__(self, eta: float, n: int, p_c: float, event: float) -> None:
        self.eta = eta
        self.n = n
        self.p_c = p_c
        self.event = event
        self.bound = event + 4.0 * math.exp(-n * eta)
        self.margin = self.bound - p_c
        self.holds = self.margin >= -1e-12

    def __repr__(self):
        return "SpectrumBoundReport(p_c=%.12g, event=%.12g, bound=%.12g)" % (
            self.p_c,
            self.event,
            self.bound,
        )

    def serialize(self) -> dict:
        return {
            "eta": self.eta,
            "n": self.n,
            "p_c": self.p_c,
            "event": self.event,
            "bound": self.bound,
            "holds": self.holds,
        }


def spectrum_bound_check(
    src: SourceModel,
    scheme: CodingScheme,
    Delta: float,
    eta: float,
    q_choices: SpectrumChoices = None,
) -> SpectrumBoundReport:
    """P_c of the scheme against p{A, B, C, D and correct decoding} + 4 e^{-n eta},
    with D taken at the scheme's codebook size M."""
    law = BlockLaw(src, scheme.encoder, scheme.n, decoder=scheme.decoder, m=scheme.m)
    if q_choices is None:
        q_choices = SpectrumChoices.induced(law)
    sp = law.space
    p_c = pc_exact(scheme, src, Delta, space=sp).p_c
    hit = np.take_along_axis(sp.dist, law.z, axis=1) < scheme.n * Delta
    for mask in _complement_masks(law, q_choices, eta):
        hit = hit & ~mask
    return SpectrumBoundReport(eta, scheme.n, p_c, float(law.pxy[hit].sum()))


def _cmi(joint: np.ndarray, a: Sequence[int], b: Sequence[int]) -> float:
    """I(A;B|rest) for a joint tensor; a and b are disjoint axis lists."""
    if len(a) == 0 or len(b) == 0:
        return 0.0
    ac = joint.sum(axis=tuple(b), keepdims=True)
    bc = joint.sum(axis=tuple(a), keepdims=True)
    c = joint.sum(axis=tuple(a) + tuple(b), keepdims=True)
    return float(rel_entr(joint, ratio(ac * bc, c)).sum())


def markov_lemma_check(src: SourceModel, encoder, n: int) -> float:
    """max over t of I(X_t; Y^{t-1} | S, X^{t-1}, Y_t^n)."""
    law = BlockLaw(src, encoder, n, decoder=np.zeros((int(np.max(encoder)) + 1, src.y_size ** n)))
    sp = law.space
    joint = np.zeros((law.m, sp.x_count, sp.y_count))
    joint[law.encoder, np.arange(sp.x_count), :] = law.pxy
    joint = joint.reshape((law.m,) + (src.x_size,) * n + (src.y_size,) * n)
    worst = 0.0
    for t in range(1, n + 1):
        later = tuple(range(t + 1, n + 1))
        marginal = joint.sum(axis=later, keepdims=True)
        past_y = [n + i for i in range(1, t)]
        worst = max(worst, _cmi(marginal, [t], past_y))
    return worst


class RecursionReport:
    def __init__(self) -> None:
        self.omega_n = 0.0
        self.lambda_product_residual = 0.0
        self.prop2_margin = 0.0
        self.overall_margin = 0.0
        self.omega_hat = 0.0
        self.lambdas: List[float] = []
        self.omegas: List[float] = []
        self.holder_margins: List[float] = []
        self.q_seq: List[JointQ] = []

    def __repr__(self):
        return "RecursionReport(omega_n=%.12g, residual=%.3g, prop2_margin=%.3g)" % (
            self.omega_n,
            self.lambda_product_residual,
            self.prop2_margin,
        )


def _step_omega(q: JointQ, p_t: np.ndarray, src: SourceModel, alpha: float, mu: float) -> np.ndarray:
    """Per-letter score of step t: the single-letter omega of q_t except that
    the q_{X|UYZ} ratio is taken against the true p_{X_t|U_t Y_t}."""
    m = Marginals(q.q)
    px_uy = ratio(p_t.sum(axis=3), p_t.sum(axis=(1, 3))[:, None, :])
    t1 = _log(m.x) - _log(src.px)
    t2 = _log(m.uxy) - _log(m.ux)[..., None] - _log(src.py_x)
    t3 = _log(q.q) - _log(m.uyz)[:, None, :, :] - _log(px_uy)[..., None]
    t4 = _log(m.uxy) - _log(m.uy)[:, None, :] - _log(src.px_y)
    first = t1[None, :, None, None] + t2[..., None] + t3
    second = (1.0 - mu) * t4[..., None] + mu * src.dist[:, None, :]
    return (1.0 - alpha) * first + 4.0 * alpha * second


def recursion_check(
    src: SourceModel,
    scheme: CodingScheme,
    q_seq: Sequence[JointQ],
    alpha: float,
    mu: float,
    theta: float,
    cfg: OptimizerConfig = None,
) -> RecursionReport:
    """Multi-letter Omega_n of the scheme's law, directly and as the product
    of the recursion factors Lambda_t. With q_seq None, q_t is the law of
    (U_t, X_t, Y_t, Z_t) tilted by the factors of steps before t."""
    params = TiltParams.from_theta(alpha, mu, theta)
    if cfg is None:
        cfg = OptimizerConfig()
    n = scheme.n
    law = BlockLaw(src, scheme.encoder, n, decoder=scheme.decoder)
    sp = law.space
    m = scheme.m
    xi, yi = np.nonzero(law.pxy)
    w = law.pxy[xi, yi]
    s = scheme.encoder[xi]
    zi = scheme.decoder[s, yi]
    xl, yl, zl = sp.xs[xi], sp.ys[yi], sp.zs[zi]
    X, Y, Z = src.x_size, src.y_size, src.z_size
    if q_seq is not None and len(q_seq) != n:
        raise WzValidationError("q_seq must hold one distribution per letter")

    report = RecursionReport()
    prefix = np.ones_like(w)
    partials = [prefix]
    for t in range(n):
        u = s.copy()
        for i in range(t):
            u = u * X + xl[:, i]
        for i in range(t + 1, n):
            u = u * Y + yl[:, i]
        u_size = m * X ** t * Y ** (n - 1 - t)
        cell = ((u * X + xl[:, t]) * Y + yl[:, t]) * Z + zl[:, t]
        shape = (u_size, X, Y, Z)
        p_t = np.bincount(cell, weights=w, minlength=int(np.prod(shape))).reshape(shape)
        if q_seq is None:
            tilted = np.bincount(cell, weights=w * prefix, minlength=p_t.size)
            q_t = JointQ((tilted / tilted.sum()).reshape(shape))
        else:
            q_t = q_seq[t]
            if q_t.q.shape != shape:
                raise WzValidationError("q_%d has shape %r, expected %r" % (t + 1, q_t.q.shape, shape))
        if np.any((p_t > 0) & (q_t.q <= 0)):
            raise WzValidationError("q_%d misses part of the support of the block law" % (t + 1))
        score = _step_omega(q_t, p_t, src, alpha, mu).reshape(-1)[cell]
        prefix = prefix * np.exp(-theta * score)
        partials.append(prefix)
        report.q_seq.append(q_t)
        report.omegas.append(omega_of_q(q_t, src, params).value)

    total = float((w * prefix).sum())
    report.omega_n = -math.log(total)

    group = s * sp.y_count + yi
    groups = m * sp.y_count
    psy = np.bincount(group, weights=w, minlength=groups)
    live = psy > 0
    c_prev = np.ones(groups)
    tilt = psy / psy.sum()
    product = 1.0
    for t in range(1, n + 1):
        c_t = np.ones(groups)
        c_t[live] = np.bincount(group, weights=w * partials[t], minlength=groups)[live] / psy[live]
        phi = np.ones(groups)
        phi[live] = c_t[live] / c_prev[live]
        lam_t = float((tilt * phi).sum())
        tilt = tilt * phi / lam_t
        report.lambdas.append(lam_t)
        product *= lam_t
        c_prev = c_t
    report.lambda_product_residual = abs(total - product)

    shrink = 1.0 + params.abar * params.lam
    report.holder_margins = [
        -math.log(lam_t) - omega / shrink for lam_t, omega in zip(report.lambdas, report.omegas)
    ]
    warm = [q.embed(src.xyz) for q in report.q_seq if q.u_size <= src.xyz]
    found = omega_min(src, params, cfg, warm=warm)
    report.omega_hat = found.value
    report.prop2_margin = float(np.mean(report.omegas)) - found.value
    report.overall_margin = report.omega_n / n - found.value / shrink
    return report
