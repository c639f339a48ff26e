import math
from typing import List, Sequence, Tuple

import numpy as np

from wzexp.shared import WzValidationError
from wzexp.prob import (
    JointQ,
    Marginals,
    SourceModel,
    SupportMap,
    d_qx_px,
    d_qyxu_pyx,
    expected_distortion,
    i_x_u_given_y,
    i_x_z_given_uy,
)
from wzexp.simplex import OptimizerConfig, OptimizerReport, minimize


def _check_mu(mu: float) -> None:
    if not 0.0 <= mu <= 1.0:
        raise WzValidationError("mu %r outside [0,1]" % mu)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise WzValidationError("alpha %r outside (0,1]" % alpha)


def optimal_decoder_map(q_uxy, src: SourceModel) -> np.ndarray:
    """For each (u,y) the z minimizing sum_x d(x,z) q(u,x,y); ties go to the
    smallest z and zero-mass (u,y) map to z = 0."""
    q_uxy = np.asarray(q_uxy, dtype=np.float64)
    cost = np.einsum("uxy,xz->uyz", q_uxy, src.dist)
    out = np.argmin(cost, axis=-1)
    out[q_uxy.sum(axis=1) <= 0] = 0
    return out


def decoded_distortion(q_uxy: np.ndarray, src: SourceModel) -> np.ndarray:
    """E d(X, phi(U,Y)) under the optimal map; accepts (..., U, X, Y)."""
    cost = np.einsum("...uxy,xz->...uyz", q_uxy, src.dist)
    return cost.min(axis=-1).sum(axis=(-2, -1))


class RMuSolution:
    """A minimizer of mu_bar I(X;U|Y) + mu E d with its test channel w(u|x)."""

    def __init__(self, src: SourceModel, mu: float, w: np.ndarray, report: OptimizerReport) -> None:
        self.mu = mu
        self.w = w
        self.report = report
        self.quxy = np.einsum("xy,xu->uxy", src.pxy, w)
        m = Marginals(self.quxy[..., None])
        self.info = max(0.0, float(i_x_u_given_y(m)))
        self.distortion = float(decoded_distortion(self.quxy, src))
        self.decoder = optimal_decoder_map(self.quxy, src)
        self.q = JointQ.with_decoder(self.quxy, self.decoder, src.z_size)

    def value_at(self, mu: float) -> float:
        return (1.0 - mu) * self.info + mu * self.distortion

    @property
    def value(self) -> float:
        return self.value_at(self.mu)


def _test_channel_starts(src: SourceModel) -> List[np.ndarray]:
    n = src.x_size
    identity = np.eye(n)
    constant = np.zeros((n, n))
    constant[:, 0] = 1.0
    return [identity.reshape(-1), constant.reshape(-1)]


def solve_r_mu(
    src: SourceModel,
    mu: float,
    cfg: OptimizerConfig,
    warm: Sequence[np.ndarray] = None,
) -> RMuSolution:
    """Minimizes over test channels w(u|x) with |U| = |X|; q(u,x,y) =
    p(x,y) w(u|x) keeps U - X - Y and Z is the optimal reproduction."""
    _check_mu(mu)
    n = src.x_size

    def objective(points):
        w = points.reshape(points.shape[0], n, n)
        quxy = np.einsum("xy,kxu->kuxy", src.pxy, w)
        info = i_x_u_given_y(Marginals(quxy[..., None]))
        return (1.0 - mu) * info + mu * decoded_distortion(quxy, src)

    starts = _test_channel_starts(src) + list(warm or [])
    report = minimize(objective, [n] * n, cfg, warm_starts=starts, batched=True)
    return RMuSolution(src, mu, report.argmin.reshape(n, n), report)


def r_mu(src: SourceModel, mu: float, cfg: OptimizerConfig) -> float:
    return solve_r_mu(src, mu, cfg).value


class HyperplaneCurve:
    """Sampled R^(mu). Every entry is the minimum, over the pooled minimizers
    of all sampled mu, of an affine function of mu."""

    def __init__(self, src: SourceModel, solutions: List[RMuSolution]) -> None:
        self.fingerprint = src.fingerprint()
        self.solutions = solutions
        self.entries: List[Tuple[float, float]] = []
        for s in solutions:
            value = min(t.value_at(s.mu) for t in solutions)
            self.entries.append((s.mu, max(0.0, value)))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def mus(self) -> List[float]:
        return [mu for mu, _ in self.entries]

    def value(self, mu: float) -> float:
        for m, v in self.entries:
            if m == mu:
                return v
        raise WzValidationError("mu %r is not on the curve" % mu)

    def solution(self, mu: float) -> RMuSolution:
        """The pooled minimizer attaining the entry at `mu`."""
        return min(self.solutions, key=lambda t: t.value_at(mu))


def hyperplane_curve(
    src: SourceModel, mus: Sequence[float], cfg: OptimizerConfig
) -> HyperplaneCurve:
    if len(mus) == 0:
        raise WzValidationError("empty mu grid")
    solutions: List[RMuSolution] = []
    for mu in mus:
        warm = [solutions[-1].w.reshape(-1)] if solutions else None
        solutions.append(solve_r_mu(src, float(mu), cfg, warm=warm))
    return HyperplaneCurve(src, solutions)


def default_mu_grid(points: int = 41) -> List[float]:
    return [float(mu) for mu in np.linspace(0.0, 1.0, points)]


def envelope(curve: HyperplaneCurve, deltas: Sequence[float]) -> List[Tuple[float, float]]:
    """Samples the boundary R(Delta) = max over mu < 1 of
    (R^(mu) - mu Delta) / (1 - mu), clipped at zero."""
    out = []
    for delta in deltas:
        best = 0.0
        for mu, r in curve.entries:
            if mu < 1.0:
                best = max(best, (r - mu * delta) / (1.0 - mu))
        out.append((best, float(delta)))
    return out


class Membership:
    def __init__(self, member: bool, worst_mu: float, worst_violation: float) -> None:
        self.member = member
        self.worst_mu = worst_mu
        self.worst_violation = worst_violation

    def __bool__(self):
        return self.member

    def __repr__(self):
        return "Membership(member=%r, worst_mu=%g, worst_violation=%.6g)" % (
            self.member,
            self.worst_mu,
            self.worst_violation,
        )


def region_membership(
    src: SourceModel,
    R: float,
    Delta: float,
    mu_grid: Sequence[float],
    cfg: OptimizerConfig,
    tol: float = 1e-6,
    curve: HyperplaneCurve = None,
) -> Membership:
    if R < 0 or Delta < 0:
        raise WzValidationError("R and Delta must be non-negative")
    if len(mu_grid) == 0:
        raise WzValidationError("empty mu grid")
    for mu in mu_grid:
        _check_mu(mu)
    if curve is None:
        curve = hyperplane_curve(src, mu_grid, cfg)
    worst_mu, worst = None, -math.inf
    for mu, r in curve.entries:
        violation = r - ((1.0 - mu) * R + mu * Delta)
        if violation > worst:
            worst_mu, worst = mu, violation
    return Membership(worst <= tol, worst_mu, worst)


class RTildeSolution:
    def __init__(self, value: float, q: JointQ, report: OptimizerReport) -> None:
        self.value = value
        self.q = q
        self.report = report


def r_tilde_objective(src: SourceModel, alpha: float, mu: float):
    """Batched objective over (..., U, X, Y, Z) tensors."""
    abar = 1.0 - alpha

    def objective(q):
        m = Marginals(q)
        divergence = d_qx_px(m, src) + d_qyxu_pyx(m, src) + i_x_z_given_uy(m)
        rate = (1.0 - mu) * i_x_u_given_y(m) + mu * expected_distortion(q, src)
        return abar * divergence + 4.0 * alpha * rate

    return objective


def solve_r_tilde(
    src: SourceModel,
    alpha: float,
    mu: float,
    cfg: OptimizerConfig,
    warm: Sequence[JointQ] = None,
    anchor: RMuSolution = None,
) -> RTildeSolution:
    """Minimizes over q with |U| = |X||Y||Z| and q_XY inside supp p_XY.

    The R^(mu) minimizer (`anchor`, solved on demand) is always among the
    warm starts, which keeps the result at or below 4 alpha R^(mu).
    """
    _check_alpha(alpha)
    _check_mu(mu)
    if anchor is None:
        anchor = solve_r_mu(src, mu, cfg)
    space = SupportMap(src)
    score = r_tilde_objective(src, alpha, mu)

    def objective(points):
        return score(space.expand(points))

    starts = [space.compress(anchor.q)]
    starts.extend(space.compress(q) for q in warm or [])
    report = minimize(objective, [space.size], cfg, warm_starts=starts, batched=True)
    q = JointQ(space.expand(report.argmin), src, support=True, bounded=True)
    return RTildeSolution(report.best_value, q, report)


def r_tilde(src: SourceModel, alpha: float, mu: float, cfg: OptimizerConfig) -> float:
    return solve_r_tilde(src, alpha, mu, cfg).value


class SandwichConstants:
    def __init__(self, alpha0: float, c1: float, c2: float) -> None:
        self.alpha0 = alpha0
        self.c1 = c1
        self.c2 = c2

    def __repr__(self):
        return "SandwichConstants(alpha0=%.6g, c1=%.6g, c2=%.6g)" % (
            self.alpha0,
            self.c1,
            self.c2,
        )


def sandwich_constants(src: SourceModel) -> SandwichConstants:
    log_term = math.log(src.x_size) + src.d_max
    if log_term <= 0:
        raise WzValidationError("sandwich constants need |X| e^d_max > 1")
    alpha0 = 1.0 / (32.0 * log_term + 1.0)
    c1 = 4.0 * math.sqrt(2.0 * log_term)
    c2 = (
        math.exp(src.d_max / 2.0)
        * src.z_size
        * src.x_size ** 2
        * src.y_size ** 3
        / (8.0 * log_term)
    )
    return SandwichConstants(alpha0, c1, c2)


class SandwichReport:
    def __init__(self, alpha: float, mu: float, lower: float, mid: float, upper: float, tol: float) -> None:
        self.alpha = alpha
        self.mu = mu
        self.lower = lower
        self.mid = mid
        self.upper = upper
        self.tol = tol
        self.holds = lower - tol <= mid <= upper + tol

    def __repr__(self):
        return "SandwichReport(lower=%.6g, mid=%.6g, upper=%.6g, holds=%r)" % (
            self.lower,
            self.mid,
            self.upper,
            self.holds,
        )


def sandwich_check(
    src: SourceModel,
    alpha: float,
    mu: float,
    cfg: OptimizerConfig,
    tol: float = 1e-3,
) -> SandwichReport:
    sc = sandwich_constants(src)
    if not 0.0 < alpha <= sc.alpha0 * (1.0 + 1e-12):
        raise WzValidationError("alpha %r outside (0, alpha0 = %.6g]" % (alpha, sc.alpha0))
    anchor = solve_r_mu(src, mu, cfg)
    upper = anchor.value
    mid = solve_r_tilde(src, alpha, mu, cfg, anchor=anchor).value / (4.0 * alpha)
    abar = 1.0 - alpha
    lower = upper - sc.c1 * math.sqrt(alpha / abar) * math.log(sc.c2 * abar / alpha)
    return SandwichReport(alpha, mu, lower, mid, upper, tol)
