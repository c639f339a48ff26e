import math
from typing import Dict, List, Sequence, Tuple

import numpy as np

from wzexp.shared import Debuggable, WzValidationError
from wzexp.prob import JointQ, SourceModel, SupportMap
from wzexp.region import (
    RMuSolution,
    hyperplane_curve,
    optimal_decoder_map,
    solve_r_mu,
    solve_r_tilde,
)
from wzexp.simplex import OptimizerConfig, OptimizerReport, minimize
from .omega import TiltParams, omega_of_q, omega_values, omega_variances


def matched_points(src: SourceModel) -> List[JointQ]:
    """Two feasible points with q_XY = p_XY: a constant auxiliary and U = X,
    each with its optimal reproduction."""
    n = src.x_size
    constant = src.pxy[None, :, :]
    lossless = np.zeros((n, n, src.y_size))
    for x in range(n):
        lossless[x, x, :] = src.pxy[x, :]
    return [
        JointQ.with_decoder(quxy, optimal_decoder_map(quxy, src), src.z_size)
        for quxy in (constant, lossless)
    ]


class OmegaMin:
    def __init__(self, value: float, q: JointQ, report: OptimizerReport) -> None:
        self.value = value
        self.q = q
        self.report = report


def omega_min(
    src: SourceModel,
    params: TiltParams,
    cfg: OptimizerConfig,
    warm: Sequence[JointQ] = None,
) -> OmegaMin:
    """Best found min over q of Omega(q|p): an upper estimate of the true
    minimum. The matched points are always among the starts."""
    space = SupportMap(src)

    def objective(points):
        return omega_values(space.expand(points), src, params.alpha, params.mu, params.lam)

    starts = [space.compress(q) for q in list(warm or []) + matched_points(src)]
    report = minimize(objective, [space.size], cfg, warm_starts=starts, batched=True)
    q = JointQ(space.expand(report.argmin), src, support=True, bounded=True)
    return OmegaMin(report.best_value, q, report)


def _rate_mix(R: float, Delta: float, mu: float) -> float:
    return (1.0 - mu) * R + mu * Delta


def f_lambda(src: SourceModel, R: float, Delta: float, params: TiltParams, omega_value: float) -> float:
    a, mu, lam = params.alpha, params.mu, params.lam
    num = omega_value - 4.0 * a * lam * _rate_mix(R, Delta, mu)
    return num / (1.0 + 4.0 * (1.0 - a * mu) * lam)


def f_theta(src: SourceModel, R: float, Delta: float, params: TiltParams, omega_value: float) -> float:
    """The same exponent written in theta = lambda / (1 + abar lambda)."""
    a, mu, theta = params.alpha, params.mu, params.theta
    num = (1.0 - params.abar * theta) * omega_value - 4.0 * a * theta * _rate_mix(R, Delta, mu)
    return num / (1.0 + (3.0 + a - 4.0 * a * mu) * theta)


class ExponentSearch:
    def __init__(
        self,
        alpha_points: int = 20,
        mu_points: int = 21,
        lambda_points: int = 25,
        alpha_min: float = 1e-3,
        lambda_min: float = 1e-3,
        lambda_max: float = 1e2,
        refine_rounds: int = 3,
        sweep_starts: int = 1,
        sweep_iters: int = 200,
        debug: bool = False,
    ) -> None:
        for name, value in (
            ("alpha_points", alpha_points),
            ("mu_points", mu_points),
            ("lambda_points", lambda_points),
            ("sweep_starts", sweep_starts),
            ("sweep_iters", sweep_iters),
        ):
            if int(value) != value or value < 1:
                raise WzValidationError("%s must be a positive integer" % name)
        if refine_rounds < 0:
            raise WzValidationError("refine_rounds must be non-negative")
        if not (0 < alpha_min <= 1 and 0 < lambda_min <= lambda_max):
            raise WzValidationError("invalid alpha/lambda range")
        self.alpha_points = int(alpha_points)
        self.mu_points = int(mu_points)
        self.lambda_points = int(lambda_points)
        self.alpha_min = alpha_min
        self.lambda_min = lambda_min
        self.lambda_max = lambda_max
        self.refine_rounds = int(refine_rounds)
        self.sweep_starts = int(sweep_starts)
        self.sweep_iters = int(sweep_iters)
        self.debug = debug

    def alphas(self) -> np.ndarray:
        if self.alpha_points == 1:
            return np.array([1.0])
        return np.geomspace(self.alpha_min, 1.0, self.alpha_points)

    def mus(self) -> np.ndarray:
        return np.linspace(1.0 / self.mu_points, 1.0, self.mu_points)

    def lambdas(self) -> np.ndarray:
        if self.lambda_points == 1:
            return np.array([self.lambda_max])
        return np.geomspace(self.lambda_min, self.lambda_max, self.lambda_points)

    def sweep_cfg(self, cfg: OptimizerConfig) -> OptimizerConfig:
        return cfg.replace(starts=self.sweep_starts, max_iters=self.sweep_iters)


class OmegaSurface(Debuggable):
    """Omega-hat(p_XY) on the (alpha, mu, lambda) grid.

    Omega-hat does not depend on (R, Delta), so one surface serves every
    (R, Delta) point. Each lambda sweep runs in ascending order, warm-started
    from the previous minimizer and from the R^(mu) minimizer.
    """

    name = "exponent"

    def __init__(self, src: SourceModel, search: ExponentSearch, cfg: OptimizerConfig) -> None:
        super().__init__(search.debug)
        self.src = src
        self.search = search
        self.cfg = cfg
        self.alphas = search.alphas()
        self.mus = search.mus()
        self.lambdas = search.lambdas()
        self.curve = hyperplane_curve(src, [float(mu) for mu in self.mus], cfg)
        self._anchors: Dict[float, RMuSolution] = {}
        shape = (len(self.alphas), len(self.mus), len(self.lambdas))
        self.table = np.zeros(shape)
        self.argmins: Dict[Tuple[int, int, int], JointQ] = {}
        self._compute()

    def anchor(self, mu: float) -> JointQ:
        """The best known R^(mu) minimizer, solving afresh off the grid."""
        best = self.curve.solution(mu)
        if mu not in self.curve.mus:
            if mu not in self._anchors:
                self._anchors[mu] = solve_r_mu(self.src, mu, self.cfg)
            fresh = self._anchors[mu]
            if fresh.value_at(mu) < best.value_at(mu):
                best = fresh
        return best.q

    def _compute(self) -> None:
        cfg = self.search.sweep_cfg(self.cfg)
        for i, alpha in enumerate(self.alphas):
            for j, mu in enumerate(self.mus):
                anchor = self.anchor(float(mu))
                prev = None
                for k, lam in enumerate(self.lambdas):
                    params = TiltParams(alpha, mu, lam)
                    warm = [anchor] if prev is None else [prev, anchor]
                    found = omega_min(self.src, params, cfg, warm=warm)
                    self.table[i, j, k] = found.value
                    self.argmins[(i, j, k)] = found.q
                    prev = found.q
                self._debug(
                    "alpha=%.4g mu=%.4g omega=[%.6g .. %.6g]"
                    % (alpha, mu, self.table[i, j].min(), self.table[i, j].max())
                )

    def rows(self) -> List[Tuple[float, float, float, float]]:
        out = []
        for (i, j, k), value in np.ndenumerate(self.table):
            out.append((float(self.alphas[i]), float(self.mus[j]), float(self.lambdas[k]), float(value)))
        return out

    def f_table(self, R: float, Delta: float) -> np.ndarray:
        a = self.alphas[:, None, None]
        mu = self.mus[None, :, None]
        lam = self.lambdas[None, None, :]
        num = self.table - 4.0 * a * lam * ((1.0 - mu) * R + mu * Delta)
        return num / (1.0 + 4.0 * (1.0 - a * mu) * lam)


class ExponentResult:
    def __init__(
        self,
        f_value: float,
        best_params: TiltParams,
        omega_at_best: float,
        diagnostics: dict,
    ) -> None:
        self.f_value = f_value
        self.best_params = best_params
        self.omega_at_best = omega_at_best
        self.diagnostics = diagnostics

    def __repr__(self):
        return "ExponentResult(f_value=%.9g, best_params=%r)" % (self.f_value, self.best_params)

    def serialize(self) -> dict:
        return {
            "f_value": self.f_value,
            "best_params": self.best_params.serialize(),
            "omega_at_best": self.omega_at_best,
            "estimate": True,
            "diagnostics": self.diagnostics,
        }


class _Refiner(Debuggable):
    """Coordinate ascent on f over (alpha, mu, lambda) from the grid optimum."""

    name = "refine"

    def __init__(self, surface: OmegaSurface, R: float, Delta: float) -> None:
        super().__init__(surface.search.debug)
        self.surface = surface
        self.R = R
        self.Delta = Delta
        self.cfg = surface.search.sweep_cfg(surface.cfg)
        self.evaluations = 0

    def evaluate(self, params: TiltParams, warm: JointQ) -> Tuple[float, float, JointQ]:
        s = self.surface
        found = omega_min(s.src, params, self.cfg, warm=[warm, s.anchor(params.mu)])
        self.evaluations += 1
        return f_lambda(s.src, self.R, self.Delta, params, found.value), found.value, found.q

    def run(self, params: TiltParams, f: float, omega: float, q: JointQ, rounds: int):
        s = self.surface
        alpha_step = (1.0 / s.search.alpha_min) ** (1.0 / max(s.search.alpha_points - 1, 1))
        lam_step = (s.search.lambda_max / s.search.lambda_min) ** (
            1.0 / max(s.search.lambda_points - 1, 1)
        )
        mu_step = 1.0 / s.search.mu_points
        for _ in range(rounds):
            alpha_step = math.sqrt(alpha_step)
            lam_step = math.sqrt(lam_step)
            mu_step /= 2.0
            candidates = [
                (min(params.alpha * alpha_step, 1.0), params.mu, params.lam),
                (params.alpha / alpha_step, params.mu, params.lam),
                (params.alpha, min(params.mu + mu_step, 1.0), params.lam),
                (params.alpha, params.mu - mu_step, params.lam),
                (params.alpha, params.mu, params.lam * lam_step),
                (params.alpha, params.mu, params.lam / lam_step),
            ]
            for a, mu, lam in candidates:
                if mu <= 0.0 or (a, mu, lam) == (params.alpha, params.mu, params.lam):
                    continue
                trial = TiltParams(a, mu, lam)
                tf, tomega, tq = self.evaluate(trial, q)
                if tf > f:
                    self._debug("%r: %.9g -> %.9g" % (trial, f, tf))
                    params, f, omega, q = trial, tf, tomega, tq
        return params, f, omega


def exponent_F(
    src: SourceModel,
    R: float,
    Delta: float,
    search: ExponentSearch = None,
    cfg: OptimizerConfig = None,
    surface: OmegaSurface = None,
) -> ExponentResult:
    """Estimate of F(R, Delta | p_XY) = sup of f over (alpha, mu, lambda).

    Omega-hat is an upper estimate, so F-hat may err upward; the value is
    clamped at the lambda -> 0 endpoint, where f = 0.
    """
    if R < 0 or Delta < 0:
        raise WzValidationError("R and Delta must be non-negative")
    if surface is None:
        surface = OmegaSurface(src, search or ExponentSearch(), cfg or OptimizerConfig())
    f = surface.f_table(R, Delta)
    i, j, k = np.unravel_index(int(np.argmax(f)), f.shape)
    params = TiltParams(surface.alphas[i], surface.mus[j], surface.lambdas[k])
    best = float(f[i, j, k])
    omega = float(surface.table[i, j, k])
    diagnostics = {"grid_points": int(f.size), "grid_best": best, "refine_evaluations": 0}
    if best > 0 and surface.search.refine_rounds > 0:
        refiner = _Refiner(surface, R, Delta)
        params, best, omega = refiner.run(
            params, best, omega, surface.argmins[(i, j, k)], surface.search.refine_rounds
        )
        diagnostics["refine_evaluations"] = refiner.evaluations
    if best <= 0:
        params = TiltParams(params.alpha, params.mu, 0.0)
        omega = 0.0
    f_value = f_lambda(src, R, Delta, params, omega)
    return ExponentResult(f_value, params, omega, diagnostics)


class RhoEstimate:
    def __init__(self, value: float, alpha: float, mu: float, q: JointQ) -> None:
        self.value = value
        self.alpha = alpha
        self.mu = mu
        self.q = q

    def __repr__(self):
        return "RhoEstimate(value=%.9g, alpha=%g, mu=%g)" % (self.value, self.alpha, self.mu)


def rho_pairs(grid: int = 5) -> List[Tuple[float, float]]:
    corners = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]
    axis = np.linspace(0.0, 1.0, grid)
    inner = [(float(a), float(m)) for a in axis for m in axis]
    return corners + [p for p in inner if p not in corners]


def rho_search(src: SourceModel, cfg: OptimizerConfig, grid: int = 5) -> RhoEstimate:
    """Largest Var_q[omega] found over q and (alpha, mu); a lower estimate
    of rho(p_XY)."""
    space = SupportMap(src)
    uniform = np.full(space.size, 1.0 / space.size)
    best = None
    for alpha, mu in rho_pairs(grid):

        def objective(points, alpha=alpha, mu=mu):
            return -omega_variances(space.expand(points), src, alpha, mu)

        report = minimize(objective, [space.size], cfg, warm_starts=[uniform], batched=True)
        value = max(0.0, -report.best_value)
        if best is None or value > best.value:
            q = JointQ(space.expand(report.argmin), src, support=True)
            best = RhoEstimate(value, alpha, mu, q)
    return best


def rho_estimate(src: SourceModel, cfg: OptimizerConfig, grid: int = 5) -> float:
    return rho_search(src, cfg, grid).value


class ChainReport:
    def __init__(self, omega: float, r_tilde: float, rho: float, lam: float) -> None:
        self.omega = omega
        self.r_tilde = r_tilde
        self.rho = rho
        self.bound = lam * r_tilde - rho * lam ** 2 / 2.0
        self.margin = omega - self.bound

    def __repr__(self):
        return "ChainReport(omega=%.9g, bound=%.9g, margin=%.3g)" % (
            self.omega,
            self.bound,
            self.margin,
        )


def tilt_chain_margin(
    src: SourceModel,
    params: TiltParams,
    cfg: OptimizerConfig,
    rho: float,
    path_points: int = 65,
) -> ChainReport:
    """Checks Omega-hat >= lambda R-tilde - rho lambda^2 / 2.

    R-tilde is warm-started at the Omega minimizer and rho is raised to the
    largest omega variance seen along that minimizer's tilt path.
    """
    found = omega_min(src, params, cfg)
    rt = solve_r_tilde(src, params.alpha, params.mu, cfg, warm=[found.q])
    path = 0.0
    for s in np.linspace(0.0, params.lam, path_points):
        step = TiltParams(params.alpha, params.mu, float(s))
        path = max(path, -omega_of_q(found.q, src, step).d2)
    return ChainReport(found.value, rt.value, max(rho, path), params.lam)


def g_inverse(b: float) -> float:
    """Inverse of a -> a/2 + a^2 on [0, inf)."""
    if b < 0:
        raise WzValidationError("g is defined for b >= 0, got %r" % b)
    return (math.sqrt(1.0 + 16.0 * b) - 1.0) / 4.0


def f_positivity_bound(src: SourceModel, tau: float, delta: float, rho: float) -> float:
    if not rho > 0:
        raise WzValidationError("rho must be positive, got %r" % rho)
    if not 0.0 < tau <= 1.0:
        raise WzValidationError("tau %r outside (0,1]" % tau)
    if not delta > 0:
        raise WzValidationError("delta must be positive")
    return rho / 2.0 * g_inverse(tau ** (3.0 + delta) / rho) ** 2


def kappa_n(rho: float, epsilon: float, delta: float, n: int) -> float:
    if not 0.0 < epsilon < 1.0:
        raise WzValidationError("epsilon %r outside (0,1)" % epsilon)
    if not delta > 0:
        raise WzValidationError("delta must be positive")
    if rho < 0:
        raise WzValidationError("rho must be non-negative")
    if int(n) != n or n < 1:
        raise WzValidationError("n must be a positive integer")
    log_term = math.log(5.0 / (1.0 - epsilon))
    inner = math.sqrt(rho / (2.0 * n) * log_term) + 2.0 / n * log_term
    return inner ** (1.0 / (3.0 + delta))
