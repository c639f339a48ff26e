"""The `verify` property suite: every check reports a margin that is
non-negative exactly when the property holds."""
import math
from typing import Callable, List

import numpy as np

from wzexp.shared import Debuggable
from wzexp.prob import JointQ, SourceModel, SupportMap
from wzexp.simplex import OptimizerConfig
from wzexp.region import region_membership, sandwich_check, sandwich_constants
from wzexp.exponent import (
    ExponentSearch,
    OmegaSurface,
    TiltParams,
    exponent_F,
    g_inverse,
    kappa_n,
    omega_of_q,
    rho_estimate,
    tilt_chain_margin,
)
from wzexp.coding import (
    BlockSpace,
    CodingScheme,
    SpectrumChoices,
    markov_lemma_check,
    optimal_decoder_for,
    recursion_check,
    spectrum_bound_check,
    spectrum_lemma_check,
    subadditivity_check,
    trial_rng,
    verify_theorem,
)

DERIVATIVE_SAMPLES = 50
DERIVATIVE_STEP = 1e-4
THEOREM_POINTS = ((0.0, 0.1), (0.34, 0.05))
SUBADDITIVITY_POINT = (0.2, 0.3)
SUBADDITIVITY_PAIRS = ((1, 1), (1, 2), (2, 1), (2, 2))
SPECTRUM_ETAS = (0.05, 0.2)
SPECTRUM_CHOICES = 20
MARKOV_ENCODERS = 10
OUTSIDE_GAP = 0.05


class Check:
    def __init__(self, name: str, margin: float) -> None:
        self.name = name
        self.margin = float(margin)
        self.passed = bool(self.margin >= 0)

    def __repr__(self):
        return "Check(%s, margin=%.6g, passed=%r)" % (self.name, self.margin, self.passed)


class VerifySuite(Debuggable):
    """Desk-scale property checks against one source.

    Optimizer budgets are kept small; the exponent surface is computed
    once and shared by the geometry and theorem checks.
    """

    name = "verify"

    def __init__(self, src: SourceModel, seed: int = 0, jobs: int = 1, debug: bool = False) -> None:
        super().__init__(debug)
        self.src = src
        self.seed = seed
        self.cfg = OptimizerConfig(starts=4, max_iters=300, seed=seed, jobs=jobs, debug=debug)
        self.search = ExponentSearch(
            alpha_points=4,
            mu_points=4,
            lambda_points=6,
            refine_rounds=1,
            sweep_starts=1,
            sweep_iters=100,
            debug=debug,
        )
        self._surface = None

    @property
    def surface(self) -> OmegaSurface:
        if self._surface is None:
            self._surface = OmegaSurface(self.src, self.search, self.cfg)
        return self._surface

    def checks(self) -> List[Callable[[], Check]]:
        return [
            self.check_derivatives,
            self.check_omega_endpoint,
            self.check_concavity,
            self.check_closed_form,
            self.check_spot_values,
            self.check_sandwich,
            self.check_tilt_chain,
            self.check_exponent_geometry,
            self.check_theorem,
            self.check_subadditivity,
            self.check_spectrum,
            self.check_spectrum_bound,
            self.check_markov,
            self.check_recursion,
        ]

    def run(self) -> List[Check]:
        out = []
        for check in self.checks():
            result = check()
            self._debug("%s margin=%.6g" % (result.name, result.margin))
            out.append(result)
        return out

    def _random_q(self, rng: np.random.Generator) -> JointQ:
        space = SupportMap(self.src, u_size=self.src.x_size)
        return JointQ(space.expand(rng.dirichlet(np.ones(space.size))))

    def _samples(self):
        rng = trial_rng(self.seed, 0)
        for _ in range(DERIVATIVE_SAMPLES):
            q = self._random_q(rng)
            alpha = float(rng.uniform(0.05, 1.0))
            mu = float(rng.uniform(0.0, 1.0))
            lam = float(rng.uniform(0.1, 2.0))
            yield q, alpha, mu, lam

    def check_derivatives(self) -> Check:
        h = DERIVATIVE_STEP
        margin = math.inf
        for q, alpha, mu, lam in self._samples():
            mid = omega_of_q(q, self.src, TiltParams(alpha, mu, lam))
            hi = omega_of_q(q, self.src, TiltParams(alpha, mu, lam + h)).value
            lo = omega_of_q(q, self.src, TiltParams(alpha, mu, lam - h)).value
            d1 = (hi - lo) / (2.0 * h)
            d2 = (hi - 2.0 * mid.value + lo) / h ** 2
            margin = min(
                margin,
                1e-6 * (1.0 + abs(mid.d1)) - abs(d1 - mid.d1),
                1e-4 * (1.0 + abs(mid.d2)) - abs(d2 - mid.d2),
            )
        return Check("omega-derivatives", margin)

    def check_omega_endpoint(self) -> Check:
        worst = 0.0
        for q, alpha, mu, _ in self._samples():
            worst = max(worst, abs(omega_of_q(q, self.src, TiltParams(alpha, mu, 0.0)).value))
        return Check("omega-at-zero", 1e-12 - worst)

    def check_concavity(self) -> Check:
        worst = -math.inf
        grid = np.linspace(0.0, 5.0, 20)
        for q, alpha, mu, _ in self._samples():
            values = np.array([omega_of_q(q, self.src, TiltParams(alpha, mu, lam)).value for lam in grid])
            worst = max(worst, float(np.max(np.diff(values, 2))))
        return Check("omega-concavity", 1e-8 - worst)

    def check_closed_form(self) -> Check:
        """Omega of p_XY times a uniform reproduction, constant auxiliary."""
        src = self.src
        alpha, mu, lam = 0.5, 0.5, 1.0
        q = JointQ(np.einsum("xy,z->xyz", src.pxy, np.full(src.z_size, 1.0 / src.z_size))[None])
        got = omega_of_q(q, src, TiltParams(alpha, mu, lam)).value
        inner = src.px[:, None] * np.exp(-4.0 * alpha * mu * lam * src.dist) / src.z_size
        expected = -math.log(float(inner.sum()))
        return Check("omega-closed-form", 1e-12 - abs(got - expected))

    def check_spot_values(self) -> Check:
        return Check(
            "spot-values",
            min(
                1e-12 - abs(g_inverse(1.5) - 1.0),
                1e-3 - abs(kappa_n(1.0, 0.5, 1.0, 100) - 0.6258),
            ),
        )

    def check_sandwich(self) -> Check:
        alpha0 = sandwich_constants(self.src).alpha0
        margin = math.inf
        for alpha in (alpha0, alpha0 / 2.0):
            for mu in (0.25, 0.5, 1.0):
                r = sandwich_check(self.src, alpha, mu, self.cfg)
                margin = min(margin, r.mid - (r.lower - r.tol), r.upper + r.tol - r.mid)
        return Check("sandwich", margin)

    def check_tilt_chain(self) -> Check:
        rho = rho_estimate(self.src, self.cfg, grid=3)
        margin = math.inf
        for alpha in (0.25, 0.5, 1.0):
            for mu in (0.25, 0.5, 1.0):
                for lam in (0.1, 0.5, 1.0):
                    r = tilt_chain_margin(self.src, TiltParams(alpha, mu, lam), self.cfg, rho)
                    margin = min(margin, r.margin + 1e-6)
        return Check("tilt-chain", margin)

    def outside_points(self):
        """The origin and two points on the axes, a third of the way to the
        largest R^(mu) on the surface's curve."""
        top = max(r for _, r in self.surface.curve.entries)
        return [(0.0, 0.0), (top / 3.0, 0.0), (0.0, top / 3.0)]

    def check_exponent_geometry(self) -> Check:
        src = self.src
        surface = self.surface
        achievable = [(math.log(src.x_size), src.d_max), (0.0, src.d_max)]
        for mu in surface.curve.mus[:3]:
            s = surface.curve.solution(mu)
            achievable.append((s.info, s.distortion))
        margin = math.inf
        for R, Delta in achievable:
            margin = min(margin, 1e-3 - exponent_F(src, R, Delta, surface=surface).f_value)
        for R, Delta in self.outside_points():
            membership = region_membership(src, R, Delta, surface.curve.mus, self.cfg, curve=surface.curve)
            if membership.worst_violation < OUTSIDE_GAP:
                margin = min(margin, membership.worst_violation - OUTSIDE_GAP)
                continue
            f = exponent_F(src, R, Delta, surface=surface).f_value
            margin = min(margin, f if f > 0 else -1.0)
        return Check("exponent-geometry", margin)

    def check_theorem(self) -> Check:
        margin = math.inf
        for R, Delta in THEOREM_POINTS:
            f_hat = exponent_F(self.src, R, Delta, surface=self.surface)
            for row in verify_theorem(self.src, [1, 2, 3], R, Delta, f_hat):
                margin = min(margin, row.margin)
        return Check("theorem", margin)

    def check_subadditivity(self) -> Check:
        R, Delta = SUBADDITIVITY_POINT
        rows = subadditivity_check(self.src, R, Delta, SUBADDITIVITY_PAIRS)
        margin = min(row.margin for row in rows)
        return Check("subadditivity", margin if not math.isnan(margin) else -1.0)

    def check_spectrum(self) -> Check:
        n = 2
        space = BlockSpace(self.src, n)
        margin = math.inf
        for trial in range(SPECTRUM_CHOICES):
            rng = trial_rng(self.seed, 100 + trial)
            encoder = rng.integers(0, 2, size=space.x_count)
            m = int(encoder.max()) + 1
            choices = SpectrumChoices.random(rng, m, space)
            for eta in SPECTRUM_ETAS:
                r = spectrum_lemma_check(self.src, encoder, n, eta, q_choices=choices)
                margin = min(margin, min(r.bound + 1e-12 - p for p in r.probabilities))
        return Check("spectrum-lemma", margin)

    def check_spectrum_bound(self) -> Check:
        n = 2
        space = BlockSpace(self.src, n)
        margin = math.inf
        for trial in range(SPECTRUM_CHOICES):
            rng = trial_rng(self.seed, 300 + trial)
            encoder = rng.integers(0, 2, size=space.x_count)
            Delta = float(rng.uniform(0.0, self.src.d_max))
            decoder = optimal_decoder_for(encoder, self.src, n, 2, Delta, space=space)
            scheme = CodingScheme(n, 2, encoder, decoder)
            choices = SpectrumChoices.random(rng, 2, space) if trial % 2 else None
            for eta in SPECTRUM_ETAS:
                r = spectrum_bound_check(self.src, scheme, Delta, eta, q_choices=choices)
                margin = min(margin, r.margin + 1e-12)
        return Check("spectrum-bound", margin)

    def check_markov(self) -> Check:
        worst = 0.0
        for n in (2, 3):
            x_count = self.src.x_size ** n
            for trial in range(MARKOV_ENCODERS):
                encoder = trial_rng(self.seed, 200 + trial).integers(0, 2, size=x_count)
                worst = max(worst, markov_lemma_check(self.src, encoder, n))
        return Check("markov-lemma", 1e-12 - worst)

    def check_recursion(self) -> Check:
        margin = math.inf
        for n in (1, 2):
            x_count = self.src.x_size ** n
            encoder = np.arange(x_count) % 2
            decoder = optimal_decoder_for(encoder, self.src, n, 2, self.src.d_max / 2.0)
            scheme = CodingScheme(n, 2, encoder, decoder)
            r = recursion_check(self.src, scheme, None, 0.5, 0.5, 0.5, cfg=self.cfg)
            margin = min(margin, 1e-10 - r.lambda_product_residual, r.prop2_margin + 1e-6)
        return Check("recursion", margin)
