from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence

import numpy as np

from wzexp.shared import Debuggable, WzRuntimeError, WzValidationError

GRADIENT_STEP = 1e-6
GRID_POINTS = 21
MAX_GRID_DIMENSION = 4
MIN_STEP = 1e-10


class OptimizerConfig:
    def __init__(
        self,
        starts: int = 16,
        max_iters: int = 2000,
        step0: float = 0.5,
        tol: float = 1e-9,
        seed: int = 0,
        floor: float = 1e-12,
        jobs: int = 1,
        debug: bool = False,
    ) -> None:
        for name, value in (("starts", starts), ("max_iters", max_iters), ("jobs", jobs)):
            if int(value) != value or value < 1:
                raise WzValidationError("%s must be a positive integer, got %r" % (name, value))
        for name, value in (("step0", step0), ("tol", tol), ("floor", floor)):
            if not value > 0:
                raise WzValidationError("%s must be positive, got %r" % (name, value))
        self.starts = int(starts)
        self.max_iters = int(max_iters)
        self.step0 = float(step0)
        self.tol = float(tol)
        self.seed = int(seed)
        self.floor = float(floor)
        self.jobs = int(jobs)
        self.debug = debug

    def __repr__(self):
        return (
            "OptimizerConfig(starts=%d, max_iters=%d, step0=%g, tol=%g, seed=%d, floor=%g)"
            % (self.starts, self.max_iters, self.step0, self.tol, self.seed, self.floor)
        )

    def replace(self, **changes) -> "OptimizerConfig":
        fields = dict(vars(self))
        fields.update(changes)
        return OptimizerConfig(**fields)


class OptimizerReport:
    def __init__(
        self,
        best_value: float,
        argmin: np.ndarray,
        iterations_used: int,
        starts_improved: int,
        converged: bool,
        history: List[float],
    ) -> None:
        self.best_value = best_value
        self.argmin = argmin
        self.iterations_used = iterations_used
        self.starts_improved = starts_improved
        self.converged = converged
        self.history = history

    def __repr__(self):
        return "OptimizerReport(best_value=%.12g, iterations_used=%d, converged=%r)" % (
            self.best_value,
            self.iterations_used,
            self.converged,
        )


class _Start:
    def __init__(self, x, value, iterations, converged, history) -> None:
        self.x = x
        self.value = value
        self.iterations = iterations
        self.converged = converged
        self.history = history


class Simplex(Debuggable):
    """Product of probability simplices with block sizes `shape`.

    Objectives take a flat point of length sum(shape); batched objectives
    take a (k, sum(shape)) stack and return k values.
    """

    name = "optimizer"

    def __init__(
        self,
        objective: Callable,
        shape: Sequence[int],
        cfg: OptimizerConfig,
        batched: bool = False,
    ) -> None:
        super().__init__(cfg.debug)
        shape = [int(k) for k in shape]
        if len(shape) == 0 or any(k < 1 for k in shape):
            raise WzValidationError("simplex shape must be non-empty, got %r" % (shape,))
        self.shape = shape
        self.dim = sum(shape)
        if cfg.floor * self.dim >= 1:
            raise WzValidationError("floor %g too large for %d coordinates" % (cfg.floor, self.dim))
        self.block = np.repeat(np.arange(len(shape)), shape)
        self.objective = objective
        self.cfg = cfg
        self.batched = batched

    def normalize(self, x: np.ndarray) -> np.ndarray:
        x = np.maximum(np.asarray(x, dtype=np.float64), self.cfg.floor)
        sums = np.bincount(self.block, weights=x, minlength=len(self.shape))
        return x / sums[self.block]

    def values(self, points: np.ndarray) -> np.ndarray:
        if self.batched:
            out = np.asarray(self.objective(points), dtype=np.float64).reshape(-1)
        else:
            out = np.array([float(self.objective(p)) for p in points])
        if np.any(np.isnan(out)):
            raise WzRuntimeError("objective returned NaN")
        return out

    def value(self, x: np.ndarray) -> float:
        return float(self.values(x[None, :])[0])

    def gradient(self, x: np.ndarray) -> np.ndarray:
        h = GRADIENT_STEP
        plus = np.repeat(x[None, :], self.dim, axis=0)
        minus = plus.copy()
        idx = np.arange(self.dim)
        plus[idx, idx] += h
        central = x > h
        minus[idx[central], idx[central]] -= h
        width = np.where(central, 2 * h, h)
        vals = self.values(np.concatenate([plus, minus]))
        g = (vals[: self.dim] - vals[self.dim :]) / width
        return np.nan_to_num(g, nan=0.0, posinf=1e300, neginf=-1e300)

    def descend(self, start: np.ndarray) -> _Start:
        cfg = self.cfg
        x = self.normalize(start)
        val = self.value(x)
        history = [val]
        step = cfg.step0
        g = None
        converged = False
        it = 0
        while it < cfg.max_iters:
            it += 1
            if g is None:
                g = self.gradient(x)
            scale = np.abs(g).max()
            if not scale > 0:
                converged = True
                break
            y = -step * g / scale
            trial = self.normalize(x * np.exp(y - y.max()))
            tval = self.value(trial)
            if tval < val:
                gain = val - tval
                x, val, g = trial, tval, None
                history.append(val)
                step = min(1.5 * step, cfg.step0)
                if gain < cfg.tol:
                    converged = True
                    break
            else:
                step *= 0.5
                if step < MIN_STEP:
                    converged = True
                    break
        return _Start(x, val, it, converged, history)

    def random_start(self, rng: np.random.Generator) -> np.ndarray:
        return np.concatenate([rng.dirichlet(np.ones(k)) for k in self.shape])

    def run(self, warm_starts: Sequence[np.ndarray] = None) -> OptimizerReport:
        starts = []
        for w in warm_starts or []:
            w = np.asarray(w, dtype=np.float64).reshape(-1)
            if w.size != self.dim:
                raise WzValidationError(
                    "warm start has %d coordinates, expected %d" % (w.size, self.dim)
                )
            starts.append(w)
        rng = np.random.default_rng(self.cfg.seed)
        starts.extend(self.random_start(rng) for _ in range(self.cfg.starts))
        if self.cfg.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.jobs) as pool:
                results = list(pool.map(self.descend, starts))
        else:
            results = [self.descend(s) for s in starts]
        best = None
        improved = 0
        for i, r in enumerate(results):
            self._debug("start %d: %.12g after %d iterations" % (i, r.value, r.iterations))
            if best is None or r.value < best.value:
                best = r
                improved += 1
        argmin = self.normalize(best.x)
        return OptimizerReport(
            best_value=self.value(argmin),
            argmin=argmin,
            iterations_used=sum(r.iterations for r in results),
            starts_improved=improved,
            converged=best.converged,
            history=best.history,
        )


def minimize(
    objective: Callable,
    shape: Sequence[int],
    cfg: OptimizerConfig,
    warm_starts: Sequence[np.ndarray] = None,
    batched: bool = False,
) -> OptimizerReport:
    """Multi-start exponentiated-gradient descent over a product of simplices.

    The result is the best point found, which for nonconvex objectives is
    an estimate from above of the true minimum.
    """
    return Simplex(objective, shape, cfg, batched=batched).run(warm_starts)


def grid_refine(
    objective: Callable,
    shape: Sequence[int],
    coarse_result: OptimizerReport,
    levels: int,
    batched: bool = False,
    width: float = 0.05,
    floor: float = 1e-12,
) -> OptimizerReport:
    """Nested 21-point-per-axis grids around `coarse_result.argmin`; each
    level shrinks the half-width tenfold."""
    shape = [int(k) for k in shape]
    free = sum(k - 1 for k in shape)
    if free > MAX_GRID_DIMENSION:
        raise WzValidationError(
            "grid refinement supports at most %d free dimensions, got %d"
            % (MAX_GRID_DIMENSION, free)
        )
    if levels < 0:
        raise WzValidationError("levels must be non-negative")
    if levels == 0 or free == 0:
        return coarse_result
    space = Simplex(objective, shape, OptimizerConfig(floor=floor), batched=batched)
    ends = np.cumsum(shape)
    lasts = ends - 1
    keep = np.ones(space.dim, dtype=bool)
    keep[lasts] = False
    best_x = np.asarray(coarse_result.argmin, dtype=np.float64)
    best_value = coarse_result.best_value
    evaluations = 0
    for _ in range(levels):
        axis = np.linspace(-width, width, GRID_POINTS)
        mesh = np.stack(np.meshgrid(*([axis] * free), indexing="ij"), axis=-1)
        points = np.repeat(best_x[None, :], mesh.size // free, axis=0)
        points[:, keep] += mesh.reshape(-1, free)
        starts = ends - np.asarray(shape)
        for b, last in enumerate(lasts):
            points[:, last] = 1.0 - points[:, starts[b] : last].sum(axis=1)
        points = points[np.all(points >= floor, axis=1)]
        if points.shape[0] > 0:
            vals = space.values(points)
            evaluations += vals.size
            i = int(np.argmin(vals))
            if vals[i] < best_value:
                best_value = float(vals[i])
                best_x = points[i]
        width /= 10.0
    return OptimizerReport(
        best_value=best_value,
        argmin=best_x,
        iterations_used=coarse_result.iterations_used + evaluations,
        starts_improved=coarse_result.starts_improved,
        converged=coarse_result.converged,
        history=coarse_result.history + [best_value],
    )
