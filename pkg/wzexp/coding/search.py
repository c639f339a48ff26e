import math
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from wzexp.shared import Debuggable, WzValidationError
from wzexp.prob import SourceModel
from .blocks import ENUMERATION_LIMIT, BlockSpace, guard
from .scheme import (
    CodingScheme,
    SimReport,
    codebook_size,
    decoder_scores,
    optimal_decoder_for,
    pc_exact,
)

ENCODER_LIMIT = 2 ** 20
MC_CHUNK = 64
Z_95 = float(norm.ppf(0.975))


def encoder_count(size: int, m: int) -> int:
    """Number of encoders up to relabeling of messages: set partitions of
    `size` items into at most m blocks."""
    row = [1] + [0] * m  # S(0, k)
    for _ in range(size):
        nxt = [0] * (m + 1)
        for k in range(1, m + 1):
            nxt[k] = k * row[k] + row[k - 1]
        row = nxt
    return sum(row[1:])


def canonical_encoders(size: int, m: int) -> Iterator[np.ndarray]:
    """Restricted-growth strings: a[0] = 0 and a[i] <= 1 + max(a[:i]),
    all below m. Each message relabeling class appears once."""
    a = [0] * size
    top = [1] * size  # top[i] = 1 + max(a[:i]) for i >= 1
    while True:
        yield np.array(a, dtype=np.int64)
        i = size - 1
        while i > 0 and (a[i] + 1 > top[i] or a[i] + 1 >= m):
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for j in range(i + 1, size):
            a[j] = 0
            top[j] = max(top[j - 1], a[j - 1] + 1)


class ExhaustiveResult:
    def __init__(self, report: SimReport, encoders_checked: int) -> None:
        self.report = report
        self.scheme = report.scheme
        self.g_n = report.g_n
        self.p_c = report.p_c
        self.encoders_checked = encoders_checked

    def __repr__(self):
        return "ExhaustiveResult(g_n=%.9g, p_c=%.12g, encoders=%d)" % (
            self.g_n,
            self.p_c,
            self.encoders_checked,
        )


class CodeSearch(Debuggable):
    name = "search"

    def __init__(self, src: SourceModel, debug: bool = False) -> None:
        super().__init__(debug)
        self.src = src
        self._spaces: Dict[int, BlockSpace] = {}

    def space(self, n: int) -> BlockSpace:
        if n not in self._spaces:
            self._spaces[n] = BlockSpace(self.src, n)
        return self._spaces[n]

    def exhaustive(self, n: int, R: float, Delta: float) -> ExhaustiveResult:
        space = self.space(n)
        m = codebook_size(n, R)
        if m < 1:
            raise WzValidationError("rate %r leaves no codeword at n=%d" % (R, n))
        m = min(m, space.x_count)
        guard("encoders", encoder_count(space.x_count, m), ENCODER_LIMIT)
        best_pc, best_encoder, checked = -1.0, None, 0
        for encoder in canonical_encoders(space.x_count, m):
            p_c = float(decoder_scores(encoder, m, space, Delta).max(axis=-1).sum())
            checked += 1
            if p_c > best_pc:
                best_pc, best_encoder = p_c, encoder
        decoder = optimal_decoder_for(best_encoder, self.src, n, m, Delta, space=space)
        report = pc_exact(CodingScheme(n, m, best_encoder, decoder), self.src, Delta, space=space)
        self._debug("n=%d m=%d: %d encoders, best p_c=%.12g" % (n, m, checked, report.p_c))
        return ExhaustiveResult(report, checked)


def g_n_exhaustive(src: SourceModel, n: int, R: float, Delta: float, debug: bool = False) -> ExhaustiveResult:
    """G^(n): the best exponent of P_c over all (encoder, decoder) pairs."""
    return CodeSearch(src, debug=debug).exhaustive(n, R, Delta)


class BinningEstimate:
    def __init__(self, g_n: float, half_width: float, p_c: float, exact: bool, best: SimReport, trials: int) -> None:
        self.g_n = g_n
        self.half_width = half_width
        self.p_c = p_c
        self.exact = exact
        self.best = best
        self.trials = trials

    def __repr__(self):
        return "BinningEstimate(g_n=%.9g +- %.3g, exact=%r)" % (self.g_n, self.half_width, self.exact)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _mc_correct_rate(src: SourceModel, n: int, encoder: np.ndarray, Delta: float, samples: int, rng) -> float:
    """Monte-Carlo P_c for a bin-MAP decoder followed by per-letter
    reproduction z_t = argmin_z d(x_hat_t, z)."""
    xs = np.indices((src.x_size,) * n).reshape(n, -1).T
    with np.errstate(divide="ignore"):
        logp = np.log(src.pxy)
    reproduce = np.argmin(src.dist, axis=1)
    cells = rng.choice(src.pxy.size, size=(samples, n), p=src.pxy.reshape(-1))
    x_letters, y_letters = np.divmod(cells, src.y_size)
    weights = src.x_size ** np.arange(n - 1, -1, -1)
    x_index = x_letters @ weights
    hits = 0
    for lo in range(0, samples, MC_CHUNK):
        y = y_letters[lo : lo + MC_CHUNK]
        score = np.zeros((y.shape[0], xs.shape[0]))
        for t in range(n):
            score += logp[xs[:, t][None, :], y[:, t][:, None]]
        s = encoder[x_index[lo : lo + MC_CHUNK]]
        score[encoder[None, :] != s[:, None]] = -np.inf
        x_hat = xs[np.argmax(score, axis=1)]
        z = reproduce[x_hat]
        d = src.dist[x_letters[lo : lo + MC_CHUNK], z].sum(axis=1)
        hits += int(np.count_nonzero(d < n * Delta))
    return hits / samples


def g_n_random_binning(
    src: SourceModel,
    n: int,
    R: float,
    Delta: float,
    trials: int,
    seed: int,
    samples: int = 10000,
) -> BinningEstimate:
    """Best exponent over `trials` uniformly random encoders.

    Exact P_c with the optimal decoder while the block tables fit the
    enumeration guard; Monte-Carlo with a bin-MAP decoder beyond it.
    """
    if int(trials) != trials or trials < 1:
        raise WzValidationError("trials must be a positive integer")
    x_count = src.x_size ** n
    guard("encoder table entries", x_count)
    m = min(codebook_size(n, R), x_count)
    y_count, z_count = src.y_size ** n, src.z_size ** n
    exact = (
        x_count * y_count <= ENUMERATION_LIMIT
        and x_count * z_count <= ENUMERATION_LIMIT
        and m * y_count * max(x_count, z_count) <= ENUMERATION_LIMIT
    )
    if exact:
        space = BlockSpace(src, n)
        best = None
        for t in range(trials):
            encoder = trial_rng(seed, t).integers(0, m, size=x_count)
            decoder = optimal_decoder_for(encoder, src, n, m, Delta, space=space)
            report = pc_exact(CodingScheme(n, m, encoder, decoder), src, Delta, space=space)
            if best is None or report.p_c > best.p_c:
                best = report
        return BinningEstimate(best.g_n, 0.0, best.p_c, True, best, trials)
    best_p = -1.0
    for t in range(trials):
        rng = trial_rng(seed, t)
        encoder = rng.integers(0, m, size=x_count)
        best_p = max(best_p, _mc_correct_rate(src, n, encoder, Delta, samples, rng))
    if best_p <= 0:
        return BinningEstimate(math.inf, math.inf, 0.0, False, None, trials)
    g_n = -math.log(best_p) / n
    half_width = Z_95 * math.sqrt((1.0 - best_p) / (samples * best_p)) / n
    return BinningEstimate(g_n, half_width, best_p, False, None, trials)


class TheoremRow:
    def __init__(self, report: SimReport, f_hat: float, slack: float) -> None:
        report.compare(f_hat, slack)
        self.report = report
        self.n = report.n
        self.m = report.m
        self.p_c = report.p_c
        self.g_n = report.g_n
        self.f_hat = f_hat
        self.bound = 5.0 * math.exp(-report.n * f_hat)
        self.margin = report.margin
        self.passed = self.margin >= 0

    def __repr__(self):
        return "TheoremRow(n=%d, p_c=%.9g, bound=%.9g, passed=%r)" % (
            self.n,
            self.p_c,
            self.bound,
            self.passed,
        )


def verify_theorem(
    src: SourceModel,
    n_list: Sequence[int],
    R: float,
    Delta: float,
    f_hat,
    slack: float = 1e-9,
) -> List[TheoremRow]:
    """P_c of the best scheme at each n against 5 exp(-n F-hat); the best
    scheme passing implies every scheme passes."""
    search = CodeSearch(src)
    return [TheoremRow(search.exhaustive(n, R, Delta).report, f_hat.f_value, slack) for n in n_list]


class SubadditivityRow:
    def __init__(self, n: int, m: int, g_n: float, g_m: float, g_nm: float, slack: float) -> None:
        self.n = n
        self.m = m
        self.g_n = g_n
        self.g_m = g_m
        self.g_nm = g_nm
        self.margin = (n * g_n + m * g_m) / (n + m) + slack - g_nm
        self.passed = self.margin >= 0


def subadditivity_check(
    src: SourceModel,
    R: float,
    Delta: float,
    pairs: Sequence[Tuple[int, int]],
    slack: float = 1e-9,
) -> List[SubadditivityRow]:
    search = CodeSearch(src)
    cache: Dict[int, float] = {}

    def g(n: int) -> float:
        if n not in cache:
            cache[n] = search.exhaustive(n, R, Delta).g_n
        return cache[n]

    return [SubadditivityRow(n, m, g(n), g(m), g(n + m), slack) for n, m in pairs]
