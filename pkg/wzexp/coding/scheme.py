import math

import numpy as np

from wzexp.shared import WzValidationError
from wzexp.prob import SourceModel
from .blocks import BlockSpace, guard


def codebook_size(n: int, R: float) -> int:
    """M_n = floor(exp(nR)); the 1e-9 nudge keeps exp(n ln k) from
    rounding just below k."""
    if R < 0:
        raise WzValidationError("rate must be non-negative, got %r" % R)
    return int(math.floor(math.exp(n * R) + 1e-9))


class CodingScheme:
    """Encoder table over lexicographic x^n indices; decoder[s, y^n] is the
    lexicographic index of z^n."""

    def __init__(self, n: int, m: int, encoder, decoder) -> None:
        encoder = np.asarray(encoder, dtype=np.int64)
        decoder = np.asarray(decoder, dtype=np.int64)
        if m < 1:
            raise WzValidationError("codebook size must be positive")
        if encoder.ndim != 1 or np.any(encoder < 0) or np.any(encoder >= m):
            raise WzValidationError("encoder values must lie in 0..%d" % (m - 1))
        if decoder.ndim != 2 or decoder.shape[0] != m:
            raise WzValidationError("decoder must have one row per message")
        self.n = int(n)
        self.m = int(m)
        self.encoder = encoder
        self.decoder = decoder

    @property
    def rate(self) -> float:
        return math.log(self.m) / self.n

    def __repr__(self):
        return "CodingScheme(n=%d, m=%d, encoder=%s)" % (
            self.n,
            self.m,
            "".join(str(s) for s in self.encoder[:32]),
        )

    def serialize(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "encoder": self.encoder.tolist(),
            "decoder": self.decoder.tolist(),
        }


class SimReport:
    def __init__(self, scheme: CodingScheme, Delta: float, p_c: float, p_e: float) -> None:
        self.scheme = scheme
        self.n = scheme.n
        self.m = scheme.m
        self.Delta = Delta
        self.p_c = p_c
        self.p_e = p_e
        self.g_n = -math.log(p_c) / scheme.n if p_c > 0 else math.inf
        self.f_hat = None
        self.margin = None

    def compare(self, f_hat: float, slack: float = 1e-9) -> None:
        """Records the margin of P_c below 5 exp(-n F-hat)."""
        self.f_hat = f_hat
        self.margin = 5.0 * math.exp(-self.n * f_hat) + slack - self.p_c

    def __repr__(self):
        return "SimReport(n=%d, m=%d, p_c=%.12g, g_n=%.9g)" % (self.n, self.m, self.p_c, self.g_n)


def _check_scheme(scheme: CodingScheme, space: BlockSpace) -> None:
    if scheme.encoder.size != space.x_count:
        raise WzValidationError(
            "encoder has %d entries, expected %d" % (scheme.encoder.size, space.x_count)
        )
    if scheme.decoder.shape[1] != space.y_count:
        raise WzValidationError("decoder has the wrong number of side-information columns")
    if np.any(scheme.decoder < 0) or np.any(scheme.decoder >= space.z_count):
        raise WzValidationError("decoder entries out of range")


def pc_exact(scheme: CodingScheme, src: SourceModel, Delta: float, space: BlockSpace = None) -> SimReport:
    if space is None:
        space = BlockSpace(src, scheme.n)
    _check_scheme(scheme, space)
    z = scheme.decoder[scheme.encoder[:, None], np.arange(space.y_count)[None, :]]
    d = np.take_along_axis(space.dist, z, axis=1)
    hit = d < scheme.n * Delta
    p_c = float(space.pxy[hit].sum())
    p_e = float(space.pxy[~hit].sum())
    return SimReport(scheme, Delta, p_c, p_e)


def decoder_scores(encoder: np.ndarray, m: int, space: BlockSpace, Delta: float) -> np.ndarray:
    """score[s, y^n, z^n] = sum over x^n in bin s of p(x^n, y^n) 1{correct}."""
    guard("decoder table cells", m * space.y_count * max(space.x_count, space.z_count))
    w = np.zeros((m, space.y_count, space.x_count))
    w[encoder, :, np.arange(space.x_count)] = space.pxy
    return w @ space.correct(Delta)


def optimal_decoder_for(
    encoder,
    src: SourceModel,
    n: int,
    m: int,
    Delta: float,
    space: BlockSpace = None,
) -> np.ndarray:
    """Per (s, y^n), the z^n maximizing the correct-decoding mass; ties go
    to the lexicographically smallest z^n."""
    if space is None:
        space = BlockSpace(src, n)
    encoder = np.asarray(encoder, dtype=np.int64)
    return np.argmax(decoder_scores(encoder, m, space, Delta), axis=-1)
