import numpy as np

from wzexp.shared import WzGuardError, WzValidationError
from wzexp.prob import SourceModel

ENUMERATION_LIMIT = 10 ** 7


def guard(what: str, count: int, limit: int = ENUMERATION_LIMIT) -> None:
    if count > limit:
        raise WzGuardError(what, count, limit)


def sequences(size: int, n: int) -> np.ndarray:
    """All length-n sequences over range(size), lexicographic, as rows."""
    return np.indices((size,) * n).reshape(n, -1).T


class BlockSpace:
    """Blocklength-n view of a source: enumerated sequences, the product
    law p(x^n, y^n) and the additive distortion d(x^n, z^n)."""

    def __init__(self, src: SourceModel, n: int) -> None:
        if int(n) != n or n < 1:
            raise WzValidationError("blocklength must be a positive integer, got %r" % n)
        self.src = src
        self.n = int(n)
        self.x_count = src.x_size ** n
        self.y_count = src.y_size ** n
        self.z_count = src.z_size ** n
        guard("x^n y^n pairs", self.x_count * self.y_count)
        guard("x^n z^n pairs", self.x_count * self.z_count)
        self.xs = sequences(src.x_size, n)
        self.ys = sequences(src.y_size, n)
        self.zs = sequences(src.z_size, n)
        self.pxy = np.ones((self.x_count, self.y_count))
        self.dist = np.zeros((self.x_count, self.z_count))
        for t in range(n):
            self.pxy *= src.pxy[self.xs[:, t][:, None], self.ys[:, t][None, :]]
            self.dist += src.dist[self.xs[:, t][:, None], self.zs[:, t][None, :]]
        self.px = self.pxy.sum(axis=1)
        self.py = self.pxy.sum(axis=0)

    def correct(self, Delta: float) -> np.ndarray:
        """1{d(x^n, z^n) < n Delta} as a float matrix."""
        return (self.dist < self.n * Delta).astype(np.float64)
