from typing import Iterable

import numpy as np

from wzexp.shared import WzValidationError
from .source import SourceModel, TOLERANCE


def ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """num / den with 0 wherever den is 0."""
    shape = np.broadcast(num, den).shape
    return np.divide(num, den, out=np.zeros(shape), where=den > 0)


class JointQ:
    """A joint distribution q(u,x,y,z), stored with axes in that order."""

    def __init__(
        self,
        q,
        src: SourceModel = None,
        support: bool = False,
        bounded: bool = False,
    ) -> None:
        q = np.array(q, dtype=np.float64)
        if q.ndim != 4 or q.size == 0:
            raise WzValidationError("q must be a non-empty U x X x Y x Z tensor")
        if not np.all(np.isfinite(q)) or np.any(q < 0):
            raise WzValidationError("q has a negative or non-finite entry")
        total = q.sum()
        if abs(total - 1.0) > TOLERANCE:
            raise WzValidationError("q sums to %.15g, not 1" % total)
        if src is not None:
            if q.shape[1:] != (src.x_size, src.y_size, src.z_size):
                raise WzValidationError(
                    "q shape %r does not match source alphabets" % (q.shape,)
                )
            if support and np.any(q.sum(axis=(0, 3))[~src.support] > 0):
                raise WzValidationError("q_XY puts mass outside the support of p_XY")
            if bounded and q.shape[0] > src.xyz:
                raise WzValidationError(
                    "u_size %d exceeds |X||Y||Z| = %d" % (q.shape[0], src.xyz)
                )
        q.setflags(write=False)
        self.q = q

    def __repr__(self):
        return "JointQ(u_size=%d, shape=%r)" % (self.u_size, self.q.shape)

    @property
    def u_size(self) -> int:
        return self.q.shape[0]

    @property
    def quxy(self) -> np.ndarray:
        return self.q.sum(axis=3)

    def embed(self, u_size: int) -> "JointQ":
        """Pads the U axis with zero-mass letters up to u_size."""
        if u_size < self.u_size:
            raise WzValidationError(
                "cannot embed u_size %d into %d" % (self.u_size, u_size)
            )
        out = np.zeros((u_size,) + self.q.shape[1:])
        out[: self.u_size] = self.q
        return JointQ(out)

    @classmethod
    def with_decoder(cls, quxy, decoder, z_size: int) -> "JointQ":
        """Attaches a deterministic reproduction z = decoder[u, y] to q(u,x,y)."""
        quxy = np.asarray(quxy, dtype=np.float64)
        decoder = np.asarray(decoder, dtype=np.int64)
        u_size, x_size, y_size = quxy.shape
        q = np.zeros((u_size, x_size, y_size, z_size))
        uu, yy = np.meshgrid(np.arange(u_size), np.arange(y_size), indexing="ij")
        for x in range(x_size):
            q[uu, x, yy, decoder] = quxy[:, x, :]
        return cls(q)

    @classmethod
    def product(cls, factors: Iterable[np.ndarray]) -> "JointQ":
        """Independent product of four marginals over U, X, Y and Z."""
        pu, px, py, pz = [np.asarray(f, dtype=np.float64) for f in factors]
        return cls(np.einsum("u,x,y,z->uxyz", pu, px, py, pz))


class SupportMap:
    """Flat coordinates for the cells of a U x X x Y x Z tensor whose (x,y)
    lie in the support of p_XY. Optimizers work on the flat vector."""

    def __init__(self, src: SourceModel, u_size: int = None) -> None:
        self.u_size = src.xyz if u_size is None else u_size
        self.shape = (self.u_size, src.x_size, src.y_size, src.z_size)
        mask = np.broadcast_to(src.support[None, :, :, None], self.shape)
        self.index = np.flatnonzero(mask)
        self.size = self.index.size

    def expand(self, flat: np.ndarray) -> np.ndarray:
        """(..., size) -> (..., U, X, Y, Z)"""
        flat = np.asarray(flat)
        lead = flat.shape[:-1]
        out = np.zeros(lead + (int(np.prod(self.shape)),))
        out[..., self.index] = flat
        return out.reshape(lead + self.shape)

    def compress(self, q: JointQ) -> np.ndarray:
        if q.u_size > self.u_size:
            raise WzValidationError(
                "u_size %d does not fit into %d" % (q.u_size, self.u_size)
            )
        if q.u_size < self.u_size:
            q = q.embed(self.u_size)
        return q.q.reshape(-1)[self.index].copy()
