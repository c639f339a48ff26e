import hashlib
import json
from typing import List

import numpy as np

from wzexp.shared import WzValidationError

TOLERANCE = 1e-12


def _cond(joint: np.ndarray, marginal: np.ndarray) -> np.ndarray:
    """Divides rows of `joint` by `marginal`; zero-mass rows stay zero."""
    out = np.zeros_like(joint)
    mask = marginal > 0
    out[mask] = joint[mask] / marginal[mask][:, None]
    return out


class SourceModel:
    """A finite-alphabet source p_XY together with its distortion d(x,z).

    Derived tables are computed once; instances are treated as immutable.
    Rows of `py_x` (resp. `px_y`) belonging to zero-mass letters are all
    zeros and must never be read.
    """

    def __init__(self, pxy, dist) -> None:
        try:
            pxy = np.array(pxy, dtype=np.float64)
            dist = np.array(dist, dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise WzValidationError("malformed table: %s" % e)
        if pxy.ndim != 2 or pxy.size == 0:
            raise WzValidationError("pxy must be a non-empty matrix")
        if dist.ndim != 2 or dist.shape[0] != pxy.shape[0] or dist.shape[1] == 0:
            raise WzValidationError(
                "dist must be x_size by z_size, got %r for x_size %d"
                % (dist.shape, pxy.shape[0])
            )
        if not np.all(np.isfinite(pxy)) or np.any(pxy < 0):
            raise WzValidationError("pxy has a negative or non-finite entry")
        total = pxy.sum()
        if abs(total - 1.0) > TOLERANCE:
            raise WzValidationError("pxy sums to %.15g, not 1" % total)
        if not np.all(np.isfinite(dist)):
            raise WzValidationError("dist has a non-finite entry")
        if np.any(dist < 0):
            raise WzValidationError("dist has a negative entry")
        self.pxy = pxy
        self.dist = dist
        self.x_size, self.y_size = pxy.shape
        self.z_size = dist.shape[1]
        self.d_max = float(dist.max())
        self.px = pxy.sum(axis=1)
        self.py = pxy.sum(axis=0)
        self.py_x = _cond(pxy, self.px)
        self.px_y = _cond(pxy.T, self.py).T
        self.pxy.setflags(write=False)
        self.dist.setflags(write=False)

    def __repr__(self):
        return "SourceModel(x_size=%d, y_size=%d, z_size=%d, d_max=%g)" % (
            self.x_size,
            self.y_size,
            self.z_size,
            self.d_max,
        )

    @property
    def xyz(self) -> int:
        return self.x_size * self.y_size * self.z_size

    @property
    def support(self) -> np.ndarray:
        return self.pxy > 0

    def serialize(self) -> dict:
        return {
            "x_size": self.x_size,
            "y_size": self.y_size,
            "z_size": self.z_size,
            "pxy": self.pxy.tolist(),
            "dist": self.dist.tolist(),
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.serialize(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    @classmethod
    def deserialize(cls, obj) -> "SourceModel":
        if not isinstance(obj, dict):
            raise WzValidationError("source must be a JSON object")
        for key in ("x_size", "y_size", "z_size", "pxy", "dist"):
            if key not in obj:
                raise WzValidationError("missing field '%s'" % key)
        src = cls(obj["pxy"], obj["dist"])
        declared = (obj["x_size"], obj["y_size"], obj["z_size"])
        if declared != (src.x_size, src.y_size, src.z_size):
            raise WzValidationError(
                "declared sizes %r do not match tables %r"
                % (declared, (src.x_size, src.y_size, src.z_size))
            )
        return src

    @staticmethod
    def hamming(x_size: int, z_size: int = None) -> List[List[float]]:
        if z_size is None:
            z_size = x_size
        return [[0.0 if x == z else 1.0 for z in range(z_size)] for x in range(x_size)]

    @classmethod
    def dsbs(cls, p: float) -> "SourceModel":
        """Doubly symmetric binary source with crossover p, Hamming distortion."""
        if not 0.0 <= p <= 1.0:
            raise WzValidationError("crossover %r outside [0,1]" % p)
        pxy = [[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]]
        return cls(pxy, cls.hamming(2))


def load_source(path: str) -> SourceModel:
    try:
        with open(path, "r") as f:
            obj = json.load(f)
    except OSError as e:
        raise WzValidationError("cannot read %s: %s" % (path, e))
    except json.JSONDecodeError as e:
        raise WzValidationError("cannot parse %s: %s" % (path, e))
    return SourceModel.deserialize(obj)
