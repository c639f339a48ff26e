import math

import numpy as np
from scipy.special import logsumexp

from wzexp.shared import WzValidationError
from wzexp.prob import JointQ, Marginals, SourceModel

AXES4 = (-4, -3, -2, -1)


class TiltParams:
    """(alpha, mu, lambda). lambda = 0 stands for the lambda -> 0 endpoint,
    where every exponent value vanishes."""

    def __init__(self, alpha: float, mu: float, lam: float) -> None:
        if not 0.0 < alpha <= 1.0:
            raise WzValidationError("alpha %r outside (0,1]" % alpha)
        if not 0.0 <= mu <= 1.0:
            raise WzValidationError("mu %r outside [0,1]" % mu)
        if not (lam >= 0.0 and math.isfinite(lam)):
            raise WzValidationError("lambda %r must be finite and non-negative" % lam)
        self.alpha = float(alpha)
        self.mu = float(mu)
        self.lam = float(lam)

    def __repr__(self):
        return "TiltParams(alpha=%.6g, mu=%.6g, lam=%.6g)" % (self.alpha, self.mu, self.lam)

    def __eq__(self, other):
        if not isinstance(other, TiltParams):
            return NotImplemented
        return (self.alpha, self.mu, self.lam) == (other.alpha, other.mu, other.lam)

    @property
    def abar(self) -> float:
        return 1.0 - self.alpha

    @property
    def theta(self) -> float:
        return self.lam / (1.0 + self.abar * self.lam)

    @classmethod
    def from_theta(cls, alpha: float, mu: float, theta: float) -> "TiltParams":
        abar = 1.0 - alpha
        if not (theta > 0 and abar * theta < 1.0):
            raise WzValidationError(
                "theta %r outside (0, 1/(1-alpha)) for alpha %r" % (theta, alpha)
            )
        return cls(alpha, mu, theta / (1.0 - abar * theta))

    def serialize(self) -> dict:
        return {"alpha": self.alpha, "mu": self.mu, "lambda": self.lam}


def _log(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    return np.log(a, out=np.zeros(a.shape), where=a > 0)


def omega_tensor(q: np.ndarray, src: SourceModel, alpha: float, mu: float):
    """omega on the cells of a (..., U, X, Y, Z) stack.

    Returns (omega, violation): omega is 0 on zero-mass cells; violation is
    true where a positive cell needs a zero p-denominator.
    """
    m = Marginals(q)
    positive = q > 0
    outside = ~src.support[:, :, None]
    violation = positive & outside
    t1 = _log(m.x) - _log(src.px)
    t2 = _log(m.uxy) - _log(m.ux)[..., None] - _log(src.py_x)
    t3 = _log(q) + _log(m.uy)[..., :, None, :, None] - _log(m.uyz)[..., :, None, :, :]
    t3 = t3 - _log(m.uxy)[..., None]
    t4 = _log(m.uxy) - _log(m.uy)[..., :, None, :] - _log(src.px_y)
    first = t1[..., None, :, None, None] + t2[..., None] + t3
    second = (1.0 - mu) * t4[..., None] + mu * src.dist[:, None, :]
    omega = (1.0 - alpha) * first + 4.0 * alpha * second
    return np.where(positive, omega, 0.0), violation


def omega_table(q: JointQ, src: SourceModel, alpha: float, mu: float) -> np.ndarray:
    """The score omega(u,x,y,z); alpha and mu may be anywhere in [0,1]."""
    omega, violation = omega_tensor(q.q, src, alpha, mu)
    if np.any(violation):
        raise WzValidationError("q has mass where p_XY is zero")
    return omega


def omega_values(q: np.ndarray, src: SourceModel, alpha: float, mu: float, lam: float) -> np.ndarray:
    """-ln E_q exp(-lam omega) for a stack of q."""
    omega, _ = omega_tensor(q, src, alpha, mu)
    return -logsumexp(-lam * omega, b=q, axis=AXES4)


def omega_variances(q: np.ndarray, src: SourceModel, alpha: float, mu: float) -> np.ndarray:
    omega, _ = omega_tensor(q, src, alpha, mu)
    mean = (q * omega).sum(axis=AXES4)
    second = (q * omega ** 2).sum(axis=AXES4)
    return np.maximum(second - mean ** 2, 0.0)


def _tilt_weights(q: JointQ, omega: np.ndarray, lam: float) -> np.ndarray:
    a = -lam * omega
    a = np.where(q.q > 0, a, -np.inf)
    w = np.exp(a - a.max()) * q.q
    return w / w.sum()


class OmegaValue:
    def __init__(self, value: float, d1: float, d2: float) -> None:
        self.value = value
        self.d1 = d1
        self.d2 = d2

    def __repr__(self):
        return "OmegaValue(value=%.12g, d1=%.12g, d2=%.12g)" % (self.value, self.d1, self.d2)


def omega_of_q(q: JointQ, src: SourceModel, params: TiltParams) -> OmegaValue:
    """Omega(q|p) with its first two lambda-derivatives, the mean and the
    negated variance of omega under the tilted distribution."""
    omega = omega_table(q, src, params.alpha, params.mu)
    value = -float(logsumexp(-params.lam * omega, b=q.q))
    w = _tilt_weights(q, omega, params.lam)
    d1 = float((w * omega).sum())
    d2 = -float((w * (omega - d1) ** 2).sum())
    return OmegaValue(value, d1, d2)


def tilted_distribution(q: JointQ, src: SourceModel, params: TiltParams) -> JointQ:
    omega = omega_table(q, src, params.alpha, params.mu)
    return JointQ(_tilt_weights(q, omega, params.lam))
