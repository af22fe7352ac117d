"""q-arithmetic, the coefficient eta(q, t) and the Pri chart map."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError

# below this, use the closed-form limit; between this and SERIES_BAND use Taylor
LIMIT_EPS = 1e-12
SERIES_BAND = 1e-8


@dataclass(frozen=True)
class DeformationPoint:
    """A base point (q, t) of the two-parameter family. ``qt`` is q**t."""

    q: float
    t: float
    qt: float = field(init=False)

    def __post_init__(self):
        if not (self.q > 0 and math.isfinite(self.q)):
            raise DomainError(f"q must be positive, got {self.q!r}")
        if not math.isfinite(self.t):
            raise DomainError(f"t must be finite, got {self.t!r}")
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "qt", math.exp(self.t * math.log(self.q)))

    @property
    def classical(self) -> bool:
        return self.q == 1.0

    @property
    def contracted(self) -> bool:
        return self.t == 0.0


def _sinh_ratio(n: float, h: float) -> float:
    # sinh(n h) / sinh(h), with the h -> 0 limit n
    ah = abs(h)
    if ah < LIMIT_EPS:
        return float(n)
    if ah < SERIES_BAND:
        h2 = h * h
        n2 = n * n
        return n * (1.0 + (n2 - 1.0) * h2 / 6.0 + (n2 - 1.0) * (3.0 * n2 - 7.0) * h2 * h2 / 360.0)
    return math.sinh(n * h) / math.sinh(h)


def qint(n: int, q: float) -> float:
    """The q-integer [n]_q = (q^n - q^-n) / (q - q^-1), equal to n at q = 1."""
    if q <= 0:
        raise DomainError(f"q must be positive, got {q!r}")
    if n == 0:
        return 0.0
    return _sinh_ratio(n, math.log(q))


def qint_array(ns, q: float):
    """Vectorized :func:`qint` over an integer array."""
    import numpy as np

    ns = np.asarray(ns)
    return np.array([qint(int(n), q) for n in ns.ravel()], dtype=float).reshape(ns.shape)


def qpow_diff_ratio(a, b, h):
    """(Q^a - Q^b) / (Q - Q^-1) with Q = e^h, without cancellation.

    Works elementwise on numpy arrays. Exactly zero when a == b. At h = 0
    this is the limit (a - b) / 2.
    """
    import numpy as np

    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = a - b
    ah = abs(h)
    if ah < LIMIT_EPS:
        return d / 2.0
    if ah < SERIES_BAND:
        # sinh(d h / 2) / sinh(h) by series, times e^{(a+b) h / 2}
        x = d * h / 2.0
        ratio = (d / 2.0) * (1.0 + x * x / 6.0) / (1.0 + h * h / 6.0)
    else:
        ratio = np.sinh(d * h / 2.0) / np.sinh(h)
    return np.exp((a + b) * h / 2.0) * ratio


def eta(q: float, t: float) -> float:
    """eta(q, t) = (q^t - q^-t) / t, with value 2 ln q at t = 0."""
    if q <= 0:
        raise DomainError(f"q must be positive, got {q!r}")
    lq = math.log(q)
    if lq == 0.0:
        return 0.0
    x = t * lq
    at = abs(t)
    if at < LIMIT_EPS:
        return 2.0 * lq
    if at < SERIES_BAND:
        x2 = x * x
        return 2.0 * lq * (1.0 + x2 / 6.0 + x2 * x2 / 120.0)
    return 2.0 * math.sinh(x) / t


def pri_chart(q: float, lam: complex, fold: bool = False) -> complex:
    """Map chart coordinate lam (purely imaginary, Im >= 0) to q**lam on the unit circle.

    For q < 1 the image lies in the lower half circle. ``fold=True`` replaces it
    by its inverse (complex conjugate), which labels the same module class.
    """
    if q <= 0 or q == 1.0:
        raise DomainError("pri_chart needs q > 0 and q != 1")
    lam = complex(lam)
    if abs(lam.real) > 1e-15 or lam.imag < 0:
        raise DomainError(f"chart coordinate must lie in i*R_+, got {lam!r}")
    arg = lam.imag * math.log(q)
    if abs(arg) >= math.pi:
        raise DomainError(f"|lambda ln q| = {abs(arg):.6g} >= pi")
    if fold:
        arg = abs(arg)
    return complex(math.cos(arg), math.sin(arg))


def pri_chart_inverse(q: float, mu: complex) -> complex:
    """Inverse of :func:`pri_chart` on the unit circle minus -1."""
    if q <= 0 or q == 1.0:
        raise DomainError("pri_chart_inverse needs q > 0 and q != 1")
    mu = complex(mu)
    if abs(abs(mu) - 1.0) > 1e-12:
        raise DomainError(f"{mu!r} is not on the unit circle")
    return complex(0.0, math.atan2(mu.imag, mu.real) / math.log(q))
