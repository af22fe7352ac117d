"""Truncated matrix models of the module families.

Every module lives on a window of K-types (integers of one parity, step 2,
|n| <= N) and stores the generators theta, X, X* and Z as dense complex
matrices in the basis zeta_n, together with the squared norms
w_n = ||zeta_n||^2 of an invariant inner product.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConditionError, DomainError, InvarianceError
from .scalars import DeformationPoint, qint, qint_array

DEFAULT_MARGIN = 4
LEAK_TOL = 1e-12
COND_LIMIT = 1e10


class Family(str, enum.Enum):
    PrincipalQ = "PrincipalQ"
    DiscreteQ = "DiscreteQ"
    ClassicalPrincipal = "ClassicalPrincipal"
    ClassicalDiscrete = "ClassicalDiscrete"
    Motion = "Motion"
    Groupoid = "Groupoid"


Q_FAMILIES = (Family.PrincipalQ, Family.DiscreteQ)


def parity_window(parity: int, N: int) -> np.ndarray:
    """K-types n with |n| <= N and (-1)^n = parity, ascending."""
    if parity not in (1, -1):
        raise DomainError(f"parity must be +-1, got {parity!r}")
    start = -N if (N % 2 == 0) == (parity == 1) else -N + 1
    return np.arange(start, N + 1, 2, dtype=int)


def discrete_window(n: int, sign: int, N: int) -> np.ndarray:
    """K-types {sign*m : m > n, m - n odd, m <= N}, ascending."""
    if n < 0:
        raise DomainError("discrete order n must be nonnegative")
    if sign not in (1, -1):
        raise DomainError(f"sign must be +-1, got {sign!r}")
    ms = np.arange(n + 1, N + 1, 2, dtype=int)
    return np.sort(sign * ms)


@dataclass(frozen=True, eq=False)
class TruncatedModule:
    family: Family
    base: DeformationPoint | None
    epsilon: int
    lam: complex
    order: tuple[int, int] | None
    window: np.ndarray
    weights: np.ndarray
    theta: np.ndarray
    X: np.ndarray
    Xs: np.ndarray
    Z: np.ndarray
    N: int
    margin: int = DEFAULT_MARGIN

    def __post_init__(self):
        for name in ("window", "weights", "theta", "X", "Xs", "Z"):
            getattr(self, name).setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.window)

    @property
    def Q(self) -> float:
        """The deformation parameter q^t seen by theta (1 for the limit families)."""
        if self.family in Q_FAMILIES:
            return self.base.qt
        return 1.0

    @property
    def theta_diag(self) -> np.ndarray:
        return np.real(np.diag(self.theta))

    def index(self, k: int) -> int:
        hits = np.nonzero(self.window == k)[0]
        if len(hits) == 0:
            raise KeyError(k)
        return int(hits[0])

    def interior(self) -> np.ndarray:
        """Boolean mask of the K-types with |n| <= N - margin."""
        return np.abs(self.window) <= self.N - self.margin

    def to_json(self) -> str:
        def entries(A):
            rows, cols = np.nonzero(A)
            return [[int(self.window[r]), int(self.window[c]), float(A[r, c].real), float(A[r, c].imag)]
                    for r, c in zip(rows, cols)]

        doc = {
            "family": self.family.value,
            "q": None if self.base is None else self.base.q,
            "t": None if self.base is None else self.base.t,
            "epsilon": self.epsilon,
            "lambda": [complex(self.lam).real, complex(self.lam).imag],
            "order": None if self.order is None else list(self.order),
            "window": [int(k) for k in self.window],
            "weights": [float(w) for w in self.weights],
            "matrices": {
                "theta": entries(self.theta),
                "X": entries(self.X),
                "Z": entries(self.Z),
                "Xstar": entries(self.Xs),
            },
            "N": self.N,
            "margin": self.margin,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "TruncatedModule":
        doc = json.loads(text)
        window = np.array(doc["window"], dtype=int)
        pos = {int(k): i for i, k in enumerate(window)}
        d = len(window)

        def dense(items):
            A = np.zeros((d, d), dtype=complex)
            for r, c, re, im in items:
                A[pos[r], pos[c]] = complex(re, im)
            return A

        mats = doc["matrices"]
        base = None if doc["q"] is None else DeformationPoint(doc["q"], doc["t"])
        return cls(
            family=Family(doc["family"]),
            base=base,
            epsilon=int(doc["epsilon"]),
            lam=complex(*doc["lambda"]),
            order=None if doc["order"] is None else tuple(doc["order"]),
            window=window,
            weights=np.array(doc["weights"], dtype=float),
            theta=dense(mats["theta"]),
            X=dense(mats["X"]),
            Xs=dense(mats["Xstar"]),
            Z=dense(mats["Z"]),
            N=int(doc["N"]),
            margin=int(doc.get("margin", DEFAULT_MARGIN)),
        )


# weights


def weights_principal(qt: float, parity: int, N: int) -> dict[int, float]:
    """w_n = 2 / (qt^n + qt^-n) on the principal window."""
    if qt <= 0:
        raise DomainError("qt must be positive")
    h = np.log(qt)
    return {int(n): float(1.0 / np.cosh(n * h)) for n in parity_window(parity, N)}


def weights_discrete(qt: float, n: int, sign: int, N: int) -> dict[int, float]:
    """Squared norms on the window of D^sign(n).

    w_{+-m} = 2/(qt^m + qt^-m) * prod_{l odd, 3 <= l <= m - n} [l-1]/[l-1+2n],
    the product being empty for m = n + 1.
    """
    if qt <= 0:
        raise DomainError("qt must be positive")
    h = np.log(qt)
    out = {}
    prod = 1.0
    for m in range(n + 1, N + 1, 2):
        l = m - n
        if l >= 3:
            prod *= qint(l - 1, qt) / qint(l - 1 + 2 * n, qt)
        out[int(sign * m)] = float(prod / np.cosh(m * h))
    return dict(sorted(out.items()))


def weights_discrete_recursion(qt: float, n: int, sign: int, N: int, sigma: int = 1) -> dict[int, float]:
    """Discrete weights forced by unitarity, independent of the closed product.

    Starts from w_{n+1} = 2/(qt^{n+1} + qt^{-n-1}) and steps outward with the
    adjoint rule (T+_a)^* = -T-_a (raising and lowering swapped for sign -):
    conj(c(a)) w_{a+s} = -d(a) w_a, where T^s_a zeta_a = c(a) zeta_{a+s} and d(a)
    is the zeta_a coefficient of T^{-s}_a zeta_{a+s}, read off the built module.
    At qt = 1 the classical ladders H -+ i(E+F) play the role of T+-.
    """
    step = 2 * sign
    if qt == 1.0:
        mod = build_classical_principal(float(n), (-1) ** (n + 1), N + 2, margin=0)
        Lp = 2 * mod.X - 2 * mod.Z + mod.theta
        Lm = 2 * mod.X + 2 * mod.Z - mod.theta
        up, down = (Lp, Lm) if sign > 0 else (Lm, Lp)

        def pair(a):
            i, j = mod.index(a), mod.index(a + step)
            return up[j, i], down[i, j]
    else:
        mod = build_principal_q(DeformationPoint(qt, 1.0), (-1) ** (n + 1), sigma * qt ** n, N + 2, margin=0)
        Q = qt
        q2 = Q + 1 / Q

        def pair(a):
            i, j = mod.index(a), mod.index(a + step)
            Tp = Q ** a * mod.X - Q ** -a * mod.Xs - q2 * mod.Z
            Tm = Q ** -a * mod.X - Q ** a * mod.Xs + q2 * mod.Z
            up, down = (Tp, Tm) if sign > 0 else (Tm, Tp)
            return up[j, i], down[i, j]

    a = sign * (n + 1)
    w = 2.0 / (qt ** (n + 1) + qt ** -(n + 1))
    out = {int(a): float(w)}
    while abs(a + step) <= N:
        c, d = pair(a)
        w = w * (-d / np.conj(c)).real
        a += step
        out[int(a)] = float(w)
    return dict(sorted(out.items()))


# the T -> (X, X*, Z) change of variables


class Realized(NamedTuple):
    X: np.ndarray
    Xs: np.ndarray
    Z: np.ndarray
    theta: np.ndarray


def realize_xztheta_from_t(t_diag, t_up, t_down, qt: float, window) -> Realized:
    """Invert T = q^-1 X + q X* + (q^n - q^-n) Z, T+- = q^{+-n} X - q^{-+n} X* -+ [2] Z.

    ``t_diag[i]``, ``t_up[i]``, ``t_down[i]`` are the scalars by which T_n, T+_n
    and T-_n act on zeta_n for n = window[i]. For every column and every band
    b in {-2, 0, 2} a 3x3 system is solved for the band-b parts of X, X*, Z.
    """
    window = np.asarray(window, dtype=int)
    k = len(window)
    Q = float(qt)
    n = window.astype(float)
    q2 = Q + 1.0 / Q
    Qn, Qmn = Q ** n, Q ** -n
    M = np.empty((k, 3, 3))
    M[:, 0, 0], M[:, 0, 1], M[:, 0, 2] = 1.0 / Q, Q, Qn - Qmn
    M[:, 1, 0], M[:, 1, 1], M[:, 1, 2] = Qn, -Qmn, -q2
    M[:, 2, 0], M[:, 2, 1], M[:, 2, 2] = Qmn, -Qn, q2

    # equilibrate rows and columns before solving
    r = 1.0 / np.abs(M).max(axis=2)
    Mr = M * r[:, :, None]
    c = 1.0 / np.abs(Mr).max(axis=1)
    Me = Mr * c[:, None, :]
    cond = np.linalg.cond(Me)
    bad = np.nonzero(~np.isfinite(cond) | (cond > COND_LIMIT))[0]
    if len(bad):
        i = bad[0]
        raise ConditionError(f"3x3 system at n={window[i]} has condition number {cond[i]:.3g}")

    # right-hand sides: columns are bands (-2, 0, +2)
    R = np.zeros((k, 3, 3), dtype=complex)
    R[:, 0, 1] = t_diag
    R[:, 1, 2] = t_up
    R[:, 2, 0] = t_down
    sol = np.linalg.solve(Me.astype(complex), R * r[:, :, None]) * c[:, :, None]

    X = np.zeros((k, k), dtype=complex)
    Xs = np.zeros_like(X)
    Z = np.zeros_like(X)
    pos = {int(m): i for i, m in enumerate(window)}
    for j, m in enumerate(window):
        for bi, b in enumerate((-2, 0, 2)):
            i = pos.get(int(m) + b)
            if i is None:
                continue
            X[i, j], Xs[i, j], Z[i, j] = sol[j, :, bi]
    theta = np.diag(qint_array(window, Q)).astype(complex)
    return Realized(X, Xs, Z, theta)


# builders


def _shift(window, coeffs, step):
    # matrix sending zeta_n to coeffs[n] zeta_{n+step}
    k = len(window)
    A = np.zeros((k, k), dtype=complex)
    pos = {int(m): i for i, m in enumerate(window)}
    for j, m in enumerate(window):
        i = pos.get(int(m) + step)
        if i is not None:
            A[i, j] = coeffs[j]
    return A


def _check_window(N, margin):
    if N < 2:
        raise DomainError("window bound N must be at least 2")
    if margin < 0:
        raise DomainError("margin must be nonnegative")


def build_principal_q(base: DeformationPoint, epsilon: int, lam: complex, N: int,
                      margin: int = DEFAULT_MARGIN) -> TruncatedModule:
    """ind_{q^t}(epsilon, lam) on the window |n| <= N."""
    _check_window(N, margin)
    lam = complex(lam)
    if lam == 0:
        raise DomainError("lambda must be nonzero")
    Q = base.qt
    if Q == 1.0:
        raise DomainError("the q-principal builder needs q^t != 1")
    window = parity_window(epsilon, N)
    n = window.astype(float)
    t_diag = np.full(len(window), lam + 1 / lam)
    t_up = lam * Q ** (1 + n) - Q ** (-1 - n) / lam
    t_down = lam * Q ** (1 - n) - Q ** (-1 + n) / lam
    X, Xs, Z, theta = realize_xztheta_from_t(t_diag, t_up, t_down, Q, window)
    w = weights_principal(Q, epsilon, N)
    return TruncatedModule(Family.PrincipalQ, base, epsilon, lam, None, window,
                           np.array([w[int(k)] for k in window]), theta, X, Xs, Z, N, margin)


def leakage(m: TruncatedModule, keep) -> float:
    """Largest generator entry mapping the span of ``keep`` K-types outside it."""
    inside = np.isin(m.window, np.asarray(keep))
    out = 0.0
    for A in (m.theta, m.X, m.Xs, m.Z):
        block = A[np.ix_(~inside, inside)]
        if block.size:
            out = max(out, float(np.abs(block).max()))
    return out


def invariant_windows(m: TruncatedModule, tol: float = LEAK_TOL) -> list[np.ndarray]:
    """Minimal proper invariant coordinate subspaces, found by reachability.

    K-type j reaches i when some generator has |A_ij| > tol. The closure of
    each K-type is invariant; the minimal closures short of the whole window
    are returned, ordered by their smallest K-type.
    """
    import networkx as nx

    C = np.zeros((m.dim, m.dim), dtype=bool)
    for A in (m.theta, m.X, m.Xs, m.Z):
        C |= np.abs(A) > tol
    g = nx.DiGraph()
    g.add_nodes_from(range(m.dim))
    g.add_edges_from((j, i) for i, j in zip(*np.nonzero(C)) if i != j)
    closures = {frozenset(nx.descendants(g, k) | {k}) for k in range(m.dim)}
    proper = [c for c in closures if len(c) < m.dim]
    minimal = [c for c in proper if not any(o < c for o in proper)]
    return sorted((m.window[sorted(c)] for c in minimal), key=lambda w: int(w[0]))


def restrict(m: TruncatedModule, keep, family: Family, order, weights, tol: float = LEAK_TOL) -> TruncatedModule:
    """Restrict ``m`` to an invariant coordinate subspace, checking invariance first."""
    leak = leakage(m, keep)
    if leak > tol:
        raise InvarianceError(f"subspace leaks by {leak:.3g} (tol {tol:.1g})")
    sel = np.isin(m.window, np.asarray(keep))
    idx = np.ix_(sel, sel)
    window = m.window[sel]
    return TruncatedModule(family, m.base, m.epsilon, m.lam, order, window,
                           np.array([weights[int(k)] for k in window]),
                           m.theta[idx].copy(), m.X[idx].copy(), m.Xs[idx].copy(), m.Z[idx].copy(),
                           m.N, m.margin)


def build_discrete_q(base: DeformationPoint, sigma: int, n: int, sign: int, N: int,
                     margin: int = DEFAULT_MARGIN, tol: float = LEAK_TOL) -> TruncatedModule:
    """D^sign(sigma, n): restriction of ind(eps, sigma q^{nt}) to {sign*m : m > n, m - n odd}."""
    if sigma not in (1, -1):
        raise DomainError("sigma must be +-1")
    Q = base.qt
    if Q == 1.0:
        raise DomainError("the q-discrete builder needs q^t != 1")
    eps = (-1) ** (n + 1)
    full = build_principal_q(base, eps, sigma * Q ** n, N, margin)
    keep = discrete_window(n, sign, N)
    return restrict(full, keep, Family.DiscreteQ, (n, sign), weights_discrete(Q, n, sign, N), tol)


def _ladder_module(family, base, epsilon, lam, N, margin, up, down):
    # limit families with theta = n, X* = -X and the ladders L+- given per column
    window = parity_window(epsilon, N)
    Lp = _shift(window, up, 2)
    Lm = _shift(window, down, -2)
    theta = np.diag(window.astype(complex))
    X = (Lp + Lm) / 4
    Z = (theta - (Lp - Lm) / 2) / 2 if family is Family.ClassicalPrincipal else (Lm - Lp) / 4
    return TruncatedModule(family, base, epsilon, complex(lam), None, window,
                           np.ones(len(window)), theta, X, -X, Z, N, margin)


def build_classical_principal(lam: complex, epsilon: int, N: int, margin: int = DEFAULT_MARGIN) -> TruncatedModule:
    """Classical ind(epsilon, lam): theta = n and (H -+ i(E+F)) zeta_n = (lam + 1 +- n) zeta_{n+-2}.

    Stored through the q = 1, t = 1 dictionary: X = H/2, Z = iE, X* = -X.
    """
    _check_window(N, margin)
    lam = complex(lam)
    window = parity_window(epsilon, N)
    return _ladder_module(Family.ClassicalPrincipal, DeformationPoint(1.0, 1.0), epsilon, lam, N, margin,
                          lam + 1 + window, lam + 1 - window)


def build_classical_discrete(n: int, sign: int, N: int, margin: int = DEFAULT_MARGIN,
                             tol: float = LEAK_TOL) -> TruncatedModule:
    """Classical discrete series: the restriction of ind((-1)^{n+1}, n) to {sign*m : m > n}."""
    _check_window(N, margin)
    full = build_classical_principal(float(n), (-1) ** (n + 1), N, margin)
    keep = discrete_window(n, sign, N)
    return restrict(full, keep, Family.ClassicalDiscrete, (n, sign), weights_discrete(1.0, n, sign, N), tol)


def build_motion(lam: complex, epsilon: int, N: int, margin: int = DEFAULT_MARGIN) -> TruncatedModule:
    """Motion-group module: theta = n, dT+- zeta_n = lam zeta_{n+-2}."""
    _check_window(N, margin)
    lam = complex(lam)
    k = len(parity_window(epsilon, N))
    c = np.full(k, lam)
    return _ladder_module(Family.Motion, DeformationPoint(1.0, 0.0), epsilon, lam, N, margin, c, c)


def build_groupoid(lam: complex, epsilon: int, N: int, margin: int = DEFAULT_MARGIN,
                   q: float | None = None) -> TruncatedModule:
    """Groupoid module: T = lam + 1/lam on the diagonal, T+- = (lam - 1/lam) zeta_{n+-2}.

    ``q`` only records the fiber (q, 0) the module is attached to.
    """
    _check_window(N, margin)
    lam = complex(lam)
    if abs(abs(lam) - 1.0) > 1e-12:
        raise DomainError(f"groupoid parameter must lie on the unit circle, got {lam!r}")
    window = parity_window(epsilon, N)
    k = len(window)
    T = (lam + 1 / lam) * np.eye(k, dtype=complex)
    c = np.full(k, lam - 1 / lam)
    Tp = _shift(window, c, 2)
    Tm = _shift(window, c, -2)
    X = T / 2 + (Tp + Tm) / 4
    Xs = T / 2 - (Tp + Tm) / 4
    Z = (Tm - Tp) / 4
    theta = np.diag(window.astype(complex))
    base = None if q is None else DeformationPoint(q, 0.0)
    return TruncatedModule(Family.Groupoid, base, epsilon, lam, None, window, np.ones(k),
                           theta, X, Xs, Z, N, margin)


def t_operators(m: TruncatedModule, n: int | None = None):
    """Reassemble (T, T+, T-) from X, X*, Z.

    For the q-families the reassembly depends on the column; the returned
    matrices apply T_k, T+_k, T-_k to each zeta_k. For the groupoid they are
    T = X + X*, T+- = X - X* -+ 2Z.
    """
    Q = m.Q
    if m.family in Q_FAMILIES:
        k = m.window.astype(float)
        Qk, Qmk = Q ** k, Q ** -k
        q2 = Q + 1 / Q
        T = m.X / Q + Q * m.Xs + m.Z * (Qk - Qmk)[None, :]
        Tp = m.X * Qk[None, :] - m.Xs * Qmk[None, :] - q2 * m.Z
        Tm = m.X * Qmk[None, :] - m.Xs * Qk[None, :] + q2 * m.Z
        return T, Tp, Tm
    return m.X + m.Xs, m.X - m.Xs - 2 * m.Z, m.X - m.Xs + 2 * m.Z
