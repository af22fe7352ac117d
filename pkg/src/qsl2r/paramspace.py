"""The parameter space S, spectrum labels and closure relations.

A point of S is either continuous (Pri, parity epsilon, coordinate lambda)
or discrete (Dis, sign sigma, order (n, +-)) over a location (q, t). Each
point carries Lambda(s), a parity e(s) and a set of K-types Z(s).
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .errors import DomainError
from .modgen import discrete_window, parity_window, weights_discrete, weights_principal
from .scalars import DeformationPoint

LAMBDA_TOL = 1e-12
DEFAULT_RESOLUTION = 721


# K-type sets


@dataclass(frozen=True)
class KTypeSet:
    """One of: a full parity class, a half-line {side*m : m > bound} of one parity, or a singleton."""

    parity: int
    side: int = 0
    bound: int = 0
    single: int | None = None

    @classmethod
    def full(cls, parity: int) -> "KTypeSet":
        return cls(parity)

    @classmethod
    def half(cls, parity: int, side: int, bound: int) -> "KTypeSet":
        return cls(parity, side, bound)

    @classmethod
    def singleton(cls, k: int) -> "KTypeSet":
        return cls(1 if k % 2 == 0 else -1, 0, 0, int(k))

    def contains(self, k: int) -> bool:
        k = int(k)
        if self.single is not None:
            return k == self.single
        if (1 if k % 2 == 0 else -1) != self.parity:
            return False
        if self.side == 0:
            return True
        return self.side * k > self.bound

    def window(self, N: int) -> np.ndarray:
        if self.single is not None:
            return np.array([self.single] if abs(self.single) <= N else [], dtype=int)
        if self.side == 0:
            return parity_window(self.parity, N)
        w = parity_window(self.parity, N)
        return w[self.side * w > self.bound]

    def minimal(self) -> frozenset:
        """K-types of smallest absolute value."""
        if self.single is not None:
            return frozenset({self.single})
        if self.side == 0:
            return frozenset({0}) if self.parity == 1 else frozenset({-1, 1})
        m = self.bound + 1
        if (1 if m % 2 == 0 else -1) != self.parity:
            m += 1
        return frozenset({self.side * m})

    def issubset(self, other: "KTypeSet") -> bool:
        if self.single is not None:
            return other.contains(self.single)
        if other.single is not None or self.parity != other.parity:
            return False
        if other.side == 0:
            return True
        return self.side == other.side and self.bound >= other.bound

    def describe(self) -> str:
        if self.single is not None:
            return f"{{{self.single}}}"
        name = "even" if self.parity == 1 else "odd"
        if self.side == 0:
            return f"Z^{name}"
        return f"{'+' if self.side > 0 else '-'}Z^{name}_>{self.bound}"


# points of S


@dataclass(frozen=True)
class SpectralPoint:
    component: str
    loc: DeformationPoint
    epsilon: int = 1
    lam: complex | None = None
    sigma: int = 1
    n: int = 0
    sign: int = 1

    @classmethod
    def pri(cls, q: float, t: float, epsilon: int, lam: complex) -> "SpectralPoint":
        s = cls("Pri", DeformationPoint(q, t), epsilon=int(epsilon), lam=complex(lam))
        s.validate()
        return s

    @classmethod
    def dis(cls, q: float, t: float, sigma: int, n: int, sign: int) -> "SpectralPoint":
        s = cls("Dis", DeformationPoint(q, t), sigma=int(sigma), n=int(n), sign=int(sign))
        s.validate()
        return s

    @property
    def continuous(self) -> bool:
        return self.component == "Pri"

    @property
    def in_S(self) -> bool:
        """Dis points of order 0 are admitted only as targets of J maps."""
        return self.continuous or self.n >= 1

    def validate(self):
        if self.component == "Pri":
            if self.epsilon not in (1, -1):
                raise DomainError("epsilon must be +-1")
            lam = self.lam
            if lam is None:
                raise DomainError("Pri point needs a coordinate")
            if self.loc.q != 1.0:
                # the lower half circle is accepted: it is the chart image for q < 1
                if abs(abs(lam) - 1.0) > LAMBDA_TOL:
                    raise DomainError(f"Pri coordinate {lam!r} is not on the unit circle")
            elif abs(lam.real) > LAMBDA_TOL or lam.imag < -LAMBDA_TOL:
                raise DomainError(f"Pri coordinate at q = 1 must lie in i*R_+, got {lam!r}")
        elif self.component == "Dis":
            if self.sigma not in (1, -1) or self.sign not in (1, -1):
                raise DomainError("sigma and sign must be +-1")
            if self.n < 0:
                raise DomainError("order must be nonnegative")
            if self.sigma == -1 and self.loc.q == 1.0:
                raise DomainError("Dis with sigma = -1 does not exist over q = 1")
        else:
            raise DomainError(f"unknown component {self.component!r}")

    def describe(self) -> str:
        q, t = self.loc.q, self.loc.t
        if self.continuous:
            return f"Pri[{self.epsilon:+d}](q={q:g},t={t:g},lam={_cfmt(self.lam)})"
        return f"Dis[{self.sigma:+d},{self.n},{'+' if self.sign > 0 else '-'}](q={q:g},t={t:g})"


def _cfmt(z) -> str:
    z = complex(z)
    return f"{z.real:.12g}{z.imag:+.12g}j"


def Lambda(s: SpectralPoint) -> complex:
    q, t = s.loc.q, s.loc.t
    if s.continuous:
        if q != 1.0 or t == 0.0:
            return complex(s.lam)
        return complex(s.lam) / t
    if q != 1.0:
        return complex(s.sigma * s.loc.qt ** s.n)
    if t != 0.0:
        return complex(s.n)
    return 0j


def parity(s: SpectralPoint) -> int:
    return s.epsilon if s.continuous else (-1) ** (s.n + 1)


def ktypes(s: SpectralPoint) -> KTypeSet:
    if s.continuous:
        return KTypeSet.full(s.epsilon)
    return KTypeSet.half(parity(s), s.sign, s.n)


def classify(s: SpectralPoint):
    """(Lambda(s), e(s), Z(s))."""
    s.validate()
    return Lambda(s), parity(s), ktypes(s)


def is_real(z: complex, tol: float = LAMBDA_TOL) -> bool:
    return abs(complex(z).imag) <= tol


def constraint_blocks(s: SpectralPoint, N: int = 60) -> list[KTypeSet]:
    """Blocks of the constraint decomposition of the fiber at s.

    Odd continuous points with t != 0 and real Lambda split into the two odd
    half-lines; points with t = 0 and real Lambda split into lines C zeta_n
    (listed for |n| <= N); all other fibers are a single block.
    """
    lam, e, zs = classify(s)
    if s.continuous and e == -1 and s.loc.t != 0.0 and is_real(lam):
        return [KTypeSet.half(-1, 1, 0), KTypeSet.half(-1, -1, 0)]
    if s.loc.t == 0.0 and is_real(lam):
        return [KTypeSet.singleton(int(k)) for k in zs.window(N)]
    return [zs]


def fiber_window(s: SpectralPoint, N: int) -> np.ndarray:
    return ktypes(s).window(N)


def fiber_weights(s: SpectralPoint, N: int) -> np.ndarray:
    """Squared norms ||zeta_n||_s^2 on the fiber window."""
    Q = s.loc.qt
    if s.continuous:
        w = weights_principal(Q, s.epsilon, N)
    else:
        w = weights_discrete(Q, s.n, s.sign, N)
    return np.array([w[int(k)] for k in fiber_window(s, N)])


def jmap(target: SpectralPoint, source: SpectralPoint, N: int) -> np.ndarray:
    """Coordinate projection J(target, source) from a continuous fiber onto a discrete one at t = 0."""
    if target.continuous or not source.continuous:
        raise DomainError("jmap goes from a continuous point to a discrete point")
    if target.loc != source.loc or source.loc.t != 0.0:
        raise DomainError("jmap needs both points at the same location with t = 0")
    lt, et, _ = classify(target)
    ls, es, _ = classify(source)
    if abs(lt - ls) > LAMBDA_TOL or et != es:
        raise DomainError(f"Lambda/parity mismatch: ({lt}, {et}) vs ({ls}, {es})")
    tw = fiber_window(target, N)
    sw = fiber_window(source, N)
    return (tw[:, None] == sw[None, :]).astype(float)


# spectrum labels


class Algebra(str, enum.Enum):
    QReduced = "QReduced"
    Groupoid = "Groupoid"
    ClassicalReduced = "ClassicalReduced"
    Motion = "Motion"


CONTINUOUS_KINDS = ("PrincipalQ", "GroupoidCont", "ClassicalPrincipal", "MotionCont")


@dataclass(frozen=True)
class SpectrumPoint:
    algebra: Algebra
    kind: str
    epsilon: int | None = None
    lam: complex | None = None
    sigma: int | None = None
    n: int | None = None
    sign: int | None = None
    m: int | None = None

    @property
    def continuous(self) -> bool:
        return self.kind in CONTINUOUS_KINDS

    @property
    def label(self) -> str:
        k = self.kind
        if k in ("PrincipalQ", "ClassicalPrincipal"):
            return f"{k}({self.epsilon:+d},{_cfmt(self.lam)})"
        if k in ("GroupoidCont", "MotionCont"):
            return f"{k}({_cfmt(self.lam)},{self.epsilon:+d})"
        if k == "DiscreteQ":
            return f"DiscreteQ({self.sigma:+d},{self.n},{'+' if self.sign > 0 else '-'})"
        if k == "ClassicalDiscrete":
            return f"ClassicalDiscrete({self.n},{'+' if self.sign > 0 else '-'})"
        if k == "GroupoidChar":
            return f"GroupoidChar({self.sigma:+d},{self.m})"
        return f"MotionChar({self.m})"

    def __str__(self) -> str:
        return self.label


def principal_q(eps, lam):
    return SpectrumPoint(Algebra.QReduced, "PrincipalQ", epsilon=eps, lam=complex(lam))


def discrete_q(sigma, n, sign):
    return SpectrumPoint(Algebra.QReduced, "DiscreteQ", sigma=sigma, n=n, sign=sign)


def groupoid_cont(lam, eps):
    return SpectrumPoint(Algebra.Groupoid, "GroupoidCont", epsilon=eps, lam=complex(lam))


def groupoid_char(sigma, m):
    return SpectrumPoint(Algebra.Groupoid, "GroupoidChar", sigma=sigma, m=m)


def label_ktypes(x: SpectrumPoint) -> KTypeSet:
    k = x.kind
    if x.continuous:
        return KTypeSet.full(x.epsilon)
    if k in ("DiscreteQ", "ClassicalDiscrete"):
        return KTypeSet.half((-1) ** (x.n + 1), x.sign, x.n)
    return KTypeSet.singleton(x.m)


def minimal_ktypes(x: SpectrumPoint) -> frozenset:
    return label_ktypes(x).minimal()


def label_point(x: SpectrumPoint, q: float, t: float) -> SpectralPoint:
    """A point of S at (q, t) whose fiber (or a block of it) carries x."""
    k = x.kind
    if k in ("PrincipalQ", "GroupoidCont", "ClassicalPrincipal", "MotionCont"):
        return SpectralPoint.pri(q, t, x.epsilon, x.lam)
    if k == "DiscreteQ":
        return SpectralPoint.dis(q, t, x.sigma, x.n, x.sign)
    if k == "ClassicalDiscrete":
        return SpectralPoint.dis(q, t, 1, x.n, x.sign)
    if k == "GroupoidChar":
        return SpectralPoint.pri(q, t, 1 if x.m % 2 == 0 else -1, complex(x.sigma))
    return SpectralPoint.pri(q, t, 1 if x.m % 2 == 0 else -1, 0j)


def label_Lambda(x: SpectrumPoint, q: float, t: float) -> complex:
    return Lambda(label_point(x, q, t))


def unit_grid(resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """Points of the closed upper half circle by angle, endpoints exactly 1 and -1."""
    if resolution < 3:
        raise DomainError("grid resolution must be at least 3")
    ang = np.linspace(0.0, np.pi, resolution)
    lam = np.exp(1j * ang)
    lam[0] = 1.0
    lam[-1] = -1.0
    return lam


def imag_grid(resolution: int = DEFAULT_RESOLUTION, top: float = 10.0) -> np.ndarray:
    return 1j * np.linspace(0.0, top, resolution)


def enumerate_spectrum(algebra, q: float, t: float, resolution: int = DEFAULT_RESOLUTION,
                       n_max: int = 10) -> list[SpectrumPoint]:
    """Desk-scale list of spectrum labels.

    Continuous labels follow the lambda grid. QReduced lists D+-(sigma, n) for
    n <= n_max; the groupoid lists characters with |m| <= n_max + 1 so that
    both sides have the same size.
    """
    if n_max < 0:
        raise DomainError("n_max must be nonnegative")
    algebra = Algebra(algebra)
    out = []
    if algebra is Algebra.QReduced:
        grid = unit_grid(resolution)
        for eps in (1, -1):
            for i, lam in enumerate(grid):
                if eps == -1 and i in (0, len(grid) - 1):
                    continue
                out.append(principal_q(eps, lam))
        for sigma in (1, -1):
            for n in range(n_max + 1):
                for sign in (1, -1):
                    out.append(discrete_q(sigma, n, sign))
    elif algebra is Algebra.Groupoid:
        grid = unit_grid(resolution)
        for eps in (1, -1):
            for lam in grid[1:-1]:
                out.append(groupoid_cont(lam, eps))
        for sigma in (1, -1):
            for m in range(-(n_max + 1), n_max + 2):
                out.append(groupoid_char(sigma, m))
    elif algebra is Algebra.ClassicalReduced:
        grid = imag_grid(resolution)
        for eps in (1, -1):
            for i, lam in enumerate(grid):
                if eps == -1 and i == 0:
                    continue
                out.append(SpectrumPoint(algebra, "ClassicalPrincipal", epsilon=eps, lam=lam))
        for n in range(n_max + 1):
            for sign in (1, -1):
                out.append(SpectrumPoint(algebra, "ClassicalDiscrete", n=n, sign=sign))
    else:
        grid = imag_grid(resolution)
        for eps in (1, -1):
            for lam in grid[1:]:
                out.append(SpectrumPoint(algebra, "MotionCont", epsilon=eps, lam=lam))
        for m in range(-(n_max + 1), n_max + 2):
            out.append(SpectrumPoint(algebra, "MotionChar", m=m))
    return out


# closure relations


@dataclass
class ClosureGraph:
    algebra: Algebra
    q: float
    t: float
    nodes: list
    graph: nx.DiGraph

    @property
    def edges(self) -> list:
        return [(a, b) for a, b in self.graph.edges]

    def predecessors(self, b) -> list:
        return list(self.graph.predecessors(b))

    def has_edge(self, a, b) -> bool:
        return self.graph.has_edge(a, b)

    def components(self) -> list[set]:
        """Connected pieces: each continuous family is a curve, glued along closure edges."""
        und = nx.Graph()
        und.add_nodes_from(self.nodes)
        und.add_edges_from(self.graph.edges)
        fams = {}
        for x in self.nodes:
            if x.continuous:
                fams.setdefault(x.epsilon, []).append(x)
        for members in fams.values():
            nx.add_path(und, members)
        return [set(c) for c in nx.connected_components(und)]

    def isolated(self) -> list:
        """Labels with no closure edge in or out and not on a continuous family."""
        return [x for x in self.nodes if not x.continuous and self.graph.degree(x) == 0]

    def to_json(self) -> str:
        return json.dumps({"nodes": [x.label for x in self.nodes],
                           "edges": [[a.label, b.label] for a, b in self.graph.edges]})


def closure_graph(algebra, q: float, t: float, n_max: int, resolution: int = DEFAULT_RESOLUTION) -> ClosureGraph:
    """Closure relations derived from block inclusions.

    For each continuous family and each end lambda -> sigma of the grid, the
    limit point s = Pri(eps, sigma) at (q, t) is split by the constraint into
    blocks. A label b lies in the closure of the family when it has the same
    Lambda and parity as s and its K-types sit inside one block of s. The
    edge is drawn from the generic grid neighbour of the end to b.
    """
    algebra = Algebra(algebra)
    if algebra not in (Algebra.QReduced, Algebra.Groupoid):
        raise DomainError("closure graphs are built for QReduced and Groupoid")
    if algebra is Algebra.Groupoid and t != 0.0:
        raise DomainError("the groupoid spectrum lives over t = 0")
    if algebra is Algebra.QReduced and (t == 0.0 or q == 1.0):
        raise DomainError("the q-reduced spectrum needs q != 1 and t != 0")
    nodes = enumerate_spectrum(algebra, q, t, resolution, n_max)
    g = nx.DiGraph()
    g.add_nodes_from(nodes)
    grid = unit_grid(resolution)
    cont_kind = "PrincipalQ" if algebra is Algebra.QReduced else "GroupoidCont"
    by_key = {}
    for x in nodes:
        if x.kind == cont_kind:
            by_key[(x.epsilon, x.lam)] = x
    cand = [x for x in nodes if not (x.kind == cont_kind and x.lam not in (1, -1))]
    info = {x: (label_Lambda(x, q, t), label_ktypes(x)) for x in cand}
    for eps in (1, -1):
        for sigma, neigh in ((1, grid[1]), (-1, grid[-2])):
            a = by_key[(eps, neigh)]
            limit = SpectralPoint.pri(q, t, eps, complex(sigma))
            lam_lim, e_lim, _ = classify(limit)
            blocks = constraint_blocks(limit, n_max + 2)
            for b in cand:
                lam_b, kt = info[b]
                if abs(lam_b - lam_lim) > LAMBDA_TOL or kt.parity != e_lim:
                    continue
                if any(kt.issubset(blk) for blk in blocks):
                    g.add_edge(a, b)
    return ClosureGraph(algebra, q, t, nodes, g)
