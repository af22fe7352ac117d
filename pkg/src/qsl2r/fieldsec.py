"""Generator sections of the continuous field and their numerical certificates.

A section assigns to each point s of S an operator on the fiber over s. Here
the fibers are truncated to |n| <= N and written in the basis zeta_n; the
weights of :func:`paramspace.fiber_weights` give the inner product.
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .paramspace import (KTypeSet, Lambda, SpectralPoint, classify, constraint_blocks, fiber_weights, fiber_window,
                         jmap, ktypes)
from .scalars import eta, pri_chart, qint

KINDS = ("E", "T_diag", "T_up", "T_down", "S_diag", "S_up", "S_down")
ALIASES = {"e": "E", "Te": "T_diag", "T+e": "T_up", "T-e": "T_down"}
SHIFT = {"E": 0, "T_diag": 0, "T_up": 2, "T_down": -2, "S_diag": 0, "S_up": 2, "S_down": -2}


@dataclass(frozen=True)
class Section:
    """A generator section: ``kind`` at K-type ``n``.

    E(n) is the rank-one idempotent e_n; T_*(n) are the q-fiber generators
    (groupoid scalars at t = 0); S_*(n) are the rescaled generators of the
    analytic family, which stay defined through q = 1.
    """

    kind: str
    n: int

    def __post_init__(self):
        kind = ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise DomainError(f"unknown section kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "n", int(self.n))

    @property
    def target(self) -> int:
        return self.n + SHIFT[self.kind]

    @classmethod
    def parse(cls, text: str) -> "Section":
        m = re.fullmatch(r"\s*([A-Za-z_+\-]+)\((-?\d+)\)\s*", text)
        if not m:
            raise DomainError(f"cannot parse section id {text!r}")
        return cls(m.group(1), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.kind}({self.n})"


def all_sections(n_max: int, kinds=KINDS) -> list[Section]:
    return [Section(k, n) for k in kinds for n in range(-n_max, n_max + 1)]


@lru_cache(maxsize=4096)
def _window(s: SpectralPoint, N: int):
    w = fiber_window(s, N)
    return w, {int(k): i for i, k in enumerate(w)}


@lru_cache(maxsize=4096)
def _weights(s: SpectralPoint, N: int):
    return fiber_weights(s, N)


def rank_one(s: SpectralPoint, n: int, m: int, N: int) -> np.ndarray:
    """Matrix of E_n^m(s): psi -> ||zeta_n||^-2 (zeta_n | psi) zeta_m, zero unless n, m in Z(s)."""
    w, pos = _window(s, N)
    A = np.zeros((len(w), len(w)), dtype=complex)
    i, j = pos.get(int(m)), pos.get(int(n))
    if i is not None and j is not None:
        A[i, j] = 1.0
    return A


def section_scalar(sec: Section, s: SpectralPoint) -> complex:
    """The scalar multiplying E_n^{target}(s) in the section at s."""
    q, t = s.loc.q, s.loc.t
    n = sec.n
    if sec.kind == "E":
        return 1.0 + 0j
    lam = Lambda(s)
    if sec.kind.startswith("T"):
        if q == 1.0:
            raise DomainError("T-sections live over q != 1; use the S-sections through q = 1")
        Q = s.loc.qt
        if sec.kind == "T_diag":
            return lam + 1 / lam
        if sec.kind == "T_up":
            return lam * Q ** (1 + n) - Q ** (-1 - n) / lam
        return lam * Q ** (1 - n) - Q ** (-1 + n) / lam
    # rescaled sections
    if q != 1.0 and t != 0.0:
        Q = s.loc.qt
        e = eta(q, t)
        if sec.kind == "S_diag":
            return (lam + 1 / lam - (Q + 1 / Q)) / e
        if sec.kind == "S_up":
            return (lam * Q ** (1 + n) - Q ** (-1 - n) / lam) / e
        return (lam * Q ** (1 - n) - Q ** (-1 + n) / lam) / e
    if q != 1.0:
        h = 2 * math.log(q)
        if sec.kind == "S_diag":
            return (lam + 1 / lam - 2) / h
        return (lam - 1 / lam) / h
    if sec.kind == "S_diag":
        return 0j
    if t != 0.0:
        return t * (lam + 1 + n) if sec.kind == "S_up" else t * (lam + 1 - n)
    return lam


def section_matrix(sec: Section, s: SpectralPoint, N: int, perturb: complex = 0.0) -> np.ndarray:
    """pi_s(section) in the zeta basis. ``perturb`` is added to the scalar (for negative controls)."""
    return (section_scalar(sec, s) + perturb) * rank_one(s, sec.n, sec.target, N)


def section_T(s: SpectralPoint, n: int, kind: str, N: int) -> np.ndarray:
    """The q-fiber generator section T_{kind}(n) at s, kind in {diag, up, down}."""
    return section_matrix(Section(f"T_{kind}", n), s, N)


def orthonormal(A: np.ndarray, weights) -> np.ndarray:
    """A in an orthonormal basis: D^1/2 A D^-1/2."""
    r = np.sqrt(np.asarray(weights, dtype=float))
    return A * (r[:, None] / r[None, :])


def interior_mask(s: SpectralPoint, N: int, margin: int = 4) -> np.ndarray:
    w, _ = _window(s, N)
    return np.abs(w) <= N - margin


def op_norm(A: np.ndarray, s: SpectralPoint, N: int, margin: int = 4) -> float:
    """Largest singular value of the interior block, in orthonormal coordinates."""
    B = orthonormal(A, _weights(s, N))
    mask = interior_mask(s, N, margin)
    B = B[np.ix_(mask, mask)]
    if B.size == 0:
        return 0.0
    return float(np.linalg.norm(B, 2))


# continuity


def _chart_key(s: SpectralPoint):
    if s.continuous:
        return ("Pri", s.epsilon)
    return ("Dis", s.sigma, s.n, s.sign)


@dataclass
class ContinuityReport:
    section: str
    params: list
    norms: list
    jumps: list
    max_jump: float
    lipschitz: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_jump <= self.tol

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path_param", "norm", "jump", "pass"])
        for p, nrm, j in zip(self.params, self.norms, [0.0] + list(self.jumps)):
            w.writerow([repr(float(p)), f"{nrm:.12e}", f"{j:.6e}", int(j <= self.tol)])
        return buf.getvalue()


def certify_continuity(sec: Section, path, tol: float = 1.0, N: int = 30, params=None,
                       margin: int = 4) -> ContinuityReport:
    """Jumps of the section between consecutive path points, in orthonormal coordinates.

    All points must share a component (the same fiber window). The jump is the
    operator norm of the difference of the interior blocks; ``lipschitz`` is
    the largest jump per unit path parameter.
    """
    path = list(path)
    if not path:
        raise DomainError("empty path")
    key = _chart_key(path[0])
    for s in path:
        if _chart_key(s) != key:
            raise DomainError(f"chart violation: {s.describe()} is not in component {key}")
    params = list(range(len(path))) if params is None else [float(p) for p in params]
    mats = []
    norms = []
    mask = interior_mask(path[0], N, margin)
    for s in path:
        B = orthonormal(section_matrix(sec, s, N), _weights(s, N))[np.ix_(mask, mask)]
        mats.append(B)
        norms.append(float(np.linalg.norm(B, 2)) if B.size else 0.0)
    jumps = [float(np.linalg.norm(b - a, 2)) if a.size else 0.0 for a, b in zip(mats, mats[1:])]
    steps = [abs(b - a) for a, b in zip(params, params[1:])]
    lip = max((j / d for j, d in zip(jumps, steps) if d > 0), default=0.0)
    return ContinuityReport(str(sec), params, norms, jumps, max(jumps, default=0.0), lip, tol)


@dataclass
class RefinementReport:
    section: str
    resolutions: list
    steps: list
    max_jumps: list
    slope: float | None

    @property
    def exact(self) -> bool:
        return self.slope is None

    def passed(self, min_slope: float = 0.9) -> bool:
        return self.exact or self.slope >= min_slope


def refinement_slope(sec: Section, path_fn, a: float, b: float, resolutions=(16, 32, 64, 128),
                     N: int = 30, floor: float = 1e-14) -> RefinementReport:
    """Fit log(max jump) against log(step) as the path sampling refines.

    ``path_fn(p)`` returns the SpectralPoint at path parameter p in [a, b].
    """
    steps, jumps = [], []
    for k in resolutions:
        ps = np.linspace(a, b, k + 1)
        rep = certify_continuity(sec, [path_fn(float(p)) for p in ps], N=N, params=ps)
        steps.append((b - a) / k)
        jumps.append(rep.max_jump)
    if max(jumps) <= floor:
        slope = None
    else:
        slope = float(np.polyfit(np.log(steps), np.log(jumps), 1)[0])
    return RefinementReport(str(sec), list(resolutions), steps, jumps, slope)


def declared_paths():
    """Five test paths: (name, section, path_fn, a, b).

    They cover a walk around the even circle, an odd family near Lambda = 1,
    a crossing of t = 0 on a continuous and on a discrete component, and a
    crossing of q = 1 in the chart (q, t, q^lam_c).
    """
    lam_c = 0.7j

    def through_q1(p):
        q = math.exp(p)
        if q == 1.0:
            return SpectralPoint.pri(1.0, 1.0, -1, lam_c)
        return SpectralPoint.pri(q, 1.0, -1, pri_chart(q, lam_c))

    return [
        ("even circle", Section("T_diag", 0), lambda p: SpectralPoint.pri(2.0, 1.0, 1, np.exp(1j * p)), 0.0, math.pi),
        ("odd near 1", Section("T_up", 1), lambda p: SpectralPoint.pri(2.0, 1.0, -1, np.exp(1j * p)), 0.0, 1.0),
        ("cross t=0", Section("T_up", 1), lambda p: SpectralPoint.pri(2.0, p, -1, np.exp(1.0j)), -0.5, 0.5),
        ("discrete cross t=0", Section("T_up", 3), lambda p: SpectralPoint.dis(2.0, p, 1, 2, 1), -1.0, 1.0),
        ("through q=1", Section("S_up", 1), through_q1, -0.5, 0.5),
    ]


# vanishing, equivariance, constraint compatibility


@dataclass
class CheckReport:
    name: str
    checked: int
    residual: float
    worst: str
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual < self.tol if self.tol > 0 else self.residual == 0.0


def discrete_points(q: float, t: float, n_max: int, min_order: int = 1) -> list[SpectralPoint]:
    sigmas = (1, -1) if q != 1.0 else (1,)
    return [SpectralPoint.dis(q, t, sg, n, sign) for sg in sigmas for n in range(min_order, n_max + 1)
            for sign in (1, -1)]


def check_vanishing(sections, q: float, t: float, n_max: int, N: int | None = None) -> CheckReport:
    """pi_s(section) = 0 on every discrete s whose K-types miss the section's n or its target."""
    if isinstance(sections, Section):
        sections = [sections]
    N = n_max + 4 if N is None else N
    count = 0
    worst = 0.0
    where = ""
    for s in discrete_points(q, t, n_max):
        zs = ktypes(s)
        for sec in sections:
            if zs.contains(sec.n) and zs.contains(sec.target):
                continue
            count += 1
            v = float(np.abs(section_matrix(sec, s, N)).max(initial=0.0))
            if v > worst:
                worst, where = v, f"{sec} at {s.describe()}"
    return CheckReport("vanishing", count, worst, where, 0.0)


def j_pairs(q: float, n_max: int):
    """(continuous s, discrete s') at t = 0 with equal Lambda and parity, orders 0..n_max."""
    out = []
    for sp in discrete_points(q, 0.0, n_max, min_order=0):
        lam, e, _ = classify(sp)
        out.append((SpectralPoint.pri(q, 0.0, e, lam), sp))
    return out


def check_J_equivariance(sections, q: float, n_max: int, tol: float = 1e-12, N: int | None = None,
                         perturb: complex = 0.0) -> CheckReport:
    """max |J sigma_s - sigma_s' J| over all matched pairs and sections."""
    if isinstance(sections, Section):
        sections = [sections]
    N = n_max + 4 if N is None else N
    worst = 0.0
    where = ""
    count = 0
    for s, sp in j_pairs(q, n_max):
        J = jmap(sp, s, N)
        for sec in sections:
            lhs = J @ section_matrix(sec, s, N)
            rhs = section_matrix(sec, sp, N, perturb) @ J
            r = float(np.abs(lhs - rhs).max(initial=0.0))
            count += 1
            if r > worst or not where:
                worst, where = max(worst, r), f"{sec} at {sp.describe()}"
    return CheckReport("J-equivariance", count, worst, where, tol)


def block_residual(A: np.ndarray, s: SpectralPoint, N: int) -> float:
    """Largest entry of A coupling two different constraint blocks of s."""
    w, _ = _window(s, N)
    label = np.full(len(w), -1)
    for b, blk in enumerate(constraint_blocks(s, N)):
        for i, k in enumerate(w):
            if blk.contains(int(k)):
                label[i] = b
    off = label[:, None] != label[None, :]
    return float(np.abs(A[off]).max(initial=0.0))


def check_block_diagonal(sections, points, N: int, tol: float = 1e-12) -> CheckReport:
    if isinstance(sections, Section):
        sections = [sections]
    worst = 0.0
    where = ""
    count = 0
    for s in points:
        for sec in sections:
            try:
                A = section_matrix(sec, s, N)
            except DomainError:
                continue
            r = block_residual(A, s, N)
            count += 1
            if r > worst or not where:
                worst, where = max(worst, r), f"{sec} at {s.describe()}"
    return CheckReport("block-diagonal", count, worst, where, tol)


def sup_norm(sec: Section, q: float, t: float, lam_grid, N: int = 30) -> float:
    """sup over continuous points at (q, t) of the section's operator norm."""
    out = 0.0
    for eps in (1, -1):
        for lam in lam_grid:
            s = SpectralPoint.pri(q, t, eps, lam)
            out = max(out, op_norm(section_matrix(sec, s, N), s, N))
    return out


__all__ = [
    "Section", "KINDS", "all_sections", "rank_one", "section_scalar", "section_matrix", "section_T",
    "orthonormal", "op_norm", "certify_continuity", "refinement_slope", "declared_paths",
    "check_vanishing", "check_J_equivariance", "check_block_diagonal", "block_residual", "j_pairs",
    "discrete_points", "sup_norm", "ContinuityReport", "RefinementReport", "CheckReport", "KTypeSet",
]
