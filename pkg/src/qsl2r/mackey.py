"""The Mackey embedding at matrix level and the bijection mu.

alpha_t moves a groupoid generator f.e_n to the q-fiber: it is evaluated on
the (q, t) fiber point with the given Lambda and parity, then transported to
the q-fiber window by the diagonal isometry v built from norm ratios.
"""
from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import DomainError, FamilyMismatch, InvarianceError
from .fieldsec import Section, section_matrix
from .modgen import build_groupoid, t_operators
from .paramspace import (Algebra, DEFAULT_RESOLUTION, SpectralPoint, SpectrumPoint, closure_graph,
                         enumerate_spectrum, fiber_weights, fiber_window, groupoid_char, groupoid_cont,
                         label_ktypes, label_point, minimal_ktypes)
from .afield import loglog_slope

COUPLING_TOL = 1e-12


def _reference(s: SpectralPoint, q: float) -> SpectralPoint:
    if s.continuous:
        return SpectralPoint.pri(q, 1.0, s.epsilon, s.lam)
    return SpectralPoint.dis(q, 1.0, s.sigma, s.n, s.sign)


def v_isometry(s: SpectralPoint, q: float, N: int) -> np.ndarray:
    """Diagonal isometry from the fiber at s (weights at q^t) to the same window with weights at q."""
    if s.loc.q != q:
        raise FamilyMismatch(f"point lives over q = {s.loc.q}, reference q = {q}")
    w_src = fiber_weights(s, N)
    w_ref = fiber_weights(_reference(s, q), N)
    return np.diag(np.sqrt(w_src / w_ref))


def alpha_t_image_at(g: Section, s: SpectralPoint, N: int) -> np.ndarray:
    """Matrix of alpha_t(g) in the q-fiber block carried by s, for s over (q, t)."""
    q = s.loc.q
    if q == 1.0:
        raise DomainError("alpha_t is defined for q != 1")
    if g.kind.startswith("S"):
        raise FamilyMismatch("alpha_t acts on groupoid generators f.e_n")
    d = np.diag(v_isometry(s, q, N))
    return section_matrix(g, s, N) * (d[:, None] / d[None, :])


def alpha_t_image(g: Section, q: float, t: float, Lambda: complex, parity: int, N: int) -> np.ndarray:
    """alpha_t(g) in the continuous block labelled (Lambda, parity)."""
    return alpha_t_image_at(g, SpectralPoint.pri(q, t, parity, Lambda), N)


def morphism_residual(s: SpectralPoint, n: int, N: int, margin: int = 4) -> float:
    """Residual of a(T-(n+2)) a(T+(n)) = a(T(n))^2 - (Q^(n+1) + Q^-(n+1))^2 a(e_n) on the interior."""
    Q = s.loc.qt
    lhs = alpha_t_image_at(Section("T_down", n + 2), s, N) @ alpha_t_image_at(Section("T_up", n), s, N)
    T = alpha_t_image_at(Section("T_diag", n), s, N)
    rhs = T @ T - (Q ** (n + 1) + Q ** -(n + 1)) ** 2 * alpha_t_image_at(Section("E", n), s, N)
    w = fiber_window(s, N)
    mask = np.abs(w) <= N - margin
    return float(np.abs((lhs - rhs)[np.ix_(mask, mask)]).max(initial=0.0))


def alpha_limit_slope(g: Section, point_at, ts, N: int = 20) -> tuple[float | None, list]:
    """Entrywise error of alpha_t(g) against alpha_0(g) along t -> 0, with its log-log slope.

    ``point_at(t)`` returns the fiber point over (q, t).
    """
    ref = alpha_t_image_at(g, point_at(0.0), N)
    errs = [float(np.abs(alpha_t_image_at(g, point_at(float(t)), N) - ref).max()) for t in ts]
    if max(errs) <= 1e-14:
        return None, errs
    return loglog_slope(ts, errs), errs


# the bijection


def mu(x: SpectrumPoint) -> SpectrumPoint:
    if x.algebra is not Algebra.QReduced:
        raise FamilyMismatch(f"mu is defined on QReduced labels, got {x.algebra.value}")
    if x.kind == "PrincipalQ":
        if x.lam in (1, -1):
            if x.epsilon == -1:
                raise DomainError("PrincipalQ(-1, +-1) is reducible and not in the spectrum")
            return groupoid_char(int(x.lam.real), 0)
        return groupoid_cont(x.lam, x.epsilon)
    return groupoid_char(x.sigma, x.sign * (x.n + 1))


@dataclass
class MuTable:
    q: float
    mapping: dict

    def inverse(self) -> dict:
        return {v: k for k, v in self.mapping.items()}

    def to_json(self) -> str:
        return json.dumps([[a.label, b.label] for a, b in self.mapping.items()])


def mu_table(q: float, n_max: int, resolution: int = DEFAULT_RESOLUTION) -> MuTable:
    if q == 1.0:
        raise DomainError("the q-reduced spectrum needs q != 1")
    return MuTable(q, {x: mu(x) for x in enumerate_spectrum(Algebra.QReduced, q, 1.0, resolution, n_max)})


def _char_bound(n_max: int) -> int:
    return n_max + 1


def pullback_decomposition(x: SpectrumPoint, q: float, n_max: int, margin: int = 4) -> list[SpectrumPoint]:
    """Groupoid irreducibles in alpha_0^*[x], read off the alpha_0 couplings.

    The t = 0 point of x's family carries the groupoid module with the same
    Lambda and parity, restricted to x's K-types. Connected pieces of the
    T+- coupling graph are the summands: a coupled chain is the continuous
    groupoid irreducible, an uncoupled K-type m the character (Lambda, m).
    Characters are kept for |m| <= n_max + 1.
    """
    if x.algebra is not Algebra.QReduced:
        raise FamilyMismatch("pullbacks are taken of QReduced labels")
    if x.kind == "PrincipalQ" and x.epsilon == -1 and x.lam in (1, -1):
        raise DomainError("PrincipalQ(-1, +-1) is not in the spectrum")
    bound = _char_bound(n_max)
    s = label_point(x, q, 0.0)
    lam = complex(x.lam) if x.kind == "PrincipalQ" else complex(x.sigma)
    N = bound + margin + 2
    mod = build_groupoid(lam, label_ktypes(x).parity, N, margin, q=q)
    _, Tp, Tm = t_operators(mod)
    keep = np.array([label_ktypes(x).contains(int(k)) for k in mod.window])
    C = (np.abs(Tp) + np.abs(Tm))[np.ix_(keep, keep)] > COUPLING_TOL
    ks = mod.window[keep]
    g = nx.Graph()
    g.add_nodes_from(range(len(ks)))
    g.add_edges_from(zip(*np.nonzero(C)))
    out = []
    for comp in nx.connected_components(g):
        if len(comp) > 1:
            out.append(groupoid_cont(lam, s.epsilon))
        else:
            m = int(ks[next(iter(comp))])
            if abs(m) <= bound:
                out.append(groupoid_char(int(round(lam.real)), m))
    return sorted(out, key=lambda y: (y.kind, y.m))


def displayed_decomposition(x: SpectrumPoint, n_max: int) -> list[SpectrumPoint]:
    """The closed-form pullbacks, truncated like :func:`pullback_decomposition`."""
    bound = _char_bound(n_max)
    if x.kind == "PrincipalQ":
        if x.lam in (1, -1):
            if x.epsilon == -1:
                raise DomainError("PrincipalQ(-1, +-1) is not in the spectrum")
            return [groupoid_char(int(x.lam.real), m) for m in range(-bound, bound + 1) if m % 2 == 0]
        return [groupoid_cont(x.lam, x.epsilon)]
    par = (x.n + 1) % 2
    return [groupoid_char(x.sigma, m) for m in range(-bound, bound + 1)
            if m % 2 == par and x.sign * m > x.n]


# verification


@dataclass
class MuReport:
    q: float
    n_max: int
    checks: dict = field(default_factory=dict)
    witness: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "pass", "detail"])
        for name, (ok, detail) in self.checks.items():
            w.writerow([name, int(ok), detail])
        return buf.getvalue()


def eliminate(labels, decomp: dict, n_max: int) -> dict:
    """Re-derive mu on characters by increasing |m|.

    Each character is assigned to the unique not-yet-assigned label whose
    pullback contains it. Raises InvarianceError when the choice is not unique.
    """
    contains = {}
    for x in labels:
        for y in decomp[x]:
            if y.kind == "GroupoidChar":
                contains.setdefault(y, []).append(x)
    assigned = {}
    used = set()
    bound = _char_bound(n_max)
    for m in sorted(range(-bound, bound + 1), key=lambda k: (abs(k), k)):
        for sigma in (1, -1):
            y = groupoid_char(sigma, m)
            cands = [x for x in contains.get(y, []) if x not in used]
            if len(cands) != 1:
                raise InvarianceError(f"{y.label}: {len(cands)} unassigned candidates")
            assigned[cands[0]] = y
            used.add(cands[0])
    return assigned


def verify_mu(q: float, n_max: int, resolution: int = DEFAULT_RESOLUTION) -> MuReport:
    """Checks (bijection, elimination, minimal K-types, continuity, inverse discontinuity, containment)."""
    table = mu_table(q, n_max, resolution)
    rep = MuReport(q, n_max)
    src = list(table.mapping)
    tgt = enumerate_spectrum(Algebra.Groupoid, q, 0.0, resolution, n_max)
    images = list(table.mapping.values())
    bij = len(set(images)) == len(images) and set(images) == set(tgt) and len(src) == len(tgt)
    rep.checks["bijection"] = (bij, f"{len(src)} labels -> {len(set(images))} images of {len(tgt)}")

    decomp = {x: pullback_decomposition(x, q, n_max) for x in src}
    chars = [x for x in src if table.mapping[x].kind == "GroupoidChar"]
    try:
        derived = eliminate(chars, decomp, n_max)
        bad = [x.label for x in chars if derived.get(x) != table.mapping[x]]
        rep.checks["elimination"] = (not bad, f"{len(derived)} characters re-derived; mismatches: {bad[:3]}")
    except InvarianceError as exc:
        rep.checks["elimination"] = (False, str(exc))

    bad = [x.label for x in src if minimal_ktypes(x) != minimal_ktypes(table.mapping[x])]
    rep.checks["min_ktypes"] = (not bad, f"{len(src)} labels; mismatches: {bad[:3]}")

    gq = closure_graph(Algebra.QReduced, q, 1.0, n_max, resolution)
    gg = closure_graph(Algebra.Groupoid, q, 0.0, n_max, resolution)
    cont_in = {}
    for a, b in gg.edges:
        if a.continuous:
            cont_in.setdefault(b, set()).add(a.epsilon)
    bad = []
    for a, b in gq.edges:
        ma, mb = table.mapping[a], table.mapping[b]
        if ma.epsilon not in cont_in.get(mb, set()):
            bad.append(f"{a.label}->{b.label}")
    rep.checks["continuity"] = (not bad, f"{len(gq.edges)} closure edges; failures: {bad[:3]}")

    inv = table.inverse()
    y = groupoid_char(1, 3)
    x = inv.get(y)
    in_closure = bool(cont_in.get(y))
    isolated = x is not None and gq.graph.degree(x) == 0
    rep.witness = {"char": y.label, "preimage": None if x is None else x.label,
                   "char_in_family_closure": in_closure, "preimage_isolated": isolated}
    rep.checks["inverse_discontinuity"] = (in_closure and isolated,
                                           f"{y.label} in closure: {in_closure}; "
                                           f"{None if x is None else x.label} isolated: {isolated}")

    bad = [x.label for x in src if table.mapping[x] not in decomp[x]]
    rep.checks["containment"] = (not bad, f"{len(src)} labels; failures: {bad[:3]}")

    mult = Counter(y for x in src for y in decomp[x])
    expect = Counter(y for x in src for y in displayed_decomposition(x, n_max))
    rep.checks["multiplicities"] = (mult == expect, f"{sum(mult.values())} summands")
    return rep


__all__ = [
    "v_isometry", "alpha_t_image", "alpha_t_image_at", "morphism_residual", "alpha_limit_slope", "mu",
    "MuTable", "mu_table", "pullback_decomposition", "displayed_decomposition", "eliminate", "verify_mu",
    "MuReport",
]
