"""The combinatorial skeleton behind the K-theory computation.

Irreducibles are sorted into strata W_m by their minimal K-types; on each
stratum the K-type projections e_n, n in W_m, act with rank one. The K-group
answer itself is a stated formula, cross-checked against label counts.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvarianceError
from .mackey import mu
from .modgen import DEFAULT_MARGIN, build_discrete_q, build_groupoid, build_principal_q
from .paramspace import (Algebra, DEFAULT_RESOLUTION, SpectrumPoint, closure_graph, enumerate_spectrum,
                         label_ktypes, minimal_ktypes)
from .scalars import DeformationPoint, qint

K0_FORMULA = "ℤ ⊕ ℤ³ ⊕ ⊕ℤ"
K0_INDEXED = "ℤ ⊕ ℤ³ ⊕ (⊕_{n ≤ n_max, σ = ±1} ℤ)"
SUPERSCRIPT = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")


def wm(m: int) -> frozenset:
    """The m-th possible minimal K-type set."""
    if m < 1:
        raise DomainError("strata are indexed by m >= 1")
    if m == 1:
        return frozenset({0})
    if m == 2:
        return frozenset({-1, 1})
    l = (m - 1) // 2
    return frozenset({l}) if m % 2 == 1 else frozenset({-((m - 2) // 2)})


def stratum_of(minimal: frozenset) -> int:
    """The m with W_m equal to ``minimal``; InvarianceError if there is none."""
    s = frozenset(int(k) for k in minimal)
    if s == frozenset({0}):
        return 1
    if s == frozenset({-1, 1}):
        return 2
    if len(s) == 1:
        (k,) = s
        if k >= 1:
            return 2 * k + 1
        if k <= -1:
            return -2 * k + 2
    raise InvarianceError(f"minimal K-type set {sorted(s)} is not a W_m")


@dataclass(frozen=True)
class LedgerEntry:
    label: SpectrumPoint
    ktypes: tuple
    minimal: frozenset
    stratum: int


@dataclass
class KTypeLedger:
    q: float
    n_max: int
    entries: list
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def strata(self) -> dict:
        out = {}
        for e in self.entries:
            out.setdefault(e.stratum, []).append(e.label)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "ktypes_truncated", "min_ktypes", "stratum_m"])
        for e in self.entries:
            w.writerow([e.label.label, " ".join(map(str, e.ktypes)),
                        " ".join(map(str, sorted(e.minimal))), e.stratum])
        return buf.getvalue()


def stratify(q: float, n_max: int, resolution: int = DEFAULT_RESOLUTION) -> KTypeLedger:
    """Assign every desk-scale label of both algebras to its stratum.

    K-types are listed for |k| <= n_max + 1. Checks: every label lands in
    exactly one stratum, and mu maps QReduced stratum m into Groupoid stratum m.
    """
    if q == 1.0:
        raise DomainError("stratify needs q != 1")
    N = n_max + 1
    entries = []
    for alg, t in ((Algebra.QReduced, 1.0), (Algebra.Groupoid, 0.0)):
        for x in enumerate_spectrum(alg, q, t, resolution, n_max):
            mins = minimal_ktypes(x)
            ks = tuple(int(k) for k in label_ktypes(x).window(N))
            entries.append(LedgerEntry(x, ks, mins, stratum_of(mins)))
    led = KTypeLedger(q, n_max, entries)
    hits = [sum(1 for m in range(1, 2 * N + 3) if wm(m) == e.minimal) for e in entries]
    led.checks["partition"] = (all(h == 1 for h in hits), f"{len(entries)} labels")
    by_label = {e.label: e.stratum for e in entries}
    bad = [e.label.label for e in entries if e.label.algebra is Algebra.QReduced
           and by_label.get(mu(e.label)) != e.stratum]
    led.checks["mu_invariance"] = (not bad, f"failures: {bad[:3]}")
    return led


# rank of K-type projections


def label_module(x: SpectrumPoint, q: float, N: int):
    """Truncated module carrying x, and the mask of its K-types in the module window."""
    if x.kind == "PrincipalQ":
        m = build_principal_q(DeformationPoint(q, 1.0), x.epsilon, x.lam, N)
    elif x.kind == "DiscreteQ":
        m = build_discrete_q(DeformationPoint(q, 1.0), x.sigma, x.n, x.sign, N)
    elif x.kind == "GroupoidCont":
        m = build_groupoid(x.lam, x.epsilon, N, q=q)
    elif x.kind == "GroupoidChar":
        m = build_groupoid(complex(x.sigma), 1 if x.m % 2 == 0 else -1, N, q=q)
    else:
        raise DomainError(f"no module builder for {x.kind}")
    keep = np.array([label_ktypes(x).contains(int(k)) for k in m.window])
    return m, keep


def rank_profile(x: SpectrumPoint, n: int, q: float, N: int | None = None) -> int:
    """Rank of the spectral projection of theta onto the K-type n, on the module of x."""
    N = max(abs(n), 1) + DEFAULT_MARGIN + 2 if N is None else N
    if x.kind == "DiscreteQ":
        N = max(N, x.n + 3 + DEFAULT_MARGIN)
    if x.kind == "GroupoidChar":
        N = max(N, abs(x.m) + DEFAULT_MARGIN + 2)
    m, keep = label_module(x, q, N)
    th = np.real(np.diag(m.theta))[keep]
    target = n if m.family.value == "Groupoid" else qint(n, m.Q)
    P = np.diag((np.abs(th - target) < 1e-9 * max(1.0, abs(target))).astype(float))
    return int(np.linalg.matrix_rank(P)) if P.size else 0


@dataclass
class RankReport:
    checked: int
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures


def verify_rank_claim(ledger: KTypeLedger) -> RankReport:
    """rank_profile(x, n) = 1 for every x in stratum m and n in W_m."""
    fails = []
    count = 0
    for e in ledger.entries:
        for n in sorted(wm(e.stratum)):
            count += 1
            r = rank_profile(e.label, n, ledger.q)
            if r != 1:
                fails.append((e.label.label, n, r))
    return RankReport(count, fails)


def ideal_monotonicity(q: float, n_max: int, resolution: int = DEFAULT_RESOLUTION) -> list:
    """Closure edges a -> b with n in K-types(b) but not in K-types(a); empty when membership is closed."""
    bad = []
    for alg, t in ((Algebra.QReduced, 1.0), (Algebra.Groupoid, 0.0)):
        g = closure_graph(alg, q, t, n_max, resolution)
        for a, b in g.edges:
            za, zb = label_ktypes(a), label_ktypes(b)
            for n in range(-n_max - 1, n_max + 2):
                if zb.contains(n) and not za.contains(n):
                    bad.append((a.label, b.label, n))
    return bad


# K-groups


def _power(k: int) -> str:
    return "ℤ" if k == 1 else "ℤ" + str(k).translate(SUPERSCRIPT)


@dataclass
class KSummary:
    q: float
    n_max: int
    formula: str
    indexed: str
    truncated: str
    rank: int
    k1: str
    provenance: dict
    discrete_labels: int
    remark_index_count: int
    graph_counts: dict
    consistent: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def k_summary(q: float, n_max: int, resolution: int = DEFAULT_RESOLUTION) -> KSummary:
    """The stated K-groups with generator provenance and truncated counts.

    One ℤ per discrete label D^±(σ, n), n <= n_max; ℤ from the odd family and
    ℤ³ from the even family. The stated sum is indexed by (n, σ) only; that
    count is reported separately as ``remark_index_count``.
    """
    if q == 1.0:
        raise DomainError("k_summary needs q != 1")
    labels = enumerate_spectrum(Algebra.QReduced, q, 1.0, resolution, n_max)
    disc = [x for x in labels if x.kind == "DiscreteQ"]
    g = closure_graph(Algebra.QReduced, q, 1.0, n_max, resolution)
    isolated = g.isolated()
    glued = [x for x in disc if g.graph.degree(x) > 0]
    families = {x.epsilon for x in labels if x.continuous}
    counts = {"discrete_labels": len(disc), "isolated": len(isolated), "glued_to_families": len(glued),
              "continuous_families": len(families), "components": len(g.components())}
    consistent = (len(isolated) + len(glued) == len(disc) and len(families) == 2
                  and counts["components"] == len(families) + len(isolated))
    return KSummary(
        q=q, n_max=n_max, formula=K0_FORMULA, indexed=K0_INDEXED,
        truncated=f"ℤ ⊕ ℤ³ ⊕ {_power(len(disc))}", rank=1 + 3 + len(disc), k1="0",
        provenance={"ℤ": "odd principal family", "ℤ³": "even principal family",
                    "⊕ℤ": "one generator per discrete label D^±(σ, n)"},
        discrete_labels=len(disc), remark_index_count=2 * (n_max + 1), graph_counts=counts,
        consistent=consistent)


__all__ = [
    "wm", "stratum_of", "LedgerEntry", "KTypeLedger", "stratify", "label_module", "rank_profile",
    "verify_rank_claim", "RankReport", "ideal_monotonicity", "KSummary", "k_summary", "K0_FORMULA",
]
