"""Point evaluations of the algebraic Mackey field.

Over the ring of analytic functions in (q, t) the generators x, x*, z, theta
specialize at every point to one of four algebras: U_{q^t} for q != 1, t != 0,
the groupoid algebra at t = 0, the classical enveloping algebra at q = 1 and
the motion-group algebra at q = t = 0. This module evaluates the s-operators
and their scalars kappa on the matching target modules.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algcheck import residual, twisted_theta_commutator
from .errors import DomainError, FamilyMismatch
from .modgen import (Family, TruncatedModule, build_classical_principal, build_groupoid, build_motion,
                     build_principal_q)
from .scalars import DeformationPoint, eta, qint

FD_STEP = 1e-5
LAMBDA_GRID = np.linspace(-2.0, 2.0, 17)


@dataclass(frozen=True)
class AnalyticLambda:
    """A callable lam(q, t) with lam(1, t) = 1, and optionally its q-derivative at q = 1."""

    func: Callable[[float, float], complex]
    deriv: Callable[[float], complex] | None = None
    name: str = "lambda"
    validated: bool = field(default=False, init=False)

    def __post_init__(self):
        for t in LAMBDA_GRID:
            v = complex(self.func(1.0, float(t)))
            if abs(v - 1.0) >= 1e-14:
                raise DomainError(f"{self.name}(1, {t}) = {v}, expected 1")
        object.__setattr__(self, "validated", True)

    def __call__(self, q: float, t: float) -> complex:
        return complex(self.func(q, t))

    def dq_at_one(self, t: float, h: float = FD_STEP) -> complex:
        """d lam / dq at q = 1: exact if supplied, else central difference plus one Richardson step."""
        if self.deriv is not None:
            return complex(self.deriv(t))
        return richardson_dq(self.func, t, h)

    @classmethod
    def power(cls, c: complex, name: str | None = None) -> "AnalyticLambda":
        """lam = q^{c t}; its derivative at q = 1 is c t."""
        c = complex(c)
        return cls(lambda q, t: complex(np.exp(c * t * math.log(q))), lambda t: c * t, name or f"q^({c}t)")

    @classmethod
    def chart(cls, lam_c: complex, name: str | None = None) -> "AnalyticLambda":
        """lam = q^{lam_c}, constant chart coordinate; derivative lam_c."""
        lam_c = complex(lam_c)
        return cls(lambda q, t: complex(np.exp(lam_c * math.log(q))), lambda t: lam_c, name or f"q^({lam_c})")


def richardson_dq(func, t: float, h: float = FD_STEP) -> complex:
    def central(step):
        return (complex(func(1.0 + step, t)) - complex(func(1.0 - step, t))) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


def kappa(q: float, t: float, n: int, lam: AnalyticLambda, exact: bool = False):
    """(kappa_n, kappa_+, kappa_-): scalars by which s_n, s+_n, s-_n act on zeta_n.

    ``exact=False`` uses finite differences for d lam/dq at q = 1 even if an
    exact derivative is attached.
    """
    if q <= 0:
        raise DomainError("q must be positive")
    if q != 1.0 and t != 0.0:
        Q = q ** t
        e = eta(q, t)
        lv = lam(q, t)
        kn = (lv + 1 / lv - (Q + 1 / Q)) / e
        kp = (lv * Q ** (1 + n) - Q ** (-1 - n) / lv) / e
        km = (lv * Q ** (1 - n) - Q ** (-1 + n) / lv) / e
        return complex(kn), complex(kp), complex(km)
    if q != 1.0:
        h = 2 * math.log(q)
        lv = lam(q, 0.0)
        return complex((lv + 1 / lv - 2) / h), complex((lv - 1 / lv) / h), complex((lv - 1 / lv) / h)
    d = lam.deriv(t) if (exact and lam.deriv is not None) else richardson_dq(lam.func, t)
    d = complex(d)
    return 0j, d + t * (1 + n), d + t * (1 - n)


def target_module(q: float, t: float, epsilon: int, lam: AnalyticLambda, N: int) -> TruncatedModule:
    """The module the specialization table attaches to (q, t)."""
    if q != 1.0 and t != 0.0:
        return build_principal_q(DeformationPoint(q, t), epsilon, lam(q, t), N)
    if q != 1.0:
        return build_groupoid(lam(q, 0.0), epsilon, N, q=q)
    d = lam.dq_at_one(t)
    if t != 0.0:
        return build_classical_principal(d / t, epsilon, N)
    return build_motion(d, epsilon, N)


@dataclass(frozen=True)
class Images:
    """Specialized generators x, x*, z, theta with the point data they need."""

    x: np.ndarray
    xs: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    Q: float
    t: float
    eta: float
    window: np.ndarray
    mask: np.ndarray


def specialized_generators(q: float, t: float, module: TruncatedModule) -> Images:
    """x, x*, z, theta at (q, t), read off the table's target module."""
    fam = module.family
    if q != 1.0:
        e = eta(q, t)
        want = Family.PrincipalQ if t != 0.0 else Family.Groupoid
        if fam is not want and not (t != 0.0 and fam is Family.DiscreteQ):
            raise FamilyMismatch(f"point ({q}, {t}) needs a {want.value} module, got {fam.value}")
        if t != 0.0 and abs(module.Q - q ** t) > 1e-14 * max(1.0, q ** t):
            raise FamilyMismatch("module built at a different q^t")
        eye = np.eye(module.dim)
        x = (module.X - eye) / e
        xs = (module.Xs - eye) / e
        z = module.Z / e
        Q = q ** t
    else:
        want = (Family.ClassicalPrincipal, Family.ClassicalDiscrete) if t != 0.0 else (Family.Motion,)
        if fam not in want:
            raise FamilyMismatch(f"point (1, {t}) needs {[f.value for f in want]}, got {fam.value}")
        e = 0.0
        # classical: x = tX (X = H/2), z = tZ (Z = iE); motion: x = dX, z = dZ
        scale = t if t != 0.0 else 1.0
        x = scale * module.X
        xs = scale * module.Xs
        z = scale * module.Z
        Q = 1.0
    return Images(x, xs, z, module.theta.copy(), Q, t, e, module.window.copy(), module.interior())


def s_operator_images(q: float, t: float, n: int, module: TruncatedModule):
    """(s_n, s+_n, s-_n) as matrices on the module.

    s_n = Q^-1 x + Q x* + (Q^n - Q^-n) z and
    s+-_n = Q^{+-n} x - Q^{-+n} x* -+ [2] z +- t [n], with Q = q^t.
    """
    g = specialized_generators(q, t, module)
    Q = g.Q
    eye = np.eye(len(g.window))
    qn = qint(n, Q)
    s = g.x / Q + Q * g.xs + (Q ** n - Q ** -n) * g.z
    sp = Q ** n * g.x - Q ** -n * g.xs - (Q + 1 / Q) * g.z + t * qn * eye
    sm = Q ** -n * g.x - Q ** n * g.xs + (Q + 1 / Q) * g.z - t * qn * eye
    return s, sp, sm


def assembled_images(q: float, t: float, module: TruncatedModule):
    """Operators whose column n is s_n zeta_n (resp. s+_n zeta_n, s-_n zeta_n).

    Vectorized over columns: the n-dependence of s_n enters only through
    per-column scalars.
    """
    g = specialized_generators(q, t, module)
    Q = g.Q
    k = g.window.astype(float)
    Qk, Qmk = Q ** k, Q ** -k
    qk = np.array([qint(int(v), Q) for v in g.window])
    q2 = Q + 1 / Q
    S = g.x / Q + Q * g.xs + g.z * (Qk - Qmk)[None, :]
    Sp = g.x * Qk[None, :] - g.xs * Qmk[None, :] - q2 * g.z + np.diag(t * qk)
    Sm = g.x * Qmk[None, :] - g.xs * Qk[None, :] + q2 * g.z - np.diag(t * qk)
    return S, Sp, Sm


def kappa_matrices(q: float, t: float, lam: AnalyticLambda, window, exact: bool = False):
    """The expected assembled operators: kappa_n on the diagonal, kappa+- on bands +-2."""
    window = np.asarray(window)
    d = len(window)
    pos = {int(v): i for i, v in enumerate(window)}
    S = np.zeros((d, d), dtype=complex)
    Sp = np.zeros_like(S)
    Sm = np.zeros_like(S)
    for j, v in enumerate(window):
        kn, kp, km = kappa(q, t, int(v), lam, exact)
        S[j, j] = kn
        if int(v) + 2 in pos:
            Sp[pos[int(v) + 2], j] = kp
        if int(v) - 2 in pos:
            Sm[pos[int(v) - 2], j] = km
    return S, Sp, Sm


AFIELD_RELATIONS = ("Qxth-Q-1thx=[2]z-tth", "zth-thz=x-xs", "Qzx-Q-1xz=-tz", "xxs+Q2z2=xsx+Q-2z2",
                    "x+xs+eta(xxs+Q2z2)=0")


def afield_tolerance(q: float, t: float) -> float:
    e = eta(q, t)
    if e == 0.0:
        return 1e-9
    return max(1e-9, 1e-12 / e ** 2)


def check_afield_relations(q: float, t: float, module: TruncatedModule, tol: float | None = None):
    """The five relations of the integral form, evaluated on the specialized images.

    Each residual is divided by the largest interior entry among the terms of
    its relation (floored at 1).
    """
    g = specialized_generators(q, t, module)
    tol = afield_tolerance(q, t) if tol is None else tol
    Q = g.Q
    x, xs, z = g.x, g.xs, g.z
    th = np.diag(np.diag(g.theta))
    thx = twisted_theta_commutator(x, g.window, Q, 1.0, -1.0)
    thz = twisted_theta_commutator(z, g.window, Q)
    terms = [
        (thx, (Q + 1 / Q) * z, t * th),
        (thz, x, xs),
        (Q * z @ x, x @ z / Q, t * z),
        (x @ xs, Q ** 2 * z @ z, xs @ x, Q ** -2 * z @ z),
        (x, xs, g.eta * (x @ xs + Q ** 2 * z @ z)),
    ]
    Rs = [
        thx - ((Q + 1 / Q) * z - t * th),
        thz - (x - xs),
        Q * z @ x - x @ z / Q + t * z,
        x @ xs + Q ** 2 * z @ z - xs @ x - Q ** -2 * z @ z,
        x + xs + g.eta * (x @ xs + Q ** 2 * z @ z),
    ]
    idx = np.ix_(g.mask, g.mask)
    out = []
    for name, R, parts in zip(AFIELD_RELATIONS, Rs, terms):
        # theta has entries [n]_Q, so residuals are measured against the size of the terms
        scale = max([1.0] + [float(np.abs(P[idx]).max(initial=0.0)) for P in parts])
        out.append(residual(name, R / scale, g.window, g.mask, tol))
    return out


# convergence measurements


def loglog_slope(steps, errors) -> float:
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])


@dataclass(frozen=True)
class ConvergenceReport:
    direction: str
    steps: tuple
    errors: dict
    slopes: dict
    order: float | None
    max_entry_slope: float | None

    @property
    def exact(self) -> bool:
        return self.order is None

    def passed(self, lo: float = 0.9, hi: float = 1.1) -> bool:
        return self.exact or lo <= self.order <= hi


def _interior(A, mask):
    return A[np.ix_(mask, mask)]


def convergence(lam: AnalyticLambda, epsilon: int, direction: str, fixed: float, steps, N: int = 20,
                floor: float = 1e-13) -> ConvergenceReport:
    """Entrywise convergence of assembled s-images to a boundary row.

    ``direction='t'``: (q=fixed, t=step) -> (fixed, 0). ``direction='q'``:
    (q=1+step, t=fixed) -> (1, fixed). Each of s, s+, s- gets its own
    fitted log-log slope; the reported order is the smallest of these (the
    rate of the slowest component), skipping components whose error stays
    below ``floor``. The slope of the combined max-entry error is reported
    alongside.
    """
    if direction == "t":
        limit_pt = (fixed, 0.0)
        pts = [(fixed, float(h)) for h in steps]
    elif direction == "q":
        limit_pt = (1.0, fixed)
        pts = [(1.0 + float(h), fixed) for h in steps]
    else:
        raise DomainError("direction must be 't' or 'q'")
    lim_mod = target_module(*limit_pt, epsilon, lam, N)
    mask = lim_mod.interior()
    ref = [_interior(A, mask) for A in assembled_images(*limit_pt, lim_mod)]
    names = ("s", "s+", "s-")
    errs = {k: [] for k in names}
    total = []
    for p in pts:
        mod = target_module(*p, epsilon, lam, N)
        cur = [_interior(A, mask) for A in assembled_images(*p, mod)]
        e = [float(np.abs(c - r).max()) for c, r in zip(cur, ref)]
        for k, v in zip(names, e):
            errs[k].append(v)
        total.append(max(e))
    slopes = {}
    for k in names:
        if max(errs[k]) > floor:
            slopes[k] = loglog_slope(steps, errs[k])
    order = min(slopes.values()) if slopes else None
    mslope = loglog_slope(steps, total) if max(total) > floor else None
    return ConvergenceReport(direction, tuple(float(s) for s in steps), errs, slopes, order, mslope)


@dataclass(frozen=True)
class PointResult:
    q: float
    t: float
    family: str
    max_kappa_err: float
    max_relation_residual: float
    relation_tol: float
    kappa_tol: float

    @property
    def passed(self) -> bool:
        return self.max_kappa_err < self.kappa_tol and self.max_relation_residual < self.relation_tol


@dataclass
class SpecializationReport:
    points: list
    convergence: list

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.points) and all(c.passed() for c in self.convergence)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "t", "family", "max_kappa_err", "max_relation_residual", "pass"])
        for p in self.points:
            w.writerow([repr(p.q), repr(p.t), p.family, f"{p.max_kappa_err:.6e}",
                        f"{p.max_relation_residual:.6e}", int(p.passed)])
        return buf.getvalue()


def verify_point(q: float, t: float, lam: AnalyticLambda, epsilon: int, N: int,
                 kappa_tol: float = 1e-9) -> PointResult:
    mod = target_module(q, t, epsilon, lam, N)
    mask = mod.interior()
    got = assembled_images(q, t, mod)
    want = kappa_matrices(q, t, lam, mod.window)
    scale = max(1.0, max(float(np.abs(_interior(w, mask)).max()) for w in want))
    kerr = max(float(np.abs(_interior(g - w, mask)).max()) for g, w in zip(got, want)) / scale
    rel = check_afield_relations(q, t, mod)
    return PointResult(q, t, mod.family.value, kerr, max(r.residual for r in rel),
                       rel[0].tol, kappa_tol)


def verify_specialization(lam: AnalyticLambda, epsilon: int, grid, N: int = 20,
                          tsteps=(1e-1, 1e-2, 1e-3, 1e-4), qsteps=(1e-1, 1e-2, 1e-3, 1e-4),
                          kappa_tol: float = 1e-9) -> SpecializationReport:
    """Check kappa tables and relations on ``grid`` and convergence onto the boundary rows.

    Boundary convergence is measured t -> 0 at every q != 1 of the grid and at
    q = 1, and q -> 1 at every t of the grid.
    """
    grid = [(float(q), float(t)) for q, t in grid]
    points = [verify_point(q, t, lam, epsilon, N, kappa_tol) for q, t in grid]
    conv = []
    for q in sorted({q for q, _ in grid}):
        conv.append(convergence(lam, epsilon, "t", q, tsteps, N))
    for t in sorted({t for _, t in grid}):
        conv.append(convergence(lam, epsilon, "q", t, qsteps, N))
    return SpecializationReport(points, conv)
