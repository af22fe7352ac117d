"""Relation and unitarity checks for truncated modules.

Residuals are the largest absolute entry of the relation evaluated as a
matrix identity, restricted to rows and columns in the truncation interior.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import FamilyMismatch
from .modgen import Family, Q_FAMILIES, TruncatedModule
from .scalars import qpow_diff_ratio

TOL_Q = 1e-10
TOL_LIMIT = 1e-12

UQ_RELATIONS = ("XZ=q2ZX", "XsZ=q-2ZXs", "XXs+q2Z2=1", "XsX+q-2Z2=1", "qXth-q-1thX=[2]Z", "Zth-thZ=X-Xs")
MOTION_RELATIONS = ("dXdZ=dZdX", "thdX-dXth=-2dZ", "thdZ-dZth=-2dX")
GROUPOID_RELATIONS = ("XZ=ZX", "XsZ=ZXs", "XXs+Z2=1", "XsX+Z2=1", "Xth-thX=2Z", "Zth-thZ=X-Xs")
CLASSICAL_RELATIONS = ("[H,E]=2E", "[H,F]=-2F", "[E,F]=H")


@dataclass(frozen=True)
class ResidualReport:
    relation: str
    residual: float
    worst_entry: tuple[int, int]
    interior_size: int
    tol: float = TOL_Q

    @property
    def passed(self) -> bool:
        return self.residual < self.tol

    def csv_row(self) -> list:
        return [self.relation, f"{self.residual:.6e}", self.worst_entry[0], self.worst_entry[1], self.interior_size]


CSV_HEADER = ["relation_id", "residual", "row", "col", "interior_size"]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def all_passed(reports) -> bool:
    return all(r.passed for r in reports)


def residual(name: str, R: np.ndarray, window, mask, tol: float) -> ResidualReport:
    """Report the worst interior entry of the residual matrix R."""
    idx = np.nonzero(mask)[0]
    block = np.abs(R[np.ix_(idx, idx)])
    if block.size == 0:
        return ResidualReport(name, 0.0, (0, 0), 0, tol)
    i, j = np.unravel_index(int(np.argmax(block)), block.shape)
    return ResidualReport(name, float(block[i, j]), (int(window[idx[i]]), int(window[idx[j]])), len(idx), tol)


def twisted_theta_commutator(A: np.ndarray, window, Q: float, a: float = 0.0, b: float = 0.0) -> np.ndarray:
    """Q^a A theta - Q^b theta A for theta = diag([n]_Q), entry by entry.

    The (m, n) entry is A_mn (Q^a [n] - Q^b [m]). Written as a sum of two
    differences of powers of Q it has no cancellation, whereas the plain
    matrix product subtracts numbers of size Q^N.
    """
    n = np.asarray(window, dtype=float)
    h = float(np.log(Q))
    col = n[None, :]
    row = n[:, None]
    c = qpow_diff_ratio(a + col, b + row, h) + qpow_diff_ratio(b - row, a - col, h)
    return A * c


def _require(m: TruncatedModule, families):
    if m.family not in families:
        raise FamilyMismatch(f"{m.family.value} module passed to a check for {[f.value for f in families]}")


def check_relations_uq(m: TruncatedModule, tol: float = TOL_Q, stable: bool = True) -> list[ResidualReport]:
    """The six defining relations of U_q on the interior, with q -> q^t.

    ``stable=False`` evaluates the theta relations by plain matrix products,
    which loses about Q^(N - margin) * eps to cancellation.
    """
    _require(m, Q_FAMILIES)
    Q = m.Q
    if Q == 1.0:
        raise FamilyMismatch("U_q relations need q^t != 1")
    X, Xs, Z = m.X, m.Xs, m.Z
    eye = np.eye(m.dim)
    q2 = Q + 1 / Q
    if stable:
        thX = twisted_theta_commutator(X, m.window, Q, 1.0, -1.0)
        thZ = twisted_theta_commutator(Z, m.window, Q)
    else:
        th = m.theta
        thX = Q * X @ th - th @ X / Q
        thZ = Z @ th - th @ Z
    Rs = [
        X @ Z - Q ** 2 * Z @ X,
        Xs @ Z - Q ** -2 * Z @ Xs,
        X @ Xs + Q ** 2 * Z @ Z - eye,
        Xs @ X + Q ** -2 * Z @ Z - eye,
        thX - q2 * Z,
        thZ - (X - Xs),
    ]
    mask = m.interior()
    return [residual(name, R, m.window, mask, tol) for name, R in zip(UQ_RELATIONS, Rs)]


def classical_generators(m: TruncatedModule):
    """(H, E, F) from the stored X = H/2, Z = iE and theta = i(E - F)."""
    H = 2 * m.X
    E = -1j * m.Z
    F = E + 1j * m.theta
    return H, E, F


def check_relations_limit(m: TruncatedModule, tol: float = TOL_LIMIT) -> list[ResidualReport]:
    """Relations of the motion, groupoid or classical algebra, by family."""
    _require(m, (Family.Motion, Family.Groupoid, Family.ClassicalPrincipal, Family.ClassicalDiscrete))
    X, Xs, Z, th = m.X, m.Xs, m.Z, m.theta
    mask = m.interior()
    if m.family is Family.Motion:
        names = MOTION_RELATIONS
        Rs = [X @ Z - Z @ X, th @ X - X @ th + 2 * Z, th @ Z - Z @ th + 2 * X]
    elif m.family is Family.Groupoid:
        eye = np.eye(m.dim)
        names = GROUPOID_RELATIONS
        Rs = [X @ Z - Z @ X, Xs @ Z - Z @ Xs, X @ Xs + Z @ Z - eye, Xs @ X + Z @ Z - eye,
              X @ th - th @ X - 2 * Z, Z @ th - th @ Z - (X - Xs)]
    else:
        names = CLASSICAL_RELATIONS
        H, E, F = classical_generators(m)
        Rs = [H @ E - E @ H - 2 * E, H @ F - F @ H + 2 * F, E @ F - F @ E - H]
    return [residual(name, R, m.window, mask, tol) for name, R in zip(names, Rs)]


def check_relations(m: TruncatedModule, tol: float | None = None) -> list[ResidualReport]:
    """Dispatch to the relation set of the module's algebra."""
    if m.family in Q_FAMILIES:
        return check_relations_uq(m, TOL_Q if tol is None else tol)
    return check_relations_limit(m, TOL_LIMIT if tol is None else tol)


def weighted_adjoint(A: np.ndarray, weights) -> np.ndarray:
    """Adjoint for the inner product with Gram matrix diag(weights): D^-1 A^H D."""
    w = np.asarray(weights, dtype=float)
    return A.conj().T * (w[None, :] / w[:, None])


def check_unitarity(m: TruncatedModule, tol: float = TOL_Q) -> ResidualReport:
    """theta^dag = theta, Z^dag = Z and X^dag = X* for the weighted inner product.

    The worst of the three residuals is reported under its relation name.
    """
    mask = m.interior()
    reps = [
        residual("theta^dag=theta", weighted_adjoint(m.theta, m.weights) - m.theta, m.window, mask, tol),
        residual("Z^dag=Z", weighted_adjoint(m.Z, m.weights) - m.Z, m.window, mask, tol),
        residual("X^dag=Xs", weighted_adjoint(m.X, m.weights) - m.Xs, m.window, mask, tol),
    ]
    return max(reps, key=lambda r: r.residual)
