"""Truncated matrix models for the (q, t) deformation of SL(2, R)."""
from __future__ import annotations

from .errors import ConditionError, DomainError, FamilyMismatch, InvarianceError, QSL2RError
from .scalars import DeformationPoint, eta, pri_chart, pri_chart_inverse, qint, qint_array

__version__ = "0.1.0"

__all__ = [
    "QSL2RError", "DomainError", "ConditionError", "InvarianceError", "FamilyMismatch",
    "DeformationPoint", "qint", "qint_array", "eta", "pri_chart", "pri_chart_inverse",
]
