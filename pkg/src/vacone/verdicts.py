"""Three-valued verdicts and JSON-friendly evidence."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass
from fractions import Fraction

from .polyhedral import ConeUnion, GenCone
from .polyhedral.cones import _fstr


def jsonable(obj):
    """Convert evidence to plain JSON types; rationals become "p/q" strings."""
    if isinstance(obj, Fraction):
        return _fstr(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.17g}")
    if isinstance(obj, GenCone):
        return obj.to_json()
    if isinstance(obj, ConeUnion):
        return obj.to_json()
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if is_dataclass(obj):
        return {f.name: jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return jsonable(obj.tolist())
    return str(obj)


@dataclass
class Proved:
    certificate: dict = field(default_factory=dict)
    method: str = ""
    name = "Proved"

    def to_json(self):
        return {"verdict": self.name, "method": self.method, "certificate": jsonable(self.certificate)}


@dataclass
class Refuted:
    witness: dict = field(default_factory=dict)
    method: str = ""
    name = "Refuted"

    def to_json(self):
        return {"verdict": self.name, "method": self.method, "witness": jsonable(self.witness)}


@dataclass
class Unknown:
    report: str = ""
    name = "Unknown"

    def to_json(self):
        return {"verdict": self.name, "report": self.report}


@dataclass(frozen=True)
class MCert:
    """0 = x*_f + G'(x̄)^T λ̃ + ν with λ̃, ν in the branch cones."""
    lam: tuple
    nu: tuple
    branches: tuple
    subgradient: tuple


@dataclass(frozen=True)
class FJMCert:
    lam0: Fraction
    lam: tuple
    nu: tuple
    branches: tuple
