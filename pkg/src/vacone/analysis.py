"""Run the checkers on one problem and reduce each verdict to a short value."""
from __future__ import annotations

import time
from dataclasses import dataclass

from . import stationarity as st
from .calculus import preimage_rule_check
from .problem import ProblemInstance
from .regularity import SamplerConfig
from .verdicts import jsonable

ALL_CHECKS = ("feasible", "m_stat", "am_stat", "dam_stat", "fjm", "nnamcq", "polyhedral", "am_reg",
              "dam_reg", "linearization", "gacq", "ggcq", "subreg_probe", "consequence",
              "criterion_flag", "ccp", "preimage")
# checks run by `analyze` when none are requested
DEFAULT_CHECKS = ("feasible", "m_stat", "fjm", "nnamcq", "polyhedral", "am_reg", "dam_reg",
                  "linearization", "gacq", "subreg_probe")


@dataclass
class Section:
    check: str
    value: str
    detail: object
    seconds: float

    def to_json(self):
        d = {"check": self.check, "value": self.value}
        if self.detail is not None:
            d["detail"] = jsonable(self.detail)
        return d


class NotApplicable(Exception):
    pass


def _am_stat(p, x, decoupled):
    if not decoupled:
        cert = st.am_stationarity_certificate(p, x)
        if cert is not None:
            return "Certified", cert
    if not decoupled and st.m_stationarity_check(p, x).name == "Proved":
        return "Certified", {"reason": "M-stationary points are AM-stationary (constant sequence)"}
    r = st.am_stationarity_gap(p, x, decoupled=decoupled)
    return r.name, r


def _run(p: ProblemInstance, check: str, x, cfg):
    if check == "feasible":
        return ("true" if p.feasible(x) else "false"), None
    if check == "m_stat":
        r = st.m_stationarity_check(p, x)
        return r.name, r
    if check == "am_stat":
        return _am_stat(p, x, False)
    if check == "dam_stat":
        if p.C.whole_space:
            return _am_stat(p, x, False)
        return _am_stat(p, x, True)
    if check == "fjm":
        r = st.fjm_abnormal_check(p, x)
        return r.name, r
    if check == "nnamcq":
        if not p.has_gk:
            return "Unknown", None
        return ("true" if st.nnamcq_check(p, x) else "false"), None
    if check == "polyhedral":
        return ("true" if st.polyhedrality_check(p) else "false"), None
    if check == "am_reg":
        r = st.am_regularity_check(p, x, cfg)
        return r.name, r
    if check == "dam_reg":
        r = st.dam_regularity_check(p, x, cfg)
        return r.name, r
    if check == "linearization":
        if not p.has_gk or not p.K.is_polyhedral or not p.C.is_polyhedral:
            raise NotApplicable("needs polyhedral K and C")
        L = st.linearization_cone(p, x)
        return st.linearization_label(L), L
    if check == "gacq":
        if not p.has_gk or not p.K.is_polyhedral or not p.C.is_polyhedral:
            raise NotApplicable("needs polyhedral K and C")
        r = st.gacq_check(p, x)
        return r.name, r
    if check == "ggcq":
        if not p.has_gk or not p.K.is_polyhedral or not p.C.is_polyhedral:
            raise NotApplicable("needs polyhedral K and C")
        r = st.ggcq_check(p, x)
        return r.name, r
    if check == "subreg_probe":
        if not p.has_gk:
            raise NotApplicable("needs a (G, K) description")
        try:
            r = st.subregularity_probe(p, x)
        except ValueError as e:
            raise NotApplicable(str(e)) from None
        return r.verdict, r
    if check == "consequence":
        r = st.consequence_check(p, x)
        return {"Proved": "Holds", "Refuted": "Fails"}.get(r.name, "Unknown"), r
    if check == "criterion_flag":
        return st.criterion_flag(p), None
    if check == "ccp":
        from .regularity import is_nlp_shape
        if not is_nlp_shape(p):
            raise NotApplicable("not a standard nonlinear program")
        r = st.ccp_check(p, x, cfg)
        return r.name, r
    if check == "preimage":
        r = preimage_rule_check(p, x)
        return r.name, r
    raise ValueError(f"unknown check {check!r}")


def run_checks(p: ProblemInstance, checks=None, x=None, cfg: SamplerConfig | None = None):
    """Ordered list of Sections; inapplicable checks are skipped."""
    checks = list(checks) if checks else list(DEFAULT_CHECKS)
    for c in checks:
        if c not in ALL_CHECKS:
            raise ValueError(f"unknown check {c!r}; choose from {', '.join(ALL_CHECKS)}")
    x = p.point if x is None else x
    if not p.feasible(x):
        raise ValueError(f"{p.id}: point is not feasible")
    out = []
    for c in checks:
        t = time.perf_counter()
        try:
            value, detail = _run(p, c, x, cfg)
        except NotApplicable:
            continue
        out.append(Section(c, value, detail, time.perf_counter() - t))
    return out
