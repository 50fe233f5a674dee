"""Exact polyhedral geometry: polyhedra, cones, unions, projections and normal cones."""
from .cones import (CapacityError, GenCone, HPolyhedron, cone_to_h, dd_generators, h_to_cone,
                    polar, polar_h)
from .lp import Infeasible, Optimal, Unbounded, lp_feasible, solve_lp
from .normals import (limiting_normal_cone, normal_cone_convex, regular_normal_cone,
                      tangent_cone_convex, tangent_cone_union)
from .sets import PolyUnion, SmoothConvexBlock, project, project_exact
from .unions import (ConeUnion, Counterexample, Member, NotMember, Verified, cone_union_inclusion,
                     cone_union_membership, minkowski_sum)

__all__ = [
    "CapacityError", "GenCone", "HPolyhedron", "cone_to_h", "dd_generators", "h_to_cone", "polar",
    "polar_h", "Infeasible", "Optimal", "Unbounded", "lp_feasible", "solve_lp",
    "limiting_normal_cone", "normal_cone_convex", "regular_normal_cone", "tangent_cone_convex",
    "tangent_cone_union", "PolyUnion", "SmoothConvexBlock", "project", "project_exact", "ConeUnion",
    "Counterexample", "Member", "NotMember", "Verified", "cone_union_inclusion",
    "cone_union_membership", "minkowski_sum",
]
