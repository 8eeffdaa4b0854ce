"""curvkit: exact polyhedral curvature measures and integral-geometry checks.

The package models compact sets as finite unions of rational convex
polytopes and computes, exactly where the data allows it: Euler
characteristics, tangent cones, boundary index functions, external-angle
curvature measures, and Monte Carlo estimators for flat-integral
identities, plus a mollification toolbox for nonsmooth second-order data.
A FastAPI facade (curvkit.service) and a CLI (curvkit.cli) expose the same
service layer.
"""

__version__ = "0.1.0"
