"""Local lifts of group-valued maps through the exponential map.

Near an anchor ``x`` with ``g = z(x)`` a map factors as
``z(y) = g exp(theta(y))`` with ``theta(y) = log(g^-1 z(y))``. The
differential of ``z`` is then recovered from ``theta`` by transporting
``exp_*`` back to the identity (``psi``). For abelian groups that transport
is the identity and the plain Jacobian of ``theta`` already equals ``dz``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .differential import FD_STEP, DZ_RESIDUAL, GroupValuedMap, dz
from .errors import LieKoopError, LiftDomainEmpty, NotTangent, OutsideLiftDomain
from .groups import GroupSpec

LIFT_FRACTION = 0.9
N_PROBES = 32
BISECTION_STEPS = 40
MIN_RADIUS = 1e-6
LIFT_GAP_TOL = 1e-6


@dataclass(frozen=True)
class LocalLift:
    z: GroupValuedMap
    anchor: np.ndarray
    g: np.ndarray
    domain_radius: float
    g_inv: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.g_inv is None:
            object.__setattr__(self, "g_inv", self.z.target.inverse(self.g))

    @property
    def group(self) -> GroupSpec:
        return self.z.target

    def __call__(self, y) -> np.ndarray:
        return self.group.log(self.g_inv @ self.z(y))

    def contains(self, y) -> bool:
        offset = self.z.source.difference(np.asarray(y, dtype=float), self.anchor)
        return float(np.linalg.norm(offset)) <= self.domain_radius


def _probe_directions(n: int) -> np.ndarray:
    if n == 1:
        # no sphere to speak of in 1-D: probe the whole segment
        k = np.arange(1, N_PROBES // 2 + 1) / (N_PROBES // 2)
        return np.concatenate([k, -k])[:, None]
    if n == 2:
        a = 2 * math.pi * np.arange(N_PROBES) / N_PROBES
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    d = np.random.default_rng(0).standard_normal((N_PROBES, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def build_lift(z: GroupValuedMap, x) -> LocalLift:
    """Lift of ``z`` at ``x`` with the largest probe-validated radius up to 1."""
    x = z.source.point(x)
    g = z(x)
    spec = z.target
    bound = LIFT_FRACTION * spec.injectivity_radius
    g_inv = spec.inverse(g)
    dirs = _probe_directions(z.source.n)

    def admissible(r):
        for d in dirs:
            try:
                theta = spec.log(g_inv @ z(x + r * d))
            except LieKoopError:
                return False
            if not (np.all(np.isfinite(theta)) and spec.lift_norm(theta) < bound):
                return False
        return True

    if admissible(1.0):
        radius = 1.0
    elif not admissible(MIN_RADIUS):
        raise LiftDomainEmpty(f"no lift radius >= {MIN_RADIUS:g} at {x.tolist()}")
    else:
        lo, hi = MIN_RADIUS, 1.0
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if admissible(mid) else (lo, mid)
        radius = lo
    return LocalLift(z, x, g, radius, g_inv)


def psi(spec: GroupSpec, u, w, h: float = FD_STEP) -> np.ndarray:
    """Fiber part of ``(u, w) -> exp(u)^-1 exp_*|_u w``, by central difference on exp."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    tangent = (spec.exp(u + h * w) - spec.exp(u - h * w)) / (2.0 * h)
    coords, res = spec.project(spec.inverse(spec.exp(u)) @ tangent)
    if res > DZ_RESIDUAL * max(np.linalg.norm(w), 1.0):
        raise NotTangent(f"exp_* w is not tangent after translation (residual {res:.3e})", residual=res)
    return coords


def _require_inside(lift: LocalLift, x):
    if not lift.contains(x):
        raise OutsideLiftDomain(f"{np.asarray(x).tolist()} is outside the lift domain of radius {lift.domain_radius:g}")


def d_theta_canonical(lift: LocalLift, x, v, h: float = FD_STEP) -> np.ndarray:
    """Ordinary Jacobian of the lift coordinates applied to ``v``."""
    _require_inside(lift, x)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return (lift(x + h * v) - lift(x - h * v)) / (2.0 * h)


def tilde_d_theta(lift: LocalLift, x, v, h: float = FD_STEP) -> np.ndarray:
    """``psi(theta(x), theta_* v)``: the lift's differential transported to the identity."""
    return psi(lift.group, lift(x), d_theta_canonical(lift, x, v, h), h)


@dataclass
class LiftCheckReport:
    max_gap_tilde: float
    max_gap_canonical: float
    abelian: bool
    domain_radius: float
    tol: float
    probes: np.ndarray = field(repr=False)
    gaps_tilde: np.ndarray = field(repr=False)
    gaps_canonical: np.ndarray = field(repr=False)

    @property
    def passed(self) -> bool:
        # the canonical path is only required to agree when G is commutative
        ok = self.max_gap_tilde <= self.tol
        return ok and (self.max_gap_canonical <= self.tol or not self.abelian)


def default_probes(lift: LocalLift) -> tuple[np.ndarray, np.ndarray]:
    """Points at half the lift radius around the anchor, with coordinate and diagonal directions."""
    n = lift.z.source.n
    dirs = _probe_directions(n)[:: max(1, N_PROBES // 8)]
    points = np.vstack([lift.anchor, lift.anchor + 0.5 * lift.domain_radius * dirs])
    directions = np.vstack([np.eye(n), np.ones(n) / math.sqrt(n)])
    return points, directions


def lift_gap_check(z: GroupValuedMap, x, probe_points=None, probe_dirs=None, h: float = FD_STEP,
                   tol: float = LIFT_GAP_TOL) -> LiftCheckReport:
    """Compare ``dz`` with both lift differentials on probe points and directions."""
    lift = build_lift(z, x)
    if probe_points is None or probe_dirs is None:
        pts, dirs = default_probes(lift)
        probe_points = pts if probe_points is None else probe_points
        probe_dirs = dirs if probe_dirs is None else probe_dirs
    probe_points = np.atleast_2d(np.asarray(probe_points, dtype=float))
    probe_dirs = np.atleast_2d(np.asarray(probe_dirs, dtype=float))
    gaps_t = np.zeros(len(probe_points))
    gaps_c = np.zeros(len(probe_points))
    for i, y in enumerate(probe_points):
        for v in probe_dirs:
            ref = dz(z, y, v, h)
            canon = d_theta_canonical(lift, y, v, h)
            tilde = psi(lift.group, lift(y), canon, h)
            gaps_t[i] = max(gaps_t[i], float(np.linalg.norm(ref - tilde)))
            gaps_c[i] = max(gaps_c[i], float(np.linalg.norm(ref - canon)))
    return LiftCheckReport(
        max_gap_tilde=float(gaps_t.max()),
        max_gap_canonical=float(gaps_c.max()),
        abelian=z.target.abelian,
        domain_radius=lift.domain_radius,
        tol=tol,
        probes=probe_points,
        gaps_tilde=gaps_t,
        gaps_canonical=gaps_c,
    )


def anchor_consistency(z: GroupValuedMap, x1, x2, probe_points, probe_dirs, h: float = FD_STEP) -> float:
    """Largest difference of ``d theta`` between the lifts at two anchors on shared probes."""
    a, b = build_lift(z, x1), build_lift(z, x2)
    gap = 0.0
    for y in np.atleast_2d(probe_points):
        for v in np.atleast_2d(probe_dirs):
            gap = max(gap, float(np.linalg.norm(d_theta_canonical(a, y, v, h) - d_theta_canonical(b, y, v, h))))
    return gap
