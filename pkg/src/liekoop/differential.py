"""Exterior derivative of group-valued maps, its gradient, rank and kernel.

For ``z: M -> G`` the differential at ``x`` sends a tangent vector ``v`` to
the algebra element ``z(x)^-1 (z_* v)``. The pushforward ``z_* v`` is taken
by a central difference in the matrix representation, so ``z`` can be any
black-box callable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import LieKoopError, MetricError, NonFiniteState, NotInGroup, NotRegular, NotTangent
from .groups import GroupSpec, bundle_inverse
from .manifold import ChartModel, RiemannianMetric, VectorField

FD_STEP = 1e-5
DZ_RESIDUAL = 1e-6
RANK_RTOL = 1e-8
RANK_ATOL = 1e-8


@dataclass(frozen=True)
class GroupValuedMap:
    source: ChartModel
    target: GroupSpec
    func: Callable[[np.ndarray], np.ndarray]
    name: str = "z"

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=self.target.dtype)

    def translated(self, g) -> GroupValuedMap:
        """The map ``x -> g z(x)``."""
        g = np.asarray(g)
        return GroupValuedMap(self.source, self.target, lambda x: g @ self(x), f"g*{self.name}")

    def precomposed(self, phi: Callable, source: ChartModel) -> GroupValuedMap:
        """The map ``z o phi`` defined on the chart ``source``."""
        return GroupValuedMap(source, self.target, lambda x: self(phi(x)), f"{self.name}*phi")

    def check_on(self, samples, tol: float = 1e-10) -> None:
        for i, x in enumerate(samples):
            if not self.target.is_element(self(x), tol):
                raise NotInGroup(f"{self.name}(sample {i}) is not an element of {self.target.name}")


def pushforward(z: GroupValuedMap, x, v, h: float = FD_STEP) -> np.ndarray:
    """Tangent matrix ``z_* v`` at ``z(x)`` by central difference.

    The step is taken along ``v / |v|`` and the quotient scaled by ``|v|``,
    so the result is exactly homogeneous in ``v``.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return np.zeros((z.target.rep_size,) * 2, dtype=z.target.dtype)
    u = v / norm
    out = norm * (z(x + h * u) - z(x - h * u)) / (2.0 * h)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(f"non-finite difference quotient of {z.name} at {x}")
    return out


def _project_dz(z, g, tangent, v):
    coords, res = z.target.project(z.target.inverse(g) @ tangent)
    if res > DZ_RESIDUAL * np.linalg.norm(v):
        raise NotTangent(f"d{z.name} is not algebra-valued here (residual {res:.3e}); "
                         "the map may not be C^1 or the step is unsuitable", residual=res)
    return coords


def dz(z: GroupValuedMap, x, v, h: float = FD_STEP) -> np.ndarray:
    """Coordinates of ``dz(x)(v) = L_{z(x)^-1 *} z_* v``."""
    return _project_dz(z, z(x), pushforward(z, x, v, h), v)


def dz_two_paths(z: GroupValuedMap, x, v, h: float = FD_STEP) -> tuple[np.ndarray, np.ndarray]:
    """dz computed by left translation and by inverting the bundle map.

    Both branches consume the same pushforward. The first multiplies by
    ``z(x)^-1`` and projects; the second solves ``z(x) hat(c) = z_* v``
    for ``c`` directly.
    """
    g = z(x)
    tangent = pushforward(z, x, v, h)
    return _project_dz(z, g, tangent, v), bundle_inverse(z.target, g, tangent, tol=DZ_RESIDUAL * np.linalg.norm(v))


def dz_along_field(z: GroupValuedMap, field: VectorField, samples, h: float = FD_STEP) -> np.ndarray:
    """Rows ``dz(x)(V(x))`` for each sample, in order."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if len(samples) == 0:
        raise ValueError("no samples")
    out = np.empty((len(samples), z.target.d))
    for i, x in enumerate(samples):
        try:
            out[i] = dz(z, x, field(x), h)
        except LieKoopError as err:
            err.args = (f"sample {i} at {x.tolist()}: {err}",)
            err.index = i
            raise
    return out


def jacobian(z: GroupValuedMap, x, h: float = FD_STEP) -> np.ndarray:
    """The ``d x n`` matrix of ``dz(x)`` on the coordinate directions."""
    n = z.source.n
    return np.stack([dz(z, x, e, h) for e in np.eye(n)], axis=1)


def gradient(z: GroupValuedMap, metric: RiemannianMetric, x, h: float = FD_STEP) -> np.ndarray:
    """Rows are the ``d`` gradient vectors, one per algebra coordinate."""
    gram = metric.gram(x)
    try:
        factor = scipy.linalg.cho_factor(gram)
    except np.linalg.LinAlgError:
        raise MetricError("singular metric") from None
    return scipy.linalg.cho_solve(factor, jacobian(z, x, h).T).T


def _rank(sv: np.ndarray) -> int:
    if sv.size == 0:
        return 0
    threshold = max(RANK_RTOL * sv[0], RANK_ATOL)
    return int(np.sum(sv > threshold))


def singular_values(z: GroupValuedMap, x, h: float = FD_STEP) -> np.ndarray:
    return np.linalg.svd(jacobian(z, x, h), compute_uv=False)


def regular_rank(z: GroupValuedMap, x, h: float = FD_STEP) -> int:
    return _rank(singular_values(z, x, h))


def kernel_basis(z: GroupValuedMap, x, h: float = FD_STEP) -> np.ndarray:
    """Orthonormal rows spanning the kernel of ``dz(x)``; there are ``n - d`` of them."""
    jac = jacobian(z, x, h)
    _, sv, vt = np.linalg.svd(jac)
    rank = _rank(sv)
    if rank < z.target.d:
        raise NotRegular(f"rank {rank} < {z.target.d} at {np.asarray(x).tolist()}", rank=rank, singular_values=sv)
    return vt[rank:]


def kernel_direction_field(z: GroupValuedMap, reference, h: float = FD_STEP) -> VectorField:
    """Unit field along the projection of a fixed vector onto ``ker dz``.

    Smooth wherever the reference vector is not orthogonal to the kernel,
    which avoids sign flips from the SVD.
    """
    reference = np.asarray(reference, dtype=float)

    def direction(x):
        k = kernel_basis(z, x, h)
        w = k.T @ (k @ reference)
        norm = np.linalg.norm(w)
        if norm < 1e-12:
            raise NotRegular("reference vector is orthogonal to the kernel")
        return w / norm

    return VectorField(z.source, direction, f"ker d{z.name}")
