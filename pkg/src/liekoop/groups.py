"""Matrix Lie groups: algebra coordinates, exp/log and left trivialization.

Every group is handled through a fixed faithful matrix representation.
Group elements are plain ``(m, m)`` numpy arrays and algebra elements are
carried as real coordinate vectors of length ``d`` with respect to the
group's basis; ``hat``/``vee`` convert between the two.
"""
from __future__ import annotations

import functools
import math

import numpy as np
import scipy.linalg

from .errors import NonFiniteState, NotInGroup, NotTangent, OutOfInjectivityDomain

BASIS_TOL = 1e-12
ELEMENT_TOL = 1e-10
TANGENT_TOL = 1e-8


def _flatten(a) -> np.ndarray:
    """Real vector of the real parts followed by the imaginary parts."""
    a = np.asarray(a)
    return np.concatenate([a.real.ravel(), a.imag.ravel()])


class GroupSpec:
    """A matrix Lie group given by a basis of its Lie algebra.

    The base class works for any matrix group: ``exp`` falls back to
    scaling-and-squaring and ``log`` to the principal matrix logarithm.
    Subclasses override both with closed forms.
    """

    def __init__(self, name, basis, injectivity_radius=math.inf, basis_names=None):
        basis = np.asarray(basis)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise ValueError(f"basis must have shape (d, m, m), got {basis.shape}")
        self.name = name
        self.dtype = np.complex128 if np.iscomplexobj(basis) else np.float64
        self.basis = basis.astype(self.dtype)
        self.basis.setflags(write=False)
        self.d = basis.shape[0]
        self.rep_size = basis.shape[1]
        self.injectivity_radius = float(injectivity_radius)
        self.basis_names = tuple(basis_names) if basis_names else tuple(f"E{i + 1}" for i in range(self.d))

        # Real design matrix: columns are the flattened basis matrices (real and imaginary parts).
        self._design = np.stack([_flatten(b) for b in self.basis], axis=1)
        gram = self._design.T @ self._design
        if np.linalg.matrix_rank(gram, tol=BASIS_TOL * max(1.0, np.abs(gram).max())) < self.d:
            raise ValueError(f"{name}: basis matrices are linearly dependent")
        self._pinv = np.linalg.pinv(self._design)

        structure = np.zeros((self.d, self.d, self.d))
        abelian = True
        for i in range(self.d):
            for j in range(self.d):
                c = self.basis[i] @ self.basis[j] - self.basis[j] @ self.basis[i]
                coords, res = self.project(c)
                if res > BASIS_TOL:
                    raise ValueError(f"{name}: [E{i + 1}, E{j + 1}] leaves the span of the basis")
                structure[i, j] = coords
                if np.linalg.norm(c) > BASIS_TOL:
                    abelian = False
        self.structure_constants = structure
        self.structure_constants.setflags(write=False)
        self.abelian = abelian

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"

    # -- algebra coordinates ------------------------------------------------

    def project(self, a: np.ndarray) -> tuple[np.ndarray, float]:
        """Least-squares coordinates of ``a`` in the basis, plus the Frobenius residual."""
        a = np.asarray(a)
        if a.shape != (self.rep_size, self.rep_size):
            raise ValueError(f"expected a {self.rep_size}x{self.rep_size} matrix, got {a.shape}")
        flat = _flatten(a)
        coords = self._pinv @ flat
        residual = float(np.linalg.norm(self._design @ coords - flat))
        return coords, residual

    def vee(self, a: np.ndarray, tol: float = TANGENT_TOL) -> np.ndarray:
        coords, res = self.project(a)
        if res > tol:
            raise NotTangent(f"matrix is not in the Lie algebra of {self.name} (residual {res:.3e})", residual=res)
        return coords

    def hat(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.d,):
            raise ValueError(f"expected {self.d} algebra coordinates, got shape {coords.shape}")
        return np.tensordot(coords, self.basis, axes=1)

    def bracket(self, u, v) -> np.ndarray:
        return np.einsum("i,j,ijk->k", u, v, self.structure_constants)

    def ad(self, u) -> np.ndarray:
        """Matrix of ``w -> [u, w]`` in basis coordinates."""
        return np.einsum("i,ijk->kj", u, self.structure_constants)

    # -- group structure -----------------------------------------------------

    def identity(self) -> np.ndarray:
        return np.eye(self.rep_size, dtype=self.dtype)

    def compose(self, g, h) -> np.ndarray:
        return g @ h

    def inverse(self, g) -> np.ndarray:
        return np.linalg.inv(g)

    def is_element(self, g, tol: float = ELEMENT_TOL) -> bool:
        g = np.asarray(g)
        return g.shape == (self.rep_size, self.rep_size) and bool(np.all(np.isfinite(g)))

    def check_element(self, g, tol: float = ELEMENT_TOL) -> np.ndarray:
        if not self.is_element(g, tol):
            raise NotInGroup(f"matrix violates the constraints of {self.name}")
        return g

    def lift_norm(self, coords) -> float:
        """Norm in which the injectivity radius is measured."""
        return float(np.linalg.norm(coords))

    def exp(self, coords) -> np.ndarray:
        return scipy.linalg.expm(self.hat(coords))

    def log(self, g) -> np.ndarray:
        a = scipy.linalg.logm(np.asarray(g, dtype=self.dtype))
        coords = self.vee(np.asarray(a, dtype=self.dtype), tol=1e-8)
        if self.lift_norm(coords) >= self.injectivity_radius:
            raise OutOfInjectivityDomain(f"{self.name}: element outside the injectivity ball")
        return coords

    def random_algebra(self, rng: np.random.Generator, radius: float = 1.0) -> np.ndarray:
        """Coordinates drawn uniformly from the Euclidean ball of the given radius."""
        direction = rng.standard_normal(self.d)
        direction /= np.linalg.norm(direction)
        return direction * radius * rng.uniform() ** (1.0 / self.d)

    def random_element(self, rng: np.random.Generator) -> np.ndarray:
        return self.exp(self.random_algebra(rng, radius=min(2.0, 0.99 * self.injectivity_radius)))


class Torus(GroupSpec):
    """T^d as diagonal unitary matrices ``diag(exp(i a_k))``; ``Torus(1)`` is U(1)."""

    def __init__(self, d: int, name: str | None = None):
        if d < 1:
            raise ValueError("torus dimension must be >= 1")
        basis = np.zeros((d, d, d), dtype=complex)
        for k in range(d):
            basis[k, k, k] = 1j
        names = ["i"] if d == 1 else [f"i*e{k + 1}{k + 1}" for k in range(d)]
        super().__init__(name or f"torus:{d}", basis, injectivity_radius=math.pi, basis_names=names)

    def exp(self, coords):
        coords = np.asarray(coords, dtype=float)
        return np.diag(np.exp(1j * coords))

    def log(self, g):
        angles = np.angle(np.diagonal(g))
        if np.any(np.abs(angles) >= math.pi * (1 - 1e-12)):
            raise OutOfInjectivityDomain(f"{self.name}: a factor sits on the branch cut at -1")
        return angles

    def inverse(self, g):
        return np.conj(g).T

    def is_element(self, g, tol=ELEMENT_TOL):
        g = np.asarray(g)
        if not super().is_element(g, tol):
            return False
        diag = np.diagonal(g)
        off = g - np.diag(diag)
        return bool(np.abs(off).max(initial=0.0) <= tol and np.abs(np.abs(diag) - 1).max() <= tol)

    def lift_norm(self, coords):
        return float(np.max(np.abs(coords)))

    def random_element(self, rng):
        return self.exp(rng.uniform(-math.pi, math.pi, self.d))


def skew(a, b, c) -> np.ndarray:
    return np.array([[0.0, -c, b], [c, 0.0, -a], [-b, a, 0.0]])


class SO3(GroupSpec):
    """Rotations of R^3; algebra coordinates are rotation vectors."""

    def __init__(self):
        basis = np.stack([skew(1, 0, 0), skew(0, 1, 0), skew(0, 0, 1)])
        super().__init__("so3", basis, injectivity_radius=math.pi, basis_names=("Lx", "Ly", "Lz"))

    def exp(self, coords):
        coords = np.asarray(coords, dtype=float)
        theta = float(np.linalg.norm(coords))
        k = skew(*coords)
        if theta < 1e-4:
            t2 = theta * theta
            a = 1 - t2 / 6 + t2 * t2 / 120
            b = 0.5 - t2 / 24 + t2 * t2 / 720
        else:
            a = math.sin(theta) / theta
            b = (1 - math.cos(theta)) / (theta * theta)
        return np.eye(3) + a * k + b * (k @ k)

    def log(self, g):
        g = np.asarray(g, dtype=float)
        axis = 0.5 * np.array([g[2, 1] - g[1, 2], g[0, 2] - g[2, 0], g[1, 0] - g[0, 1]])
        s = float(np.linalg.norm(axis))
        c = 0.5 * (np.trace(g) - 1)
        theta = math.atan2(s, c)
        if theta >= math.pi - 1e-9:
            raise OutOfInjectivityDomain("so3: rotation angle is pi, logarithm is not unique")
        if theta < 1e-4:
            scale = 1 + theta * theta / 6 + 7 * theta**4 / 360
        else:
            scale = theta / math.sin(theta)
        return scale * axis

    def inverse(self, g):
        return np.asarray(g).T

    def is_element(self, g, tol=ELEMENT_TOL):
        g = np.asarray(g)
        if not super().is_element(g, tol) or np.iscomplexobj(g) and np.abs(g.imag).max() > tol:
            return False
        g = g.real
        return bool(np.abs(g.T @ g - np.eye(3)).max() <= tol and abs(np.linalg.det(g) - 1) <= tol)

    def random_element(self, rng):
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        return self.exp(axis * rng.uniform(0, math.pi))


class Heisenberg(GroupSpec):
    """The 3x3 unit upper-triangular group H3. exp is a global diffeomorphism."""

    def __init__(self):
        basis = np.zeros((3, 3, 3))
        basis[0, 0, 1] = 1.0  # X
        basis[1, 1, 2] = 1.0  # Y
        basis[2, 0, 2] = 1.0  # Z = [X, Y]
        super().__init__("heisenberg", basis, basis_names=("X=E12", "Y=E23", "Z=E13"))

    def exp(self, coords):
        a = self.hat(coords)
        return np.eye(3) + a + 0.5 * (a @ a)

    def log(self, g):
        n = np.asarray(g, dtype=float) - np.eye(3)
        return self.vee(n - 0.5 * (n @ n))

    def inverse(self, g):
        n = np.asarray(g) - np.eye(3)
        return np.eye(3) - n + n @ n

    def is_element(self, g, tol=ELEMENT_TOL):
        g = np.asarray(g)
        if not super().is_element(g, tol) or np.iscomplexobj(g) and np.abs(g.imag).max() > tol:
            return False
        g = g.real
        return bool(np.abs(np.diagonal(g) - 1).max() <= tol and np.abs(np.tril(g, -1)).max() <= tol)

    def random_element(self, rng):
        return self.exp(rng.uniform(-2.0, 2.0, 3))


@functools.lru_cache(maxsize=None)
def get_group(name: str) -> GroupSpec:
    """Look up a group by its config name: ``u1``, ``torus:d``, ``so3``, ``heisenberg``."""
    key = name.strip().lower()
    if key == "u1":
        return Torus(1, name="u1")
    if key == "so3":
        return SO3()
    if key == "heisenberg":
        return Heisenberg()
    if key.startswith("torus:"):
        try:
            d = int(key.split(":", 1)[1])
        except ValueError:
            raise KeyError(f"unknown group {name!r}") from None
        if d < 1:
            raise KeyError(f"unknown group {name!r}")
        return Torus(d)
    raise KeyError(f"unknown group {name!r}")


# -- free-function interface -------------------------------------------------

def _finite(a, what):
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise NonFiniteState(f"{what} has non-finite entries")
    return a


def exp_alg(spec: GroupSpec, v) -> np.ndarray:
    """Group exponential of the algebra element with coordinates ``v``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.d,):
        raise ValueError(f"expected {spec.d} algebra coordinates, got shape {v.shape}")
    return spec.exp(_finite(v, "algebra element"))


def log_grp(spec: GroupSpec, g) -> np.ndarray:
    """Coordinates of ``log g``; raises OutOfInjectivityDomain off the principal ball."""
    return spec.log(_finite(g, "group element"))


def left_pushforward(g, w) -> np.ndarray:
    """Pushforward of left translation by ``g``: a tangent matrix at h goes to g @ w at gh."""
    g, w = np.asarray(g), np.asarray(w)
    if g.ndim != 2 or w.ndim != 2 or g.shape[1] != w.shape[0]:
        raise ValueError(f"shape mismatch: {g.shape} and {w.shape}")
    return g @ w


def trivialize(spec: GroupSpec, g, v_g, tol: float = TANGENT_TOL) -> np.ndarray:
    """Translate a tangent matrix at ``g`` back to the identity and return its coordinates."""
    a = left_pushforward(spec.inverse(g), v_g)
    coords, res = spec.project(a)
    if res > tol:
        raise NotTangent(f"not a tangent vector at g (residual {res:.3e})", residual=res)
    return coords


def bundle_map(spec: GroupSpec, g, v) -> np.ndarray:
    """``(g, v) -> L_g* v``: identifies G x g with TG."""
    return left_pushforward(g, spec.hat(v))


def bundle_inverse(spec: GroupSpec, g, v_g, tol: float = TANGENT_TOL) -> np.ndarray:
    """Fiber part of the inverse of ``bundle_map``.

    Solved as a least-squares problem against the translated basis ``g E_i``,
    without forming ``g^-1``; this is independent of ``trivialize`` apart from
    sharing the representation.
    """
    g = np.asarray(g)
    cols = np.stack([_flatten(g @ e) for e in spec.basis], axis=1)
    flat = _flatten(v_g)
    coords, *_ = np.linalg.lstsq(cols, flat, rcond=None)
    res = float(np.linalg.norm(cols @ coords - flat))
    if res > tol:
        raise NotTangent(f"not a tangent vector at g (residual {res:.3e})", residual=res)
    return coords


def group_exp_flow(spec: GroupSpec, g, omega, t: float) -> np.ndarray:
    """The flow ``g -> g exp(t omega)`` on G."""
    return np.asarray(g) @ spec.exp(t * np.asarray(omega, dtype=float))
