"""Chart-based manifolds R^k x T^(n-k), vector fields, metrics and RK4 flows."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import MetricError, NonFiniteState

TWO_PI = 2.0 * math.pi
MAX_FLOW_STEPS = 10**7


def wrap_angle(d):
    """Shift angle differences into (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(d, dtype=float), TWO_PI)


@dataclass(frozen=True)
class ChartModel:
    """Global chart on R^k x T^(n-k).

    Periodic coordinates have period 2*pi. ``lower``/``upper`` bound the
    sampling box of the non-periodic coordinates and are ignored otherwise.
    """

    periodic: tuple[bool, ...]
    names: tuple[str, ...] = ()
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()

    def __post_init__(self):
        periodic = tuple(bool(p) for p in self.periodic)
        n = len(periodic)
        if n < 1:
            raise ValueError("chart dimension must be >= 1")
        object.__setattr__(self, "periodic", periodic)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{i + 1}" for i in range(n)))
        if not self.lower:
            object.__setattr__(self, "lower", (-1.0,) * n)
        if not self.upper:
            object.__setattr__(self, "upper", (1.0,) * n)
        for attr in ("names", "lower", "upper"):
            if len(getattr(self, attr)) != n:
                raise ValueError(f"chart {attr} must have {n} entries")
        object.__setattr__(self, "_mask", np.array(periodic))

    @classmethod
    def torus(cls, n: int) -> ChartModel:
        return cls((True,) * n, tuple(f"theta{i + 1}" for i in range(n)))

    @classmethod
    def euclidean(cls, n: int, lower=-1.0, upper=1.0) -> ChartModel:
        return cls((False,) * n, (), (float(lower),) * n, (float(upper),) * n)

    @property
    def n(self) -> int:
        return len(self.periodic)

    def reduce(self, x) -> np.ndarray:
        x = np.array(x, dtype=float)
        if self._mask.any():
            r = np.mod(x[..., self._mask], TWO_PI)
            r[r >= TWO_PI] = 0.0
            x[..., self._mask] = r
        return x

    def point(self, x) -> np.ndarray:
        """Validate a coordinate vector and reduce its periodic entries."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected {self.n} coordinates, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"non-finite chart point {x}")
        return self.reduce(x)

    def difference(self, a, b) -> np.ndarray:
        """``a - b`` with periodic components taken as the shortest signed arc."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        if self._mask.any():
            d[..., self._mask] = wrap_angle(d[..., self._mask])
        return d

    def embed(self, x) -> np.ndarray:
        """Coordinates with each angle replaced by (cos, sin); injective on the manifold."""
        x = np.asarray(x, dtype=float)
        parts = []
        for xi, p in zip(x, self.periodic):
            parts.extend((math.cos(xi), math.sin(xi)) if p else (xi,))
        return np.array(parts)

    def grid(self, resolution: int) -> np.ndarray:
        axes = []
        for p, lo, hi in zip(self.periodic, self.lower, self.upper):
            if p:
                axes.append(TWO_PI * np.arange(resolution) / resolution)
            else:
                axes.append(np.linspace(lo, hi, resolution))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def uniform(self, rng: np.random.Generator, count: int) -> np.ndarray:
        lo = np.where(self._mask, 0.0, self.lower)
        hi = np.where(self._mask, TWO_PI, self.upper)
        return self.reduce(rng.uniform(lo, hi, size=(count, self.n)))


@dataclass(frozen=True)
class VectorField:
    """A C^1 vector field given by a callable on chart coordinates.

    The callable must accept unreduced coordinates, i.e. be 2*pi-periodic in
    the periodic ones.
    """

    chart: ChartModel
    func: Callable[[np.ndarray], np.ndarray]
    name: str = "V"

    def __call__(self, x) -> np.ndarray:
        v = np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)
        if v.shape != (self.chart.n,):
            raise ValueError(f"{self.name} returned shape {v.shape}, expected ({self.chart.n},)")
        return v

    def scaled(self, alpha, name: str | None = None) -> VectorField:
        """The rescaled field ``alpha * V`` for a constant or a scalar function ``alpha``."""
        if callable(alpha):
            func = lambda x: alpha(x) * self(x)  # noqa: E731
        else:
            c = float(alpha)
            func = lambda x: c * self(x)  # noqa: E731
        return VectorField(self.chart, func, name or f"alpha*{self.name}")

    def min_norm(self, samples) -> float:
        return min(float(np.linalg.norm(self(x))) for x in samples)


def constant_field(chart: ChartModel, value, name: str = "V") -> VectorField:
    value = np.asarray(value, dtype=float)
    return VectorField(chart, lambda x: value, name)


@dataclass(frozen=True)
class RiemannianMetric:
    chart: ChartModel
    gram_func: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "flat"

    @classmethod
    def flat(cls, chart: ChartModel) -> RiemannianMetric:
        return cls(chart)

    @classmethod
    def constant(cls, chart: ChartModel, gram, name: str = "constant") -> RiemannianMetric:
        gram = np.array(gram, dtype=float)
        return cls(chart, lambda x: gram, name)

    def gram(self, x) -> np.ndarray:
        if self.gram_func is None:
            return np.eye(self.chart.n)
        g = np.asarray(self.gram_func(np.asarray(x, dtype=float)), dtype=float)
        n = self.chart.n
        if g.shape != (n, n):
            raise MetricError(f"Gram matrix has shape {g.shape}, expected ({n}, {n})")
        if not np.all(np.isfinite(g)) or np.abs(g - g.T).max() > 1e-12:
            raise MetricError("Gram matrix is not symmetric")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise MetricError("Gram matrix is not positive definite") from None
        return g


def metric_inner(metric: RiemannianMetric, x, u, w) -> float:
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(w))):
        raise NonFiniteState("non-finite tangent vector")
    return float(u @ metric.gram(x) @ w)


def rk4_step(vf: VectorField, x: np.ndarray, h: float) -> np.ndarray:
    k1 = vf(x)
    k2 = vf(x + 0.5 * h * k1)
    k3 = vf(x + 0.5 * h * k2)
    k4 = vf(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def flow(vf: VectorField, x, t: float, step: float = 1e-3) -> np.ndarray:
    """Approximate the time-``t`` flow map of ``vf`` with fixed-step RK4.

    Takes whole steps of size ``step`` and one final partial step so that the
    integration ends exactly at ``t``. Negative ``t`` integrates backwards.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if abs(t) / step > MAX_FLOW_STEPS:
        raise ValueError(f"|t|/step exceeds the budget of {MAX_FLOW_STEPS} steps")
    chart = vf.chart
    x = chart.point(x)
    if t == 0:
        return x
    sign = 1.0 if t > 0 else -1.0
    n_full = int(math.floor(abs(t) / step + 1e-9))
    rest = abs(t) - n_full * step
    for _ in range(n_full):
        x = _checked(chart, rk4_step(vf, x, sign * step))
    if rest != 0.0:
        x = _checked(chart, rk4_step(vf, x, sign * rest))
    return x


def _checked(chart: ChartModel, x: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NonFiniteState("trajectory left the finite domain of the chart")
    return chart.reduce(x)


def flow_checkpoints(vf: VectorField, x, times, step: float = 1e-3) -> np.ndarray:
    """States at increasing ``times`` (starting from 0), integrated segment by segment."""
    out = []
    t_prev = 0.0
    x = vf.chart.point(x)
    for t in times:
        x = flow(vf, x, t - t_prev, step)
        out.append(x)
        t_prev = t
    return np.array(out)


def pushforward_map(phi: Callable, x, v, h: float = 1e-5, target: ChartModel | None = None) -> np.ndarray:
    """Central-difference pushforward ``phi_* v`` at ``x``.

    Output differences are unwrapped into (-pi, pi] on the periodic
    coordinates of ``target``.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    yp = np.atleast_1d(np.asarray(phi(x + h * v), dtype=float))
    ym = np.atleast_1d(np.asarray(phi(x - h * v), dtype=float))
    diff = target.difference(yp, ym) if target is not None else yp - ym
    out = diff / (2.0 * h)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("non-finite value in pushforward")
    return out
