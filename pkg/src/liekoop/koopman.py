"""Group-valued Koopman eigenfunctions: frequency, semiconjugacy and rescaling.

``z`` is an eigenfunction of the flow of ``V`` with frequency ``omega``
exactly when ``dz(V)`` is the constant ``omega``; equivalently
``z(flow_t(x)) = z(x) exp(t omega)``. All checks are sample based, so the
verdicts hold on the supplied samples only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .differential import FD_STEP, GroupValuedMap, dz, dz_along_field
from .errors import DirectionMismatch, DivisionNearZero, ZeroValue
from .groups import get_group, group_exp_flow
from .manifold import VectorField, flow_checkpoints

COLLIN_TOL = 1e-6
ZERO_TOL = 1e-8
ALPHA_CHECK = 1e-6
DIRECTION_TOL = 1e-6


def _mean_rows(values: np.ndarray) -> np.ndarray:
    # fsum is exactly rounded, so the mean does not depend on sample order
    return np.array([math.fsum(col) / len(col) for col in values.T])


@dataclass
class EigenReport:
    is_eigenfunction: bool
    omega_hat: np.ndarray
    max_deviation: float
    tolerance: float
    samples_used: int
    values: np.ndarray = field(repr=False)
    deviations: np.ndarray = field(repr=False)
    failing: list[int] = field(default_factory=list, repr=False)
    semiconjugacy_residual: float | None = None


@dataclass
class RescaleReport:
    rescalable: bool
    direction: np.ndarray
    collinearity_ratio: float
    min_norm: float
    singular_values: np.ndarray
    values: np.ndarray = field(repr=False)
    alpha: np.ndarray | None = field(default=None, repr=False)
    reason: str = ""


@dataclass
class S1Report:
    modulus_constant: bool
    transversal: bool
    rescalable: bool
    modulus_range: float
    min_transversal: float

    @property
    def verdict(self) -> bool:
        return self.modulus_constant and self.transversal


def estimate_frequency(z: GroupValuedMap, V: VectorField, samples, h: float = FD_STEP) -> np.ndarray:
    return _mean_rows(dz_along_field(z, V, samples, h))


def verify_eigenfunction(z: GroupValuedMap, V: VectorField, samples, tol: float = 1e-6,
                         h: float = FD_STEP, horizon: float | None = None, step: float = 1e-3) -> EigenReport:
    """Check that ``dz(V)`` is constant over the samples up to ``tol``.

    With ``horizon`` set, also integrates the flow from the first sample and
    records the semiconjugacy residual against the estimated frequency.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    if not tol > 0:
        raise ValueError("tol must be positive")
    values = dz_along_field(z, V, samples, h)
    omega_hat = _mean_rows(values)
    deviations = np.linalg.norm(values - omega_hat, axis=1)
    max_dev = float(deviations.max())
    report = EigenReport(
        is_eigenfunction=max_dev <= tol,
        omega_hat=omega_hat,
        max_deviation=max_dev,
        tolerance=tol,
        samples_used=len(samples),
        values=values,
        deviations=deviations,
        failing=[int(i) for i in np.flatnonzero(deviations > tol)],
    )
    if horizon is not None:
        report.semiconjugacy_residual = semiconjugacy_residual(z, V, omega_hat, samples[0], horizon, step)
    return report


def semiconjugacy_profile(z: GroupValuedMap, V: VectorField, omega, x0, T: float, step: float = 1e-3,
                          checkpoints: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Times ``k T / checkpoints`` and the distances ``|z(flow_t x0) - z(x0) exp(t omega)|_F``."""
    if T < 0:
        raise ValueError("T must be non-negative")
    if not step > 0:
        raise ValueError("step must be positive")
    if T == 0:
        return np.zeros(1), np.zeros(1)
    times = T * np.arange(checkpoints + 1) / checkpoints
    states = flow_checkpoints(V, x0, times, step)
    z0 = z(states[0])
    dist = np.array([
        np.linalg.norm(z(s) - group_exp_flow(z.target, z0, omega, t)) for t, s in zip(times, states)
    ])
    return times, dist


def semiconjugacy_residual(z: GroupValuedMap, V: VectorField, omega, x0, T: float, step: float = 1e-3) -> float:
    return float(semiconjugacy_profile(z, V, omega, x0, T, step)[1].max())


def _sign_fixed(u: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(u) > 1e-12)
    return -u if nz.size and u[nz[0]] < 0 else u


def check_rescalable(z: GroupValuedMap, V: VectorField, samples, collin_tol: float = COLLIN_TOL,
                     zero_tol: float = ZERO_TOL, h: float = FD_STEP, omega_target=None) -> RescaleReport:
    """Test whether ``dz(V)`` stays on one line of the algebra and away from zero.

    If the test passes and ``omega_target`` is given, the report also carries
    the per-sample rescaling factors towards that frequency.
    """
    if not (collin_tol > 0 and zero_tol > 0):
        raise ValueError("tolerances must be positive")
    values = dz_along_field(z, V, samples, h)
    _, sv, vt = np.linalg.svd(values, full_matrices=False)
    ratio = float(sv[1] / sv[0]) if sv.size > 1 and sv[0] > 0 else 0.0
    min_norm = float(np.linalg.norm(values, axis=1).min())
    direction = _sign_fixed(vt[0])
    reasons = []
    if ratio > collin_tol:
        reasons.append(f"samples span more than a line (sigma2/sigma1 = {ratio:.3e})")
    if min_norm < zero_tol:
        reasons.append(f"dz(V) vanishes at a sample (min norm {min_norm:.3e})")
    report = RescaleReport(not reasons, direction, ratio, min_norm, sv, values, reason="; ".join(reasons))
    if report.rescalable and omega_target is not None:
        report.alpha = alpha_from_values(values, np.asarray(omega_target, dtype=float), direction, zero_tol)
    return report


def alpha_from_values(values, omega, direction, zero_tol):
    """Rescaling factors for precomputed ``dz(V)`` rows; checks ``omega`` lies on ``direction``."""
    norm = np.linalg.norm(omega)
    if norm == 0:
        raise DirectionMismatch("target frequency is zero")
    off_line = np.linalg.norm(omega - (omega @ direction) * direction) / norm
    if off_line > DIRECTION_TOL:
        raise DirectionMismatch(f"target frequency is {off_line:.3e} rad away from the detected line")
    inner = values @ omega
    small = np.flatnonzero(np.abs(inner) < zero_tol)
    if small.size:
        raise DivisionNearZero(f"<dz(V), omega> is below {zero_tol:g} at sample {int(small[0])}")
    alpha = (omega @ omega) / inner
    err = np.linalg.norm(alpha[:, None] * values - omega, axis=1)
    bad = np.flatnonzero(err > ALPHA_CHECK * norm)
    if bad.size:
        raise DirectionMismatch(f"alpha * dz(V) misses the target at sample {int(bad[0])} (error {err[bad[0]]:.3e})")
    return alpha


def compute_alpha(z: GroupValuedMap, V: VectorField, samples, omega_target, collin_tol: float = COLLIN_TOL,
                  zero_tol: float = ZERO_TOL, h: float = FD_STEP) -> np.ndarray:
    """Per-sample factors with ``alpha(x) dz(V)(x) = omega_target``; may be negative."""
    report = check_rescalable(z, V, samples, collin_tol, zero_tol, h)
    if not report.rescalable:
        raise DirectionMismatch(f"field is not rescalable: {report.reason}")
    return alpha_from_values(report.values, np.asarray(omega_target, dtype=float), report.direction, zero_tol)


def rescaling_function(z: GroupValuedMap, V: VectorField, omega_target, zero_tol: float = ZERO_TOL,
                       h: float = FD_STEP) -> Callable[[np.ndarray], float]:
    """``x -> <omega, omega> / <dz(V)(x), omega>`` evaluated pointwise."""
    omega = np.asarray(omega_target, dtype=float)
    w2 = float(omega @ omega)

    def alpha(x):
        inner = float(dz(z, x, V(x), h) @ omega)
        if abs(inner) < zero_tol:
            raise DivisionNearZero(f"<dz(V), omega> = {inner:.3e} at {np.asarray(x).tolist()}")
        return w2 / inner

    return alpha


def rescaled_field(z: GroupValuedMap, V: VectorField, omega_target, zero_tol: float = ZERO_TOL,
                   h: float = FD_STEP) -> VectorField:
    return V.scaled(rescaling_function(z, V, omega_target, zero_tol, h), name=f"alpha*{V.name}")


def s1_candidate_check(zeta: Callable[[np.ndarray], complex], V: VectorField, samples,
                       zero_tol: float = ZERO_TOL, collin_tol: float = COLLIN_TOL, h: float = FD_STEP) -> S1Report:
    """Circle-valued case: constant modulus and transversality of ``V``.

    ``zeta`` is normalized to the unit circle before differentiating.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    moduli = np.empty(len(samples))
    for i, x in enumerate(samples):
        moduli[i] = abs(complex(zeta(x)))
        if moduli[i] < 1e-12:
            raise ZeroValue(f"zeta vanishes at sample {i}")
    spread = float(moduli.max() - moduli.min())
    modulus_constant = spread <= 1e-8 * float(moduli.mean())

    u1 = get_group("u1")

    def unit(x):
        w = complex(zeta(x))
        return np.array([[w / abs(w)]])

    zhat = GroupValuedMap(V.chart, u1, unit, "zeta_hat")
    rescale = check_rescalable(zhat, V, samples, collin_tol, zero_tol, h)
    min_transversal = float(np.abs(rescale.values[:, 0]).min())
    return S1Report(
        modulus_constant=modulus_constant,
        transversal=min_transversal >= zero_tol,
        rescalable=rescale.rescalable,
        modulus_range=spread,
        min_transversal=min_transversal,
    )
