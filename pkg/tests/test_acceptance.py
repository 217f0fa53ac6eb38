"""Acceptance criteria, one test each, at the stated tolerances.

Every test logs a PASS/FAIL line; the lines are repeated in the pytest
terminal summary. Run ``pytest tests/test_acceptance.py -s`` to see them inline.
"""
import math
import time

import numpy as np
import pytest

from liekoop.cli import main
from liekoop.config import RunConfig, load_catalog
from liekoop.differential import (GroupValuedMap, dz, dz_along_field, kernel_basis, kernel_direction_field,
                                  regular_rank)
from liekoop.groups import get_group
from liekoop.koopman import (check_rescalable, compute_alpha, rescaled_field, s1_candidate_check,
                             semiconjugacy_residual, verify_eigenfunction)
from liekoop.lift import anchor_consistency, lift_gap_check, psi
from liekoop.manifold import ChartModel, VectorField, constant_field, flow, pushforward_map
from liekoop.runner import run, run_suite
from oracles import dexp_left_series

pytestmark = pytest.mark.acceptance

SQRT2 = math.sqrt(2.0)
T2 = ChartModel.torus(2)
CATALOG = ["torus-rotation", "torus-rescaled", "u1-sine", "so3-circle", "so3-wobble", "heisenberg-line",
           "noncollinear"]


def test_c1_eigenfunction_recovery(acceptance_log):
    system, _ = load_catalog("torus-rotation")
    system.grid, system.random = 64, 256
    samples = system.samples()
    start = time.perf_counter()
    rep = verify_eigenfunction(system.map_z, system.field, samples, tol=1e-6)
    elapsed = time.perf_counter() - start
    err = float(np.abs(rep.omega_hat - [1.0, SQRT2]).max())
    ok = len(samples) == 4096 + 256 and err <= 1e-7 and rep.is_eigenfunction and elapsed < 5.0
    acceptance_log(1, ok, f"omega_hat error {err:.2e} (<= 1e-7), verify={rep.is_eigenfunction}, "
                          f"{len(samples)} samples in {elapsed:.2f} s (< 5 s)")
    assert ok


def test_c2_semiconjugacy(acceptance_log):
    results = []
    for name, omega in [("torus-rotation", [1.0, SQRT2]), ("so3-circle", [0.0, 0.0, 1.0])]:
        system, _ = load_catalog(name)
        x0 = system.anchor()
        good = semiconjugacy_residual(system.map_z, system.field, omega, x0, 10.0, 1e-3)
        bad_omega = np.array(omega)
        bad_omega[0] += 0.5
        bad = semiconjugacy_residual(system.map_z, system.field, bad_omega, x0, 10.0, 1e-3)
        results.append((name, good, bad))
    ok = all(g <= 1e-6 and b >= 1e-1 for _, g, b in results)
    detail = "; ".join(f"{n}: true {g:.2e} (<= 1e-6), corrupted {b:.3f} (>= 0.1)" for n, g, b in results)
    acceptance_log(2, ok, detail)
    assert ok


def test_c3_differential_laws(acceptance_log):
    rng = np.random.default_rng(3)
    wobble, _ = load_catalog("so3-wobble")
    z = wobble.map_z

    trans = 0.0
    for _ in range(100):
        g = z.target.random_element(rng)
        x, v = T2.uniform(rng, 1)[0], rng.standard_normal(2)
        trans = max(trans, float(np.abs(dz(z.translated(g), x, v) - dz(z, x, v)).max()))

    def phi(x):
        return np.array([2 * x[0] + x[1], x[1]])

    composed = z.precomposed(phi, T2)
    nat = 0.0
    for _ in range(100):
        x, v = T2.uniform(rng, 1)[0], rng.standard_normal(2)
        rhs = dz(z, phi(x), pushforward_map(phi, x, v, target=T2))
        nat = max(nat, float(np.abs(dz(composed, x, v) - rhs).max()))

    lin = 0.0
    for name in CATALOG:
        system, _ = load_catalog(name)
        n = system.chart.n
        for x in system.chart.uniform(rng, 200):
            u, w = rng.standard_normal((2, n))
            a, b = rng.uniform(-2, 2, 2)
            lhs = dz(system.map_z, x, a * u + b * w)
            rhs = a * dz(system.map_z, x, u) + b * dz(system.map_z, x, w)
            lin = max(lin, float(np.abs(lhs - rhs).max()))

    ok = trans <= 1e-7 and nat <= 1e-6 and lin <= 1e-7
    acceptance_log(3, ok, f"translation {trans:.2e} (<= 1e-7), naturality {nat:.2e} (<= 1e-6), "
                          f"linearity {lin:.2e} (<= 1e-7)")
    assert ok


def test_c4_regular_level_sets(acceptance_log):
    system, _ = load_catalog("u1-sine")
    z = system.map_z
    regular = [x for x in system.samples() if regular_rank(z, x) == z.target.d]
    dims = {kernel_basis(z, x).shape[0] for x in regular}
    kf = kernel_direction_field(z, [0.0, 1.0])
    drift = 0.0
    for x in regular[::40]:
        end = flow(kf, x, 1.0, step=1e-2)
        drift = max(drift, float(np.linalg.norm(z(end) - z(x))))
    ok = dims == {system.chart.n - z.target.d} and drift <= 1e-4
    acceptance_log(4, ok, f"kernel dimensions {sorted(dims)} on {len(regular)} regular samples (expected [1]), "
                          f"drift {drift:.2e} (<= 1e-4)")
    assert ok


def test_c5_rescaling(acceptance_log):
    resc, _ = load_catalog("torus-rescaled")
    samples = resc.samples()
    rep = check_rescalable(resc.map_z, resc.field, samples)
    alpha = compute_alpha(resc.map_z, resc.field, samples, [1.0, SQRT2])
    oracle = 1.0 / (2.0 + np.sin(samples[:, 0]))
    rel = float(np.max(np.abs(alpha - oracle) / oracle))
    scaled = rescaled_field(resc.map_z, resc.field, [1.0, SQRT2])
    verified = verify_eigenfunction(resc.map_z, scaled, samples, tol=1e-5).is_eigenfunction

    non, _ = load_catalog("noncollinear")
    rep_non = check_rescalable(non.map_z, non.field, non.samples())
    sine, _ = load_catalog("u1-sine")
    rep_sine = check_rescalable(sine.map_z, sine.field, sine.samples())

    ok = (rep.rescalable and rel <= 1e-6 and verified
          and not rep_non.rescalable and rep_non.collinearity_ratio > 1e-2
          and not rep_sine.rescalable and rep_sine.min_norm < 1e-8 and sine.group.d == 1)
    acceptance_log(5, ok, f"torus-rescaled rescalable={rep.rescalable}, alpha rel err {rel:.2e} (<= 1e-6), "
                          f"verify(alpha V)={verified}; noncollinear ratio {rep_non.collinearity_ratio:.3f} (> 1e-2); "
                          f"u1-sine min_norm {rep_sine.min_norm:.1e} (< 1e-8)")
    assert ok


def test_c6_circle_valued(acceptance_log):
    samples = np.vstack([T2.grid(16), T2.uniform(np.random.default_rng(6), 64)])
    V = constant_field(T2, [1.0, SQRT2])
    wobbly = s1_candidate_check(lambda x: (1 + 0.5 * np.cos(x[1])) * np.exp(1j * x[0]), V, samples)
    plain = s1_candidate_check(lambda x: np.exp(1j * x[0]), V, samples)
    z = GroupValuedMap(T2, get_group("u1"), lambda x: np.array([[np.exp(1j * x[0])]]))
    reference = check_rescalable(z, V, samples).rescalable
    ok = (not wobbly.modulus_constant and plain.modulus_constant and plain.transversal
          and plain.rescalable == reference)
    acceptance_log(6, ok, f"wobbly modulus range {wobbly.modulus_range:.3f} (fails constancy); plain passes "
                          f"constancy={plain.modulus_constant}, transversality={plain.transversal}; "
                          f"rescaled verdict {plain.rescalable} == check_rescalable {reference}")
    assert ok


def test_c7_local_lifts(acceptance_log):
    gaps = {}
    for name in CATALOG:
        system, _ = load_catalog(name)
        rep = lift_gap_check(system.map_z, system.anchor())
        gaps[name] = (rep.max_gap_tilde, rep.max_gap_canonical, rep.abelian)
    tilde_ok = all(t <= 1e-6 for t, _, _ in gaps.values())
    canon_ok = all(c <= 1e-6 for _, c, ab in gaps.values() if ab)
    wobble_ok = gaps["so3-wobble"][1] > 1e-3
    overlap = 0.0
    for name in ["torus-rotation", "torus-rescaled", "noncollinear", "u1-sine"]:
        system, _ = load_catalog(name)
        probes = [[0.6, 0.3], [0.55, 0.35], [0.65, 0.3]]
        overlap = max(overlap, anchor_consistency(system.map_z, [0.5, 0.25], [0.7, 0.4], probes, np.eye(2)))
    ok = tilde_ok and canon_ok and wobble_ok and overlap <= 1e-7
    worst_t = max(t for t, _, _ in gaps.values())
    worst_c = max(c for _, c, ab in gaps.values() if ab)
    acceptance_log(7, ok, f"max gap_tilde {worst_t:.2e} (<= 1e-6), abelian gap_canonical {worst_c:.2e} (<= 1e-6), "
                          f"so3-wobble gap_canonical {gaps['so3-wobble'][1]:.3f} (> 1e-3), "
                          f"anchor overlap {overlap:.2e} (<= 1e-7)")
    assert ok


def test_c8_numerics_hygiene(acceptance_log):
    linear = VectorField(ChartModel.euclidean(1), lambda x: x)
    e1 = abs(flow(linear, [1.0], 1.0, step=0.1)[0] - math.e)
    e2 = abs(flow(linear, [1.0], 1.0, step=0.05)[0] - math.e)
    order = e1 / e2

    fd = 0.0
    for name in CATALOG:
        system, _ = load_catalog(name)
        samples = system.samples()
        a = dz_along_field(system.map_z, system.field, samples, 1e-5)
        b = dz_along_field(system.map_z, system.field, samples, 5e-6)
        fd = max(fd, float(np.abs(a - b).max()))

    rng = np.random.default_rng(8)
    so3 = load_catalog("so3-circle")[0].group
    psi_err = 0.0
    for _ in range(200):
        u, w = so3.random_algebra(rng, 2.0), so3.random_algebra(rng, 1.0)
        psi_err = max(psi_err, float(np.abs(psi(so3, u, w) - dexp_left_series(u, w, terms=30)).max()))

    ok = order >= 12 and fd <= 4e-8 and psi_err <= 1e-8
    acceptance_log(8, ok, f"RK4 factor {order:.2f} (>= 12), FD step-halving change {fd:.2e} (<= 4e-8), "
                          f"psi vs series {psi_err:.2e} (<= 1e-8)")
    assert ok


def test_c9_determinism_and_suite_runtime(acceptance_log, tmp_path, capsys):
    identical = True
    for command, name in [("verify", "so3-wobble"), ("rescale", "torus-rescaled"), ("residual", "so3-circle"),
                          ("lift-check", "heisenberg-line")]:
        outputs = []
        for k in range(2):
            out, table = tmp_path / f"{command}{k}.json", tmp_path / f"{command}{k}.csv"
            main([command, "--system", name, "--no-timestamp", "--out", str(out), "--csv", str(table)])
            outputs.append((out.read_bytes(), table.read_bytes()))
        identical &= outputs[0] == outputs[1]
    start = time.perf_counter()
    code = main(["suite", "--no-timestamp"])
    elapsed = time.perf_counter() - start
    capsys.readouterr()
    ok = identical and code == 0 and elapsed < 60.0
    acceptance_log(9, ok, f"byte-identical reruns={identical}, suite exit {code} in {elapsed:.1f} s (< 60 s)")
    assert ok


def test_suite_api_agrees_with_expectations():
    systems = [load_catalog(name)[0] for name in CATALOG]
    for s in systems:
        s.grid, s.random = 8, 16
    result = run_suite(systems, RunConfig())
    assert result.passed, [c for c in result.report["details"]["checks"] if not c["ok"]]
    assert run("verify", systems[0], RunConfig()).passed
