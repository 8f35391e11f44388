"""Potential application rules, exact frozen-step evolution, energy certificates."""

import cmath

import numpy as np
import pytest

from toruslab.ck_decomposition import certify
from toruslab.potential_evolution import (
    apply_potential,
    evolve_with_potential,
    gronwall_certificate,
    induced_source,
    is_real_multiplication,
    multiplication_potential,
    operator_potential,
    piece_norm_bounds,
    potential_from_json,
    potential_to_json,
)
from toruslab.propagator import free_evolve
from toruslab.sampling import (
    random_multiplication_potential,
    random_operator_potential,
    random_state,
    seeded_rng,
)
from toruslab.torus_field import from_coefficients


def _scalar_potential(value, T=1.0, dim=1):
    zero = (0,) * dim if dim > 1 else 0
    return multiplication_potential([0.0, T], [from_coefficients(dim, 0, {zero: value})])


def _cosine_potential(T=1.0):
    # 2 cos(2 pi x)
    return multiplication_potential([0.0, T], [from_coefficients(1, 1, {1: 1.0, -1: 1.0})])


def test_zero_potential_leaves_state():
    u = random_state(1, 3, seeded_rng(1))
    out = apply_potential(_scalar_potential(0.0), 0.3, u)
    assert np.allclose(out.coeffs, 0.0, atol=1e-15)


def test_constant_potential_scales_state():
    u = random_state(1, 3, seeded_rng(2))
    out = apply_potential(_scalar_potential(2.5), 0.3, u)
    assert np.allclose(out.coeffs, 2.5 * u.coeffs, atol=1e-13)


def test_cosine_times_plane_wave_product_rule():
    # 2cos(2 pi x) * e^{2 pi i x} = 1 + e^{4 pi i x}: modes 0 and 2 with amplitude 1
    u = from_coefficients(1, 4, {1: 1.0})
    out = apply_potential(_cosine_potential(), 0.1, u)
    expected = np.zeros(9, dtype=complex)
    expected[0 + 4] = 1.0
    expected[2 + 4] = 1.0
    assert np.allclose(out.coeffs, expected, atol=1e-13)


def test_apply_potential_outside_span_rejected():
    u = random_state(1, 3, seeded_rng(3))
    with pytest.raises(ValueError, match="span"):
        apply_potential(_scalar_potential(1.0), 1.5, u)


def test_operator_potential_matvec():
    rng = seeded_rng(4)
    mat = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    V = operator_potential([0.0, 1.0], [mat], dim=1, bandwidth=1)
    u = random_state(1, 1, rng)
    out = apply_potential(V, 0.5, u)
    assert np.allclose(out.coeffs, mat @ u.coeffs, atol=1e-14)
    assert piece_norm_bounds(V, 1)[0] == pytest.approx(np.linalg.norm(mat, 2))


def test_free_flow_recovered_for_zero_potential():
    u0 = random_state(1, 5, seeded_rng(5))
    traj = evolve_with_potential(u0, _scalar_potential(0.0), 1.0, 7)
    for t, state in zip(traj.times, traj.states):
        assert np.allclose(state.coeffs, free_evolve(u0, t).coeffs, atol=1e-12)


def test_scalar_potential_matches_commuting_closed_form():
    # constant scalar c commutes with the Laplacian: u(t) = e^{ict} e^{itD} u0
    u0 = random_state(1, 8, seeded_rng(6))
    c = 1.0
    traj = evolve_with_potential(u0, _scalar_potential(c), 1.0, 2**12)
    err = max(
        np.linalg.norm(state.coeffs - cmath.exp(1j * c * t) * free_evolve(u0, t).coeffs)
        for t, state in zip(traj.times, traj.states)
    )
    assert err <= 1e-10
    assert np.max(np.abs(traj.norms() - 1.0)) <= 1e-10


def test_self_convergence_on_step_potentials():
    # frozen-coefficient stepping errs only in breakpoint-straddling steps:
    # the error against a fine reference never grows under step doubling and
    # decays at a first-order aggregate rate
    for trial in range(3):
        rng = seeded_rng(55, trial)
        V = random_multiplication_potential(1, 2, 5, 1.0, rng, amplitude=1.0)
        u0 = random_state(1, 4, rng)
        ref = evolve_with_potential(u0, V, 1.0, 2**13).state_matrix()
        errs = []
        for a in range(5, 10):
            m = 2**a
            mat = evolve_with_potential(u0, V, 1.0, m).state_matrix()
            stride = 2**13 // m
            errs.append(max(np.linalg.norm(mat[i] - ref[i * stride]) for i in range(m + 1)))
        for coarse, fine in zip(errs[:-1], errs[1:]):
            assert fine <= coarse * (1 + 1e-9)
        assert errs[0] / errs[-1] >= 6.0  # ~first order over four doublings


def test_gronwall_zero_potential_equality():
    u0 = random_state(1, 4, seeded_rng(7))
    traj = evolve_with_potential(u0, _scalar_potential(0.0), 1.0, 32)
    cert = gronwall_certificate(traj, _scalar_potential(0.0))
    assert cert.passed
    assert cert.bound_margin_min == pytest.approx(1.0, rel=1e-10)


def test_gronwall_real_cosine_mass_drift():
    u0 = random_state(1, 8, seeded_rng(8))
    V = _cosine_potential()
    traj = evolve_with_potential(u0, V, 1.0, 2**12)
    cert = gronwall_certificate(traj, V)
    assert cert.passed
    assert cert.real_multiplication
    assert cert.mass_drift_max <= 1e-8


def test_gronwall_imaginary_constant_decays_like_closed_form():
    # V = i: the flow damps as e^{-t}, well inside the e^{t/2} envelope
    u0 = random_state(1, 6, seeded_rng(9))
    V = _scalar_potential(1j)
    traj = evolve_with_potential(u0, V, 1.0, 2**10)
    assert np.max(np.abs(traj.norms() - np.exp(-traj.times))) <= 1e-12
    cert = gronwall_certificate(traj, V)
    assert cert.passed
    assert not cert.real_multiplication


def test_gronwall_hermitian_operator_conserves_mass():
    rng = seeded_rng(10)
    V = random_operator_potential(1, 3, 3, 1.0, rng, amplitude=1.5)
    u0 = random_state(1, 3, rng)
    traj = evolve_with_potential(u0, V, 1.0, 2**10)
    assert np.max(np.abs(traj.norms() - 1.0)) <= 1e-10
    assert gronwall_certificate(traj, V).passed


def test_induced_source_zero_potential():
    u0 = random_state(1, 3, seeded_rng(11))
    V = _scalar_potential(0.0)
    traj = evolve_with_potential(u0, V, 1.0, 8)
    src = induced_source(traj, V)
    assert src.l1_mass() == 0.0


def test_induced_source_scalar_piece_norms():
    u0 = random_state(1, 4, seeded_rng(12))
    c = 0.8
    V = _scalar_potential(c)
    traj = evolve_with_potential(u0, V, 1.0, 16)
    src = induced_source(traj, V)
    norms = src.piece_norms()
    traj_norms = traj.norms()[:-1]
    assert np.allclose(norms, c * traj_norms, atol=1e-12)


def test_induced_source_holder_bound_random():
    for trial in range(10):
        rng = seeded_rng(13, trial)
        V = random_multiplication_potential(1, 2, 3, 1.0, rng, amplitude=1.0 + rng.random())
        u0 = random_state(1, 4, rng)
        traj = evolve_with_potential(u0, V, 1.0, 64)
        src = induced_source(traj, V)
        bounds = piece_norm_bounds(V, 4)
        sup_state = traj.norms().max()
        integral = float(np.diff(V.breakpoints) @ bounds)
        assert src.l1_mass() <= integral * sup_state + 1e-10


def test_pipeline_closure_into_certificates():
    rng = seeded_rng(14)
    V = random_multiplication_potential(1, 2, 4, 1.0, rng, amplitude=1.2)
    u0 = random_state(1, 6, rng)
    traj = evolve_with_potential(u0, V, 1.0, 256)
    src = induced_source(traj, V)
    report = certify(src, 4, 2**7)
    assert report.passed


def test_evolution_requires_covering_span():
    u0 = random_state(1, 2, seeded_rng(15))
    V = _scalar_potential(1.0, T=0.5)
    with pytest.raises(ValueError, match="cover"):
        evolve_with_potential(u0, V, 1.0, 8)


def test_potential_json_round_trips():
    rng = seeded_rng(16)
    Vm = random_multiplication_potential(1, 2, 3, 1.0, rng)
    back = potential_from_json(potential_to_json(Vm))
    assert back.kind == Vm.kind
    assert np.array_equal(back.breakpoints, Vm.breakpoints)
    for a, b in zip(back.pieces, Vm.pieces):
        assert np.array_equal(a.coeffs, b.coeffs)
    Vo = random_operator_potential(1, 2, 2, 1.0, rng, damped=True)
    back = potential_from_json(potential_to_json(Vo))
    assert back.kind == Vo.kind
    for a, b in zip(back.pieces, Vo.pieces):
        assert np.allclose(a, b, atol=1e-15)


def test_real_multiplication_detection():
    assert is_real_multiplication(_cosine_potential())
    assert is_real_multiplication(_scalar_potential(2.0))
    assert not is_real_multiplication(_scalar_potential(1j))
    rng = seeded_rng(17)
    assert not is_real_multiplication(random_operator_potential(1, 1, 1, 1.0, rng))


def test_two_torus_scalar_closed_form():
    u0 = random_state(2, 3, seeded_rng(18))
    c = 0.7
    V = _scalar_potential(c, dim=2)
    traj = evolve_with_potential(u0, V, 1.0, 256)
    err = max(
        np.linalg.norm(state.coeffs - cmath.exp(1j * c * t) * free_evolve(u0, t).coeffs)
        for t, state in zip(traj.times, traj.states)
    )
    assert err <= 1e-10
    assert np.max(np.abs(traj.norms() - 1.0)) <= 1e-10
