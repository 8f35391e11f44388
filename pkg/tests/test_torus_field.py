"""Field construction, Plancherel identities, grid round trips, serialization."""

import numpy as np
import pytest

from toruslab.torus_field import (
    FourierField,
    SpatialSamples,
    coefficient,
    evaluate_on_grid,
    field_from_json,
    field_from_samples,
    field_to_json,
    from_coefficients,
    l2_norm,
    linear_combination,
    mode_sq,
    mode_vectors,
    zero_field,
)


def test_constant_function_has_unit_norm():
    f = from_coefficients(1, 1, {0: 1.0})
    assert l2_norm(f) == 1.0


def test_out_of_band_index_rejected_with_offender():
    with pytest.raises(ValueError, match=r"\(2,\)"):
        from_coefficients(1, 1, {2: 1.0})


def test_duplicate_index_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        from_coefficients(1, 2, [(1, 1.0), (1, 2.0)])


def test_two_orthogonal_modes_in_2d():
    f = from_coefficients(2, 3, {(1, 0): 1.0, (0, 1): 1j})
    assert l2_norm(f) == pytest.approx(np.sqrt(2), rel=1e-15)


def test_plane_wave_unit_norm():
    for k in (-3, 0, 2):
        assert l2_norm(from_coefficients(1, 3, {k: 1.0})) == 1.0


def test_three_four_five_norm():
    # direct sum of squared moduli: 3^2 + 4^2 = 5^2
    f = from_coefficients(1, 1, {0: 3.0, 1: 4.0})
    assert l2_norm(f) == pytest.approx(5.0, rel=1e-15)


def test_nonfinite_coefficients_rejected():
    with pytest.raises(ValueError, match="finite"):
        FourierField(1, 1, np.array([0, np.nan, 0], dtype=complex))


def test_constant_on_grid():
    samples = evaluate_on_grid(from_coefficients(1, 1, {0: 1.0}), 4)
    assert np.allclose(samples.values, 1.0, atol=1e-15)


def test_first_mode_on_four_points():
    # exp(2*pi*i*x) at x = 0, 1/4, 1/2, 3/4
    samples = evaluate_on_grid(from_coefficients(1, 1, {1: 1.0}), 4)
    assert np.allclose(samples.values, [1, 1j, -1, -1j], atol=1e-14)


def test_cosine_pair_real_with_mass_two():
    f = from_coefficients(1, 1, {1: 1.0, -1: 1.0})  # 2 cos(2 pi x)
    samples = evaluate_on_grid(f, 8)
    assert np.max(np.abs(samples.values.imag)) < 1e-14
    x = np.arange(8) / 8
    assert np.allclose(samples.values.real, 2 * np.cos(2 * np.pi * x), atol=1e-13)
    assert samples.grid_mass() == pytest.approx(2.0, rel=1e-13)


@pytest.mark.parametrize("dim,bandwidth", [(1, 0), (1, 3), (1, 8), (2, 2), (2, 4)])
def test_plancherel_on_alias_free_grids(dim, bandwidth):
    rng = np.random.default_rng([7, dim, bandwidth])
    n = (2 * bandwidth + 1) ** dim
    f = FourierField(dim, bandwidth, rng.standard_normal(n) + 1j * rng.standard_normal(n))
    for extra in (0, 1, 5):
        M = 2 * bandwidth + 1 + extra
        samples = evaluate_on_grid(f, M)
        assert samples.grid_mass() == pytest.approx(l2_norm(f) ** 2, rel=1e-12)


@pytest.mark.parametrize("dim,bandwidth", [(1, 5), (2, 3)])
def test_grid_round_trip_recovers_coefficients(dim, bandwidth):
    rng = np.random.default_rng([11, dim])
    n = (2 * bandwidth + 1) ** dim
    f = FourierField(dim, bandwidth, rng.standard_normal(n) + 1j * rng.standard_normal(n))
    g = field_from_samples(evaluate_on_grid(f, 2 * bandwidth + 1), bandwidth)
    assert np.allclose(g.coeffs, f.coeffs, atol=1e-12)


def test_linear_combination_is_bilinear_coefficientwise():
    rng = np.random.default_rng(3)
    f = FourierField(1, 2, rng.standard_normal(5) + 1j * rng.standard_normal(5))
    g = FourierField(1, 4, rng.standard_normal(9) + 1j * rng.standard_normal(9))
    out = linear_combination(2j, f, -1.5, g)
    assert out.bandwidth == 4
    for k in range(-4, 5):
        fk = coefficient(f, k) if abs(k) <= 2 else 0.0
        assert coefficient(out, k) == 2j * fk + (-1.5) * coefficient(g, k)


def test_linear_combination_cancels_to_zero():
    f = from_coefficients(1, 2, {1: 2.0 + 1j})
    out = linear_combination(1.0, f, -1.0, f)
    assert l2_norm(out) == 0.0


def test_linear_combination_two_modes_norm():
    f = from_coefficients(1, 1, {0: 1.0})
    g = from_coefficients(1, 1, {1: 1.0})
    assert l2_norm(linear_combination(1.0, f, 1.0, g)) == pytest.approx(np.sqrt(2))


def test_linear_combination_scales_constant():
    f = from_coefficients(1, 1, {0: 1.0})
    out = linear_combination(1j, f, 0.0, zero_field(1, 1))
    assert coefficient(out, 0) == 1j


def test_linear_combination_rejects_dim_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        linear_combination(1.0, zero_field(1, 1), 1.0, zero_field(2, 1))


def test_json_round_trip_lossless():
    rng = np.random.default_rng(5)
    f = FourierField(2, 2, rng.standard_normal(25) + 1j * rng.standard_normal(25))
    g = field_from_json(field_to_json(f))
    assert g.dim == f.dim and g.bandwidth == f.bandwidth
    assert np.array_equal(g.coeffs, f.coeffs)


def test_fields_are_immutable():
    f = from_coefficients(1, 1, {0: 1.0})
    with pytest.raises(ValueError):
        f.coeffs[0] = 2.0


def test_mode_tables_consistent():
    ks = mode_vectors(2, 2)
    assert ks.shape == (25, 2)
    assert np.array_equal(mode_sq(2, 2), np.sum(ks.astype(float) ** 2, axis=1))


def test_samples_shape_validation():
    with pytest.raises(ValueError, match="shape"):
        SpatialSamples(2, 3, np.zeros(9, dtype=complex))
