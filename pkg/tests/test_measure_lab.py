"""Density histograms, weak-* pairings, family diagnostics and report schema."""

import csv

import jsonschema
import numpy as np
import pytest

from toruslab.measure_lab import (
    ac_proxy_report,
    ac_report_to_csv,
    concentration_density,
    energy_quadrature,
    make_family,
    validate_ac_report,
    validate_family,
    weak_star_pairing,
)
from toruslab.propagator import Trajectory, free_evolve
from toruslab.sampling import random_state, seeded_rng
from toruslab.torus_field import from_coefficients, l2_norm


def _free_trajectory(u0, T=1.0, samples=64):
    mids = (np.arange(samples) + 0.5) * (T / samples)
    return Trajectory(mids, tuple(free_evolve(u0, t) for t in mids))


def test_constant_datum_unit_density():
    u0 = from_coefficients(1, 0, {0: 1.0})
    mu = concentration_density(_free_trajectory(u0), 5, 16, 1.0)
    assert np.allclose(mu.density, 1.0, atol=1e-12)
    assert mu.total_mass == pytest.approx(1.0, rel=1e-12)


def test_plane_wave_density_is_flat():
    u0 = from_coefficients(1, 3, {3: 1.0})
    mu = concentration_density(_free_trajectory(u0), 7, 8, 1.0)
    assert np.allclose(mu.density, 1.0, atol=1e-12)


def test_cosine_density_matches_closed_form():
    # 2cos(2 pi x) evolves by a global phase: |u|^2 = 4 cos^2(2 pi x) for all t
    u0 = from_coefficients(1, 1, {1: 1.0, -1: 1.0})
    M, r = 8, 16
    mu = concentration_density(_free_trajectory(u0), M, r, 1.0)
    x = np.arange(M) / M
    expected = 4 * np.cos(2 * np.pi * x) ** 2
    for cell in range(r):
        assert np.allclose(mu.density[cell], expected, atol=1e-8)
    spread = mu.density.max(axis=0) - mu.density.min(axis=0)
    assert spread.max() <= 1e-10


def test_mass_coherence_against_energy_quadrature():
    rng = seeded_rng(81)
    u0 = random_state(1, 6, rng, norm=1.3)
    traj = _free_trajectory(u0, T=2.0, samples=96)
    mu = concentration_density(traj, 13, 24, 2.0)
    quad = energy_quadrature(traj, 24, 2.0)
    assert abs(mu.total_mass - quad) <= 1e-8 * quad
    assert mu.total_mass == pytest.approx(2.0 * l2_norm(u0) ** 2, rel=1e-8)


def test_undersampled_trajectory_rejected():
    u0 = from_coefficients(1, 0, {0: 1.0})
    with pytest.raises(ValueError, match="undersampled"):
        concentration_density(_free_trajectory(u0, samples=8), 3, 16, 1.0)


def test_alias_resolution_rejected():
    u0 = from_coefficients(1, 4, {4: 1.0})
    with pytest.raises(ValueError, match="resolution"):
        concentration_density(_free_trajectory(u0), 5, 8, 1.0)


def test_pairing_examples_and_linearity():
    u0 = from_coefficients(1, 0, {0: 1.0})
    mu = concentration_density(_free_trajectory(u0), 4, 8, 1.0)
    ones = np.ones_like(mu.density)
    assert weak_star_pairing(mu, ones) == pytest.approx(mu.total_mass)
    assert weak_star_pairing(mu, 0 * ones) == 0.0
    half = np.zeros_like(mu.density)
    half[:4] = 1.0
    assert weak_star_pairing(mu, half) == pytest.approx(0.5 * mu.total_mass, rel=1e-12)
    rng = seeded_rng(82)
    a = rng.standard_normal(mu.density.shape)
    b = rng.standard_normal(mu.density.shape)
    lhs = weak_star_pairing(mu, 2.0 * a - 3.0 * b)
    rhs = 2.0 * weak_star_pairing(mu, a) - 3.0 * weak_star_pairing(mu, b)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_pairing_grid_mismatch_rejected():
    u0 = from_coefficients(1, 0, {0: 1.0})
    mu = concentration_density(_free_trajectory(u0), 4, 8, 1.0)
    with pytest.raises(ValueError, match="match"):
        weak_star_pairing(mu, np.ones((8, 5)))


def test_families_normalized_and_validated():
    for label in ("constant", "plane-wave", "two-mode", "dirichlet", "random-phase"):
        family = make_family(label)
        validate_family(family, [1, 4, 9])
        for n in (1, 4, 9):
            assert l2_norm(family.generator(n)) == pytest.approx(1.0, abs=1e-12)
    from toruslab.measure_lab import DataFamily

    overgrown = DataFamily("bad", lambda n: from_coefficients(1, 0, {0: 2.0}))
    with pytest.raises(ValueError, match="bound"):
        validate_family(overgrown, [1])


def test_dirichlet_peak_value():
    # normalized spike: |u(x0)|^2 = 2n+1
    family = make_family("dirichlet", x0=0.5)
    for n in (2, 5):
        u = family.generator(n)
        from toruslab.torus_field import evaluate_on_grid

        # even alias-free grid so x0 = 1/2 is a grid point
        vals = evaluate_on_grid(u, 2 * n + 2).values
        assert np.abs(vals).max() ** 2 == pytest.approx(2 * n + 1, rel=1e-10)


def test_constant_family_unit_ratios():
    report = ac_proxy_report(make_family("constant"), [1, 2], stages=3, time_cells=16)
    validate_ac_report(report)
    for res in report["results"]:
        for box in res["boxes"]:
            assert box["ratio"] == pytest.approx(1.0, rel=1e-10)


def test_plane_wave_family_unit_ratios():
    report = ac_proxy_report(make_family("plane-wave"), [2, 4], stages=3, time_cells=16)
    for res in report["results"]:
        for box in res["boxes"]:
            assert box["ratio"] == pytest.approx(1.0, rel=1e-10)


def test_dirichlet_contrast_spacetime_vs_slice():
    report = ac_proxy_report(make_family("dirichlet"), [4, 8, 16], stages=4, time_cells=32)
    validate_ac_report(report)
    slice_finals, st_finals, contrasts = [], [], []
    for res in report["results"]:
        slice_finals.append(res["time_slice"][-1]["ratio"])
        st_finals.append(res["boxes"][-1]["ratio"])
        contrasts.append(res["contrast"][-1])
    # the initial slice concentrates like 2n+1 while the space-time average
    # grows strictly slower, so the contrast shrinks along the family
    assert slice_finals == sorted(slice_finals)
    assert all(st < sl for st, sl in zip(st_finals, slice_finals))
    assert contrasts == sorted(contrasts, reverse=True)


def test_report_schema_rejects_missing_verdict_guard():
    report = ac_proxy_report(make_family("constant"), [1], stages=2, time_cells=8)
    broken = dict(report)
    broken["diagnostic_only"] = False
    with pytest.raises(jsonschema.ValidationError):
        validate_ac_report(broken)
    broken = dict(report)
    broken.pop("results")
    with pytest.raises(jsonschema.ValidationError):
        validate_ac_report(broken)


def test_report_csv(tmp_path):
    report = ac_proxy_report(make_family("constant"), [1, 2], stages=2, time_cells=8)
    path = tmp_path / "ac.csv"
    ac_report_to_csv(report, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "stage", "ratio"]
    assert len(rows) - 1 == 2 * 2
