"""Seeded generators for random fields, sources and potentials.

All draws go through numpy Generators so that a seed fixes every experiment
input exactly; helpers accept either a Generator or a seed sequence.
"""

import numpy as np

from .potential_evolution import BoundedPotential, multiplication_potential, operator_potential
from .propagator import StepSource
from .torus_field import FourierField, SpatialSamples, field_from_samples


def seeded_rng(*keys) -> np.random.Generator:
    return np.random.default_rng(list(keys))


def random_band_field(dim: int, bandwidth: int, rng, norm: float = 1.0) -> FourierField:
    """Random-phase band data: unit-modulus phases scaled to the target norm."""
    count = (2 * bandwidth + 1) ** dim
    coeffs = np.exp(2j * np.pi * rng.random(count)) * (norm / np.sqrt(count))
    return FourierField(dim, bandwidth, coeffs)


def random_state(dim: int, bandwidth: int, rng, norm: float = 1.0) -> FourierField:
    """Complex Gaussian coefficients normalized to the target norm."""
    count = (2 * bandwidth + 1) ** dim
    coeffs = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    return FourierField(dim, bandwidth, coeffs * (norm / np.linalg.norm(coeffs)))


def random_step_source(dim: int, bandwidth: int, pieces: int, end_time: float,
                       rng) -> StepSource:
    """Random step source: uniform-(0,1] piece norms, random-phase piece fields,
    breakpoints drawn uniformly in (0, T)."""
    interior = np.sort(rng.uniform(0.0, end_time, pieces - 1))
    bp = np.concatenate([[0.0], interior, [end_time]])
    if not np.all(np.diff(bp) > 0):  # collisions have probability zero
        raise RuntimeError("degenerate random breakpoints; use another seed")
    norms = 1.0 - rng.random(pieces)
    fields = tuple(random_band_field(dim, bandwidth, rng, norm=n) for n in norms)
    return StepSource(bp, fields)


def random_real_profile(dim: int, bandwidth: int, rng, amplitude: float = 1.0) -> FourierField:
    """Real-valued band-limited profile with grid sup close to the amplitude."""
    M = 2 * bandwidth + 1
    raw = rng.standard_normal((M,) * dim)
    raw *= amplitude / np.abs(raw).max()
    return field_from_samples(SpatialSamples(dim, M, raw.astype(complex)), bandwidth)


def random_damped_profile(dim: int, bandwidth: int, rng, amplitude: float = 1.0) -> FourierField:
    """Complex profile with pointwise nonnegative imaginary part (dissipative)."""
    M = 2 * bandwidth + 1
    re = rng.standard_normal((M,) * dim)
    im = rng.standard_normal((M,) * dim)
    im = im - im.min()  # nonnegative damping
    vals = (re + 1j * im) * (amplitude / np.abs(re + 1j * im).max())
    return field_from_samples(SpatialSamples(dim, M, vals), bandwidth)


def _random_breakpoints(pieces: int, end_time: float, rng) -> np.ndarray:
    if pieces == 1:
        return np.asarray([0.0, end_time])
    interior = np.sort(rng.uniform(0.0, end_time, pieces - 1))
    return np.concatenate([[0.0], interior, [end_time]])


def random_multiplication_potential(dim: int, profile_bandwidth: int, pieces: int,
                                    end_time: float, rng, amplitude: float = 1.0,
                                    damped: bool = False) -> BoundedPotential:
    """Seeded multiplication potential; damped variants never grow the mass."""
    make = random_damped_profile if damped else random_real_profile
    bp = _random_breakpoints(pieces, end_time, rng)
    profiles = tuple(make(dim, profile_bandwidth, rng, amplitude) for _ in range(pieces))
    return multiplication_potential(bp, profiles)


def random_operator_potential(dim: int, bandwidth: int, pieces: int, end_time: float,
                              rng, amplitude: float = 1.0,
                              damped: bool = False) -> BoundedPotential:
    """Seeded operator potential: Hermitian, or Hermitian plus i times PSD (damped).

    Both variants satisfy the exponential energy bound: Hermitian pieces
    conserve mass and the damped ones only dissipate.
    """
    side = (2 * bandwidth + 1) ** dim
    bp = _random_breakpoints(pieces, end_time, rng)
    mats = []
    for _ in range(pieces):
        g = rng.standard_normal((side, side)) + 1j * rng.standard_normal((side, side))
        herm = (g + g.conj().T) / 2
        herm *= amplitude / np.linalg.norm(herm, 2)
        if damped:
            b = rng.standard_normal((side, side)) + 1j * rng.standard_normal((side, side))
            psd = b @ b.conj().T
            psd *= amplitude / np.linalg.norm(psd, 2)
            herm = herm + 1j * psd
        mats.append(herm)
    return operator_potential(bp, tuple(mats), dim, bandwidth)
