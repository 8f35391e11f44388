"""Band-limited functions on the d-torus stored as finite Fourier series.

The basis is ``exp(2*pi*i*k.x)`` on the unit torus (Lebesgue measure 1), so
the Laplacian eigenvalue of mode k is ``-4*pi^2*|k|^2`` and the L2 norm of a
field is the l2 norm of its coefficient vector.  Coefficients are stored as a
flat complex vector over the lattice ``{k : |k|_inf <= N}`` in row-major
order of the shifted indices ``k + N``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SUPPORTED_DIMS = (1, 2)


@lru_cache(maxsize=None)
def mode_vectors(dim: int, bandwidth: int) -> np.ndarray:
    """Integer lattice vectors of the coefficient layout, shape (n_modes, dim)."""
    ax = np.arange(-bandwidth, bandwidth + 1)
    if dim == 1:
        out = ax.reshape(-1, 1)
    else:
        k1, k2 = np.meshgrid(ax, ax, indexing="ij")
        out = np.stack([k1.ravel(), k2.ravel()], axis=1)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def mode_sq(dim: int, bandwidth: int) -> np.ndarray:
    """Squared Euclidean norms |k|^2 per mode, shape (n_modes,)."""
    out = np.sum(mode_vectors(dim, bandwidth).astype(float) ** 2, axis=1)
    out.flags.writeable = False
    return out


def _as_lattice_vector(k, dim: int) -> tuple:
    if dim == 1 and np.isscalar(k):
        return (int(k),)
    kt = tuple(int(c) for c in np.atleast_1d(k))
    if len(kt) != dim:
        raise ValueError(f"lattice index {k!r} has wrong dimension for dim={dim}")
    return kt


def _flat_index(kt: tuple, bandwidth: int) -> int:
    idx = 0
    for c in kt:
        idx = idx * (2 * bandwidth + 1) + (c + bandwidth)
    return idx


@dataclass(frozen=True)
class FourierField:
    """Band-limited complex function on the torus.

    Attributes
    ----------
    dim : 1 or 2
    bandwidth : max |k|_inf of retained modes
    coeffs : flat complex vector of length (2*bandwidth+1)**dim
    """

    dim: int
    bandwidth: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise ValueError(f"dim must be in {SUPPORTED_DIMS}, got {self.dim}")
        if self.bandwidth < 0:
            raise ValueError("bandwidth must be >= 0")
        c = np.ascontiguousarray(self.coeffs, dtype=complex)
        n = (2 * self.bandwidth + 1) ** self.dim
        if c.shape != (n,):
            raise ValueError(f"expected {n} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c.view(float))):
            raise ValueError("coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[0]


@dataclass(frozen=True)
class SpatialSamples:
    """Values of a field on the uniform grid x_j = j / resolution."""

    dim: int
    resolution: int
    values: np.ndarray

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise ValueError(f"dim must be in {SUPPORTED_DIMS}, got {self.dim}")
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")
        v = np.ascontiguousarray(self.values, dtype=complex)
        shape = (self.resolution,) * self.dim
        if v.shape != shape:
            raise ValueError(f"expected value shape {shape}, got {v.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def grid_mass(self) -> float:
        """Average of |values|^2 over the grid (exact L2 mass once resolution >= 2N+1)."""
        return float(np.mean(np.abs(self.values) ** 2))


def zero_field(dim: int, bandwidth: int) -> FourierField:
    return FourierField(dim, bandwidth, np.zeros((2 * bandwidth + 1) ** dim, dtype=complex))


def from_coefficients(dim: int, bandwidth: int, entries) -> FourierField:
    """Build a field from (lattice vector, amplitude) pairs; omitted modes are zero.

    Rejects indices outside the band and duplicate indices.
    """
    if isinstance(entries, dict):
        entries = entries.items()
    coeffs = np.zeros((2 * bandwidth + 1) ** dim, dtype=complex)
    seen = set()
    for k, amp in entries:
        kt = _as_lattice_vector(k, dim)
        if any(abs(c) > bandwidth for c in kt):
            raise ValueError(f"lattice index {kt} is outside the band |k|_inf <= {bandwidth}")
        if kt in seen:
            raise ValueError(f"duplicate lattice index {kt}")
        seen.add(kt)
        coeffs[_flat_index(kt, bandwidth)] = amp
    return FourierField(dim, bandwidth, coeffs)


def coefficient(f: FourierField, k) -> complex:
    """Amplitude of one lattice mode."""
    kt = _as_lattice_vector(k, f.dim)
    if any(abs(c) > f.bandwidth for c in kt):
        raise ValueError(f"lattice index {kt} is outside the band |k|_inf <= {f.bandwidth}")
    return complex(f.coeffs[_flat_index(kt, f.bandwidth)])


def l2_norm(f: FourierField) -> float:
    """L2 norm on the unit-measure torus: (sum |c_k|^2)^(1/2)."""
    return float(np.linalg.norm(f.coeffs))


def embed(f: FourierField, bandwidth: int) -> FourierField:
    """Same function viewed at a larger bandwidth (zero padding)."""
    if bandwidth < f.bandwidth:
        raise ValueError("cannot shrink bandwidth losslessly")
    if bandwidth == f.bandwidth:
        return f
    coeffs = np.zeros((2 * bandwidth + 1) ** f.dim, dtype=complex)
    ks = mode_vectors(f.dim, f.bandwidth)
    if f.dim == 1:
        coeffs[ks[:, 0] + bandwidth] = f.coeffs
    else:
        side = 2 * bandwidth + 1
        coeffs[(ks[:, 0] + bandwidth) * side + (ks[:, 1] + bandwidth)] = f.coeffs
    return FourierField(f.dim, bandwidth, coeffs)


def linear_combination(alpha: complex, f: FourierField, beta: complex, g: FourierField) -> FourierField:
    """Coefficient-wise alpha*f + beta*g; output bandwidth is the max of the two."""
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")
    n = max(f.bandwidth, g.bandwidth)
    fe, ge = embed(f, n), embed(g, n)
    return FourierField(f.dim, n, alpha * fe.coeffs + beta * ge.coeffs)


def evaluate_on_grid(f: FourierField, resolution: int) -> SpatialSamples:
    """Evaluate the Fourier series on the uniform grid x_j = j/M.

    Implemented as a zero-padded inverse FFT; modes are folded mod M, so the
    evaluation is exact for any M and alias-free once M >= 2N+1.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    M = resolution
    ks = mode_vectors(f.dim, f.bandwidth)
    if f.dim == 1:
        spec = np.zeros(M, dtype=complex)
        np.add.at(spec, ks[:, 0] % M, f.coeffs)
        values = np.fft.ifft(spec) * M
    else:
        spec = np.zeros((M, M), dtype=complex)
        np.add.at(spec, (ks[:, 0] % M, ks[:, 1] % M), f.coeffs)
        values = np.fft.ifft2(spec) * M * M
    return SpatialSamples(f.dim, M, values)


def field_from_samples(samples: SpatialSamples, bandwidth: int) -> FourierField:
    """Discrete Fourier coefficients of grid samples, truncated to the band.

    Recovers a band-limited field exactly when resolution >= 2*bandwidth+1;
    for coarser grids the (aliased) DFT coefficients are returned.
    """
    M = samples.resolution
    if samples.dim == 1:
        spec = np.fft.fft(samples.values) / M
        idx = mode_vectors(1, bandwidth)[:, 0] % M
        coeffs = spec[idx]
    else:
        spec = np.fft.fft2(samples.values) / (M * M)
        ks = mode_vectors(2, bandwidth)
        coeffs = spec[ks[:, 0] % M, ks[:, 1] % M]
    return FourierField(samples.dim, bandwidth, coeffs)


def field_to_json(f: FourierField) -> dict:
    """Lossless JSON object: {dim, bandwidth, coeffs: [[k..., re, im], ...]} (nonzero modes)."""
    ks = mode_vectors(f.dim, f.bandwidth)
    rows = []
    for i in np.flatnonzero(f.coeffs):
        c = f.coeffs[i]
        rows.append([int(comp) for comp in ks[i]] + [float(c.real), float(c.imag)])
    return {"dim": f.dim, "bandwidth": f.bandwidth, "coeffs": rows}


def field_from_json(obj: dict) -> FourierField:
    dim = int(obj["dim"])
    bandwidth = int(obj["bandwidth"])
    entries = []
    for row in obj["coeffs"]:
        k = tuple(int(c) for c in row[:-2])
        entries.append((k if dim > 1 else k[0], complex(row[-2], row[-1])))
    return from_coefficients(dim, bandwidth, entries)
