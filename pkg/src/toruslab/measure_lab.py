"""Space-time concentration densities and absolute-continuity diagnostics.

The squared modulus of a trajectory is histogrammed on a space-time grid;
weak-* pairings against test tables and box mass/volume ratios probe how the
density concentrates for families of increasingly oscillatory data.  The
underlying limit statements are asymptotic, so the family diagnostics report
trends only and assert nothing (the report schema says so explicitly).
"""

import csv
from dataclasses import dataclass

import numpy as np

from .propagator import Trajectory, free_evolve
from .torus_field import FourierField, evaluate_on_grid, from_coefficients, l2_norm


@dataclass(frozen=True)
class SpaceTimeMeasure:
    """Nonnegative cell densities of |u|^2 on a (0,T) x torus grid.

    density has shape (time_cells, M) in one dimension and
    (time_cells, M, M) in two; total mass is the density integral with cell
    volume (T / time_cells) * M^-dim.
    """

    end_time: float
    time_cells: int
    dim: int
    resolution: int
    density: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.density, dtype=float)
        shape = (self.time_cells,) + (self.resolution,) * self.dim
        if d.shape != shape:
            raise ValueError(f"expected density shape {shape}, got {d.shape}")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ValueError("density must be finite and nonnegative")
        d.flags.writeable = False
        object.__setattr__(self, "density", d)

    @property
    def cell_volume(self) -> float:
        return (self.end_time / self.time_cells) / self.resolution**self.dim

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.density) * self.cell_volume)


def _cell_assignment(times: np.ndarray, T: float, r: int) -> np.ndarray:
    idx = np.floor(np.asarray(times) / T * r).astype(int)
    return np.clip(idx, 0, r - 1)


def concentration_density(traj: Trajectory, resolution: int, time_cells: int,
                          end_time: float = None) -> SpaceTimeMeasure:
    """Cell-averaged |u|^2 histogram of a trajectory.

    Every time cell must contain at least one trajectory sample, and the
    space resolution must be alias-free (>= 2N+1) so the grid mass of each
    sample is its exact L2 mass.
    """
    T = float(end_time) if end_time is not None else float(traj.times[-1])
    if T <= 0:
        raise ValueError("end time must be positive")
    if resolution < 2 * traj.bandwidth + 1:
        raise ValueError(f"resolution must be >= {2 * traj.bandwidth + 1} for bandwidth "
                         f"{traj.bandwidth}")
    if len(traj.states) < time_cells:
        raise ValueError("undersampled trajectory: fewer samples than time cells")
    cells = _cell_assignment(traj.times, T, time_cells)
    shape = (time_cells,) + (resolution,) * traj.dim
    acc = np.zeros(shape)
    counts = np.zeros(time_cells, dtype=int)
    for cell, state in zip(cells, traj.states):
        acc[cell] += np.abs(evaluate_on_grid(state, resolution).values) ** 2
        counts[cell] += 1
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0)
        raise ValueError(f"undersampled trajectory: empty time cells {missing.tolist()}")
    acc /= counts.reshape((-1,) + (1,) * traj.dim)
    return SpaceTimeMeasure(T, time_cells, traj.dim, resolution, acc)


def energy_quadrature(traj: Trajectory, time_cells: int, end_time: float = None) -> float:
    """Time integral of |u(t)|^2 with the same cell averaging as the density."""
    T = float(end_time) if end_time is not None else float(traj.times[-1])
    cells = _cell_assignment(traj.times, T, time_cells)
    sums = np.zeros(time_cells)
    counts = np.zeros(time_cells, dtype=int)
    for cell, state in zip(cells, traj.states):
        sums[cell] += l2_norm(state) ** 2
        counts[cell] += 1
    if np.any(counts == 0):
        raise ValueError("undersampled trajectory")
    return float(np.sum(sums / counts) * T / time_cells)


def weak_star_pairing(mu: SpaceTimeMeasure, test: np.ndarray) -> float:
    """Pairing of the density with a test table on the same grid."""
    test = np.asarray(test, dtype=float)
    if test.shape != mu.density.shape:
        raise ValueError(f"test table shape {test.shape} does not match grid {mu.density.shape}")
    return float(np.sum(mu.density * test) * mu.cell_volume)


@dataclass(frozen=True)
class DataFamily:
    """Indexed family of initial data with a uniform L2 bound."""

    label: str
    generator: callable
    norm_bound: float = 1.0 + 1e-9


def validate_family(family: DataFamily, n_values) -> None:
    """Check the uniform L2 bound up to the largest index used."""
    for n in n_values:
        norm = l2_norm(family.generator(n))
        if norm > family.norm_bound:
            raise ValueError(f"family {family.label!r} violates its bound at n={n}: {norm}")


def make_family(label: str, dim: int = 1, x0: float = 0.5, seed: int = 0) -> DataFamily:
    """Registry of concentrating data families.

    dirichlet: normalized band-limited spike of order n at x0 (the canonical
    concentrating datum); two-mode: equal superposition of the constant and
    the frequency-n wave; plane-wave: single frequency-n wave; random-phase:
    unit-modulus random-phase coefficients, seeded per index; constant: the
    function 1 regardless of n.
    """
    name = label.strip().lower()
    center = (x0,) * dim

    if name == "constant":
        gen = lambda n: from_coefficients(dim, 0, {(0,) * dim if dim > 1 else 0: 1.0})
    elif name == "plane-wave":
        gen = lambda n: from_coefficients(
            dim, n, {((n,) + (0,) * (dim - 1)) if dim > 1 else n: 1.0})
    elif name == "two-mode":
        def gen(n):
            zero = (0,) * dim if dim > 1 else 0
            high = ((n,) + (0,) * (dim - 1)) if dim > 1 else n
            return from_coefficients(dim, n, {zero: 1 / np.sqrt(2), high: 1 / np.sqrt(2)})
    elif name == "dirichlet":
        def gen(n):
            ax = np.arange(-n, n + 1)
            scale = (2 * n + 1) ** (dim / 2)
            if dim == 1:
                entries = [(int(k), np.exp(-2j * np.pi * k * center[0]) / scale) for k in ax]
            else:
                entries = [
                    ((int(k1), int(k2)),
                     np.exp(-2j * np.pi * (k1 * center[0] + k2 * center[1])) / scale)
                    for k1 in ax for k2 in ax
                ]
            return from_coefficients(dim, n, entries)
    elif name == "random-phase":
        def gen(n):
            rng = np.random.default_rng([seed, n])
            count = (2 * n + 1) ** dim
            coeffs = np.exp(2j * np.pi * rng.random(count)) / np.sqrt(count)
            return FourierField(dim, n, coeffs)
    else:
        raise ValueError(f"unknown family {label!r}")
    return DataFamily(label=name, generator=gen)


def _snap_box(center: float, side: float, width: float, cells: int) -> tuple:
    """Snap [center - side/2, center + side/2] outward to whole cells."""
    lo = int(np.floor((center - side / 2) / width))
    hi = int(np.ceil((center + side / 2) / width))
    lo = max(lo, 0)
    hi = min(max(hi, lo + 1), cells)
    if hi == lo:
        lo = hi - 1
    return lo, hi


def _box_ratio(mu: SpaceTimeMeasure, center, sides) -> dict:
    dt = mu.end_time / mu.time_cells
    dx = 1.0 / mu.resolution
    t_lo, t_hi = _snap_box(center[0], sides[0], dt, mu.time_cells)
    sel = mu.density[t_lo:t_hi]
    snapped = [(t_hi - t_lo) * dt]
    for axis in range(mu.dim):
        lo, hi = _snap_box(center[1 + axis], sides[1 + axis], dx, mu.resolution)
        sel = np.take(sel, np.arange(lo, hi), axis=1 + axis)
        snapped.append((hi - lo) * dx)
    lebesgue = float(np.prod(snapped))
    mass = float(np.sum(sel) * mu.cell_volume)
    return {
        "center": [float(c) for c in center],
        "sides": [float(s) for s in snapped],
        "mass": mass,
        "lebesgue": lebesgue,
        "ratio": mass / lebesgue,
    }


def ac_proxy_report(family: DataFamily, n_values, stages: int = 4, end_time: float = 1.0,
                    time_cells: int = 64, x0: float = 0.5) -> dict:
    """Box-concentration trends of the free flow across a data family.

    For each index the datum is evolved freely, its space-time density built,
    and the mass/volume ratio recorded over boxes shrinking around
    (T/2, x0), alongside the same ratios for the initial time slice alone
    (which do explode for concentrating data).  Purely diagnostic: the
    report carries no pass/fail verdict.
    """
    validate_family(family, n_values)
    T = float(end_time)
    results = []
    for n in n_values:
        u0 = family.generator(n)
        M = 2 * u0.bandwidth + 1
        mids = (np.arange(time_cells) + 0.5) * (T / time_cells)
        traj = Trajectory(mids, tuple(free_evolve(u0, t) for t in mids))
        mu = concentration_density(traj, M, time_cells, T)
        slice_density = np.abs(evaluate_on_grid(u0, M).values) ** 2
        center = (T / 2,) + (x0,) * u0.dim
        boxes, slices, contrast = [], [], []
        for stage in range(stages):
            sides = (T / 2**stage,) + (1.0 / 2**stage,) * u0.dim
            box = _box_ratio(mu, center, sides)
            boxes.append(box)
            dx = 1.0 / M
            sel = slice_density
            snapped = []
            for axis in range(u0.dim):
                lo, hi = _snap_box(x0, 1.0 / 2**stage, dx, M)
                sel = np.take(sel, np.arange(lo, hi), axis=axis)
                snapped.append((hi - lo) * dx)
            leb = float(np.prod(snapped))
            mass = float(np.sum(sel) / M**u0.dim)
            slices.append({
                "center": [x0] * u0.dim,
                "sides": snapped,
                "mass": mass,
                "lebesgue": leb,
                "ratio": mass / leb,
            })
            contrast.append(box["ratio"] / max(slices[-1]["ratio"], 1e-300))
        results.append({
            "n": int(n),
            "bandwidth": int(u0.bandwidth),
            "resolution": int(M),
            "total_mass": mu.total_mass,
            "energy_quadrature": energy_quadrature(traj, time_cells, T),
            "boxes": boxes,
            "time_slice": slices,
            "contrast": contrast,
        })
    return {
        "family": family.label,
        "T": T,
        "time_cells": int(time_cells),
        "stages": int(stages),
        "diagnostic_only": True,
        "results": results,
    }


_BOX_SCHEMA = {
    "type": "object",
    "required": ["center", "sides", "mass", "lebesgue", "ratio"],
    "properties": {
        "center": {"type": "array", "items": {"type": "number"}},
        "sides": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "mass": {"type": "number", "minimum": 0},
        "lebesgue": {"type": "number", "exclusiveMinimum": 0},
        "ratio": {"type": "number", "minimum": 0},
    },
}

AC_REPORT_SCHEMA = {
    "type": "object",
    "required": ["family", "T", "time_cells", "stages", "diagnostic_only", "results"],
    "properties": {
        "family": {"type": "string"},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "time_cells": {"type": "integer", "minimum": 1},
        "stages": {"type": "integer", "minimum": 1},
        "diagnostic_only": {"const": True},
        "results": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["n", "total_mass", "boxes", "time_slice", "contrast"],
                "properties": {
                    "n": {"type": "integer", "minimum": 0},
                    "total_mass": {"type": "number", "minimum": 0},
                    "boxes": {"type": "array", "items": _BOX_SCHEMA},
                    "time_slice": {"type": "array", "items": _BOX_SCHEMA},
                    "contrast": {"type": "array", "items": {"type": "number"}},
                },
            },
        },
    },
}


def validate_ac_report(report: dict) -> None:
    """Schema-check an ac_proxy_report result (raises on violation)."""
    import jsonschema

    jsonschema.validate(report, AC_REPORT_SCHEMA)


def ac_report_to_csv(report: dict, path) -> None:
    """Plot-ready rows (n, stage, ratio) of the space-time box ratios."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "stage", "ratio"])
        for res in report["results"]:
            for stage, box in enumerate(res["boxes"]):
                writer.writerow([res["n"], stage, repr(float(box["ratio"]))])
