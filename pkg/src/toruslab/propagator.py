"""Free Schrodinger flow and exact Duhamel integrals for step sources.

Everything is diagonal in Fourier: the free flow multiplies mode k by
``exp(-4j*pi^2*|k|^2*t)`` and the inhomogeneous term is integrated in closed
form on each piece of a piecewise-constant-in-time source, so there is no
quadrature error anywhere in this module.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .torus_field import FourierField, field_from_json, field_to_json, mode_sq


@dataclass(frozen=True)
class StepSource:
    """Piecewise-constant-in-time source: piece i is active on [s_i, s_{i+1}).

    Breakpoints start at 0 and increase strictly; all pieces share dim and
    bandwidth.  The stacked coefficient matrix is cached for the kernels.
    """

    breakpoints: np.ndarray
    pieces: tuple

    def __post_init__(self):
        bp = np.ascontiguousarray(self.breakpoints, dtype=float)
        pieces = tuple(self.pieces)
        if bp.ndim != 1 or bp.shape[0] != len(pieces) + 1:
            raise ValueError("need len(pieces)+1 breakpoints")
        if bp[0] != 0.0:
            raise ValueError("source must start at time 0")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        dims = {p.dim for p in pieces}
        bands = {p.bandwidth for p in pieces}
        if len(dims) != 1 or len(bands) != 1:
            raise ValueError("all pieces must share dim and bandwidth")
        bp.flags.writeable = False
        matrix = np.ascontiguousarray([p.coeffs for p in pieces])
        matrix.flags.writeable = False
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "_matrix", matrix)

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    @property
    def bandwidth(self) -> int:
        return self.pieces[0].bandwidth

    @property
    def span(self) -> tuple:
        return (float(self.breakpoints[0]), float(self.breakpoints[-1]))

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def piece_norms(self) -> np.ndarray:
        return np.linalg.norm(self._matrix, axis=1)

    def l1_mass(self) -> float:
        """Time integral of the L2 norm of the source over its span."""
        return float(np.diff(self.breakpoints) @ self.piece_norms())


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped states of one solution."""

    times: np.ndarray
    states: tuple

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=float)
        states = tuple(self.states)
        if times.ndim != 1 or times.shape[0] != len(states):
            raise ValueError("need one state per sample time")
        if times.shape[0] == 0:
            raise ValueError("trajectory cannot be empty")
        if not np.all(np.diff(times) >= 0):
            raise ValueError("sample times must be sorted")
        if len({s.dim for s in states}) != 1 or len({s.bandwidth for s in states}) != 1:
            raise ValueError("all states must share dim and bandwidth")
        times.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def bandwidth(self) -> int:
        return self.states[0].bandwidth

    def state_matrix(self) -> np.ndarray:
        return np.asarray([s.coeffs for s in self.states])

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.state_matrix(), axis=1)


def free_evolve(f: FourierField, t: float) -> FourierField:
    """Free flow: mode k picks up the phase exp(-4j*pi^2*|k|^2*t); norm preserved."""
    phases = kernels.free_phase(mode_sq(f.dim, f.bandwidth), float(t))
    return FourierField(f.dim, f.bandwidth, f.coeffs * phases)


def _check_interval(src: StepSource, a: float, b: float):
    lo, hi = src.span
    if b < a:
        raise ValueError(f"interval has negative length: [{a}, {b})")
    if a < lo or b > hi:
        raise ValueError(f"interval [{a}, {b}) outside the source span [{lo}, {hi}]")


def duhamel_source_transform(src: StepSource, interval) -> FourierField:
    """Backward-flow integral of the source over [a, b), computed in closed form.

    Mode k of a constant piece on an overlap [alpha, beta) contributes
    ``p_k * (exp(4j*pi^2*|k|^2*beta) - exp(4j*pi^2*|k|^2*alpha)) / (4j*pi^2*|k|^2)``
    and the zero mode contributes ``p_0 * (beta - alpha)``; the resulting L2
    norm never exceeds the time-integrated L2 norm of the source on [a, b).
    """
    a, b = float(interval[0]), float(interval[1])
    _check_interval(src, a, b)
    ksq = mode_sq(src.dim, src.bandwidth)
    if a == b:
        return FourierField(src.dim, src.bandwidth, np.zeros(ksq.shape[0], dtype=complex))
    g = kernels.segment_transform(src.breakpoints, src.matrix, ksq, a, b)
    return FourierField(src.dim, src.bandwidth, g)


def duhamel_solution(u0: FourierField, src: StepSource, t: float) -> FourierField:
    """State at time t of (i d/dt + Laplacian) u = f with u(0) = u0.

    Free flow of the data plus ``(1/i)`` times the free flow of the
    backward-flow source integral over [0, t); exact between breakpoints.
    """
    t = float(t)
    if t < 0.0 or t > src.span[1]:
        raise ValueError(f"time {t} outside [0, {src.span[1]}]")
    if u0.dim != src.dim or u0.bandwidth != src.bandwidth:
        raise ValueError("data and source must share dim and bandwidth")
    g = duhamel_source_transform(src, (0.0, t))
    phases = kernels.free_phase(mode_sq(src.dim, src.bandwidth), t)
    return FourierField(src.dim, src.bandwidth, phases * (u0.coeffs + g.coeffs / 1j))


def sample_trajectory(u0: FourierField, src: StepSource, times) -> Trajectory:
    """Duhamel solution sampled at sorted times within the source span."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.shape[0] == 0:
        raise ValueError("need a nonempty 1-d list of times")
    if not np.all(np.diff(times) >= 0):
        raise ValueError("sample times must be sorted")
    return Trajectory(times, tuple(duhamel_solution(u0, src, t) for t in times))


def solution_rows(u0: FourierField, src: StepSource, ts: np.ndarray) -> np.ndarray:
    """Batched duhamel_solution coefficients, shape (nt, n_modes).

    Same arithmetic as duhamel_solution up to floating-point association;
    used by the certificate sweeps and the fixed-point solver.
    """
    ksq = mode_sq(src.dim, src.bandwidth)
    ts = np.ascontiguousarray(ts, dtype=float)
    prefix = kernels.prefix_transform_eval(src.breakpoints, src.matrix, ksq, ts)
    phases = kernels.free_phase_many(ksq, ts)
    return phases * (u0.coeffs[None, :] + prefix / 1j)


def source_to_json(src: StepSource) -> dict:
    return {
        "breakpoints": [float(s) for s in src.breakpoints],
        "pieces": [field_to_json(p) for p in src.pieces],
    }


def source_from_json(obj: dict) -> StepSource:
    return StepSource(
        np.asarray(obj["breakpoints"], dtype=float),
        tuple(field_from_json(p) for p in obj["pieces"]),
    )
