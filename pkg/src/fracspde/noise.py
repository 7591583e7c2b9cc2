"""Frozen noise realizations on the solver lattice and their integrals.

Gaussian space-time white noise becomes i.i.d. N(0, dt dx^d) increments per
(time step, cell). The jump part is a finite-activity Poisson random measure
with intensity dt dx mu(dxi), mu = total_rate * (mark law); integrals against
it are compensated by the exact mean measure.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from ._kernels import scatter_add
from .errors import RateTooHigh
from .params import LatticeSpec

DEFAULT_EVENT_CAP = 10_000_000
MARK_KINDS = ("point", "exponential", "two-point")
_LAGUERRE_NODES = 64


def stream_key(tag: str) -> int:
    """Stable 32-bit code for a field tag."""
    return zlib.crc32(tag.encode("utf-8"))


def make_rng(seed: int, path_index: int = 0, tag: str = "gauss") -> np.random.Generator:
    """Counter-based generator for one (seed, path, field) stream.

    Streams for different path indices or tags are statistically independent
    and can be created in any order, so ensembles are reproducible under
    concurrency.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=(int(path_index), stream_key(tag)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class TimeGrid:
    """n_steps steps of width dt on the lattice (dim spatial axes)."""

    lattice: LatticeSpec
    dim: int
    n_steps: int
    dt: float

    def __post_init__(self):
        if self.n_steps < 1 or not self.dt > 0:
            raise ValueError("need n_steps >= 1 and dt > 0")

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @property
    def n_cells(self) -> int:
        return self.lattice.n_cells(self.dim)

    @property
    def cell_volume(self) -> float:
        return self.lattice.dx ** self.dim


@dataclass(frozen=True)
class GaussianSheet:
    increments: np.ndarray  # (n_steps, n_cells)
    seed: int
    grid: TimeGrid

    def scaled(self, c: float) -> "GaussianSheet":
        return GaussianSheet(c * self.increments, self.seed, self.grid)


def sample_gaussian(grid: TimeGrid, seed: int, path_index: int = 0) -> GaussianSheet:
    """i.i.d. N(0, dt dx^d) white-noise increments, one per (step, cell)."""
    rng = make_rng(seed, path_index, "gauss")
    sd = math.sqrt(grid.dt * grid.cell_volume)
    inc = sd * rng.standard_normal((grid.n_steps, grid.n_cells))
    return GaussianSheet(inc, int(seed), grid)


@dataclass(frozen=True)
class MarkIntensity:
    """Finite Levy measure mu = total_rate * law(kind, params).

    kinds: "point" (value), "exponential" (mean), "two-point" (low, high,
    prob_high).
    """

    total_rate: float
    kind: str = "point"
    value: float = 1.0
    mean: float = 1.0
    low: float = -1.0
    high: float = 1.0
    prob_high: float = 0.5

    def __post_init__(self):
        if not (self.total_rate > 0 and math.isfinite(self.total_rate)):
            raise ValueError(f"total_rate must be positive and finite, got {self.total_rate}")
        if self.kind not in MARK_KINDS:
            raise ValueError(f"mark kind must be one of {MARK_KINDS}, got {self.kind!r}")
        if self.kind == "exponential" and not self.mean > 0:
            raise ValueError("exponential marks need mean > 0")
        if self.kind == "two-point" and not 0 <= self.prob_high <= 1:
            raise ValueError("prob_high must lie in [0, 1]")

    def with_rate(self, rate: float) -> "MarkIntensity":
        return MarkIntensity(rate, self.kind, self.value, self.mean, self.low,
                             self.high, self.prob_high)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "point":
            return np.full(n, float(self.value))
        if self.kind == "exponential":
            return rng.exponential(self.mean, n)
        up = rng.random(n) < self.prob_high
        return np.where(up, self.high, self.low).astype(float)

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and probability weights with E[g(xi)] = sum w g(node).

        Exact for the discrete laws; Gauss-Laguerre for the exponential law.
        """
        if self.kind == "point":
            return np.array([float(self.value)]), np.array([1.0])
        if self.kind == "two-point":
            return (np.array([float(self.low), float(self.high)]),
                    np.array([1.0 - self.prob_high, self.prob_high]))
        x, w = np.polynomial.laguerre.laggauss(_LAGUERRE_NODES)
        return self.mean * x, w

    def expect(self, g) -> float:
        nodes, w = self.quadrature()
        return float(np.sum(w * np.asarray(g(nodes), dtype=float)))


@dataclass(frozen=True)
class PoissonRealization:
    """Events of the Poisson measure on [0, T) x [-L, L)^d x E."""

    times: np.ndarray
    steps: np.ndarray
    cells: np.ndarray
    marks: np.ndarray
    intensity: MarkIntensity
    grid: TimeGrid
    seed: int

    @property
    def n_events(self) -> int:
        return int(self.times.shape[0])

    def count_in_steps(self, k0: int, k1: int) -> int:
        """Number of events with step index in [k0, k1)."""
        return int(np.count_nonzero((self.steps >= k0) & (self.steps < k1)))

    def step_counts(self) -> np.ndarray:
        return np.bincount(self.steps, minlength=self.grid.n_steps)


def sample_poisson(intensity: MarkIntensity, grid: TimeGrid, seed: int, path_index: int = 0,
                   cap: float = DEFAULT_EVENT_CAP) -> PoissonRealization:
    """Poisson(total_rate * T * (2L)^d) events, uniform in time and space."""
    expected = intensity.total_rate * grid.horizon * grid.lattice.volume(grid.dim)
    if expected > cap:
        raise RateTooHigh(f"expected {expected:.3g} events exceeds the cap {cap:.3g}")
    rng = make_rng(seed, path_index, "poisson")
    n = int(rng.poisson(expected))
    times = np.sort(rng.uniform(0.0, grid.horizon, n))
    steps = np.minimum((times / grid.dt).astype(np.int64), grid.n_steps - 1)
    lat = grid.lattice
    m = lat.points_per_axis
    cells = np.zeros(n, dtype=np.int64)
    for _ in range(grid.dim):
        pos = rng.uniform(-lat.half_width, lat.half_width, n)
        j = np.clip(((pos + lat.half_width) / lat.dx).astype(np.int64), 0, m - 1)
        cells = cells * m + j
    marks = intensity.sample(rng, n)
    return PoissonRealization(times, steps, cells, marks, intensity, grid, int(seed))


def integrate_gaussian(phi: np.ndarray, sheet: GaussianSheet, horizon_steps: int | None = None) -> float:
    """sum_k sum_j phi[k, j] dW[k, j] over steps k < horizon_steps."""
    phi = np.asarray(phi, dtype=float)
    inc = sheet.increments
    if phi.shape != inc.shape:
        raise ValueError(f"integrand shape {phi.shape} does not match sheet {inc.shape}")
    k = inc.shape[0] if horizon_steps is None else int(horizon_steps)
    return float(np.sum(phi[:k] * inc[:k]))


def lattice_h(amplitude: np.ndarray, mark_fn=None):
    """h(k, cell, xi) = amplitude[k, cell] * mark_fn(xi) (mark_fn defaults to xi)."""
    amplitude = np.asarray(amplitude, dtype=float)

    def h(k, cell, xi):
        g = xi if mark_fn is None else mark_fn(xi)
        return amplitude[k, cell] * g

    h.amplitude = amplitude
    h.mark_fn = mark_fn
    return h


def compensator(h_field, grid: TimeGrid, intensity: MarkIntensity) -> float:
    """int int int h ds dx mu(dxi) by lattice quadrature and mark expectation."""
    nodes, w = intensity.quadrature()
    k = np.arange(grid.n_steps).reshape(-1, 1)
    cell = np.arange(grid.n_cells).reshape(1, -1)
    total = 0.0
    for xi, wq in zip(nodes, w):
        vals = np.broadcast_to(np.asarray(h_field(k, cell, xi), dtype=float),
                               (grid.n_steps, grid.n_cells))
        total += wq * float(np.sum(vals))
    return intensity.total_rate * grid.dt * grid.cell_volume * total


def integrate_compensated(h_field, realization: PoissonRealization) -> float:
    """sum over events of h(step, cell, mark) minus the compensator."""
    r = realization
    jumps = np.asarray(h_field(r.steps, r.cells, r.marks), dtype=float)
    if jumps.shape != (r.n_events,):
        raise ValueError(f"h_field returned shape {jumps.shape} for {r.n_events} events")
    return float(np.sum(jumps)) - compensator(h_field, r.grid, r.intensity)


def event_field(realization: PoissonRealization, weights: np.ndarray) -> np.ndarray:
    """Per-(step, cell) sums of event weights, shape (n_steps, n_cells)."""
    g = realization.grid
    out = np.zeros(g.n_steps * g.n_cells)
    idx = realization.steps * g.n_cells + realization.cells
    scatter_add(out, idx, np.asarray(weights, dtype=float))
    return out.reshape(g.n_steps, g.n_cells)


# Monte Carlo checks -------------------------------------------------------

def isometry_ratio(phi: np.ndarray, grid: TimeGrid, replicas: int, seed: int) -> dict:
    """Empirical Var[int phi dW] over replicas divided by sum phi^2 dt dx^d."""
    vals = np.empty(replicas)
    for r in range(replicas):
        vals[r] = integrate_gaussian(phi, sample_gaussian(grid, seed, r))
    exact = float(np.sum(np.asarray(phi) ** 2)) * grid.dt * grid.cell_volume
    var = float(np.var(vals, ddof=1))
    return {"replicas": replicas, "mean": float(np.mean(vals)), "variance": var,
            "exact": exact, "ratio": var / exact}


def compensated_samples(h_field, intensity: MarkIntensity, grid: TimeGrid, replicas: int,
                        seed: int) -> np.ndarray:
    """int h dM for independent Poisson realizations (path indices 0..replicas-1)."""
    comp = compensator(h_field, grid, intensity)
    out = np.empty(replicas)
    for r in range(replicas):
        real = sample_poisson(intensity, grid, seed, r)
        jumps = np.asarray(h_field(real.steps, real.cells, real.marks), dtype=float)
        out[r] = float(np.sum(jumps)) - comp
    return out


def moment_constant(h_field, intensity: MarkIntensity, grid: TimeGrid, p: float, replicas: int,
                    seed: int) -> dict:
    """Empirical C in E|int h dM|^p <= C int int int |h|^p ds dx mu(dxi)."""
    samples = compensated_samples(h_field, intensity, grid, replicas, seed)
    lhs = float(np.mean(np.abs(samples) ** p))

    def hp(k, cell, xi):
        return np.abs(h_field(k, cell, xi)) ** p

    rhs = compensator(hp, grid, intensity)
    return {"p": p, "rate": intensity.total_rate, "moment": lhs, "bound_integral": rhs,
            "constant": lhs / rhs}
