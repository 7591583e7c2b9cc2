"""Model parameters and the periodic lattice that stands in for R^d."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_POINTS_PER_AXIS = 1024
MAX_DIM = 3


@dataclass(frozen=True)
class ModelParams:
    """Orders and constants of the fractional equation.

    alpha: space-fractional order, beta: Caputo order in (0, 2), gamma:
    Riemann-Liouville smoothing order, nu: diffusivity, dim: spatial
    dimension, p: integrability index in [1, 2].
    """

    alpha: float
    beta: float
    gamma: float = 0.0
    nu: float = 1.0
    dim: int = 1
    p: float = 2.0

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.beta < 2:
            raise ValueError(f"beta must lie in (0, 2), got {self.beta}")
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise ValueError(f"nu must be positive, got {self.nu}")
        if int(self.dim) != self.dim or not 1 <= self.dim <= MAX_DIM:
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not 1 <= self.p <= 2:
            raise ValueError(f"p must lie in [1, 2], got {self.p}")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def ceil_beta(self) -> int:
        return 1 if self.beta <= 1 else 2

    def replace(self, **changes) -> "ModelParams":
        fields = dict(alpha=self.alpha, beta=self.beta, gamma=self.gamma,
                      nu=self.nu, dim=self.dim, p=self.p)
        fields.update(changes)
        return ModelParams(**fields)


def diffusion_length(params: ModelParams, t: float) -> float:
    """(nu t^beta)^(1/alpha), the natural spatial scale at time t."""
    return (params.nu * t ** params.beta) ** (1.0 / params.alpha)


def default_half_width(params: ModelParams, t: float) -> float:
    return 20.0 * diffusion_length(params, t)


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic grid on [-L, L)^d with M points per axis."""

    half_width: float
    points_per_axis: int

    def __post_init__(self):
        m = self.points_per_axis
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if int(m) != m or m < 8 or m & (m - 1):
            raise ValueError(f"points_per_axis must be a power of two >= 8, got {m}")
        if m > MAX_POINTS_PER_AXIS:
            raise ValueError(f"points_per_axis is capped at {MAX_POINTS_PER_AXIS}")
        object.__setattr__(self, "points_per_axis", int(m))

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    def coords(self) -> np.ndarray:
        """Grid points -L + j dx, j = 0..M-1."""
        return -self.half_width + self.dx * np.arange(self.points_per_axis)

    def cell_volume(self, dim: int) -> float:
        return self.dx ** dim

    def shape(self, dim: int) -> tuple[int, ...]:
        return (self.points_per_axis,) * dim

    def n_cells(self, dim: int) -> int:
        return self.points_per_axis ** dim

    def volume(self, dim: int) -> float:
        return (2.0 * self.half_width) ** dim

    def wavenumbers(self) -> np.ndarray:
        """Angular frequencies in FFT order, 2 pi k / (2L)."""
        m = self.points_per_axis
        return 2.0 * np.pi * np.fft.fftfreq(m, d=self.dx)

    def mesh(self, dim: int) -> list[np.ndarray]:
        x = self.coords()
        return np.meshgrid(*([x] * dim), indexing="ij")
