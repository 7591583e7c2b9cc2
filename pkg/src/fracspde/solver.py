"""Truncated Picard iteration for the mild equation on a periodic lattice.

    u(t) = J0(t) + int_0^t Y(t-s) * [ f(u) - sum_j d_j q_j(u) ] ds
                 + int_0^t Y(t-s) * sigma(u) W(ds, dy)
                 + int_0^t Y(t-s) * h(u; xi) M(ds, dy, dxi)

Space is handled in Fourier variables (the convolutions become products
with the symbol of Y), time by a left-endpoint rule with the symbol taken
at lag midpoints (l - 1/2) dt, which keeps the t^(beta+gamma-1) singularity
of Y at zero lag finite. Row k of a path only reads rows m < k and noise
from steps m < k, so the discrete scheme is exactly causal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import conditions
from ._kernels import causal_sum
from .errors import InadmissibleParams, MissingInitialVelocity, NoConvergence
from .kernel import gradient_symbol, lattice_symbol
from .noise import (GaussianSheet, MarkIntensity, PoissonRealization, TimeGrid,
                    sample_gaussian, sample_poisson)
from .params import LatticeSpec, ModelParams
from .specialfn import ml_eval

REGIMES = ("white", "jump", "both")


# ----------------------------------------------------------------------------
# nonlinearities

@dataclass
class NonlinearitySpec:
    """Coefficient maps of the equation.

    f(t, x, z), q[j](t, x, z), sigma(t, x, z) and h(t, x, z, xi) act
    elementwise; x is a tuple of coordinate arrays broadcastable against z.
    Missing maps are treated as zero.
    """

    f: Callable | None = None
    q: Sequence[Callable] = ()
    sigma: Callable | None = None
    h: Callable | None = None
    lipschitz_global: bool = False
    growth_metadata: dict = field(default_factory=dict)


def polynomial(coeffs: Sequence[float]) -> Callable:
    """z -> sum_i coeffs[i] z^i."""
    c = [float(v) for v in coeffs]

    def fn(t, x, z):
        out = np.zeros_like(z, dtype=float)
        for a in reversed(c):
            out = out * z + a
        return out

    return fn


def burgers_flux(scale: float = 0.5) -> Callable:
    """q(z) = scale * z^2 (the Burgers flux for scale 1/2)."""
    return lambda t, x, z: scale * z * z


def linear_amplitude(c0: float, c1: float = 0.0) -> Callable:
    """sigma(z) = c0 + c1 z."""
    return lambda t, x, z: c0 + c1 * z


def linear_jump(c0: float, c1: float = 0.0) -> Callable:
    """h(z; xi) = (c0 + c1 z) xi."""
    return lambda t, x, z, xi: (c0 + c1 * z) * xi


# ----------------------------------------------------------------------------
# paths and norms

def lattice_lp(field_values: np.ndarray, dx: float, dim: int, p: float) -> float:
    """(dx^d sum |u|^p)^(1/p)."""
    return float((dx ** dim * np.sum(np.abs(field_values) ** p)) ** (1.0 / p))


def _row_norms(values: np.ndarray, dx: float, dim: int, p: float) -> np.ndarray:
    axes = tuple(range(1, values.ndim))
    return (dx ** dim * np.sum(np.abs(values) ** p, axis=axes)) ** (1.0 / p)


@dataclass
class FieldPath:
    """Solution values u(t_k, x_j), k = 0..K, with cached row norms."""

    values: np.ndarray
    params: ModelParams
    lattice: LatticeSpec
    dt: float
    p: float
    lp_per_time: np.ndarray = field(init=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.lp_per_time = _row_norms(self.values, self.lattice.dx, self.params.dim, self.p)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.values.shape[0])

    @property
    def horizon(self) -> float:
        return self.dt * (self.values.shape[0] - 1)


def truncate_lp(field_values: np.ndarray, n: float, p: float, dx: float = 1.0, dim: int = 1):
    """Projection onto the lattice L^p ball of radius n.

    Returns the input object itself when its norm is <= n.
    """
    if not n > 0:
        raise ValueError("truncation level must be positive")
    if math.isinf(n):
        return field_values
    norm = lattice_lp(field_values, dx, dim, p)
    if norm <= n:
        return field_values
    return field_values * (n / norm)


def truncate_rows(values: np.ndarray, n: float, p: float, dx: float, dim: int) -> np.ndarray:
    if math.isinf(n):
        return values
    norms = _row_norms(values, dx, dim, p)
    if np.all(norms <= n):
        return values
    out = values.copy()
    for k in np.nonzero(norms > n)[0]:
        out[k] = values[k] * (n / norms[k])
    return out


def weighted_norm(path: FieldPath, kappa: float, p: float | None = None) -> float:
    """max_k e^(-kappa t_k) ||u(t_k)||_p."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    norms = path.lp_per_time if p is None or p == path.p else _row_norms(
        path.values, path.lattice.dx, path.params.dim, p)
    return float(np.max(np.exp(-kappa * path.times) * norms))


def _diff_weighted(a: np.ndarray, b: np.ndarray, times, kappa, dx, dim, p) -> float:
    norms = _row_norms(a - b, dx, dim, p)
    return float(np.max(np.exp(-kappa * times) * norms))


def first_exceedance_index(path: FieldPath, n: float, p: float | None = None) -> int | None:
    norms = path.lp_per_time if p is None or p == path.p else _row_norms(
        path.values, path.lattice.dx, path.params.dim, p)
    hit = np.nonzero(norms >= n)[0]
    return int(hit[0]) if hit.size else None


def detect_stopping(path: FieldPath, n: float, p: float | None = None) -> float:
    """First lattice time with ||u(t_k)||_p >= n; the horizon T if never."""
    if not n > 0:
        raise ValueError("n must be positive")
    k = first_exceedance_index(path, n, p)
    return path.horizon if k is None else float(k * path.dt)


# ----------------------------------------------------------------------------
# Fourier-space helpers

def _fft(u: np.ndarray, dim: int) -> np.ndarray:
    return np.fft.fftn(u, axes=tuple(range(u.ndim - dim, u.ndim)))


def _ifft_real(u: np.ndarray, dim: int) -> np.ndarray:
    return np.fft.ifftn(u, axes=tuple(range(u.ndim - dim, u.ndim))).real


def j0_symbols(params: ModelParams, lattice: LatticeSpec, t: float):
    """(multiplier for u0, multiplier for u1 or None) at time t."""
    if t == 0:
        shape = lattice.shape(params.dim)
        return np.ones(shape), (np.zeros(shape) if params.beta > 1 else None)
    if params.beta <= 1:
        return lattice_symbol(params, lattice, "Z", t), None
    return lattice_symbol(params, lattice, "Zstar", t), lattice_symbol(params, lattice, "Z", t)


def j0_term(u0: np.ndarray, u1: np.ndarray | None, params: ModelParams, lattice: LatticeSpec,
            t: float) -> np.ndarray:
    """Free evolution of the initial data: Z* (or Z) applied to u0, Z to u1."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if params.beta > 1 and u1 is None:
        raise MissingInitialVelocity("u1 is required when beta lies in (1, 2)")
    m0, m1 = j0_symbols(params, lattice, t)
    spec = m0 * _fft(np.asarray(u0, dtype=float), params.dim)
    if m1 is not None:
        spec = spec + m1 * _fft(np.asarray(u1, dtype=float), params.dim)
    return _ifft_real(spec, params.dim)


def j0_path(u0, u1, params: ModelParams, lattice: LatticeSpec, dt: float, n_steps: int) -> np.ndarray:
    return np.stack([j0_term(u0, u1, params, lattice, k * dt) for k in range(n_steps + 1)])


def lag_table(params: ModelParams, lattice: LatticeSpec, dt: float, n_steps: int) -> np.ndarray:
    """FY at lag midpoints (l - 1/2) dt, l = 1..K; row 0 is unused (zeros)."""
    shape = lattice.shape(params.dim)
    w = np.zeros((n_steps + 1,) + shape, dtype=np.complex128)
    for lag in range(1, n_steps + 1):
        w[lag] = lattice_symbol(params, lattice, "Y", (lag - 0.5) * dt)
    return w


# ----------------------------------------------------------------------------
# configuration and frozen noise

@dataclass
class SolverConfig:
    params: ModelParams
    lattice: LatticeSpec
    horizon: float
    time_steps: int
    truncation_level: float = math.inf
    kappa: float = 0.0
    max_picard: int = 200
    tol: float = 1e-12
    seed: int = 0
    path_index: int = 0
    regime: str = "white"
    intensity: MarkIntensity | None = None
    override_admissibility: bool = False

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if not self.horizon > 0 or self.time_steps < 1:
            raise ValueError("need horizon > 0 and time_steps >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if not self.truncation_level > 0:
            raise ValueError("truncation_level must be positive")
        if self.regime in ("white", "both") and self.params.p != 2:
            raise ValueError("the white-noise regime is an L^2 theory; set p = 2")

    @property
    def dt(self) -> float:
        return self.horizon / self.time_steps

    @property
    def p(self) -> float:
        return 2.0 if self.regime in ("white", "both") else self.params.p

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.lattice, self.params.dim, self.time_steps, self.dt)


@dataclass(frozen=True)
class FrozenNoise:
    sheet: GaussianSheet | None = None
    poisson: PoissonRealization | None = None


def make_noise(config: SolverConfig, spec: NonlinearitySpec) -> FrozenNoise:
    """Sample only the noise fields that the regime and the coefficient maps use."""
    sheet = poisson = None
    if spec.sigma is not None and config.regime in ("white", "both"):
        sheet = sample_gaussian(config.grid, config.seed, config.path_index)
    if spec.h is not None and config.regime in ("jump", "both"):
        if config.intensity is None:
            raise ValueError("a jump amplitude needs config.intensity")
        poisson = sample_poisson(config.intensity, config.grid, config.seed, config.path_index)
    return FrozenNoise(sheet, poisson)


def admissibility(config: SolverConfig, spec: NonlinearitySpec):
    base = "jump" if config.regime == "jump" else "white"
    if spec.lipschitz_global:
        return conditions.check_global(config.params, base)
    return conditions.check(config.params, base)


@dataclass
class _Context:
    shape: tuple
    x: tuple
    lag: np.ndarray  # (K+1, n_modes)
    grads: list
    j0: np.ndarray  # (K+1, *shape)


def prepare(config: SolverConfig, u0, u1=None) -> _Context:
    """Lag table, gradient multipliers and the J0 path for one configuration."""
    prm, lat = config.params, config.lattice
    shape = lat.shape(prm.dim)
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != shape:
        raise ValueError(f"u0 has shape {u0.shape}, lattice needs {shape}")
    if prm.beta > 1 and u1 is None:
        raise MissingInitialVelocity("u1 is required when beta lies in (1, 2)")
    lag = lag_table(prm, lat, config.dt, config.time_steps).reshape(config.time_steps + 1, -1)
    grads = [gradient_symbol(lat, prm.dim, ax) for ax in range(prm.dim)]
    j0 = j0_path(u0, u1, prm, lat, config.dt, config.time_steps)
    return _Context(shape, tuple(lat.mesh(prm.dim)), lag, grads, j0)


# ----------------------------------------------------------------------------
# the Picard map

@dataclass
class RhsResult:
    path: FieldPath
    terms: dict | None = None


def _event_values(spec, noise, tcol, x, P, config):
    """Event sums minus compensator of h(t_m, x, P_m; xi), shape (K, *shape)."""
    real = noise.poisson
    g = config.grid
    K = config.time_steps
    shape = P.shape[1:]
    flatP = P.reshape(K, -1)
    xs = [xi.reshape(-1) for xi in x]
    st, ce = real.steps, real.cells
    ev = spec.h(st * config.dt, tuple(c[ce] for c in xs), flatP[st, ce], real.marks)
    out = np.zeros(K * flatP.shape[1])
    from ._kernels import scatter_add
    scatter_add(out, st * flatP.shape[1] + ce, np.asarray(ev, dtype=float))
    out = out.reshape((K,) + shape)
    nodes, w = real.intensity.quadrature()
    comp = np.zeros_like(out)
    for xi, wq in zip(nodes, w):
        comp += wq * spec.h(tcol, x, P, xi)
    return out - real.intensity.total_rate * config.dt * g.cell_volume * comp


def picard_rhs(current: FieldPath, noise: FrozenNoise, spec: NonlinearitySpec,
               config: SolverConfig, ctx: _Context | None = None, u0=None, u1=None,
               return_terms: bool = False) -> RhsResult:
    """One application of the truncated mild map to `current`."""
    if ctx is None:
        if u0 is None:
            raise ValueError("pass a prepared context or the initial data")
        ctx = prepare(config, u0, u1)
    prm, lat = config.params, config.lattice
    K, dim, dx, dt = config.time_steps, prm.dim, lat.dx, config.dt
    n = math.inf if spec.lipschitz_global else config.truncation_level
    P = truncate_rows(current.values[:K], n, config.p, dx, dim)
    tcol = (dt * np.arange(K)).reshape((K,) + (1,) * dim)
    x = ctx.x

    parts = {}
    if spec.f is not None:
        parts["drift"] = dt * _fft(np.broadcast_to(spec.f(tcol, x, P), P.shape), dim)
    if spec.q:
        acc = np.zeros((K,) + ctx.shape, dtype=np.complex128)
        for j, qj in enumerate(spec.q):
            acc -= ctx.grads[j] * _fft(np.broadcast_to(qj(tcol, x, P), P.shape), dim)
        parts["flux"] = dt * acc
    if spec.sigma is not None and noise.sheet is not None:
        dw = noise.sheet.increments.reshape((K,) + ctx.shape)
        parts["gaussian"] = _fft(spec.sigma(tcol, x, P) * dw, dim) / dx ** dim
    if spec.h is not None and noise.poisson is not None:
        parts["jump"] = _fft(_event_values(spec, noise, tcol, x, P, config), dim) / dx ** dim

    def duhamel(a):
        ext = np.zeros((K + 1, ctx.lag.shape[1]), dtype=np.complex128)
        ext[:K] = a.reshape(K, -1)
        return _ifft_real(causal_sum(ctx.lag, ext).reshape((K + 1,) + ctx.shape), dim)

    if return_terms:
        terms = {"J0": ctx.j0.copy()}
        total = ctx.j0.copy()
        for name, a in parts.items():
            terms[name] = duhamel(a)
            total = total + terms[name]
        return RhsResult(FieldPath(total, prm, lat, dt, config.p), terms)
    if parts:
        values = ctx.j0 + duhamel(sum(parts.values()))
    else:
        values = ctx.j0.copy()
    return RhsResult(FieldPath(values, prm, lat, dt, config.p))


# ----------------------------------------------------------------------------
# solve

@dataclass
class SolveResult:
    path: FieldPath
    tau_n: float
    exceeded: bool
    picard_deltas: list
    sup_deltas: list
    converged: bool
    iterations: int
    report: object = None
    noise: FrozenNoise | None = None


def solve(config: SolverConfig, spec: NonlinearitySpec, u0, u1=None,
          noise: FrozenNoise | None = None) -> SolveResult:
    """Picard iteration from J0 until successive iterates agree to config.tol.

    picard_deltas are measured in the kappa-weighted norm; convergence is
    judged on the unweighted sup-in-time norm so late rows are not hidden
    by the weight.
    """
    report = admissibility(config, spec)
    if not report.satisfied and not config.override_admissibility:
        raise InadmissibleParams(report.table(), report)
    if noise is None:
        noise = make_noise(config, spec)
    ctx = prepare(config, u0, u1)
    prm, lat = config.params, config.lattice
    u = FieldPath(ctx.j0.copy(), prm, lat, config.dt, config.p)
    times = u.times
    deltas, sups = [], []
    converged = False
    it = 0
    for it in range(1, config.max_picard + 1):
        new = picard_rhs(u, noise, spec, config, ctx).path
        deltas.append(_diff_weighted(new.values, u.values, times, config.kappa, lat.dx,
                                     prm.dim, config.p))
        sups.append(_diff_weighted(new.values, u.values, times, 0.0, lat.dx, prm.dim, config.p))
        u = new
        if sups[-1] <= config.tol:
            converged = True
            break
    if not converged and sups[-1] >= sups[len(sups) // 2]:
        raise NoConvergence(f"Picard deltas stalled at {sups[-1]:.3g} after {it} iterations")
    k = first_exceedance_index(u, config.truncation_level)
    tau = u.horizon if k is None else float(k * config.dt)
    return SolveResult(u, tau, k is not None, deltas, sups, converged, it, report, noise)


def contraction_ratio(deltas: Sequence[float], start: int = 2, floor: float = 1e-13) -> float:
    """Largest delta[k+1]/delta[k] for k >= start while deltas stay above floor*delta[0]."""
    d = np.asarray(deltas, dtype=float)
    cut = floor * d[0]
    ratios = [d[k + 1] / d[k] for k in range(start, len(d) - 1) if d[k + 1] > cut]
    return float(max(ratios)) if ratios else 0.0


# ----------------------------------------------------------------------------
# per-mode Volterra oracle for the linear deterministic case

def volterra_oracle(params: ModelParams, lattice: LatticeSpec, lam: float, u0, t_grid,
                    u1=None, refine: int = 4) -> FieldPath:
    """Solve u(t) = J0(t) + lam int_0^t Y(t-s) * u(s) ds mode by mode.

    Each Fourier mode obeys a scalar Volterra equation, solved by product
    trapezoid steps (piecewise-linear u, kernel integrated exactly through
    the antiderivatives t^b E_{beta,b+1} and t^(b+1) E_{beta,b+2}) on a grid
    `refine` times finer than t_grid, which must be uniform from 0.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    dt = float(t_grid[1] - t_grid[0])
    n = len(t_grid) - 1
    if abs(t_grid[0]) > 0 or not np.allclose(np.diff(t_grid), dt, rtol=1e-12, atol=0):
        raise ValueError("t_grid must be uniform and start at 0")
    if params.beta > 1 and u1 is None:
        raise MissingInitialVelocity("u1 is required when beta lies in (1, 2)")
    dim = params.dim
    kf = n * refine
    h = dt / refine
    tf = h * np.arange(kf + 1)
    a0 = _fft(np.asarray(u0, dtype=float), dim)
    a1 = _fft(np.asarray(u1, dtype=float), dim) if u1 is not None else np.zeros_like(a0)
    mag = np.maximum(np.abs(a0), np.abs(a1))
    active = mag > 1e-14 * max(float(mag.max()), 1e-300)
    m = lattice.points_per_axis
    k = np.fft.fftfreq(m, d=1.0 / m)
    ksq = sum(g * g for g in np.meshgrid(*([k] * dim), indexing="ij"))
    xi = np.sqrt(ksq) * (math.pi / lattice.half_width)
    out = np.zeros((n + 1,) + a0.shape, dtype=np.complex128)
    beta, b = params.beta, params.beta + params.gamma
    for key in np.unique(xi[active]):
        sel = active & (xi == key)
        c = 0.5 * params.nu * key ** params.alpha
        zf = -c * tf ** beta
        k1 = tf ** b * ml_eval(beta, b + 1.0, zf)
        k2 = tf ** (b + 1.0) * ml_eval(beta, b + 2.0, zf)
        i1 = np.diff(k1)                      # int of Y over [(j-1)h, jh]
        wa = (h * k1[1:] - np.diff(k2)) / h   # weight on the older endpoint
        wb = i1 - wa                          # weight on the newer endpoint
        if beta <= 1:
            m0 = ml_eval(beta, 1.0, zf)
            m1 = np.zeros_like(tf)
        else:
            m0 = ml_eval(beta, 1.0, zf)
            m1 = tf * ml_eval(beta, 2.0, zf)
        j0 = np.outer(m0, a0[sel]) + np.outer(m1, a1[sel])
        u = np.zeros_like(j0)
        u[0] = j0[0]
        diag = 1.0 - lam * wb[0]
        for step in range(1, kf + 1):
            hist = wa[:step][::-1] @ u[:step]
            if step > 1:
                hist = hist + wb[1:step][::-1] @ u[1:step]
            u[step] = (j0[step] + lam * hist) / diag
        out[:, sel] = u[::refine]
    vals = _ifft_real(out, dim)
    return FieldPath(vals, params, lattice, dt, 2.0)
