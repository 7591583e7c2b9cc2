"""Fundamental-solution kernels on a periodic lattice.

Kernels are built from their radial Fourier symbols,

    Z     : t^(ceil(beta)-1) E_{beta, ceil(beta)}(-nu t^beta |xi|^alpha / 2)
    Y     : t^(beta+gamma-1) E_{beta, beta+gamma}(-nu t^beta |xi|^alpha / 2)
    Zstar : E_{beta, 1}(-nu t^beta |xi|^alpha / 2)

by an inverse DFT on [-L, L)^d, with the convention F phi(xi) = int phi(x)
e^{-i xi x} dx so that a spatial derivative becomes multiplication by i xi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResolutionInsufficient, SymbolNotIntegrable
from .params import LatticeSpec, ModelParams, default_half_width
from .specialfn import ml_eval

KINDS = ("Z", "Y", "Zstar")
# A symbol that is not small at the Nyquist frequency leaves aliasing error
# of the same relative size in the grid.
DEFAULT_NYQUIST_TOL = 5e-2
TAIL_NOISE_FLOOR = 1e-13


def _ml_indices(params: ModelParams, which: str, t: float) -> tuple[float, float, float]:
    """(prefactor, a, b) of the symbol for `which` at time t."""
    beta, gamma = params.beta, params.gamma
    if which == "Z":
        cb = params.ceil_beta
        return t ** (cb - 1), beta, float(cb)
    if which == "Y":
        return t ** (beta + gamma - 1.0), beta, beta + gamma
    if which == "Zstar":
        return 1.0, beta, 1.0
    raise ValueError(f"unknown kernel kind {which!r}; expected one of {KINDS}")


def fourier_symbol(params: ModelParams, which: str, t: float, xi_norm):
    """Radial Fourier transform of kernel `which` at time t and |xi| = xi_norm."""
    if not t > 0:
        raise ValueError("t must be positive")
    pref, a, b = _ml_indices(params, which, t)
    xi = np.asarray(xi_norm, dtype=float)
    if np.any(xi < 0):
        raise ValueError("xi_norm must be non-negative")
    z = -0.5 * params.nu * t ** params.beta * xi ** params.alpha
    return pref * ml_eval(a, b, z)


def symbol_on_keys(params: ModelParams, which: str, t: float, xi_sq: np.ndarray) -> np.ndarray:
    """Symbol at |xi| = sqrt(xi_sq), evaluating each distinct value once."""
    keys, inverse = np.unique(xi_sq, return_inverse=True)
    vals = np.asarray(fourier_symbol(params, which, t, np.sqrt(keys)))
    return vals[inverse].reshape(xi_sq.shape)


def _integer_sq_norm(m: int, dim: int) -> np.ndarray:
    k = np.fft.fftfreq(m, d=1.0 / m).astype(np.int64)
    grids = np.meshgrid(*([k] * dim), indexing="ij", sparse=True)
    return sum(g * g for g in grids)


def _parity(m: int, dim: int) -> np.ndarray:
    """(-1)^(k_1 + ... + k_d): the phase that puts x = -L at index 0."""
    k = np.fft.fftfreq(m, d=1.0 / m).astype(np.int64)
    s = np.where(k % 2 == 0, 1.0, -1.0)
    out = np.ones((1,) * dim)
    for ax in range(dim):
        shape = [1] * dim
        shape[ax] = m
        out = out * s.reshape(shape)
    return out


def lattice_symbol(params: ModelParams, lattice: LatticeSpec, which: str, t: float) -> np.ndarray:
    """Symbol sampled on the dual grid, FFT ordering, shape M^d."""
    m = lattice.points_per_axis
    scale = (math.pi / lattice.half_width) ** 2
    ksq = _integer_sq_norm(m, params.dim)
    return symbol_on_keys(params, which, t, ksq.astype(float) * scale)


def estimate_decay_exponent(params: ModelParams, which: str, t: float, xi_max: float,
                            n: int = 9) -> float:
    """Fitted s in |symbol| ~ |xi|^(-s) over the decade [xi_max/10, xi_max]."""
    xi = np.geomspace(xi_max / 10.0, xi_max, n)
    s = np.abs(np.asarray(fourier_symbol(params, which, t, xi)))
    tiny = np.finfo(float).tiny
    if s[-1] <= tiny or s[-1] <= 1e-300 * s[0]:
        return math.inf
    ok = s > tiny
    slope = np.polyfit(np.log(xi[ok]), np.log(s[ok]), 1)[0]
    return -float(slope)


def integrability_threshold(params: ModelParams, gradient: bool) -> float:
    """Decay exponent the symbol must beat for an L^p-integrable kernel.

    A symbol decaying like |xi|^(-s) with s < d gives a local singularity
    |x|^(s-d); that lies in L^p iff s > d (1 - 1/p). The gradient costs one
    power of |xi|.
    """
    base = params.dim * (1.0 - 1.0 / params.p)
    return base + (1.0 if gradient else 0.0)


@dataclass(frozen=True)
class KernelGrid:
    time: float
    values: np.ndarray
    which: str
    params: ModelParams
    lattice: LatticeSpec
    axis: int | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def label(self) -> str:
        return self.which if self.axis is None else f"GradY_{self.axis}"


def _check_symbol(params, lattice, which, t, gradient):
    xi_nyq = math.pi / lattice.dx
    s = estimate_decay_exponent(params, which, t, xi_nyq)
    need = integrability_threshold(params, gradient)
    if not s > need:
        raise SymbolNotIntegrable(
            f"{which} symbol decays like |xi|^-{s:.3g}; need exponent > {need:.3g} "
            f"(d={params.dim}, p={params.p}{', gradient' if gradient else ''})")
    return s, need


def _invert(spec: np.ndarray, lattice: LatticeSpec, dim: int, what: str) -> np.ndarray:
    raw = np.fft.ifftn(spec * _parity(lattice.points_per_axis, dim)) / lattice.dx ** dim
    scale = float(np.max(np.abs(raw.real))) or 1.0
    resid = float(np.max(np.abs(raw.imag)))
    if resid > 1e-9 * scale:
        raise ResolutionInsufficient(f"{what}: imaginary residue {resid:.3g} after inversion")
    return np.ascontiguousarray(raw.real)


def _resolution_ratio(params, lattice, which, t, sym, gradient):
    xi_nyq = math.pi / lattice.dx
    edge = abs(float(fourier_symbol(params, which, t, xi_nyq)))
    if gradient:
        edge *= xi_nyq
        peak = float(np.max(np.abs(sym) * np.sqrt(_integer_sq_norm(
            lattice.points_per_axis, params.dim)) * (math.pi / lattice.half_width)))
    else:
        peak = float(np.max(np.abs(sym)))
    return edge / peak if peak > 0 else 0.0


def build_kernel(params: ModelParams, lattice: LatticeSpec | None, which: str, t: float,
                 nyquist_tol: float = DEFAULT_NYQUIST_TOL) -> KernelGrid:
    """Kernel `which` at time t sampled on the lattice points -L + j dx."""
    if not t > 0:
        raise ValueError("t must be positive")
    if lattice is None:
        lattice = LatticeSpec(default_half_width(params, t), 256 if params.dim > 1 else 1024)
    _ml_indices(params, which, t)
    s, need = _check_symbol(params, lattice, which, t, False)
    sym = lattice_symbol(params, lattice, which, t)
    ratio = _resolution_ratio(params, lattice, which, t, sym, False)
    if ratio > nyquist_tol:
        raise ResolutionInsufficient(
            f"{which} symbol at the Nyquist frequency is {ratio:.3g} of its peak "
            f"(tolerance {nyquist_tol:.3g}); refine the lattice")
    values = _invert(sym, lattice, params.dim, which)
    diag = {"decay_exponent": s, "decay_needed": need, "nyquist_ratio": ratio}
    return KernelGrid(float(t), values, which, params, lattice, None, diag)


def gradient_symbol(lattice: LatticeSpec, dim: int, axis: int) -> np.ndarray:
    """i xi_axis on the dual grid with the unpaired Nyquist mode removed."""
    m = lattice.points_per_axis
    k = np.fft.fftfreq(m, d=1.0 / m)
    xi = 1j * k * (math.pi / lattice.half_width)
    xi[m // 2] = 0.0
    shape = [1] * dim
    shape[axis] = m
    return xi.reshape(shape)


def build_gradient(params: ModelParams, lattice: LatticeSpec | None, t: float, axis: int = 0,
                   nyquist_tol: float = DEFAULT_NYQUIST_TOL) -> KernelGrid:
    """d/dx_axis of the Y kernel, by inverting i xi_axis * FY."""
    if not 0 <= axis < params.dim:
        raise ValueError(f"axis must lie in [0, {params.dim})")
    if not t > 0:
        raise ValueError("t must be positive")
    if lattice is None:
        lattice = LatticeSpec(default_half_width(params, t), 256 if params.dim > 1 else 1024)
    s, need = _check_symbol(params, lattice, "Y", t, True)
    sym = lattice_symbol(params, lattice, "Y", t)
    ratio = _resolution_ratio(params, lattice, "Y", t, sym, True)
    if ratio > nyquist_tol:
        raise ResolutionInsufficient(
            f"gradient symbol at the Nyquist frequency is {ratio:.3g} of its peak "
            f"(tolerance {nyquist_tol:.3g}); refine the lattice")
    spec = sym * gradient_symbol(lattice, params.dim, axis)
    values = _invert(spec, lattice, params.dim, "GradY")
    diag = {"decay_exponent": s, "decay_needed": need, "nyquist_ratio": ratio}
    return KernelGrid(float(t), values, "GradY", params, lattice, axis, diag)


def lp_norm(kernel: KernelGrid, p: float) -> float:
    """dx^d * sum |values|^p, the p-th power of the lattice L^p norm."""
    if p < 1:
        raise ValueError("p must be >= 1")
    v = np.abs(kernel.values)
    return float(kernel.lattice.dx ** kernel.params.dim * np.sum(v ** p))


def scaling_exponent(params: ModelParams, p: float, kind: str = "kernel") -> float:
    """Exponent e with int |K(t,x)|^p dx = C t^e."""
    a, b, g, d = params.alpha, params.beta, params.gamma, params.dim
    if kind == "kernel":
        return p * (b + g - 1.0) + (b * d / a) * (1.0 - p)
    if kind == "gradient":
        return p * (b + g - 1.0) + (b / a) * (d - p * d - p)
    raise ValueError(f"kind must be 'kernel' or 'gradient', got {kind!r}")


def _build_for_kind(params, lattice, kind, t, nyquist_tol):
    if kind == "kernel":
        return build_kernel(params, lattice, "Y", t, nyquist_tol)
    if kind == "gradient":
        return build_gradient(params, lattice, t, 0, nyquist_tol)
    raise ValueError(f"kind must be 'kernel' or 'gradient', got {kind!r}")


def scaling_norms(params: ModelParams, lattice: LatticeSpec | None, p: float, kind: str,
                  times, nyquist_tol: float = DEFAULT_NYQUIST_TOL) -> np.ndarray:
    """lp_norm at each time; a None lattice is rebuilt per time at the default width."""
    return np.array([lp_norm(_build_for_kind(params, lattice, kind, t, nyquist_tol), p)
                     for t in times])


def fit_scaling_slope(params: ModelParams, lattice: LatticeSpec | None, p: float, kind: str,
                      times, nyquist_tol: float = DEFAULT_NYQUIST_TOL) -> float:
    """Least-squares slope of log lp_norm against log t."""
    times = np.asarray(times, dtype=float)
    if len(np.unique(times)) < 3:
        raise ValueError("need at least three distinct times")
    norms = scaling_norms(params, lattice, p, kind, times, nyquist_tol)
    return float(np.polyfit(np.log(times), np.log(norms), 1)[0])


def radial_distance(lattice: LatticeSpec, dim: int) -> np.ndarray:
    mesh = lattice.mesh(dim)
    return np.sqrt(sum(x * x for x in mesh))


def tail_exponent_check(kernel: KernelGrid, window: tuple[float, float] = (0.05, 0.5)) -> float:
    """Fitted log-log slope of |values| against |x| over the outer radii.

    The window is given as fractions of L; the upper end stays clear of the
    periodic image that flattens the profile near x = L.
    """
    if kernel.params.alpha == 2:
        raise ValueError("tail check refused for alpha = 2: the kernel decays exponentially")
    lat = kernel.lattice
    r = radial_distance(lat, kernel.params.dim)
    v = np.abs(kernel.values)
    lo, hi = window[0] * lat.half_width, window[1] * lat.half_width
    sel = (r >= lo) & (r <= hi)
    if kernel.axis is not None:
        # along the derivative axis, away from the plane where the gradient vanishes
        others = [x for i, x in enumerate(lat.mesh(kernel.params.dim)) if i != kernel.axis]
        for x in others:
            sel &= np.abs(x) < 0.5 * lat.dx
    else:
        others = lat.mesh(kernel.params.dim)[1:]
        for x in others:
            sel &= np.abs(x) < 0.5 * lat.dx
    peak = float(np.max(v))
    rs, vs = r[sel], v[sel]
    if rs.size < 3 or np.any(vs <= TAIL_NOISE_FLOOR * peak):
        raise ResolutionInsufficient("outer radii are below the numerical noise floor")
    return float(np.polyfit(np.log(rs), np.log(vs), 1)[0])
