"""Command-line front end.

    fracspde ml-eval A B Z
    fracspde check-params --alpha 2 --beta 1 --gamma 0 --d 1 --regime white
    fracspde kernel-norms --alpha 1.8 --beta 0.6 --p 1.5 --kind kernel
    fracspde verify-isometry --replicas 10000 --seed 0
    fracspde simulate --config run.cfg --ensemble 8 --seed 1

Every key can come from a flat key=value file (--config) or from a flag;
flags win. The resolved configuration, with the source of each value, is
written next to the outputs as resolved_config.txt. Outputs go to --out,
else $FRACSPDE_OUT, else ./fracspde_out.

Exit codes: 0 success, 1 numerical failure, 2 admissibility refusal,
64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import struct
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import conditions
from .errors import FracSPDEError, InadmissibleParams
from .kernel import DEFAULT_NYQUIST_TOL, scaling_exponent, scaling_norms
from .noise import MARK_KINDS, MarkIntensity, TimeGrid, isometry_ratio
from .params import LatticeSpec, ModelParams, default_half_width, diffusion_length
from .solver import (NonlinearitySpec, SolverConfig, admissibility, burgers_flux, linear_amplitude,
                     linear_jump, polynomial, solve)
from .specialfn import ml_eval

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_REFUSED = 2
EXIT_USAGE = 64
OUT_ENV = "FRACSPDE_OUT"
DEFAULT_OUT = "fracspde_out"
PROVENANCE_FILE = "resolved_config.txt"

SNAPSHOT_MAGIC = b"FSPDSNAP"
SNAPSHOT_VERSION = 1


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------------
# value conversion

def _to_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _to_floats(s: str) -> tuple:
    s = s.strip()
    if not s:
        return ()
    return tuple(float(v) for v in s.split(","))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class Key:
    name: str
    conv: Callable
    default: object = None
    required: bool = False
    choices: tuple = ()
    help: str = ""


def _model_keys(required=True):
    return [
        Key("alpha", float, required=required, help="space-fractional order"),
        Key("beta", float, required=required, help="Caputo order in (0, 2)"),
        Key("gamma", float, 0.0, help="Riemann-Liouville order"),
        Key("nu", float, 1.0, help="diffusivity"),
        Key("d", int, 1, help="spatial dimension"),
        Key("p", float, 2.0, help="integrability index in [1, 2]"),
    ]


SUBCOMMANDS: dict[str, list[Key]] = {
    "ml-eval": [
        Key("a", float, required=True, help="first index a > 0"),
        Key("b", float, required=True, help="second index b > 0"),
        Key("z", float, required=True, help="real argument"),
    ],
    "check-params": _model_keys() + [
        Key("regime", str, "white", choices=conditions.REGIMES),
        Key("csv", _to_bool, False, help="also write check_params.csv"),
    ],
    "kernel-norms": _model_keys() + [
        Key("L", float, None, help="half width; default 10 diffusion lengths at the last time"),
        Key("M", int, None, help="points per axis; default 1024 (d=1), 512 (d=2), 128 (d=3)"),
        Key("kind", str, "kernel", choices=("kernel", "gradient")),
        Key("times", _to_floats, (0.5, 0.7, 1.0, 1.4, 2.0), help="comma-separated times"),
        Key("nyquist_tol", float, DEFAULT_NYQUIST_TOL),
        Key("plot", _to_bool, False, help="emit a plotting script"),
    ],
    "verify-isometry": [
        Key("L", float, 1.0), Key("M", int, 32), Key("d", int, 1),
        Key("steps", int, 16), Key("horizon", float, 1.0),
        Key("replicas", int, 10000), Key("seed", int, 0),
        Key("tol", float, 0.05, help="allowed |ratio - 1|"),
    ],
    "simulate": _model_keys() + [
        Key("L", float, None, help="half width; default 20 diffusion lengths at the horizon"),
        Key("M", int, 128), Key("horizon", float, 1.0), Key("steps", int, 64),
        Key("regime", str, "white", choices=("white", "jump", "both")),
        Key("truncation", float, math.inf), Key("kappa", float, 0.0),
        Key("max_picard", int, 200), Key("tol", float, 1e-10),
        Key("f", _to_floats, (), help="polynomial coefficients c0,c1,... of f"),
        Key("burgers", float, 0.0, help="flux scale s in q_j(z) = s z^2; 0 disables"),
        Key("sigma", _to_floats, (), help="c0,c1 for sigma(z) = c0 + c1 z"),
        Key("h", _to_floats, (), help="c0,c1 for h(z; xi) = (c0 + c1 z) xi"),
        Key("lipschitz_global", _to_bool, False),
        Key("rate", float, 0.0, help="total jump intensity"),
        Key("mark", str, "point", choices=MARK_KINDS),
        Key("mark_value", float, 1.0), Key("mark_mean", float, 1.0),
        Key("mark_low", float, -1.0), Key("mark_high", float, 1.0), Key("mark_prob", float, 0.5),
        Key("u0", str, "gaussian", choices=("gaussian", "cosine", "constant", "zero")),
        Key("u0_amp", float, 0.5), Key("u0_width", float, 1.0),
        Key("u1_amp", float, 0.0, help="amplitude of u1 (same profile), used when beta > 1"),
        Key("ensemble", int, 1), Key("seed", int, 0),
        Key("snapshots", _to_bool, False), Key("override", _to_bool, False),
        Key("plot", _to_bool, False),
    ],
}


@dataclass
class RunConfig:
    subcommand: str
    values: dict
    out_dir: Path
    seed: int | None = None
    sources: dict = field(default_factory=dict)  # key -> (flag text or None, file text or None)
    out_explicit: bool = False


# ----------------------------------------------------------------------------
# parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracspde", description="Fractional stochastic PDE toolkit.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name, keys in SUBCOMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key=value configuration file")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        if name == "ml-eval":
            for k in keys:
                sp.add_argument(f"pos_{k.name}", nargs="?", metavar=k.name.upper(), help=k.help)
        for k in keys:
            flag = "--" + k.name.replace("_", "-")
            if k.conv is _to_bool:
                sp.add_argument(flag, dest=k.name, nargs="?", const="true", help=k.help)
            else:
                sp.add_argument(flag, dest=k.name, help=k.help)
    return parser


def parse_kv(text: str, keys: list[Key], subcommand: str) -> dict:
    """Flat key=value lines; '#' starts a comment."""
    known = {k.name for k in keys}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value, got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise UsageError(f"config line {lineno}: unknown key {key!r} for {subcommand}; "
                             f"valid keys: {', '.join(sorted(known))}")
        if key in out:
            raise UsageError(f"config line {lineno}: key {key!r} given twice")
        out[key] = val
    return out


def parse_config(argv, config_text: str | None = None) -> RunConfig:
    """Resolve flags, file values and defaults into a RunConfig."""
    ns = build_parser().parse_args(list(argv))
    name = ns.subcommand
    keys = SUBCOMMANDS[name]
    if config_text is None and ns.config:
        try:
            config_text = Path(ns.config).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config file {ns.config!r}: {exc}") from exc
    file_vals = parse_kv(config_text, keys, name) if config_text else {}
    flag_vals = {}
    for k in keys:
        v = getattr(ns, k.name, None)
        if v is None and name == "ml-eval":
            v = getattr(ns, "pos_" + k.name, None)
        if v is not None:
            flag_vals[k.name] = v
    values, sources = {}, {}
    for k in keys:
        raw = flag_vals.get(k.name, file_vals.get(k.name))
        sources[k.name] = (flag_vals.get(k.name), file_vals.get(k.name))
        if raw is None:
            if k.required:
                flag = "--" + k.name.replace("_", "-")
                raise UsageError(f"missing required key {k.name!r} (pass {flag} or set "
                                 f"'{k.name} = ...' in the config file)")
            values[k.name] = k.default
            continue
        try:
            val = k.conv(raw)
        except ValueError as exc:
            raise UsageError(f"bad value for {k.name!r}: {raw!r} ({exc})") from exc
        if k.choices and val not in k.choices:
            raise UsageError(f"{k.name!r} must be one of {', '.join(k.choices)}, got {val!r}")
        values[k.name] = val
    out_dir = ns.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    return RunConfig(name, values, Path(out_dir), values.get("seed"), sources,
                     out_explicit=ns.out is not None)


# ----------------------------------------------------------------------------
# output helpers

def _prepare_out(cfg: RunConfig) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_provenance(cfg)
    return cfg.out_dir


def write_provenance(cfg: RunConfig) -> Path:
    """Resolved configuration echo with the source of every value."""
    lines = [f"# resolved configuration for fracspde {cfg.subcommand}",
             f"subcommand = {cfg.subcommand}"]
    for key in sorted(cfg.values):
        flag, filed = cfg.sources.get(key, (None, None))
        if flag is not None and filed is not None:
            note = f"flag (file value: {filed})"
        elif flag is not None:
            note = "flag"
        elif filed is not None:
            note = "file"
        else:
            note = "default"
        val = cfg.values[key]
        shown = "none" if val is None or val == () else _fmt(val)
        lines.append(f"{key} = {shown}  # {note}")
    path = cfg.out_dir / PROVENANCE_FILE
    path.write_text("\n".join(lines) + "\n")
    return path


def write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_csv_cell(v) for v in row])
    return path


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_snapshot(path: Path, values: np.ndarray) -> Path:
    """Flat binary field dump.

    Layout: 8-byte magic b"FSPDSNAP", uint32 version, uint32 ndim,
    ndim x uint64 dims, 8-byte dtype tag (numpy dtype string such as "<f8"
    padded with NUL), then the row-major little-endian payload. All header
    integers are little-endian.
    """
    arr = np.ascontiguousarray(values, dtype="<f8")
    tag = arr.dtype.str.encode("ascii").ljust(8, b"\0")
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<II", SNAPSHOT_VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(tag)
        fh.write(arr.tobytes(order="C"))
    return path


def read_snapshot(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:8] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path} is not a field snapshot")
    version, ndim = struct.unpack_from("<II", data, 8)
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    dims = struct.unpack_from(f"<{ndim}Q", data, 16)
    off = 16 + 8 * ndim
    tag = data[off:off + 8].rstrip(b"\0").decode("ascii")
    return np.frombuffer(data, dtype=np.dtype(tag), offset=off + 8).reshape(dims).copy()


_PLOT_TEMPLATES = {
    "kernel-norms": '''"""Log-log plot of kernel norms written by fracspde kernel-norms."""
import csv
import matplotlib.pyplot as plt

with open("kernel_norms.csv") as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]
n = [float(r["lp_norm"]) for r in rows]
plt.loglog(t, n, "o-")
plt.xlabel("t")
plt.ylabel("lattice L^p norm")
plt.title("fitted slope %s, closed form %s" % (rows[0]["fitted_slope"], rows[0]["closed_form_exponent"]))
plt.savefig("kernel_norms.png", dpi=150)
''',
    "simulate": '''"""Plot of the ensemble norm summary written by fracspde simulate."""
import csv
import matplotlib.pyplot as plt

with open("summary.csv") as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]
m = [float(r["mean_norm_p"]) for r in rows]
s = [float(r["stderr"]) for r in rows]
plt.plot(t, m)
plt.fill_between(t, [a - 2 * b for a, b in zip(m, s)], [a + 2 * b for a, b in zip(m, s)], alpha=0.3)
plt.xlabel("t")
plt.ylabel("mean ||u(t)||_p^p")
plt.savefig("summary.png", dpi=150)
''',
}


def emit_plot_script(out_dir: Path, subcommand: str) -> Path:
    path = out_dir / f"plot_{subcommand.replace('-', '_')}.py"
    path.write_text(_PLOT_TEMPLATES[subcommand])
    return path


# ----------------------------------------------------------------------------
# subcommands

def _model(v: dict) -> ModelParams:
    return ModelParams(v["alpha"], v["beta"], v["gamma"], v["nu"], v["d"], v["p"])


def cmd_ml_eval(cfg: RunConfig) -> int:
    v = cfg.values
    val = float(ml_eval(v["a"], v["b"], v["z"]))
    print(f"{val:.15g}")
    if cfg.out_explicit:
        out = _prepare_out(cfg)
        write_csv(out / "ml_eval.csv", ["a", "b", "z", "value"], [(v["a"], v["b"], v["z"], val)])
    return EXIT_OK


def cmd_check_params(cfg: RunConfig) -> int:
    v = cfg.values
    report = conditions.check(_model(v), v["regime"])
    print(report.table())
    if v["csv"]:
        out = _prepare_out(cfg)
        write_csv(out / "check_params.csv",
                  ["regime", "alpha", "beta", "gamma", "d", "p", "satisfied", "lhs", "rhs", "margin"],
                  [(report.regime, v["alpha"], v["beta"], v["gamma"], v["d"], v["p"],
                    report.satisfied, report.lhs, report.rhs, report.margin)])
    return EXIT_OK if report.satisfied else EXIT_REFUSED


_DEFAULT_M = {1: 1024, 2: 512, 3: 128}


def cmd_kernel_norms(cfg: RunConfig) -> int:
    v = cfg.values
    params = _model(v)
    times = np.asarray(v["times"], dtype=float)
    if len(np.unique(times)) < 3 or np.any(times <= 0):
        raise UsageError("times needs at least three distinct positive values")
    half = v["L"] if v["L"] is not None else 10.0 * diffusion_length(params, float(times.max()))
    m = v["M"] if v["M"] is not None else _DEFAULT_M[params.dim]
    lattice = LatticeSpec(half, m)
    norms = scaling_norms(params, lattice, params.p, v["kind"], times, v["nyquist_tol"])
    slope = float(np.polyfit(np.log(times), np.log(norms), 1)[0])
    closed = scaling_exponent(params, params.p, v["kind"])
    err = abs(slope - closed) / abs(closed) if abs(closed) > 1e-12 else abs(slope - closed)
    out = _prepare_out(cfg)
    write_csv(out / "kernel_norms.csv",
              ["t", "lp_norm", "fitted_slope", "closed_form_exponent", "rel_error"],
              [(t, n, slope, closed, err) for t, n in zip(times, norms)])
    if v["plot"]:
        emit_plot_script(out, cfg.subcommand)
    print(f"fitted slope {slope:.17g}  closed form {closed:.17g}  relative error {err:.3e}")
    return EXIT_OK


def isometry_integrands(grid: TimeGrid) -> dict:
    """Three test integrands on the (step, cell) grid."""
    lat, d = grid.lattice, grid.dim
    x = np.stack([c.reshape(-1) for c in lat.mesh(d)])
    r2 = np.sum(x * x, axis=0)
    t = grid.dt * np.arange(grid.n_steps)[:, None]
    half = lat.half_width
    return {
        "constant": np.ones((grid.n_steps, grid.n_cells)),
        "bump": np.broadcast_to(np.exp(-r2 / (0.2 * half) ** 2), (grid.n_steps, grid.n_cells)).copy(),
        "oscillating": 0.5 + np.cos(2 * math.pi * t / grid.horizon) * np.sin(math.pi * x[0] / half),
    }


def cmd_verify_isometry(cfg: RunConfig) -> int:
    v = cfg.values
    if v["replicas"] < 2:
        raise UsageError("replicas must be at least 2")
    lattice = LatticeSpec(v["L"], v["M"])
    grid = TimeGrid(lattice, v["d"], v["steps"], v["horizon"] / v["steps"])
    rows, ok = [], True
    for name, phi in isometry_integrands(grid).items():
        st = isometry_ratio(phi, grid, v["replicas"], v["seed"])
        passed = abs(st["ratio"] - 1.0) <= v["tol"]
        ok &= passed
        rows.append((name, st["replicas"], st["mean"], st["variance"], st["exact"], st["ratio"], passed))
        print(f"{name:<12} ratio {st['ratio']:.6f}  {'pass' if passed else 'FAIL'}")
    out = _prepare_out(cfg)
    write_csv(out / "isometry.csv",
              ["integrand", "replicas", "mean", "variance", "exact", "ratio", "pass"], rows)
    return EXIT_OK if ok else EXIT_NUMERIC


def initial_profile(kind: str, amp: float, width: float, lattice: LatticeSpec, dim: int) -> np.ndarray:
    xs = lattice.mesh(dim)
    shape = lattice.shape(dim)
    if kind == "zero" or amp == 0:
        return np.zeros(shape)
    if kind == "constant":
        return np.full(shape, float(amp))
    if kind == "cosine":
        out = np.full(shape, float(amp))
        for x in xs:
            out = out * np.cos(math.pi * x / lattice.half_width)
        return out
    r2 = sum(x * x for x in xs)
    return amp * np.exp(-r2 / (2.0 * width * width))


def build_simulation(v: dict):
    """(SolverConfig, NonlinearitySpec, u0, u1) from resolved simulate values."""
    params = _model(v)
    half = v["L"] if v["L"] is not None else default_half_width(params, v["horizon"])
    lattice = LatticeSpec(half, v["M"])
    f = polynomial(v["f"]) if v["f"] else None
    q = [burgers_flux(v["burgers"])] * params.dim if v["burgers"] else ()
    if v["sigma"] and len(v["sigma"]) not in (1, 2):
        raise UsageError("sigma takes c0 or c0,c1")
    if v["h"] and len(v["h"]) not in (1, 2):
        raise UsageError("h takes c0 or c0,c1")
    sigma = linear_amplitude(*v["sigma"]) if v["sigma"] else None
    h = linear_jump(*v["h"]) if v["h"] else None
    intensity = None
    if h is not None and v["regime"] in ("jump", "both"):
        if not v["rate"] > 0:
            raise UsageError("a jump amplitude h needs rate > 0")
        intensity = MarkIntensity(v["rate"], v["mark"], v["mark_value"], v["mark_mean"],
                                  v["mark_low"], v["mark_high"], v["mark_prob"])
    spec = NonlinearitySpec(f=f, q=q, sigma=sigma, h=h, lipschitz_global=v["lipschitz_global"])
    config = SolverConfig(params, lattice, v["horizon"], v["steps"], v["truncation"], v["kappa"],
                          v["max_picard"], v["tol"], v["seed"], 0, v["regime"], intensity,
                          v["override"])
    u0 = initial_profile(v["u0"], v["u0_amp"], v["u0_width"], lattice, params.dim)
    u1 = None
    if params.beta > 1:
        u1 = initial_profile(v["u0"], v["u1_amp"], v["u0_width"], lattice, params.dim)
    return config, spec, u0, u1


def cmd_simulate(cfg: RunConfig) -> int:
    v = cfg.values
    if v["ensemble"] < 1:
        raise UsageError("ensemble must be >= 1")
    config, spec, u0, u1 = build_simulation(v)
    report = admissibility(config, spec)
    if not report.satisfied and not config.override_admissibility:
        raise InadmissibleParams(report.table(), report)
    out = _prepare_out(cfg)
    p = config.p
    powers, runs = [], []
    for i in range(v["ensemble"]):
        config.path_index = i
        res = solve(config, spec, u0, u1)
        norms = res.path.lp_per_time
        times = res.path.times
        n = config.truncation_level
        write_csv(out / f"run_{i:04d}.csv", ["t", "lp_norm", "exceeded", "before_tau"],
                  [(t, nv, bool(nv >= n), bool(t < res.tau_n)) for t, nv in zip(times, norms)])
        if v["snapshots"]:
            write_snapshot(out / f"run_{i:04d}.fsnap", res.path.values)
        runs.append((i, res.tau_n, res.exceeded, res.iterations, res.converged, res.sup_deltas[-1]))
        powers.append(norms ** p)
        print(f"run {i}: tau_n {res.tau_n:.6g}  iterations {res.iterations}  "
              f"converged {res.converged}", file=sys.stderr)
    powers = np.array(powers)
    mean = powers.mean(axis=0)
    if len(powers) > 1:
        se = powers.std(axis=0, ddof=1) / math.sqrt(len(powers))
    else:
        se = np.zeros_like(mean)
    write_csv(out / "runs.csv", ["run", "tau_n", "exceeded", "iterations", "converged", "final_delta"],
              runs)
    write_csv(out / "summary.csv", ["t", "mean_norm_p", "stderr"],
              [(t, m, s) for t, m, s in zip(times, mean, se)])
    if v["plot"]:
        emit_plot_script(out, cfg.subcommand)
    print(f"wrote {len(runs)} run(s) to {out}")
    return EXIT_OK


COMMANDS = {
    "ml-eval": cmd_ml_eval,
    "check-params": cmd_check_params,
    "kernel-norms": cmd_kernel_norms,
    "verify-isometry": cmd_verify_isometry,
    "simulate": cmd_simulate,
}


def run(cfg: RunConfig) -> int:
    """Dispatch one parsed configuration; returns the exit code."""
    try:
        return COMMANDS[cfg.subcommand](cfg)
    except InadmissibleParams as exc:
        print(exc.report.table() if exc.report is not None else str(exc))
        print("fracspde: parameters are not admissible (use override = true to force)",
              file=sys.stderr)
        return EXIT_REFUSED
    except (FracSPDEError, ArithmeticError, ValueError) as exc:
        print(f"fracspde: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except UsageError as exc:
        print(f"fracspde: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
