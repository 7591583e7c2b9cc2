"""Admissibility of (alpha, beta, gamma, d, p) for the existence results.

White noise (Gaussian plus jumps, L^2 theory):
    2 alpha + min{(alpha/beta)(2 gamma - 1), -2} > d
Pure jump noise, p in [1, 2]:
    p alpha + min{(alpha/beta)(p gamma - p + 1), -p} > d (p - 1)

Both are strict. The global variants use the same inequalities; they only
strengthen the Lipschitz hypothesis on f and q.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .params import ModelParams

REGIMES = ("white", "jump", "global-white", "global-jump")


@dataclass(frozen=True)
class ExponentRow:
    name: str
    value: float
    needs: str
    ok: bool


@dataclass(frozen=True)
class AdmissibilityReport:
    regime: str
    satisfied: bool
    lhs: float
    rhs: float
    margin: float
    exponent_table: list[ExponentRow] = field(default_factory=list)

    def table(self) -> str:
        status = "satisfied" if self.satisfied else "NOT satisfied"
        lines = [f"regime {self.regime}: {status}",
                 f"  lhs = {self.lhs:.17g}", f"  rhs = {self.rhs:.17g}",
                 f"  margin = {self.margin:.17g}"]
        width = max(len(r.name) for r in self.exponent_table) if self.exponent_table else 0
        for r in self.exponent_table:
            flag = "ok" if r.ok else "FAIL"
            lines.append(f"  {r.name:<{width}}  {r.value:+.6f}  needs {r.needs}  {flag}")
        return "\n".join(lines)


def _row(name: str, value: float) -> ExponentRow:
    # every exponent in the proofs must keep t^e integrable at 0
    return ExponentRow(name, float(value), "> -1", bool(value > -1.0))


def white_lhs(params: ModelParams) -> float:
    a, b, g = params.alpha, params.beta, params.gamma
    return 2.0 * a + min(a / b * (2.0 * g - 1.0), -2.0)


def jump_lhs(params: ModelParams, p: float | None = None) -> float:
    a, b, g = params.alpha, params.beta, params.gamma
    p = params.p if p is None else p
    return p * a + min(a / b * (p * g - p + 1.0), -p)


def _gradient_row(params: ModelParams) -> ExponentRow:
    a, b, g = params.alpha, params.beta, params.gamma
    return _row("gradient-kernel exponent", b + g - 1.0 - b / a)


def check_white_noise(params: ModelParams) -> AdmissibilityReport:
    """Inequality of the white-noise (L^2) existence result."""
    a, b, g, d = params.alpha, params.beta, params.gamma, params.dim
    lhs = white_lhs(params)
    rhs = float(d)
    rows = [
        _row("Picard-time exponent", b + g - 1.0),
        _gradient_row(params),
        _row("Ito-isometry exponent", 2.0 * b + 2.0 * g - 2.0 - b * d / a),
    ]
    margin = lhs - rhs
    return AdmissibilityReport("white", bool(margin > 0), lhs, rhs, margin, rows)


def check_pure_jump(params: ModelParams) -> AdmissibilityReport:
    """Inequality of the pure-jump L^p existence result, p = params.p."""
    a, b, g, d, p = params.alpha, params.beta, params.gamma, params.dim, params.p
    lhs = jump_lhs(params)
    rhs = d * (p - 1.0)
    rows = [
        _row("Picard-time exponent", b + g - 1.0),
        _gradient_row(params),
        _row("jump-moment exponent", p * (b + g - 1.0) + (b * d / a) * (1.0 - p)),
    ]
    margin = lhs - rhs
    return AdmissibilityReport("jump", bool(margin > 0), lhs, rhs, margin, rows)


def check_global(params: ModelParams, regime: str) -> AdmissibilityReport:
    """Global-solution variant: same inequality, recorded under its own regime."""
    if regime == "white":
        rep = check_white_noise(params)
    elif regime == "jump":
        rep = check_pure_jump(params)
    else:
        raise ValueError(f"regime must be 'white' or 'jump', got {regime!r}")
    return AdmissibilityReport("global-" + regime, rep.satisfied, rep.lhs, rep.rhs,
                               rep.margin, rep.exponent_table)


def check(params: ModelParams, regime: str) -> AdmissibilityReport:
    """Dispatch on a regime name from REGIMES."""
    if regime == "white":
        return check_white_noise(params)
    if regime == "jump":
        return check_pure_jump(params)
    if regime.startswith("global-"):
        return check_global(params, regime[len("global-"):])
    raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
