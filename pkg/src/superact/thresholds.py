"""Analytic threshold constants and bisection-based threshold discovery.

Each certifiable property of the noisy GHZ / noisy W family is reduced to a
margin function of the noise parameter p that is negative where the
property is absent and positive where it is present:

- GME margins are the (unclipped) inner arguments of the X-shape
  concurrence, or the negated PPT-mixer optimum where the concurrence does
  not apply;
- SLE margins are the negated minimum eigenvalue after partial
  transposition, extremized over projection directions where needed.

Bisection on the sign of the margin then brackets the crossing.  Bisection
is used deliberately: the margins are cheap, monotone sign indicators near
each crossing, and the bracket provides a self-evident correctness
certificate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .certify import (
    QUANTIFIER_MIN_EIGENVALUE,
    gme_concurrence_arguments,
    min_eig_after_pt,
    sle_quantify,
)
from .distill import analytic_distilled_noisy_ghz, distill_cnot, localize
from .sdp import SolverConfig, ppt_mixer_witness
from .states import noisy_ghz, noisy_w

PROPERTY_GME = "GME"
PROPERTY_SLE = "SLE"
PROPERTY_GME_AFTER = "GME-after-distill"
PROPERTY_SLE_AFTER = "SLE-after-distill"
PROPERTY_W_GME = "W-GME"
PROPERTY_W_GME_AFTER = "W-GME-after-distill"
PROPERTY_W_SLE = "W-SLE"

CLOSED_FORM_TOL = 1e-6
SDP_BACKED_TOL = 1e-3

DEFAULT_RANGES: dict[str, tuple[float, float]] = {
    PROPERTY_GME: (0.3, 0.6),
    PROPERTY_SLE: (0.2, 0.5),
    PROPERTY_GME_AFTER: (0.2, 0.4),
    PROPERTY_SLE_AFTER: (0.2, 0.35),
    PROPERTY_W_GME: (0.4, 0.6),
    PROPERTY_W_GME_AFTER: (0.45, 0.6),
    PROPERTY_W_SLE: (0.15, 0.45),
}

_SDP_BACKED = frozenset({PROPERTY_W_GME, PROPERTY_W_GME_AFTER})


@dataclass(frozen=True)
class ThresholdReport:
    """Bracketed sign change of a property's certifying margin."""

    property_name: str
    crossing_p: float
    bracket_width: float
    evaluations: int


@dataclass(frozen=True)
class ThresholdConstant:
    value: float
    provenance: str


def _margin_gme(p: float) -> float:
    return float(gme_concurrence_arguments(noisy_ghz(p)).max())


def _margin_gme_after(p: float) -> float:
    return float(gme_concurrence_arguments(analytic_distilled_noisy_ghz(p)).max())


def _margin_sle(p: float) -> float:
    return -sle_quantify(noisy_ghz(p),
                         quantifier=QUANTIFIER_MIN_EIGENVALUE).value


def _margin_sle_after(p: float) -> float:
    return -sle_quantify(analytic_distilled_noisy_ghz(p),
                         quantifier=QUANTIFIER_MIN_EIGENVALUE).value


def _margin_w_sle(p: float) -> float:
    # The optimal localization for the noisy W state is a computational-basis
    # measurement post-selected on zero, so the margin uses that closed-form
    # branch directly.
    state, _ = localize(noisy_w(p), 2, "computational", 0)
    return -min_eig_after_pt(state, (1,))


def _margin_w_gme(p: float, config: SolverConfig | None) -> float:
    return -ppt_mixer_witness(noisy_w(p), config).optimal_value


def _margin_w_gme_after(p: float, config: SolverConfig | None) -> float:
    state = distill_cnot(noisy_w(p), noisy_w(p)).state
    return -ppt_mixer_witness(state, config).optimal_value


def certifying_margin(property_name: str,
                      solver_config: SolverConfig | None = None
                      ) -> Callable[[float], float]:
    """Margin function of p: positive iff the property is present."""
    simple = {
        PROPERTY_GME: _margin_gme,
        PROPERTY_SLE: _margin_sle,
        PROPERTY_GME_AFTER: _margin_gme_after,
        PROPERTY_SLE_AFTER: _margin_sle_after,
        PROPERTY_W_SLE: _margin_w_sle,
    }
    if property_name in simple:
        return simple[property_name]
    if property_name == PROPERTY_W_GME:
        return lambda p: _margin_w_gme(p, solver_config)
    if property_name == PROPERTY_W_GME_AFTER:
        return lambda p: _margin_w_gme_after(p, solver_config)
    raise ValueError(f"unknown property {property_name!r}")


def default_tolerance(property_name: str) -> float:
    return SDP_BACKED_TOL if property_name in _SDP_BACKED else CLOSED_FORM_TOL


def find_threshold(property_name: str,
                   p_range: tuple[float, float] | None = None,
                   tolerance: float | None = None,
                   solver_config: SolverConfig | None = None) -> ThresholdReport:
    """Bisect the certifying margin of a property to a sign-change bracket.

    ``tolerance`` bounds the half-width of the final bracket; it defaults to
    1e-6 for closed-form margins and 1e-3 for SDP-backed ones.
    """
    if property_name not in DEFAULT_RANGES:
        raise ValueError(f"unknown property {property_name!r}")
    lo, hi = p_range if p_range is not None else DEFAULT_RANGES[property_name]
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"invalid range ({lo}, {hi})")
    tol = tolerance if tolerance is not None else default_tolerance(property_name)
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    margin = certifying_margin(property_name, solver_config)

    m_lo, m_hi = margin(lo), margin(hi)
    evaluations = 2
    if m_lo == 0.0 or m_hi == 0.0 or (m_lo > 0.0) == (m_hi > 0.0):
        raise ValueError(
            f"{property_name}: margin does not change sign on [{lo}, {hi}] "
            f"(values {m_lo:.3e}, {m_hi:.3e})")
    while (hi - lo) / 2.0 > tol:
        mid = 0.5 * (lo + hi)
        m_mid = margin(mid)
        evaluations += 1
        if m_mid == 0.0:
            # Exact zero: shrink symmetrically around it.
            half = min(mid - lo, hi - mid, tol)
            lo, hi = mid - half, mid + half
            break
        if (m_mid > 0.0) == (m_hi > 0.0):
            hi, m_hi = mid, m_mid
        else:
            lo, m_lo = mid, m_mid
    return ThresholdReport(
        property_name=property_name,
        crossing_p=0.5 * (lo + hi),
        bracket_width=0.5 * (hi - lo),
        evaluations=evaluations,
    )


def analytic_constants() -> dict[str, ThresholdConstant]:
    """Closed-form threshold values, plus the cited infinite-copy constant."""
    closed = "closed-form"
    return {
        PROPERTY_GME: ThresholdConstant(3.0 / 7.0, closed),
        PROPERTY_SLE: ThresholdConstant(1.0 / 3.0, closed),
        PROPERTY_GME_AFTER: ThresholdConstant((4.0 * np.sqrt(3.0) - 3.0) / 13.0,
                                              closed),
        PROPERTY_SLE_AFTER: ThresholdConstant((2.0 * np.sqrt(2.0) - 1.0) / 7.0,
                                              closed),
        PROPERTY_W_SLE: ThresholdConstant(3.0 / 11.0, closed),
        "GME-infinite-copy": ThresholdConstant(0.2, "cited-not-computed"),
    }


def fidelity_curves(p_values) -> np.ndarray:
    """Columns (p, F_initial, F1, F2) of the distillation fidelity curves.

    F_initial is the GHZ fidelity of the noisy GHZ state, F1 of its
    distilled output, and F2 the EPR fidelity after distilling and then
    localizing with an X measurement.
    """
    p = np.asarray(p_values, dtype=float).reshape(-1)
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("p values must lie in [0, 1]")
    denom = 3.0 * p * p + 1.0
    f_initial = (1.0 + 7.0 * p) / 8.0
    f1 = (25.0 * p * p + 6.0 * p + 1.0) / (8.0 * denom)
    f2 = (13.0 * p * p + 2.0 * p + 1.0) / (4.0 * denom)
    return np.column_stack([p, f_initial, f1, f2])


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def fidelity_curves_csv(p_values) -> str:
    rows = ["p,F_initial,F1,F2"]
    for row in fidelity_curves(p_values):
        rows.append(",".join(_fmt(v) for v in row))
    return "\n".join(rows) + "\n"


def threshold_reports_csv(reports) -> str:
    rows = ["property,crossing_p,bracket_width,evaluations"]
    for r in reports:
        rows.append(f"{r.property_name},{_fmt(r.crossing_p)},"
                    f"{_fmt(r.bracket_width)},{r.evaluations}")
    return "\n".join(rows) + "\n"
