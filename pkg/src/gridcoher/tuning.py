"""Communication-gain tuning for DAPI control.

For uniform parameters the synchronization norm decomposes over network
modes, and each mode's added damping f depends on the communication
gain gamma through a unimodal scalar function.  This module provides
that per-mode function, the exact optimizer for complete graphs, and a
bracketed golden-section optimizer for arbitrary connected graphs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .controllers import Dapi
from .errors import ParameterError
from .netmodel import LaplacianSpectrum, complete_graph_spectrum
from .perf import sync_norm_closed_form

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0    # golden-section reduction ratio
GRID_SAFEGUARD_POINTS = 257               # coarse bracket scan backing up the search
DEFAULT_TOL = 1e-8                        # gamma resolution of the search

REGIME_OVERDAMPED = "all_overdamped"
REGIME_MIXED = "mixed"
REGIME_UNDERDAMPED = "all_underdamped"


def _check_mode_args(gamma, q, m, d, lam):
    if lam <= 0:
        raise ParameterError(f"mode functions are defined for lambda > 0, got {lam}")
    if q <= 0 or m <= 0 or d <= 0:
        raise ParameterError(f"need q, m, d > 0; got q={q}, m={m}, d={d}")
    if gamma < 0:
        raise ParameterError(f"communication gain gamma must be >= 0, got {gamma}")


def f_mode(gamma: float, q: float, m: float, d: float, lam: float) -> float:
    """Added damping contributed by the integral layer to one mode.

    At gamma = 0 this reduces to d/q for every mode; as gamma grows it
    decays to zero, recovering droop/CAPI behavior.
    """
    _check_mode_args(gamma, q, m, d, lam)
    return (d * q + gamma * lam * m) / (gamma * d * q + q * q + gamma * gamma * lam * m)


def g_mode(gamma: float, q: float, m: float, d: float, lam: float) -> float:
    """Reciprocal of f_mode in the form used for optimizing gamma."""
    _check_mode_args(gamma, q, m, d, lam)
    return gamma + q * q / (d * q + m * lam * gamma)


@dataclass(frozen=True)
class GammaOptimum:
    """Result of a communication-gain optimization."""

    gamma_star: float
    bracket: tuple[float, float]
    regime: str
    achieved_norm: float


def optimal_gamma_complete(m: float, d: float, q: float, b: float, n: int) -> GammaOptimum:
    """Exact optimal communication gain on the uniform complete graph.

    All coupled modes share the eigenvalue b * n, so a single scalar
    formula gives the optimum: zero when damping dominates
    (d >= sqrt(m b n)), otherwise (sqrt(m b n) - d) q / (m b n).
    """
    if m <= 0 or d <= 0 or q <= 0 or b <= 0:
        raise ParameterError(f"need m, d, q, b > 0; got m={m}, d={d}, q={q}, b={b}")
    if n < 2:
        raise ParameterError(f"need at least 2 buses, got n={n}")
    lam = b * n
    if d * d >= m * lam:
        gamma_star = 0.0
        regime = REGIME_OVERDAMPED
    else:
        gamma_star = (math.sqrt(m * lam) * q - d * q) / (m * lam)
        regime = REGIME_UNDERDAMPED
    achieved = sync_norm_closed_form(
        complete_graph_spectrum(n, b), m, d, Dapi(q=q, gamma=gamma_star)
    ).value
    return GammaOptimum(
        gamma_star=gamma_star,
        bracket=(gamma_star, gamma_star),
        regime=regime,
        achieved_norm=achieved,
    )


def _golden_section(fn, lo, hi, tol):
    """Minimize a unimodal scalar function on [lo, hi] to width tol."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    e = a + INV_PHI * (b - a)
    fc, fe = fn(c), fn(e)
    while (b - a) > tol:
        if fc < fe:
            b, e, fe = e, c, fc
            c = b - INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, e, fe
            e = a + INV_PHI * (b - a)
            fe = fn(e)
    return 0.5 * (a + b)


def optimal_gamma_general(
    spec: LaplacianSpectrum, m: float, d: float, q: float, tol: float = DEFAULT_TOL
) -> GammaOptimum:
    """Optimal communication gain for an arbitrary connected graph.

    Classifies the damping regime from the mode frequencies, brackets
    the optimum with the per-mode optimal gains, and minimizes the
    closed-form norm by golden section.  A coarse grid scan over the
    bracket backs up the line search; if the scan finds a better point
    the search is repeated around it and the better value wins.

    Returns
    -------
    GammaOptimum
        ``regime`` is all_overdamped (gamma_star = 0 exactly), mixed, or
        all_underdamped; ``bracket`` is the searched interval.
    """
    if m <= 0 or d <= 0 or q <= 0:
        raise ParameterError(f"need m, d, q > 0; got m={m}, d={d}, q={q}")
    if tol <= 0:
        raise ParameterError(f"tolerance must be positive, got {tol}")
    lam = spec.eigenvalues[1:]
    under = d * d < m * lam
    if not np.any(under):
        gamma_star = 0.0
        achieved = _norm_at(spec, m, d, q, gamma_star)
        return GammaOptimum(
            gamma_star=gamma_star,
            bracket=(0.0, 0.0),
            regime=REGIME_OVERDAMPED,
            achieved_norm=achieved,
        )
    cands = (np.sqrt(m * lam[under]) * q - d * q) / (m * lam[under])
    if np.all(under):
        lo, hi = float(np.min(cands)), float(np.max(cands))
        regime = REGIME_UNDERDAMPED
    else:
        lo, hi = 0.0, float(np.max(cands))
        regime = REGIME_MIXED

    def fn(g):
        return _norm_at(spec, m, d, q, g)

    if hi - lo <= tol:
        gamma_star = 0.5 * (lo + hi)
    else:
        gamma_star = _golden_section(fn, lo, hi, tol)
        grid = np.linspace(lo, hi, GRID_SAFEGUARD_POINTS)
        grid_vals = np.array([fn(g) for g in grid])
        k = int(np.argmin(grid_vals))
        if grid_vals[k] < fn(gamma_star):
            refined = _golden_section(
                fn, grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)], tol
            )
            gamma_star = min((gamma_star, refined, float(grid[k])), key=fn)
    gamma_star = min(max(gamma_star, lo), hi)
    gamma_star = min((gamma_star, lo, hi), key=fn)
    return GammaOptimum(
        gamma_star=gamma_star,
        bracket=(lo, hi),
        regime=regime,
        achieved_norm=fn(gamma_star),
    )


def _norm_at(spec, m, d, q, gamma):
    return sync_norm_closed_form(spec, m, d, Dapi(q=q, gamma=gamma)).value


def gamma_optimum_to_dict(opt: GammaOptimum) -> dict:
    return {
        "gamma_star": float(opt.gamma_star),
        "bracket": [float(opt.bracket[0]), float(opt.bracket[1])],
        "regime": opt.regime,
        "achieved_norm": float(opt.achieved_norm),
    }


def gamma_optimum_to_json(opt: GammaOptimum, path) -> None:
    """Write a GammaOptimum as JSON (gamma_star, bracket, regime, achieved_norm)."""
    with open(path, "w") as fh:
        json.dump(gamma_optimum_to_dict(opt), fh, indent=2)
        fh.write("\n")
