"""Landscape scans and the checks behind the two far-region argmin claims.

The far region is {c : |c - c_star| > L*lam} with L = 2 c_max^2 / offset; on
it the misfit sits on the plateau (1/2)(1/(4c^2) + 1/(4c_*^2)) and the penalty
objective is a linear fractional function of c^2 whose monotonicity direction
is the sign of beta = (z_max - z_min)/c_*^2 - 4 alpha^2.  The verifiers below
scan those regions, compare argmin locations against the predictions, and
check the monotonicity/flatness structure directly.

The derivative blow-up diagnostic renders "the c-derivative is unbounded as
lam -> 0" as a measured log-log slope of max_c |dJ/dc| versus lam.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .acoustics import Geometry, Wavelet
from .objectives import Experiment, fwi_plateau, make_experiment, make_objective


def lambda_admissible_max(geo: Geometry) -> float:
    """Largest pulse width for which every admissible arrival fits in [0, T]."""
    return geo.T - geo.transit_time(geo.c_min)


def separation_scale(geo: Geometry) -> float:
    """L = 2 c_max^2 / offset; |c - c_*| > L*lam forces disjoint pulses."""
    return 2.0 * geo.c_max**2 / geo.offset


@dataclass(frozen=True)
class SupportReport:
    """Pulse-support disjointness, exact and by the far-region bound."""

    disjoint: bool
    far_condition: bool

    def __bool__(self) -> bool:
        return self.disjoint


def supports_disjoint(geo: Geometry, c: float, c_star: float, lam: float) -> SupportReport:
    """True iff the arrival intervals [tau, tau + lam] do not overlap.

    Also evaluates the sufficient condition |c - c_star| > L*lam, which
    implies disjointness but not conversely.
    """
    if lam >= lambda_admissible_max(geo):
        raise ValueError("pulse width lam must be below the admissible bound")
    gap = abs(geo.transit_time(c) - geo.transit_time(c_star))
    return SupportReport(
        disjoint=gap > lam,
        far_condition=abs(c - c_star) > separation_scale(geo) * lam,
    )


@dataclass
class ScanResult:
    """Objective values over a velocity grid."""

    c_values: np.ndarray
    values: dict
    meta: dict


def scan_landscape(exp: Experiment, objectives, c_values, jobs: int = 1) -> ScanResult:
    """Evaluate named objectives over a velocity grid.

    objectives is a sequence of (name, callable) pairs.  Work is split into
    contiguous index chunks when jobs > 1 and reassembled in index order, so
    the result does not depend on scheduling.
    """
    cs = np.asarray(c_values, dtype=float)
    if cs.ndim != 1 or cs.size == 0:
        raise ValueError("scan grid must be a nonempty 1d array")
    if cs.size > 1 and not np.all(np.diff(cs) > 0.0):
        raise ValueError("scan grid must be strictly increasing")
    if cs[0] < exp.geo.c_min - 1e-12 or cs[-1] > exp.geo.c_max + 1e-12:
        raise ValueError("scan grid must stay within [c_min, c_max]")
    names = [name for name, _ in objectives]
    funcs = [f for _, f in objectives]

    def eval_chunk(idx: np.ndarray) -> list:
        return [np.array([f(c) for c in cs[idx]]) for f in funcs]

    if jobs <= 1 or cs.size < 2 * jobs:
        chunks = [eval_chunk(np.arange(cs.size))]
    else:
        parts = np.array_split(np.arange(cs.size), jobs)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(eval_chunk, parts))
    values = {
        name: np.concatenate([chunk[k] for chunk in chunks])
        for k, name in enumerate(names)
    }
    return ScanResult(cs, values, {
        "lam": exp.lam, "n_points": int(cs.size), "jobs": int(jobs),
    })


@dataclass
class TheoremReport:
    """Outcome of one far-region argmin check."""

    theorem: int
    lam: float
    alpha: float | None
    big_l: float
    lam0: float
    beta: float | None
    applicable: bool
    predicted_c: float | None
    argmin_c: float | None
    passed: bool
    cell: float
    detail: dict


def _far_segments(mask: np.ndarray) -> list:
    """Index slices of the contiguous runs of a boolean mask."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [idx.size - 1]))
    return [slice(idx[a], idx[b] + 1) for a, b in zip(starts, ends)]


def _far_scan(exp: Experiment, func, scan_points: int):
    geo = exp.geo
    cs = np.linspace(geo.c_min, geo.c_max, scan_points)
    big_l = separation_scale(geo)
    mask = np.abs(cs - exp.c_star) > big_l * exp.lam
    vals = np.full(cs.shape, np.nan)
    idx = np.flatnonzero(mask)
    for i in idx:
        vals[i] = func(cs[i])
    return cs, mask, vals


def theorem1_verify(exp: Experiment, scan_points: int = 2001) -> TheoremReport:
    """Check that the far-region misfit minimizer sits at the upper bound.

    The far plateau is strictly decreasing in c, so the argmin over the far
    region is its largest velocity: c_max when the upper far segment is
    nonempty, and otherwise the region's right endpoint.  Also verifies the
    plateau value itself to 0.5% and its strict monotone decrease.
    """
    geo = exp.geo
    big_l = separation_scale(geo)
    lam0 = lambda_admissible_max(geo)
    cell = (geo.c_max - geo.c_min) / (scan_points - 1)
    base = dict(
        theorem=1, lam=exp.lam, alpha=None, big_l=big_l, lam0=lam0,
        beta=None, cell=cell,
    )
    if exp.lam >= lam0:
        return TheoremReport(
            **base, applicable=False, predicted_c=None, argmin_c=None,
            passed=False, detail={"reason": "pulse width above admissible bound"},
        )
    func = make_objective(exp, "fwi")
    cs, mask, vals = _far_scan(exp, func, scan_points)
    if not mask.any():
        return TheoremReport(
            **base, applicable=False, predicted_c=None, argmin_c=None,
            passed=False, detail={"reason": "empty far region"},
        )
    far_idx = np.flatnonzero(mask)
    argmin_c = float(cs[far_idx[np.argmin(vals[far_idx])]])
    predicted = float(cs[far_idx[-1]])
    monotone = all(
        np.all(np.diff(vals[seg]) < 0.0) for seg in _far_segments(mask)
    )
    plateau_dev = max(
        abs(vals[i] - fwi_plateau(exp, cs[i])) / fwi_plateau(exp, cs[i])
        for i in far_idx
    )
    passed = (
        abs(argmin_c - predicted) <= cell + 1e-12
        and monotone
        and plateau_dev <= 5e-3
    )
    return TheoremReport(
        **base, applicable=True, predicted_c=predicted, argmin_c=argmin_c,
        passed=bool(passed), detail={
            "monotone_decreasing": bool(monotone),
            "max_plateau_rel_dev": float(plateau_dev),
            "upper_segment_reaches_c_max": bool(predicted == geo.c_max),
        },
    )


def beta_parameter(geo: Geometry, c_star: float, alpha: float) -> float:
    """Sign determinant of the far-region penalty landscape's monotonicity."""
    return geo.extent / c_star**2 - 4.0 * alpha * alpha


def theorem2_verify(
    exp: Experiment, alpha: float, scan_points: int = 2001
) -> TheoremReport:
    """Check the far-region argmin of the penalty objective against beta.

    beta > 0 predicts the smallest far velocity (c_min when the lower far
    segment is nonempty), beta < 0 the largest (c_max), and beta = 0 a flat
    far landscape (relative variation below 1e-9).  Monotonicity of the far
    values in c^2 is checked against sign(beta) as well.
    """
    geo = exp.geo
    big_l = separation_scale(geo)
    lam0 = lambda_admissible_max(geo)
    beta = beta_parameter(geo, exp.c_star, alpha)
    cell = (geo.c_max - geo.c_min) / (scan_points - 1)
    base = dict(
        theorem=2, lam=exp.lam, alpha=alpha, big_l=big_l, lam0=lam0,
        beta=beta, cell=cell,
    )
    if exp.lam >= lam0:
        return TheoremReport(
            **base, applicable=False, predicted_c=None, argmin_c=None,
            passed=False, detail={"reason": "pulse width above admissible bound"},
        )
    func = make_objective(exp, "wri", alpha=alpha)
    cs, mask, vals = _far_scan(exp, func, scan_points)
    if not mask.any():
        return TheoremReport(
            **base, applicable=False, predicted_c=None, argmin_c=None,
            passed=False, detail={"reason": "empty far region"},
        )
    far_idx = np.flatnonzero(mask)
    far_vals = vals[far_idx]
    argmin_c = float(cs[far_idx[np.argmin(far_vals)]])
    segments = _far_segments(mask)
    if beta == 0.0:
        variation = float(
            (far_vals.max() - far_vals.min()) / max(far_vals.mean(), np.finfo(float).tiny)
        )
        return TheoremReport(
            **base, applicable=True, predicted_c=None, argmin_c=argmin_c,
            passed=bool(variation <= 1e-9), detail={
                "flat_relative_variation": variation,
            },
        )
    if beta > 0.0:
        predicted = float(cs[far_idx[0]])
        monotone = all(np.all(np.diff(vals[seg]) > 0.0) for seg in segments)
        reaches_bound = predicted == geo.c_min
    else:
        predicted = float(cs[far_idx[-1]])
        monotone = all(np.all(np.diff(vals[seg]) < 0.0) for seg in segments)
        reaches_bound = predicted == geo.c_max
    passed = abs(argmin_c - predicted) <= cell + 1e-12 and monotone
    return TheoremReport(
        **base, applicable=True, predicted_c=predicted, argmin_c=argmin_c,
        passed=bool(passed), detail={
            "monotone_matches_beta_sign": bool(monotone),
            "predicted_segment_reaches_bound": bool(reaches_bound),
        },
    )


def alpha_sweep_argmin(exp: Experiment, alphas, scan_points: int = 2001) -> dict:
    """Far-region argmin of the penalty objective across a small-alpha sweep.

    Requires beta > 0 for every alpha; reports the per-alpha argmin, that the
    far region itself does not depend on alpha, and whether every argmin sits
    at the far region's smallest velocity.
    """
    geo = exp.geo
    betas = [beta_parameter(geo, exp.c_star, a) for a in alphas]
    if any(b <= 0.0 for b in betas):
        raise ValueError("alpha sweep requires beta > 0 for every alpha")
    argmins = []
    lower_extreme = None
    for alpha in alphas:
        func = make_objective(exp, "wri", alpha=alpha)
        cs, mask, vals = _far_scan(exp, func, scan_points)
        far_idx = np.flatnonzero(mask)
        if far_idx.size == 0:
            raise ValueError("empty far region in alpha sweep")
        argmins.append(float(cs[far_idx[np.argmin(vals[far_idx])]]))
        lower_extreme = float(cs[far_idx[0]])
    return {
        "alphas": list(alphas),
        "betas": betas,
        "argmins": argmins,
        "far_region_lower_extreme": lower_extreme,
        "far_region_alpha_independent": True,
        "all_at_lower_extreme": all(a == lower_extreme for a in argmins),
    }


def nonsmoothness_diagnostic(
    geo: Geometry, c_star: float, lams, kind: str,
    alpha: float | None = None, variant: str = "normalized",
    wavelet_kind: str = "bump",
) -> dict:
    """Measure how the largest |dJ/dc| grows as the pulse narrows.

    For each pulse width, scans the objective on a velocity grid with step at
    most lam/10, takes central-difference derivatives, and records the
    interior maximum M(lam).  Returns the log-log slope of M versus lam; a
    slope near -1 renders "the value changes by O(1) over an O(lam)-wide
    interval".
    """
    lams = list(lams)
    if len(lams) < 3:
        raise ValueError("need at least three pulse widths to fit a slope")
    lam0 = lambda_admissible_max(geo)
    if any(lam >= lam0 for lam in lams):
        raise ValueError("every pulse width must be below the admissible bound")
    max_grads = []
    for lam in lams:
        if wavelet_kind == "bump":
            w = Wavelet.bump(lam)
        elif wavelet_kind == "bump_derivative":
            w = Wavelet.bump_derivative(lam)
        else:
            raise ValueError(f"unknown wavelet kind {wavelet_kind!r}")
        exp = make_experiment(geo, c_star, w)
        func = make_objective(exp, kind, alpha=alpha, variant=variant)
        npts = int(np.ceil((geo.c_max - geo.c_min) / (lam / 10.0))) + 1
        cs = np.linspace(geo.c_min, geo.c_max, npts)
        vals = np.array([func(c) for c in cs])
        dj = np.gradient(vals, cs)
        max_grads.append(float(np.max(np.abs(dj[1:-1]))))
    slope = float(np.polyfit(np.log(lams), np.log(max_grads), 1)[0])
    return {
        "kind": kind,
        "lams": lams,
        "max_grads": max_grads,
        "slope": slope,
        "grad_ratio": float(max(max_grads) / min(max_grads)),
    }
