"""Locate the finite-graph critical point from chi(p) = lambda V^(1/3).

``find_pc`` runs a confidence-interval bisection: chi is monotone in p, so
the bracket is halved only when the Monte Carlo CI at the midpoint excludes
the target.  Replicates at a midpoint ramp geometrically until the CI
decides; an undecidable midpoint (the usual stop deep inside the critical
window, where chi-hat sits within noise of the target) or an exhausted
budget ends the search with the current bracket, flagged.

Every chi evaluation consumes a fresh block of replicate indices from the
keyed stream, so the search is a deterministic function of
(spec, lambda, tolerance, budget, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import Estimate, TailCurve, _mean_se, collect_replicates, default_k_grid
from .graphs import GraphSpec, window_scale


class TargetUnreachable(ValueError):
    pass


@dataclass(frozen=True)
class CriticalPoint:
    spec: GraphSpec
    p_hat: float
    ci: tuple[float, float]
    lam: float
    target_chi: float
    budget_used: int
    flags: tuple[str, ...] = ()

    @property
    def converged(self) -> bool:
        return not any(
            f in self.flags for f in ("budget_exhausted", "midpoint_unresolved")
        )


def find_pc(
    spec: GraphSpec,
    lam: float = 1.0,
    tolerance: float | None = None,
    budget: int = 20000,
    seed: int = 0,
    z: float = 3.0,
    initial_replicates: int = 32,
    replicate_cap: int = 4096,
    workers: int = 1,
) -> CriticalPoint:
    """Solve chi(p) = lam * V^(1/3) by CI-driven bisection on p.

    ``tolerance`` defaults to an eighth of the critical-window width
    1/(Omega V^(1/3)).  ``budget`` caps the total replicate count across all
    midpoint evaluations; ``replicate_cap`` caps one midpoint.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    V = spec.vertex_count
    target = lam * V ** (1.0 / 3.0)
    if tolerance is None:
        tolerance = window_scale(spec) / 8.0
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if budget < 2 * initial_replicates:
        raise ValueError("budget below the minimum replicate schedule")
    if target <= 1.0:
        return CriticalPoint(
            spec, 0.0, (0.0, 0.0), lam, target, 0, ("target_at_or_below_one",)
        )
    if target > V:
        raise TargetUnreachable(
            f"target chi {target:.3g} exceeds the vertex count {V}"
        )

    state = {"used": 0, "cursor": 0}

    def classify(p: float) -> str:
        """CI verdict at p: 'below'/'above' target, or 'undecided' at the caps."""
        taken = 0
        take = initial_replicates
        samples: list[np.ndarray] = []
        while True:
            take = min(take, budget - state["used"], replicate_cap - taken)
            if take <= 0:
                return "undecided"
            batch = collect_replicates(
                spec, p, seed, take, rep0=state["cursor"], workers=workers
            )
            state["cursor"] += take
            state["used"] += take
            taken += take
            samples.append(batch.chi)
            est = _mean_se(np.concatenate(samples))
            if est.value + z * est.std_error < target:
                return "below"
            if est.value - z * est.std_error > target:
                return "above"
            take = taken  # geometric ramp

    def stop_flag() -> tuple[str, ...]:
        return ("budget_exhausted" if state["used"] >= budget else "midpoint_unresolved",)

    # chi(p) <= 1/(1 - Omega p) by branching domination, so chi < target is
    # certain below p_lower; probe upward from there to bracket the root.
    omega = 1.0 / (window_scale(spec) * V ** (1.0 / 3.0))
    lo = (1.0 - 1.0 / target) / omega
    hi = None
    probe = min(1.0, 1.5 * lo) if lo > 0 else min(1.0, tolerance * 8)
    while hi is None:
        if probe >= 1.0:
            hi = 1.0  # chi(1) = V >= target for a connected graph
            break
        verdict = classify(probe)
        if verdict == "below":
            lo = probe
            probe = min(1.0, 1.5 * probe)
        elif verdict == "above":
            hi = probe
        else:
            return CriticalPoint(
                spec, probe, (lo, min(1.0, 1.5 * probe)), lam, target,
                state["used"], stop_flag(),
            )

    flags: tuple[str, ...] = ()
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        verdict = classify(mid)
        if verdict == "below":
            lo = mid
        elif verdict == "above":
            hi = mid
        else:
            flags = stop_flag()
            break
    return CriticalPoint(
        spec, 0.5 * (lo + hi), (lo, hi), lam, target, state["used"], flags
    )


@dataclass(frozen=True)
class WindowSweep:
    spec: GraphSpec
    p_grid: np.ndarray
    chi: list[Estimate]
    e_cmax: list[Estimate]
    tails: list[TailCurve]
    flags: tuple[str, ...] = ()


def window_sweep(
    spec: GraphSpec,
    center: float,
    half_width_multiples: float,
    points: int,
    replicates: int,
    seed: int,
    ks=None,
    workers: int = 1,
) -> WindowSweep:
    """chi, E|C_max|, and tails on an even p-grid across the critical window.

    The grid spans center +- half_width_multiples / (Omega V^(1/3)), clipped
    to [0, 1] (flagged).  All grid points replay the same replicate indices
    (common random numbers), so comparisons across p are monotone-coupled.
    """
    if points < 3:
        raise ValueError("points must be >= 3")
    if half_width_multiples < 0:
        raise ValueError("half_width_multiples must be >= 0")
    half = half_width_multiples * window_scale(spec)
    grid = np.linspace(center - half, center + half, points)
    flags: tuple[str, ...] = ()
    if grid[0] < 0.0 or grid[-1] > 1.0:
        grid = np.clip(grid, 0.0, 1.0)
        flags = ("grid_clipped",)
    if ks is None:
        ks = default_k_grid(spec.vertex_count)
    ks = np.asarray(ks, dtype=np.int64)
    V = spec.vertex_count
    chi, e_cmax, tails = [], [], []
    for p in grid:
        batch = collect_replicates(spec, float(p), seed, replicates, ks=ks, workers=workers)
        chi.append(_mean_se(batch.chi))
        e_cmax.append(_mean_se(batch.cmax.astype(np.float64)))
        samples = batch.z.astype(np.float64) / V
        tails.append(
            TailCurve(ks, [_mean_se(samples[:, j]) for j in range(ks.shape[0])], samples)
        )
    return WindowSweep(spec, grid, chi, e_cmax, tails, flags)


def pc_scaling_table(points: list[CriticalPoint]) -> list[dict]:
    """Pairwise |p_hat(r1) - p_hat(r2)| against the window scale.

    Reports the fitted constant c with |delta p| = c / (Omega max(V1,V2)^(1/3))
    for each pair; diagnostic only, nothing is asserted about c.
    """
    rows = []
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            a, b = points[i], points[j]
            vmax_spec = a.spec if a.spec.vertex_count >= b.spec.vertex_count else b.spec
            scale = window_scale(vmax_spec)
            delta = abs(a.p_hat - b.p_hat)
            rows.append(
                {
                    "spec_a": a.spec.to_dict(),
                    "spec_b": b.spec.to_dict(),
                    "delta_p": delta,
                    "window_scale": scale,
                    "fitted_c": delta / scale,
                }
            )
    return rows
