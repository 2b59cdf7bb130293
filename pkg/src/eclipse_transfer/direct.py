"""DIRECT (DIviding RECTangles) global minimization over a box.

Deterministic Lipschitzian search without a Lipschitz constant: the box is
normalized to the unit hypercube, and each iteration trisects every rectangle
that is potentially optimal for some rate-of-change constant K > 0.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

PENALTY = 1e30


@dataclass(frozen=True)
class SearchBox:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper) or not lower:
            raise ValueError("lower and upper must be non-empty and of equal length")
        for i, (lo, hi) in enumerate(zip(lower, upper)):
            if not lo < hi:
                raise ValueError(f"dimension {i}: lower {lo} must be below upper {hi}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lower)
        return lo + u * (np.asarray(self.upper) - lo)


@lru_cache(maxsize=None)
def _half_diagonal(levels: tuple[int, ...]) -> float:
    # keyed on sorted levels so congruent rectangles share one exact size
    return 0.5 * math.sqrt(sum(9.0 ** -k for k in levels))


@dataclass
class Rectangle:
    center: np.ndarray  # unit-cube coordinates
    side_thirds: np.ndarray  # side i has length 3**-side_thirds[i]
    f_center: float
    id: int

    def __post_init__(self):
        self.size = _half_diagonal(tuple(sorted(int(k) for k in self.side_thirds)))

    def set_thirds(self, thirds: np.ndarray) -> None:
        self.side_thirds = thirds
        self.__post_init__()

    @property
    def volume(self) -> float:
        return float(np.prod(3.0 ** -self.side_thirds.astype(float)))

    @property
    def longest_side(self) -> float:
        return 3.0 ** -int(self.side_thirds.min())


@dataclass(frozen=True)
class OptimizerReport:
    best_point: tuple[float, ...]
    best_value: float
    evaluations: int
    iterations: int
    history: tuple[tuple[int, float], ...]


def _safe_call(objective: Callable[[np.ndarray], float], x: np.ndarray) -> float:
    try:
        value = float(objective(x))
    except Exception as exc:  # penalize and keep searching
        log.debug("objective failed at %s: %s", x, exc)
        return PENALTY
    return value if math.isfinite(value) else PENALTY


def potentially_optimal(rects: Sequence[Rectangle], epsilon: float) -> list[Rectangle]:
    """Rectangles on the lower-right hull of (size, value) passing the epsilon test.

    The hull is built from the lowest value of each size class; every
    rectangle tied with that value is selected with it.  The result is ordered
    by creation id, which fixes the ids handed out during division.
    """
    by_size: dict[float, list[Rectangle]] = {}
    for r in rects:
        group = by_size.setdefault(r.size, [])
        if not group or r.f_center < group[0].f_center:
            by_size[r.size] = [r]
        elif r.f_center == group[0].f_center:
            group.append(r)
    sizes = sorted(by_size)
    fvals = [by_size[d][0].f_center for d in sizes]
    f_min = min(fvals)
    threshold = f_min - epsilon * abs(f_min)

    chosen = []
    for j, (dj, fj) in enumerate(zip(sizes, fvals)):
        k_low = max(((fj - fvals[i]) / (dj - sizes[i]) for i in range(j)), default=-math.inf)
        k_up = min(((fvals[i] - fj) / (sizes[i] - dj) for i in range(j + 1, len(sizes))),
                   default=math.inf)
        if k_low > k_up or k_up <= 0.0:
            continue
        if k_up == math.inf or fj - k_up * dj <= threshold:
            chosen.extend(by_size[dj])
    return sorted(chosen, key=lambda r: r.id)


def direct_minimize(
    objective: Callable[[np.ndarray], float],
    box: SearchBox,
    max_evals: int = 3000,
    epsilon: float = 1e-4,
    *,
    workers: int | None = None,
    callback: Callable[[int, list[Rectangle]], None] | None = None,
) -> OptimizerReport:
    """Minimize ``objective`` over ``box`` with at most ``max_evals`` calls.

    Objective failures (exceptions, non-finite values) score ``PENALTY``.
    With ``workers > 1`` the new centres of an iteration are evaluated on a
    thread pool; results are merged in creation order so the outcome does not
    depend on scheduling.  ``callback(iteration, rectangles)`` runs after the
    initial sample and after every iteration.
    """
    if max_evals < 1:
        raise ValueError("max_evals must be >= 1")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")

    pool = ThreadPoolExecutor(max_workers=workers) if workers and workers > 1 else None
    try:
        def evaluate(units: list[np.ndarray]) -> list[float]:
            points = [box.from_unit(u) for u in units]
            fn = lambda x: _safe_call(objective, x)  # noqa: E731
            return list(pool.map(fn, points)) if pool else [fn(x) for x in points]

        n = box.dim
        history: list[tuple[int, float]] = []
        best_f = math.inf
        best_u = None

        def record(units, values):
            nonlocal best_f, best_u
            for u, f in zip(units, values):
                if f < best_f:
                    best_f, best_u = f, u
                history.append((len(history) + 1, best_f))

        c0 = np.full(n, 0.5)
        (f0,) = evaluate([c0])
        record([c0], [f0])
        rects = [Rectangle(c0, np.zeros(n, dtype=np.int64), f0, 0)]
        next_id = 1
        evals = 1
        iterations = 0
        if callback:
            callback(0, rects)

        while evals < max_evals:
            plan = []  # (rect, dims, units, ids)
            planned = 0
            for r in potentially_optimal(rects, epsilon):
                level = int(r.side_thirds.min())
                dims = [i for i in range(n) if r.side_thirds[i] == level]
                if evals + planned + 2 * len(dims) > max_evals:
                    continue
                delta = 3.0 ** -(level + 1)
                units, ids = [], []
                for i in dims:
                    for sign in (-1.0, 1.0):
                        u = r.center.copy()
                        u[i] += sign * delta
                        units.append(u)
                        ids.append(next_id)
                        next_id += 1
                plan.append((r, dims, units, ids))
                planned += len(units)
            if not plan:
                break

            all_units = [u for _, _, units, _ in plan for u in units]
            all_values = evaluate(all_units)
            record(all_units, all_values)
            evals += len(all_units)

            pos = 0
            for r, dims, units, ids in plan:
                values = all_values[pos:pos + len(units)]
                pos += len(units)
                w = {d: min(values[2 * k], values[2 * k + 1]) for k, d in enumerate(dims)}
                thirds = r.side_thirds.copy()
                for d in sorted(dims, key=lambda d: (w[d], d)):
                    k = dims.index(d)
                    thirds[d] += 1
                    for m in (2 * k, 2 * k + 1):
                        rects.append(Rectangle(units[m], thirds.copy(), values[m], ids[m]))
                r.set_thirds(thirds)
            iterations += 1
            if callback:
                callback(iterations, rects)
    finally:
        if pool:
            pool.shutdown()

    return OptimizerReport(
        best_point=tuple(float(v) for v in box.from_unit(best_u)),
        best_value=best_f,
        evaluations=evals,
        iterations=iterations,
        history=tuple(history),
    )
