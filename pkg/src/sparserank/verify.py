"""Honest-recomputation checks shared by the incremental solvers.

Incrementally tracked quantities carry rounding noise on the order of
ulp(initial magnitude) * sqrt(steps), which stays absolute while the true
objective keeps shrinking. Tolerances are therefore relative to the larger of
the fresh value and the run's initial scale; a converged run can be twelve
orders of magnitude below where it started and still be checked meaningfully.
"""

from __future__ import annotations

import numpy as np

RTOL = 1e-8


class IncrementalDriftError(RuntimeError):
    """Tracked state disagrees with a fresh recomputation beyond tolerance."""


def check_scalar(tracked: float, fresh: float, scale: float, what: str, rtol: float = RTOL) -> None:
    tol = rtol * max(abs(fresh), abs(scale))
    err = abs(tracked - fresh)
    if err > tol:
        raise IncrementalDriftError(
            f"{what}: tracked {tracked!r} vs fresh {fresh!r}, |diff| {err:.3e} > tol {tol:.3e}"
        )


def check_vector(tracked: np.ndarray, fresh: np.ndarray, what: str, rtol: float = RTOL) -> None:
    scale = max(1.0, float(np.abs(fresh).max(initial=0.0)))
    err = float(np.abs(tracked - fresh).max(initial=0.0))
    if err > rtol * scale:
        raise IncrementalDriftError(f"{what}: inf-norm drift {err:.3e} > tol {rtol * scale:.3e}")
