"""Matching pursuit: greedy signal decomposition with a pluggable MIPS solver."""

from __future__ import annotations

from typing import Callable

import numpy as np

from banditkit.mips.core import (
    DEFAULT_DELTA,
    MipsAnswer,
    MipsInstance,
    banditmips,
    banditmips_alpha,
    naive_mips,
)

_RESIDUAL_TOLERANCE = 1e-12

SOLVERS: dict[str, Callable[[MipsInstance], MipsAnswer]] = {
    "naive": naive_mips,
    "banditmips": banditmips,
    "banditmips_alpha": banditmips_alpha,
}


def matching_pursuit(
    signal,
    atoms,
    n_components: int,
    solver="naive",
    *,
    delta: float = DEFAULT_DELTA,
    sigma: float | None = None,
) -> list[tuple[int, float]]:
    """Greedily decompose `signal` over dictionary rows of `atoms`.

    Each step asks the solver (a name from SOLVERS or any callable taking a
    MipsInstance) for the atom with the largest inner product against the
    current residual, records the exact projection coefficient
    <r, v> / <v, v>, and subtracts that component. The projection makes the
    residual norm non-increasing regardless of which atom the solver picked.
    Stops early if the residual vanishes.
    """
    signal = np.asarray(signal, dtype=float)
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    if n_components < 1:
        raise ValueError("n_components must be >= 1")
    if signal.ndim != 1 or atoms.shape[1] != signal.size:
        raise ValueError("atoms must be an n x d matrix matching the signal length")
    atom_sq = np.square(atoms).sum(axis=1)
    if np.any(atom_sq == 0.0):
        raise ValueError("dictionary atoms must be nonzero")
    if callable(solver):
        solve = solver
    else:
        try:
            solve = SOLVERS[solver]
        except KeyError:
            raise ValueError(f"unknown solver {solver!r}; expected one of {sorted(SOLVERS)}") from None

    scale = float(np.linalg.norm(signal))
    residual = signal.copy()
    out: list[tuple[int, float]] = []
    for _ in range(n_components):
        if np.linalg.norm(residual) <= _RESIDUAL_TOLERANCE * max(scale, 1.0):
            break
        answer = solve(MipsInstance(residual, atoms, sigma=sigma, delta=delta))
        i = answer.winner
        coefficient = float(residual @ atoms[i]) / float(atom_sq[i])
        residual = residual - coefficient * atoms[i]
        out.append((int(i), coefficient))
    return out
