"""Deterministic complex dense-matrix arithmetic.

Thin, contract-enforcing layer over ``numpy.linalg``: construction and
validation of complex matrices, SVD-based numerical rank with an explicit
tolerance report, square/tall solving with a condition estimate, seeded
random matrix generation, and block-diagonal lifting.

All functions are pure; arrays are never mutated in place.  Numerical rank
uses a *relative* singular-value threshold (default ``1e-9``): generic
complex-Gaussian draws put the singular-value gap many orders of magnitude
above it, so rank decisions are stable.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    IllConditioned,
    InvalidInput,
    InvalidMatrix,
    InvalidShape,
    SingularSystem,
)

#: Relative singular-value threshold used everywhere a rank is decided.
DEFAULT_REL_TOL = 1e-9

#: Solves whose condition estimate exceeds this are flagged for resampling.
CONDITION_LIMIT = 1e12

#: Residual tolerance for solve_square, relative to ``norm(b)``.
SOLVER_TOL = 1e-8


def substream(seed: int, *path) -> np.random.Generator:
    """Return an independent, reproducible random stream.

    Streams are derived from ``(seed, path)`` through a spawn-key hierarchy,
    so the stream for one trial never depends on how many draws another
    trial consumed.  Path elements may be ints or short strings.

    Parameters
    ----------
    seed : int
        Root seed.
    *path
        Hierarchical stream coordinates, e.g. ``("trial", 17, "states")``.
    """
    key = tuple(
        int(p) & 0xFFFFFFFF if isinstance(p, (int, np.integer)) else zlib.crc32(str(p).encode())
        for p in path
    )
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def as_matrix(a) -> np.ndarray:
    """Validate and return ``a`` as a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise InvalidMatrix(f"expected a 2-D matrix, got ndim={m.ndim}")
    if m.size and not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
        raise InvalidMatrix("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class RankReport:
    """Numerical rank of a matrix plus the singular values that decided it.

    ``smallest_kept_singular_value`` > ``largest_dropped_singular_value``
    whenever the rank is strictly between 0 and ``min(rows, cols)``; the gap
    between them is the evidence that the rank decision is not a tolerance
    accident.
    """

    value: int
    smallest_kept_singular_value: float
    largest_dropped_singular_value: float


def singular_values(a) -> np.ndarray:
    """Singular values of ``a`` in non-increasing order."""
    m = as_matrix(a)
    if m.size == 0:
        return np.zeros(0)
    return np.linalg.svd(m, compute_uv=False)


def rank(a, rel_tol: float = DEFAULT_REL_TOL) -> RankReport:
    """Numerical rank at a relative singular-value threshold.

    A singular value is kept iff it exceeds ``rel_tol * max(singular
    values)``; the zero matrix has rank 0.

    Parameters
    ----------
    a : array_like
        Matrix; must be finite-valued.
    rel_tol : float
        Relative threshold in (0, 1).
    """
    if not (0.0 < rel_tol < 1.0):
        raise InvalidInput(f"rel_tol must be in (0, 1), got {rel_tol}")
    s = singular_values(a)
    if s.size == 0 or s[0] == 0.0:
        return RankReport(0, 0.0, float(s[0]) if s.size else 0.0)
    cut = rel_tol * s[0]
    kept = s > cut
    value = int(np.count_nonzero(kept))
    smallest_kept = float(s[value - 1]) if value else 0.0
    largest_dropped = float(s[value]) if value < s.size else 0.0
    return RankReport(value, smallest_kept, largest_dropped)


def rank_value(a, rel_tol: float = DEFAULT_REL_TOL) -> int:
    """Shorthand for ``rank(a, rel_tol).value``."""
    return rank(a, rel_tol).value


@dataclass(frozen=True)
class SolveReport:
    """Solution of a linear system together with its condition estimate."""

    x: np.ndarray
    condition: float


def solve_square(
    a,
    b,
    rel_tol: float = DEFAULT_REL_TOL,
    condition_limit: float | None = None,
) -> SolveReport:
    """Solve the square system ``a @ x = b`` via SVD.

    Parameters
    ----------
    a : array_like
        Square matrix.
    b : array_like
        Right-hand side; a vector or a matrix of stacked right-hand sides.
    rel_tol : float
        Rank tolerance below which the system counts as singular.
    condition_limit : float, optional
        When given, raise :class:`IllConditioned` if the condition estimate
        exceeds it.  Trials catching this are expected to resample (the
        almost-sure full-rank statements permit discarding a null set).

    Raises
    ------
    InvalidShape
        If ``a`` is not square or ``b``'s length does not match.
    SingularSystem
        If ``a`` is numerically rank deficient at ``rel_tol``.
    """
    m = as_matrix(a)
    rhs = np.asarray(b, dtype=complex)
    if m.shape[0] != m.shape[1]:
        raise InvalidShape(f"matrix is {m.shape}, not square")
    if rhs.shape[0] != m.shape[0]:
        raise InvalidShape(f"rhs length {rhs.shape[0]} != matrix side {m.shape[0]}")
    if m.size == 0:
        return SolveReport(rhs.copy(), 1.0)
    u, s, vh = np.linalg.svd(m)
    if s[0] == 0.0 or s[-1] <= rel_tol * s[0]:
        raise SingularSystem(f"square system of side {m.shape[0]} is rank deficient")
    condition = float(s[0] / s[-1])
    if condition_limit is not None and condition > condition_limit:
        raise IllConditioned(f"condition estimate {condition:.3e} exceeds {condition_limit:.1e}")
    x = vh.conj().T @ ((u.conj().T @ rhs).T / s).T
    return SolveReport(x, condition)


def solve_full_column_rank(
    a,
    b,
    rel_tol: float = DEFAULT_REL_TOL,
    condition_limit: float | None = None,
) -> SolveReport:
    """Least-squares solve of a (possibly tall) full-column-rank system.

    On a consistent system this recovers the exact solution; the caller is
    responsible for checking the residual where consistency is part of the
    contract.

    Raises
    ------
    SingularSystem
        If ``a`` is column-rank deficient at ``rel_tol``.
    InvalidShape
        On dimension mismatch or an underdetermined (wide) system.
    """
    m = as_matrix(a)
    rhs = np.asarray(b, dtype=complex)
    if m.shape[0] < m.shape[1]:
        raise InvalidShape(f"system {m.shape} has fewer equations than unknowns")
    if rhs.shape[0] != m.shape[0]:
        raise InvalidShape(f"rhs length {rhs.shape[0]} != row count {m.shape[0]}")
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0 or s[-1] <= rel_tol * s[0]:
        raise SingularSystem(f"system {m.shape} is column-rank deficient")
    condition = float(s[0] / s[-1])
    if condition_limit is not None and condition > condition_limit:
        raise IllConditioned(f"condition estimate {condition:.3e} exceeds {condition_limit:.1e}")
    x = vh.conj().T @ ((u.conj().T @ rhs).T / s).T
    return SolveReport(x, condition)


def random_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a matrix with i.i.d. standard circularly-symmetric Gaussian entries.

    Entries have unit variance (real and imaginary parts each of variance
    1/2), so every submatrix is full rank almost surely.  The draw consumes
    the stream deterministically: a fixed seed and draw order reproduce the
    matrix bit for bit.
    """
    if rows < 1 or cols < 1:
        raise InvalidInput(f"rows and cols must be >= 1, got ({rows}, {cols})")
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return (re + 1j * im) / np.sqrt(2.0)


def random_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Length-``dim`` vector of i.i.d. standard complex Gaussian scalars."""
    if dim == 0:
        return np.zeros(0, dtype=complex)
    return random_matrix(dim, 1, rng)[:, 0]


def block_diag(blocks) -> np.ndarray:
    """Block-diagonal matrix with the given blocks on the diagonal.

    Off-block entries are exactly zero, so the rank of the result is the
    sum of the block ranks.
    """
    blocks = [as_matrix(b) for b in blocks]
    if not blocks:
        raise InvalidInput("block_diag requires at least one block")
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=complex)
    r = c = 0
    for b in blocks:
        out[r : r + b.shape[0], c : c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out
