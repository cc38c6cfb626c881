"""One-dimensional and sliced Wasserstein-1 distances between sample sets."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .numerics import ShapeError, Tensor, _node, as_tensor, matmul, reduce_mean, reshape, transpose

__all__ = [
    "SampleSet",
    "ProjectionBank",
    "make_projections",
    "sorted_row_distance",
    "wd1d",
    "wd1d_oracle",
    "sliced_wd",
    "set_threads",
    "get_threads",
]

_threads = 1


def set_threads(n: int) -> None:
    """Worker threads used for the per-projection sorts. Results do not depend on it."""
    global _threads
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _threads = int(n)


def get_threads() -> int:
    return _threads


@dataclass
class SampleSet:
    """``n`` points in ``d`` dimensions, stored as an (n, d) tensor."""

    points: Tensor

    def __post_init__(self):
        self.points = as_tensor(self.points)
        if self.points.ndim == 1:
            self.points = reshape(self.points, (-1, 1))
        if self.points.ndim != 2 or self.n < 1 or self.d < 1:
            raise ShapeError(f"sample set needs shape (n>=1, d>=1), got {self.points.shape}")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _samples(x) -> SampleSet:
    return x if isinstance(x, SampleSet) else SampleSet(x)


@dataclass(frozen=True)
class ProjectionBank:
    """Unit directions (k, d) used to slice a d-dimensional distribution."""

    dirs: np.ndarray
    seed: object = None

    def __post_init__(self):
        dirs = np.array(self.dirs, dtype=np.float64)
        if dirs.ndim != 2:
            raise ShapeError(f"projection bank must be (k, d), got {dirs.shape}")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("projection directions must have unit L2 norm")
        dirs.setflags(write=False)
        object.__setattr__(self, "dirs", dirs)

    @property
    def k(self) -> int:
        return self.dirs.shape[0]

    @property
    def d(self) -> int:
        return self.dirs.shape[1]

    @classmethod
    def identity(cls) -> ProjectionBank:
        """The single direction [+1]; slicing in 1D is then the plain 1D distance."""
        return cls(np.ones((1, 1)))


def make_projections(k: int, d: int, seed) -> ProjectionBank:
    """Draw ``k`` Gaussian directions in ``d`` dimensions and normalize them.

    ``seed`` may be an int or a sequence of ints (e.g. master seed, evaluation
    id, layer index); the same seed always yields the same bank.
    """
    if k < 1 or d < 1:
        raise ValueError(f"need k, d >= 1, got k={k}, d={d}")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((k, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return ProjectionBank(dirs, seed)


def _row_chunks(k: int) -> list[slice]:
    parts = min(_threads, k)
    bounds = np.linspace(0, k, parts + 1).astype(int)
    return [slice(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def stable_argsort_rows(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise argsort, ties broken by original index, plus the sorted rows.

    Equivalent to ``np.argsort(X, axis=1, kind="stable")`` but several times
    faster: an unstable sort is used first and only runs of equal values are
    reordered by index afterwards.
    """
    order = np.argsort(X, axis=1)
    vals = np.take_along_axis(X, order, 1)
    tied = vals[:, 1:] == vals[:, :-1]
    rows = np.flatnonzero(tied.any(axis=1))
    if rows.size:
        n = X.shape[1]
        group = np.concatenate([np.zeros((rows.size, 1), np.int64), np.cumsum(~tied[rows], axis=1)], axis=1)
        key = group * n + order[rows]
        order[rows] = np.take_along_axis(order[rows], np.argsort(key, axis=1), 1)
    return order, vals


def _sort_rows(A: np.ndarray, B: np.ndarray, need_a: bool = True, need_b: bool = True):
    """Stable argsorts of both operands and the signed sorted differences.

    Permutations are only needed for operands that receive a gradient; for
    the others a plain sort suffices and ``None`` is returned in its place.
    """
    ia, sa = stable_argsort_rows(A) if need_a else (None, np.sort(A, axis=1))
    ib, sb = stable_argsort_rows(B) if need_b else (None, np.sort(B, axis=1))
    return ia, ib, sa - sb


def sorted_row_distance(A, B) -> Tensor:
    """Row-wise 1D W1: ``mean_i |sort(A_r)_i - sort(B_r)_i|`` for each row r.

    The gradient follows the permutations fixed at forward time; at exact
    ties between the operands the subgradient 0 is used.
    """
    A, B = as_tensor(A), as_tensor(B)
    if A.shape != B.shape or A.ndim != 2:
        raise ShapeError(f"expected equal (rows, n) operands, got {A.shape} and {B.shape}")
    k, n = A.shape
    need = (A.requires_grad, B.requires_grad)
    chunks = _row_chunks(k)
    if len(chunks) > 1:
        with ThreadPoolExecutor(len(chunks)) as pool:
            parts = list(pool.map(lambda s: _sort_rows(A.data[s], B.data[s], *need), chunks))
        ia = np.concatenate([p[0] for p in parts]) if need[0] else None
        ib = np.concatenate([p[1] for p in parts]) if need[1] else None
        diff = np.concatenate([p[2] for p in parts])
    else:
        ia, ib, diff = _sort_rows(A.data, B.data, *need)
    out = np.abs(diff).mean(axis=1)

    def vjp(g):
        s = np.sign(diff) * (g[:, None] / n)
        ga = np.zeros((k, n))
        gb = np.zeros((k, n))
        if ia is not None:
            np.put_along_axis(ga, ia, s, 1)
        if ib is not None:
            np.put_along_axis(gb, ib, -s, 1)
        return ga, gb

    return _node(out, (A, B), vjp)


def wd1d(a, b) -> Tensor:
    """Closed-form W1 between two equal-size 1D empirical distributions."""
    a, b = _samples(a), _samples(b)
    if a.d != 1 or b.d != 1:
        raise ShapeError(f"wd1d needs 1D samples, got d={a.d} and d={b.d}")
    if a.n != b.n:
        raise ShapeError(f"wd1d needs equal sample counts, got {a.n} and {b.n}")
    rows = sorted_row_distance(reshape(a.points, (1, a.n)), reshape(b.points, (1, b.n)))
    return reshape(rows, ())


def wd1d_oracle(a, b) -> float:
    """Brute-force W1 by enumerating every matching (n <= 8)."""
    x = np.asarray(_samples(a).points.data[:, 0])
    y = np.asarray(_samples(b).points.data[:, 0])
    n = len(x)
    if n != len(y):
        raise ShapeError("oracle needs equal sample counts")
    if n > 8:
        raise ValueError(f"oracle enumerates n! matchings; n={n} exceeds 8")
    best = min(sum(abs(x[i] - y[p[i]]) for i in range(n)) for p in itertools.permutations(range(n)))
    return float(best / n)


def sliced_wd(a, b, bank: ProjectionBank) -> Tensor:
    """Average 1D W1 of both sample sets projected on each bank direction."""
    a, b = _samples(a), _samples(b)
    if not (a.d == b.d == bank.d):
        raise ShapeError(f"dimension mismatch: a.d={a.d}, b.d={b.d}, bank.d={bank.d}")
    if a.n != b.n:
        raise ShapeError(f"sample count mismatch: {a.n} vs {b.n}")
    if bank.d == 1:
        # every unit direction in 1D is +1 or -1, and W1 is invariant to negating both sets
        return wd1d(a, b)
    dirs_t = Tensor(bank.dirs.T)
    pa = transpose(matmul(a.points, dirs_t))
    pb = transpose(matmul(b.points, dirs_t))
    return reduce_mean(sorted_row_distance(pa, pb))
