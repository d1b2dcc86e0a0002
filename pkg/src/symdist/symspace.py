"""Totally symmetric subspace machinery and Haar sampling.

The symmetric subspace of (C^d)^{tensor n} is spanned by occupation-number
vectors; the isometry into it gives projectors and partial traces that never
touch the n! permutations explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import DEFAULT_DIM_CAP, DenseOperator, _check_cap, ket

_INT64_MAX = 2 ** 63 - 1


def sym_dim(d: int, n: int) -> int:
    """Dimension binom(d+n-1, n) of the totally symmetric subspace."""
    if d < 1:
        raise ValueError(f"local dimension must be >= 1, got {d}")
    if n < 0:
        raise ValueError(f"copy count must be >= 0, got {n}")
    v = math.comb(d + n - 1, n)
    if v > _INT64_MAX:
        raise OverflowError(
            f"sym_dim({d}, {n}) = {v} exceeds the 64-bit integer range"
        )
    return v


def _occupations(d: int, n: int):
    """All (n_1..n_d) with sum n, lexicographically descending."""
    if d == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _occupations(d - 1, n - first):
            yield (first,) + rest


@dataclass(frozen=True)
class SymBasis:
    """Occupation-number basis of the symmetric subspace of (C^d)^{tensor n}.

    `isometry` is the d^n x sym_dim(d, n) matrix V whose columns are the
    normalized symmetric basis vectors; V†V = 1 and VV† is the symmetrizer.
    Column c corresponds to occupations[c].
    """

    d: int
    n: int
    occupations: tuple[tuple[int, ...], ...]
    isometry: DenseOperator


@lru_cache(maxsize=128)
def _sym_basis_arrays(d: int, n: int):
    occs = tuple(_occupations(d, n))
    col_of = {occ: c for c, occ in enumerate(occs)}
    full = d ** n
    mat = np.zeros((full, len(occs)))
    # digit j of flat index x is the state of factor j (factor 0 most significant)
    cols = np.zeros(full, dtype=int)
    for x in range(full):
        counts = [0] * d
        rem = x
        for _ in range(n):
            rem, i = divmod(rem, d)
            counts[i] += 1
        cols[x] = col_of[tuple(counts)]
    mat[np.arange(full), cols] = 1.0
    # column sums are the multinomial multiplicities n!/(prod n_i!)
    mat /= np.sqrt(mat.sum(axis=0, keepdims=True))
    return occs, mat


def sym_basis(d: int, n: int, cap: int = DEFAULT_DIM_CAP) -> SymBasis:
    s = sym_dim(d, n)  # validates d, n
    _check_cap(d ** n, cap, f"symmetric basis on {n} factors of dimension {d}")
    occs, mat = _sym_basis_arrays(d, n)
    assert len(occs) == s
    return SymBasis(d, n, occs, DenseOperator(mat, (d,) * n, (s,)))


def symmetrizer(d: int, n: int, cap: int = DEFAULT_DIM_CAP) -> DenseOperator:
    """Orthogonal projector onto the symmetric subspace of (C^d)^{tensor n}."""
    v = sym_basis(d, n, cap=cap).isometry
    return DenseOperator(v.entries @ v.entries.conj().T, (d,) * n)


@dataclass
class HaarSampler:
    """Reproducible source of Haar-random kets in C^d.

    Each draw is generated from SeedSequence((seed, stream, counter)), so a
    given (seed, stream, counter) triple yields the same ket bit-for-bit no
    matter what was drawn before, and distinct streams are independent.
    """

    d: int
    seed: int
    counter: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"local dimension must be >= 1, got {self.d}")
        if min(self.seed, self.counter, self.stream) < 0:
            raise ValueError("seed, counter and stream must be non-negative")


def haar_sample(sampler: HaarSampler) -> DenseOperator:
    """Next Haar-random ket; advances sampler.counter by one."""
    rng = np.random.default_rng((sampler.seed, sampler.stream, sampler.counter))
    z = rng.standard_normal(sampler.d) + 1j * rng.standard_normal(sampler.d)
    sampler.counter += 1
    return ket(z / np.linalg.norm(z))
