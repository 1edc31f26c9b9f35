"""Integer frequency vectors and bounded enumeration.

Two index universes appear in averaging error sums:

* dense multi-indices k in Z^d with the l1 norm |k_1|+...+|k_d|;
* finite-support sequences k in Z*^infinity graded by the weighted norm
      |k|_eta = sum_j <j>^eta |k_j|,   <j> = max(1, |j|),
  which keeps the number of indices per shell subexponential and pins the
  largest usable support index at floor(nu^(1/eta)) for shell nu.

Enumeration order is fixed and documented (graded by the norm, then
lexicographic in the dense coordinate tuple, coordinates ascending) so that
floating-point reductions over enumerated modes are byte-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Iterator

from .errors import DomainError

__all__ = [
    "MultiIndex",
    "eta_norm",
    "enumerate_ball_finite",
    "enumerate_ball_eta",
    "count_shell_finite",
    "count_shell_eta",
]


@dataclass(frozen=True)
class MultiIndex:
    """Sparse integer vector with finite support.

    entries are (index, value) pairs with value != 0, sorted by index;
    dim is the ambient dimension (None for Z*^infinity).  norm1 caches the
    l1 norm.
    """

    entries: tuple[tuple[int, int], ...]
    dim: int | None = None
    norm1: int = field(init=False)

    def __post_init__(self):
        for j, v in self.entries:
            if v == 0:
                raise DomainError("MultiIndex stores no zero entries")
            if j < 0:
                raise DomainError("MultiIndex indices start at 0")
            if self.dim is not None and j >= self.dim:
                raise DomainError(f"index {j} outside dimension {self.dim}")
        idx = [j for j, _ in self.entries]
        if idx != sorted(set(idx)):
            raise DomainError("MultiIndex entries must be sorted and unique")
        object.__setattr__(self, "norm1", sum(abs(v) for _, v in self.entries))

    @classmethod
    def from_dense(cls, vec, dim: int | None = None) -> "MultiIndex":
        entries = tuple((j, int(v)) for j, v in enumerate(vec) if v)
        return cls(entries, dim if dim is not None else len(vec))

    def to_dense(self, dim: int) -> tuple[int, ...]:
        out = [0] * dim
        for j, v in self.entries:
            if j >= dim:
                raise DomainError(f"index {j} outside dense dimension {dim}")
            out[j] = v
        return tuple(out)

    @property
    def is_zero(self) -> bool:
        return not self.entries

    @property
    def max_index(self) -> int:
        return self.entries[-1][0] if self.entries else -1

    def neg(self) -> "MultiIndex":
        return MultiIndex(tuple((j, -v) for j, v in self.entries), self.dim)

    def is_canonical(self) -> bool:
        """True when the first nonzero coordinate is positive (k=0 included)."""
        return (not self.entries) or self.entries[0][1] > 0

    def canonical(self) -> "MultiIndex":
        return self if self.is_canonical() else self.neg()

    def key(self) -> str:
        """Stable serialization, used by deterministic hashing."""
        return ";".join(f"{j}:{v}" for j, v in self.entries)


def eta_norm(k: MultiIndex, eta: int) -> int:
    """The weighted norm sum_j max(1,|j|)^eta * |k_j|, an exact integer."""
    if eta < 2:
        raise DomainError("eta must be an integer >= 2")
    return sum(max(1, abs(j)) ** eta * abs(v) for j, v in k.entries)


def _exact_norm_vectors(d: int, total: int) -> Iterator[list[int]]:
    """Dense vectors in Z^d with l1 norm exactly `total`, lexicographic."""
    if d == 1:
        if total == 0:
            yield [0]
        else:
            yield [-total]
            yield [total]
        return
    for first in range(-total, total + 1):
        rest = total - abs(first)
        for tail in _exact_norm_vectors(d - 1, rest):
            yield [first] + tail


def enumerate_ball_finite(d: int, K: int) -> Iterator[MultiIndex]:
    """All k in Z^d with 1 <= |k|_1 <= K, graded then lexicographic."""
    if d < 1 or K < 1:
        raise DomainError("enumerate_ball_finite needs d >= 1 and K >= 1")
    for s in range(1, K + 1):
        for vec in _exact_norm_vectors(d, s):
            yield MultiIndex.from_dense(vec, d)


def _eta_shell_entries(weights: list[int], j: int, budget: int,
                       prefix: list[tuple[int, int]]) -> Iterator[tuple[tuple[int, int], ...]]:
    """Sparse entry tuples over indices j.. with weighted norm == budget."""
    if j == len(weights):
        if budget == 0:
            yield tuple(prefix)
        return
    w = weights[j]
    top = budget // w
    for v in range(-top, top + 1):
        rest = budget - w * abs(v)
        if v:
            prefix.append((j, v))
            yield from _eta_shell_entries(weights, j + 1, rest, prefix)
            prefix.pop()
        else:
            yield from _eta_shell_entries(weights, j + 1, rest, prefix)


def enumerate_shell_eta(eta: int, nu: int,
                        max_dim: int | None = None) -> Iterator[MultiIndex]:
    """All 0 != k in Z*^infinity with |k|_eta == nu, lexicographic."""
    if eta < 2 or nu < 1:
        raise DomainError("enumerate_shell_eta needs eta >= 2 and nu >= 1")
    jmax = 1
    while max(1, jmax + 1) ** eta <= nu:
        jmax += 1
    if max_dim is not None:
        jmax = min(jmax, max_dim - 1)
    weights = [max(1, j) ** eta for j in range(jmax + 1)]
    for entries in _eta_shell_entries(weights, 0, nu, []):
        if entries:
            yield MultiIndex(entries, max_dim)


def enumerate_ball_eta(eta: int, nu_max: int,
                       max_dim: int | None = None) -> Iterator[MultiIndex]:
    """All 0 != k in Z*^infinity with |k|_eta <= nu_max, graded then lex.

    Support is automatically confined to indices j with <j>^eta <= nu_max;
    max_dim additionally truncates the support (for experiments on a
    truncated torus).
    """
    if eta < 2 or nu_max < 1:
        raise DomainError("enumerate_ball_eta needs eta >= 2 and nu_max >= 1")
    for nu in range(1, nu_max + 1):
        yield from enumerate_shell_eta(eta, nu, max_dim)


@lru_cache(maxsize=None)
def count_shell_finite(d: int, s: int) -> int:
    """#{k in Z^d : |k|_1 = s}, closed form; s = 0 counts the origin."""
    if s == 0:
        return 1
    return sum(2 ** i * comb(d, i) * comb(s - 1, i - 1)
               for i in range(1, min(d, s) + 1))


@lru_cache(maxsize=None)
def count_shell_eta(eta: int, nu: int, max_dim: int | None = None) -> int:
    """#{0 != k in Z*^infinity : |k|_eta = nu}, by exact enumeration."""
    if nu == 0:
        return 1
    lower = 0 if nu == 1 else count_ball_eta(eta, nu - 1, max_dim)
    return count_ball_eta(eta, nu, max_dim) - lower


@lru_cache(maxsize=None)
def count_ball_eta(eta: int, nu_max: int, max_dim: int | None = None) -> int:
    return sum(1 for _ in enumerate_ball_eta(eta, nu_max, max_dim))
