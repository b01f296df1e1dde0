"""Points, subsets, and product distributions on the Boolean hypercube.

Points of {0,1}^n are packed into Python ints little-endian: bit ``i`` of the
int is coordinate ``i`` (0-based internally; all text I/O is 1-based).  A
subset S of coordinates is packed the same way.  The textual form of a point
writes coordinate 1 first, so ``"0110"`` is the point with x_2 = x_3 = 1,
i.e. the integer 0b0110 = 6.

Fixed-weight ranking (`fw_rank` / `fw_unrank`) uses lexicographic order on
the coordinate tuple (x_1, ..., x_n) with 0 < 1, which makes the pair a
combinadic bijection between weight-w strings and {0, ..., C(n,w)-1}.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

DEFAULT_ENUM_CAP = 24
_ENUM_CAP_ENV = "SUBMODTREE_ENUM_CAP"


class DimensionTooLarge(ValueError):
    """Raised when an operation would enumerate more than 2^cap points."""


def enum_cap() -> int:
    """Current exhaustive-enumeration cap (env override SUBMODTREE_ENUM_CAP)."""
    raw = os.environ.get(_ENUM_CAP_ENV)
    if raw is None:
        return DEFAULT_ENUM_CAP
    cap = int(raw)
    if cap < 1:
        raise ValueError(f"enumeration cap must be positive, got {cap}")
    return cap


def check_enumerable(n: int, what: str = "operation") -> None:
    cap = enum_cap()
    if n > cap:
        raise DimensionTooLarge(
            f"{what} requires enumerating 2^{n} points; cap is n <= {cap} "
            f"(override via {_ENUM_CAP_ENV})"
        )


def all_points(n: int) -> np.ndarray:
    """All 2^n points as little-endian integers, in index order."""
    check_enumerable(n, "point enumeration")
    return np.arange(1 << n, dtype=np.int64)


def popcount(values: np.ndarray | int) -> np.ndarray | int:
    """Number of set bits, elementwise."""
    if isinstance(values, (int, np.integer)):
        return int(values).bit_count()
    return np.bitwise_count(np.asarray(values, dtype=np.int64))


def weight(x: int, subset: int) -> int:
    """Number of 1-coordinates of the point ``x`` inside ``subset``."""
    return (x & subset).bit_count()


def flip(x: int, n: int) -> int:
    """Negate every coordinate of an n-bit point (an involution)."""
    return x ^ ((1 << n) - 1)


def fw_rank(x: int, n: int) -> int:
    """Position of ``x`` among all n-bit strings of its weight, in lex order.

    Lexicographic order compares coordinate tuples (x_1, ..., x_n) with
    0 < 1, so e.g. for n=4, weight 2: 0011 < 0101 < 0110 < 1001 < 1010 < 1100.
    """
    w = weight(x, (1 << n) - 1)
    rank = 0
    for pos in range(n):
        if w == 0:
            break
        if (x >> pos) & 1:
            # strings with a 0 here and the remaining w ones placed later
            rank += math.comb(n - 1 - pos, w)
            w -= 1
    return rank


def fw_unrank(n: int, w: int, r: int) -> int:
    """Inverse of `fw_rank`: the rank-``r`` string of weight ``w``.

    Runs in O(n) arithmetic operations.  Raises ValueError when
    ``r`` is outside {0, ..., C(n,w)-1}.
    """
    total = math.comb(n, w)
    if not 0 <= r < total:
        raise ValueError(f"rank {r} out of range for C({n},{w}) = {total}")
    x = 0
    for pos in range(n):
        if w == 0:
            break
        c = math.comb(n - 1 - pos, w)
        if r >= c:
            x |= 1 << pos
            r -= c
            w -= 1
    return x


@dataclass(frozen=True)
class ProductDistribution:
    """Product distribution on {0,1}^n with Pr[x_i = 1] = mu[i]."""

    mu: tuple[float, ...]

    def __post_init__(self) -> None:
        for p in self.mu:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"bias {p} outside [0, 1]")

    @property
    def n(self) -> int:
        return len(self.mu)

    @staticmethod
    def uniform(n: int) -> "ProductDistribution":
        return ProductDistribution((0.5,) * n)

    def boundedness(self) -> float:
        """Largest alpha with mu in [alpha, 1-alpha]^n (0 if degenerate)."""
        return min(min(p, 1.0 - p) for p in self.mu)

    def require_bounded(self, alpha: float) -> None:
        if self.boundedness() < alpha:
            raise ValueError(
                f"distribution is not {alpha}-bounded (boundedness "
                f"{self.boundedness()})"
            )

    def point_probability(self, x: int) -> float:
        """Probability of a single point; the probabilities sum to 1."""
        if x < 0 or x >= (1 << self.n):
            raise ValueError(f"point {x} outside dimension {self.n}")
        p = 1.0
        for i, mu_i in enumerate(self.mu):
            p *= mu_i if (x >> i) & 1 else 1.0 - mu_i
        return p

    def probability_vector(self) -> np.ndarray:
        """Probabilities of all 2^n points, indexed little-endian."""
        check_enumerable(self.n, "probability vector")
        p = np.ones(1)
        for mu_i in self.mu:
            p = np.concatenate([p * (1.0 - mu_i), p * mu_i])
        return p


def point_probability(dist: ProductDistribution, x: int, n: int | None = None) -> float:
    """Probability of point ``x`` under ``dist`` (dimension checked)."""
    if n is not None and n != dist.n:
        raise ValueError(f"dimension mismatch: point has n={n}, distribution n={dist.n}")
    return dist.point_probability(x)


# --- textual forms (1-based, coordinate 1 first) ---

def format_point(x: int, n: int) -> str:
    return "".join("1" if (x >> i) & 1 else "0" for i in range(n))


def parse_point(s: str) -> tuple[int, int]:
    """Parse a bitstring into (point, n)."""
    if not s or any(c not in "01" for c in s):
        raise ValueError(f"not a bitstring: {s!r}")
    x = 0
    for i, c in enumerate(s):
        if c == "1":
            x |= 1 << i
    return x, len(s)


def format_subset(subset: int) -> str:
    """Subset mask as a sorted 1-based index list, e.g. ``{2,3}``."""
    members = [str(i + 1) for i in range(subset.bit_length()) if (subset >> i) & 1]
    return "{" + ",".join(members) + "}"


def parse_subset(s: str) -> int:
    body = s.strip()
    if body.startswith("{") and body.endswith("}"):
        body = body[1:-1]
    mask = 0
    for part in body.split(","):
        part = part.strip()
        if not part:
            continue
        i = int(part)
        if i < 1:
            raise ValueError(f"subset indices are 1-based, got {i}")
        mask |= 1 << (i - 1)
    return mask


def subset_members(subset: int) -> tuple[int, ...]:
    """0-based coordinates in the mask, ascending."""
    return tuple(i for i in range(subset.bit_length()) if (subset >> i) & 1)


def mask_of(coords) -> int:
    """Mask from an iterable of 0-based coordinates."""
    m = 0
    for i in coords:
        m |= 1 << i
    return m
