"""Fourier analysis on {0,1}^n under the uniform distribution.

Conventions: the character of a subset mask S is chi_S(x) = (-1)^{|x & S|};
analysis is expectation-normalized, coeff(S) = E[f * chi_S], and synthesis is
the plain sum f(x) = sum_S coeff(S) * chi_S(x).  Masks are little-endian
coordinate sets, matching the point packing in `cube`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cube import check_enumerable, popcount
from .funcs import ValueOracle

SPARSE_EPS = 1e-12


class BudgetExceeded(RuntimeError):
    """Raised when a candidate-coefficient sweep would exceed its budget."""


def parity_eval(subset: int, x: int) -> int:
    """chi_S(x) in {-1, +1}."""
    return -1 if (subset & x).bit_count() & 1 else 1


def parity_signs(subset: int, xs: np.ndarray) -> np.ndarray:
    """chi_S over an array of packed points."""
    return 1.0 - 2.0 * (popcount(np.asarray(xs, dtype=np.int64) & subset) & 1)


def fwht(values: np.ndarray) -> np.ndarray:
    """In-place-style Walsh-Hadamard butterfly; output[S] = sum_x chi_S(x) v[x].

    The transform matrix is its own inverse up to the factor 2^n.
    """
    a = np.asarray(values, dtype=float).copy()
    m = a.size
    if m & (m - 1):
        raise ValueError(f"length {m} is not a power of two")
    h = 1
    while h < m:
        a = a.reshape(-1, 2 * h)
        left = a[:, :h].copy()
        right = a[:, h:].copy()
        a[:, :h] = left + right
        a[:, h:] = left - right
        h *= 2
    return a.reshape(-1)


@dataclass
class Spectrum:
    """Sparse Fourier coefficients: mask -> coeff(S), over dimension n."""

    n: int
    coeffs: dict[int, float] = field(default_factory=dict)

    @staticmethod
    def from_dense(values: np.ndarray, n: int, eps: float = SPARSE_EPS) -> "Spectrum":
        coeffs = {
            int(s): float(c) for s, c in enumerate(values) if abs(c) > eps
        }
        return Spectrum(n, coeffs)

    def dense(self) -> np.ndarray:
        check_enumerable(self.n, "dense spectrum")
        out = np.zeros(1 << self.n)
        for s, c in self.coeffs.items():
            out[s] = c
        return out

    def degree(self) -> int:
        return max((s.bit_count() for s in self.coeffs), default=0)

    def support_union(self) -> int:
        mask = 0
        for s in self.coeffs:
            mask |= s
        return mask

    def evaluate(self, x: int) -> float:
        return sum(c * parity_eval(s, x) for s, c in self.coeffs.items())

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        out = np.zeros(xs.shape, dtype=float)
        for s, c in self.coeffs.items():
            out += c * parity_signs(s, xs)
        return out

    def table(self) -> np.ndarray:
        """Truth table of the represented function (synthesis transform)."""
        return fwht(self.dense())

    def to_oracle(self, label: str = "") -> ValueOracle:
        return ValueOracle.from_table(self.table(), label=label)

    def to_csv(self) -> str:
        lines = ["mask,coefficient"]
        for s in sorted(self.coeffs):
            lines.append(f"{s},{self.coeffs[s]:.17g}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_csv(text: str, n: int) -> "Spectrum":
        coeffs = {}
        rows = [r for r in text.strip().splitlines() if r]
        for row in rows[1:]:
            mask, coeff = row.split(",")
            coeffs[int(mask)] = float(coeff)
        return Spectrum(n, coeffs)


def transform(f: ValueOracle) -> Spectrum:
    """Full exact spectrum of an oracle via the fast butterfly, O(n 2^n)."""
    t = f.table()
    dense = fwht(t) / t.size
    return Spectrum.from_dense(dense, f.n)


def inverse_transform(sp: Spectrum) -> np.ndarray:
    """Truth table reproducing the function the spectrum was built from."""
    return sp.table()


def spectral_l1(sp: Spectrum) -> float:
    """Sum of absolute coefficients."""
    return float(sum(abs(c) for c in sp.coeffs.values()))


def derivative_spectrum_check(f: ValueOracle, i: int, j: int) -> tuple[float, float]:
    """Two routes to the same quantity: E[(mixed second difference)^2].

    Returns (pointwise enumeration, 16 * sum of squared coefficients over
    masks containing both i and j); the two agree for every function.
    """
    if i == j:
        raise ValueError("need two distinct coordinates")
    check_enumerable(f.n, "derivative identity check")
    t = f.table()
    idx = np.arange(1 << f.n)
    bi, bj = 1 << i, 1 << j
    base = idx[((idx >> i) & 1 == 0) & ((idx >> j) & 1 == 0)]
    dd = t[base | bi | bj] - t[base | bi] - t[base | bj] + t[base]
    pointwise = float(np.mean(dd**2))

    sp = transform(f)
    both = sum(c * c for s, c in sp.coeffs.items() if (s & bi) and (s & bj))
    return pointwise, 16.0 * both


def pairwise_coefficient_gap(f: ValueOracle) -> tuple[float, float, tuple[int, int]]:
    """Worst pair for the submodular pairwise bound.

    Returns (|coeff({i,j})|, sum of coeff(S)^2 over S containing i and j, and
    the minimizing pair), where the pair minimizes the margin of
    |coeff({i,j})| >= 1/2 * sum.
    """
    sp = transform(f)
    worst = (math.inf, 0.0, (0, 1))
    for i in range(f.n):
        for j in range(i + 1, f.n):
            bi, bj = 1 << i, 1 << j
            pair = abs(sp.coeffs.get(bi | bj, 0.0))
            total = sum(c * c for s, c in sp.coeffs.items() if (s & bi) and (s & bj))
            if pair - 0.5 * total < worst[0] - 0.5 * worst[1]:
                worst = (pair, total, (i, j))
    return worst


def sample_points(n: int, m: int, seed) -> np.ndarray:
    """m uniform points as packed ints, fully determined by the seed."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 1 << n, size=m, dtype=np.int64)


def estimate_coefficient(f: ValueOracle, subset: int, m: int, seed) -> float:
    """Empirical mean of f(x) chi_S(x) over m seeded uniform samples."""
    if m < 1:
        raise ValueError("need at least one sample")
    xs = sample_points(f.n, m, seed)
    ys = f.eval_many(xs)
    return float(np.mean(ys * parity_signs(subset, xs)))


def candidate_masks(variables: int, degree: int) -> list[int]:
    """All subsets of the variable mask with at most ``degree`` members."""
    members = [i for i in range(variables.bit_length()) if (variables >> i) & 1]
    masks = []
    for k in range(min(degree, len(members)) + 1):
        for combo in itertools.combinations(members, k):
            m = 0
            for c in combo:
                m |= 1 << c
            masks.append(m)
    return masks


def empirical_coefficients(xs: np.ndarray, ys: np.ndarray, n: int, masks) -> dict[int, float]:
    """Shared-sample estimates mean(y * chi_S(x)) for every mask at once.

    When n is within the enumeration cap the estimates are computed for all
    masks in one butterfly over per-point label sums, which is numerically
    the same estimator as the direct mean.
    """
    from .cube import enum_cap

    m = len(xs)
    masks = list(masks)
    if n <= min(20, enum_cap()):
        sums = np.bincount(np.asarray(xs, dtype=np.int64), weights=ys, minlength=1 << n)
        all_coeffs = fwht(sums) / m
        return {int(s): float(all_coeffs[s]) for s in masks}
    out = {}
    for s in masks:
        out[int(s)] = float(np.mean(ys * parity_signs(s, xs)))
    return out


def low_degree_estimate(
    data,
    variables: int,
    degree: int,
    m: int = 0,
    seed=0,
    *,
    n: int | None = None,
    exact: bool = False,
    budget: int = 1 << 20,
) -> Spectrum:
    """Spectrum supported on subsets of ``variables`` of size <= degree.

    ``data`` is a ValueOracle (exact mode or self-sampled) or an (xs, ys)
    pair of arrays (then ``n`` is required).  All sampled coefficients come
    from the same sample.
    """
    masks = candidate_masks(variables, degree)
    if len(masks) > budget:
        raise BudgetExceeded(
            f"{len(masks)} candidate coefficients exceed budget {budget}"
        )
    if exact:
        if not isinstance(data, ValueOracle):
            raise ValueError("exact mode needs a ValueOracle")
        sp = transform(data)
        coeffs = {s: sp.coeffs.get(s, 0.0) for s in masks}
        return Spectrum(data.n, {s: c for s, c in coeffs.items() if abs(c) > SPARSE_EPS})

    if isinstance(data, ValueOracle):
        if m < 1:
            raise ValueError("sampled mode needs m >= 1")
        xs = sample_points(data.n, m, seed)
        ys = data.eval_many(xs)
        n = data.n
    else:
        xs, ys = data
        if n is None:
            raise ValueError("pass n explicitly with a raw (xs, ys) sample")
    est = empirical_coefficients(np.asarray(xs), np.asarray(ys, dtype=float), n, masks)
    return Spectrum(n, {s: c for s, c in est.items() if c != 0.0})
