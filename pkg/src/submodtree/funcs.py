"""Value oracles over {0,1}^n: submodular families, restrictions, checkers.

A `ValueOracle` is point-by-point query access to a real function on the
cube.  Restrictions and flipped views share the root oracle's query counter,
so query-complexity reports survive the recursive constructions that work on
subcubes.

All inequality checks use the tolerance TOL = 1e-9: ties at a bound count as
satisfying it.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from . import cube
from .cube import check_enumerable, format_point

TOL = 1e-9

FAMILIES = (
    "coverage",
    "cut",
    "budget_additive",
    "matroid_rank_partition",
    "concave_profile",
    "truth_table",
)


class InvalidFamilySpec(ValueError):
    """Raised for internally inconsistent family parameters."""


class _QueryCounter:
    """Thread-safe monotone evaluation counter shared along restrictions."""

    __slots__ = ("_lock", "_count")

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._count = 0

    def charge(self, k: int = 1) -> None:
        with self._lock:
            self._count += k

    @property
    def count(self) -> int:
        return self._count


class ValueOracle:
    """Deterministic real-valued function on {0,1}^n, queried point by point.

    Evaluation is pure apart from the query counter.  ``table()`` caches the
    full truth table (n <= enumeration cap) and charges 2^n queries once.
    """

    def __init__(
        self,
        n: int,
        fn: Callable[[int], float],
        *,
        label: str = "",
        counter: _QueryCounter | None = None,
        table: np.ndarray | None = None,
    ) -> None:
        self.n = n
        self._fn = fn
        self.label = label
        self._counter = counter if counter is not None else _QueryCounter()
        self._table = table

    @staticmethod
    def from_table(values, label: str = "") -> "ValueOracle":
        values = np.asarray(values, dtype=float)
        size = values.size
        n = size.bit_length() - 1
        if size != (1 << n):
            raise ValueError(f"table length {size} is not a power of two")
        return ValueOracle(n, lambda x: float(values[x]), label=label, table=values)

    def __call__(self, x: int) -> float:
        self._counter.charge()
        return self._fn(x)

    def eval_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs)
        self._counter.charge(int(xs.size))
        if self._table is not None:
            return self._table[xs]
        return np.array([self._fn(int(x)) for x in xs.reshape(-1)]).reshape(xs.shape)

    def table(self) -> np.ndarray:
        """Full truth table indexed by little-endian point integers."""
        if self._table is None:
            check_enumerable(self.n, "truth table")
            self._counter.charge(1 << self.n)
            self._table = np.array([self._fn(x) for x in range(1 << self.n)], dtype=float)
        return self._table

    @property
    def query_count(self) -> int:
        return self._counter.count


@dataclass(frozen=True)
class Restriction:
    """Partial assignment: ``fixed`` maps coordinates to bits, rest are free."""

    n: int
    fixed: Mapping[int, int]

    def __post_init__(self) -> None:
        for i, b in self.fixed.items():
            if not 0 <= i < self.n:
                raise ValueError(f"fixed coordinate {i} outside [0, {self.n})")
            if b not in (0, 1):
                raise ValueError(f"fixed value must be a bit, got {b}")

    @property
    def free(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if i not in self.fixed)

    def base_point(self) -> int:
        x = 0
        for i, b in self.fixed.items():
            if b:
                x |= 1 << i
        return x


def restrict(f: ValueOracle, restriction: Restriction) -> ValueOracle:
    """Oracle on the free coordinates of the subcube fixed by ``restriction``.

    A restriction of a submodular function is submodular.  The result shares
    f's query counter.
    """
    if restriction.n != f.n:
        raise ValueError(f"restriction is over n={restriction.n}, oracle n={f.n}")
    if not restriction.fixed:
        return f
    free = restriction.free
    base = restriction.base_point()

    def expand(z: int) -> int:
        x = base
        for local, g in enumerate(free):
            if (z >> local) & 1:
                x |= 1 << g
        return x

    sub_table = None
    if f._table is not None:
        m = len(free)
        full = f._table.reshape((2,) * f.n)
        # axis (n-1-i) of the C-order reshape carries coordinate i
        idx = tuple(
            slice(None) if i in free else restriction.fixed[i]
            for i in reversed(range(f.n))
        )
        sub_table = np.ascontiguousarray(full[idx]).reshape(1 << m)
        return ValueOracle(
            m,
            lambda z: float(sub_table[z]),
            label=f.label and f"{f.label}|restricted",
            counter=f._counter,
            table=sub_table,
        )

    return ValueOracle(
        len(free),
        lambda z: f._fn(expand(z)),
        label=f.label and f"{f.label}|restricted",
        counter=f._counter,
    )


def flip_oracle(f: ValueOracle) -> ValueOracle:
    """The view x -> f(not x); an involution, submodularity-preserving."""
    full = (1 << f.n) - 1
    table = f._table[::-1].copy() if f._table is not None else None
    return ValueOracle(
        f.n,
        lambda x: f._fn(x ^ full),
        label=f.label and f"{f.label}|flipped",
        counter=f._counter,
        table=table,
    )


# --- discrete derivatives -------------------------------------------------

def derivative(f: ValueOracle, i: int, x: int) -> float:
    """f with coordinate i set to 1, minus f with it set to 0."""
    if not 0 <= i < f.n:
        raise ValueError(f"coordinate {i} outside [0, {f.n})")
    hi = x | (1 << i)
    lo = hi ^ (1 << i)
    return f(hi) - f(lo)


def second_derivative(f: ValueOracle, i: int, j: int, x: int) -> float:
    """Mixed difference over coordinates i != j; <= 0 iff f is submodular."""
    if i == j:
        raise ValueError("second derivative needs two distinct coordinates")
    bi, bj = 1 << i, 1 << j
    base = x & ~(bi | bj)
    return f(base | bi | bj) - f(base | bi) - f(base | bj) + f(base)


def _derivative_table(table: np.ndarray, n: int, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives along i at every point with x_i = 0, plus those points."""
    idx = np.arange(1 << n)
    lo = idx[(idx >> i) & 1 == 0]
    return table[lo | (1 << i)] - table[lo], lo


@dataclass(frozen=True)
class CheckResult:
    """Outcome of an exhaustive inequality check, with a witness on failure.

    The witness is (i, j, point) for pair checks and (i, point) for
    single-coordinate checks, all 0-based.
    """

    ok: bool
    witness: tuple | None = None
    extreme: float | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_submodular(f: ValueOracle, tol: float = TOL) -> CheckResult:
    """Exhaustive check that every mixed second difference is <= tol."""
    check_enumerable(f.n, "submodularity check")
    t = f.table()
    n = f.n
    idx = np.arange(1 << n)
    worst = -np.inf
    for i in range(n):
        for j in range(i + 1, n):
            bi, bj = 1 << i, 1 << j
            base = idx[((idx >> i) & 1 == 0) & ((idx >> j) & 1 == 0)]
            dd = t[base | bi | bj] - t[base | bi] - t[base | bj] + t[base]
            k = int(np.argmax(dd))
            if dd[k] > worst:
                worst = float(dd[k])
            if dd[k] > tol:
                return CheckResult(False, (i, j, int(base[k])), float(dd[k]))
    return CheckResult(True, None, worst)


def is_monotone(f: ValueOracle, tol: float = TOL) -> CheckResult:
    """Exhaustive check that all discrete derivatives are >= -tol."""
    check_enumerable(f.n, "monotonicity check")
    t = f.table()
    for i in range(f.n):
        d, lo = _derivative_table(t, f.n, i)
        k = int(np.argmin(d))
        if d[k] < -tol:
            return CheckResult(False, (i, int(lo[k])), float(d[k]))
    return CheckResult(True)


def is_alpha_monotone_decreasing(f: ValueOracle, alpha: float, tol: float = TOL) -> CheckResult:
    """Exhaustive check that every discrete derivative is <= alpha + tol."""
    check_enumerable(f.n, "alpha-monotone check")
    t = f.table()
    for i in range(f.n):
        d, lo = _derivative_table(t, f.n, i)
        k = int(np.argmax(d))
        if d[k] > alpha + tol:
            return CheckResult(False, (i, int(lo[k])), float(d[k]))
    return CheckResult(True)


def lipschitz_constant(f: ValueOracle) -> float:
    """max over i, x of |derivative along i at x| (exhaustive)."""
    check_enumerable(f.n, "Lipschitz constant")
    t = f.table()
    worst = 0.0
    for i in range(f.n):
        d, _ = _derivative_table(t, f.n, i)
        if d.size:
            worst = max(worst, float(np.max(np.abs(d))))
    return worst


def uniform_mean(f: ValueOracle) -> float:
    return float(np.mean(f.table()))


def uniform_variance(f: ValueOracle) -> float:
    t = f.table()
    return float(np.mean((t - np.mean(t)) ** 2))


# --- families ---------------------------------------------------------------

@dataclass(frozen=True)
class FamilySpec:
    """Parameters of one normalized submodular-family instance.

    ``params`` uses the JSON field names documented in the README:
      coverage:               universe_size, sets (1-based element lists)
      cut:                    edges (1-based vertex pairs)
      budget_additive:        weights, budget
      matroid_rank_partition: blocks (1-based coordinate lists), caps
      concave_profile:        profile (n+1 values)
      truth_table:            values (2^n, little-endian point order)
    """

    family: str
    n: int
    params: dict

    def to_json(self) -> str:
        return json.dumps({"family": self.family, "n": self.n, **self.params})

    @staticmethod
    def from_json(text: str) -> "FamilySpec":
        obj = json.loads(text)
        family = obj.pop("family")
        n = obj.pop("n")
        return FamilySpec(family, n, obj)


def _validate_profile(profile: Sequence[float], n: int) -> None:
    if len(profile) != n + 1:
        raise InvalidFamilySpec(f"profile needs {n + 1} values, got {len(profile)}")
    for v in profile:
        if not -TOL <= v <= 1 + TOL:
            raise InvalidFamilySpec(f"profile value {v} outside [0, 1]")
    for i in range(n - 1):
        if profile[i + 1] - profile[i] < profile[i + 2] - profile[i + 1] - TOL:
            raise InvalidFamilySpec(
                f"profile increments not nonincreasing at position {i}"
            )


def instantiate(spec: FamilySpec) -> ValueOracle:
    """Build the normalized value oracle of a family instance (range [0,1])."""
    family, n, p = spec.family, spec.n, spec.params
    if n < 1:
        raise InvalidFamilySpec(f"dimension must be positive, got {n}")
    label = f"{family}-n{n}"

    if family == "coverage":
        u = int(p["universe_size"])
        sets = p["sets"]
        if u < 1:
            raise InvalidFamilySpec("coverage universe is empty")
        if len(sets) != n:
            raise InvalidFamilySpec(f"coverage needs {n} sets, got {len(sets)}")
        masks = []
        for s in sets:
            m = 0
            for e in s:
                if not 1 <= e <= u:
                    raise InvalidFamilySpec(f"element {e} outside universe 1..{u}")
                m |= 1 << (e - 1)
            masks.append(m)

        def cov(x: int) -> float:
            covered = 0
            for i, m in enumerate(masks):
                if (x >> i) & 1:
                    covered |= m
            return covered.bit_count() / u

        return ValueOracle(n, cov, label=label)

    if family == "cut":
        edges = [(int(a), int(b)) for a, b in p["edges"]]
        if not edges:
            raise InvalidFamilySpec("cut needs at least one edge")
        for a, b in edges:
            if a == b or not (1 <= a <= n and 1 <= b <= n):
                raise InvalidFamilySpec(f"bad edge ({a},{b}) for n={n}")
        m = len(edges)

        def cut(x: int) -> float:
            crossing = sum(
                1 for a, b in edges if ((x >> (a - 1)) & 1) != ((x >> (b - 1)) & 1)
            )
            return crossing / m

        return ValueOracle(n, cut, label=label)

    if family == "budget_additive":
        w = [float(v) for v in p["weights"]]
        b = float(p["budget"])
        if len(w) != n or any(v < 0 for v in w) or b <= 0:
            raise InvalidFamilySpec("budget_additive needs n nonnegative weights and budget > 0")

        def badd(x: int) -> float:
            total = sum(w[i] for i in range(n) if (x >> i) & 1)
            return min(total, b) / b

        return ValueOracle(n, badd, label=label)

    if family == "matroid_rank_partition":
        blocks = [cube.mask_of(i - 1 for i in blk) for blk in p["blocks"]]
        caps = [int(c) for c in p["caps"]]
        if len(blocks) != len(caps) or not blocks:
            raise InvalidFamilySpec("blocks and caps must be nonempty, same length")
        union = 0
        for blk in blocks:
            if blk & union:
                raise InvalidFamilySpec("partition blocks overlap")
            union |= blk
        if union != (1 << n) - 1:
            raise InvalidFamilySpec("partition blocks must cover all coordinates")
        if any(c < 1 for c in caps):
            raise InvalidFamilySpec("caps must be >= 1")
        total = sum(caps)

        def rank(x: int) -> float:
            return sum(min((x & blk).bit_count(), c) for blk, c in zip(blocks, caps)) / total

        return ValueOracle(n, rank, label=label)

    if family == "concave_profile":
        profile = [float(v) for v in p["profile"]]
        _validate_profile(profile, n)

        def prof(x: int) -> float:
            return profile[x.bit_count()]

        return ValueOracle(n, prof, label=label)

    if family == "truth_table":
        values = np.asarray(p["values"], dtype=float)
        if values.size != (1 << n):
            raise InvalidFamilySpec(f"truth_table needs 2^{n} values, got {values.size}")
        if values.min() < -TOL or values.max() > 1 + TOL:
            raise InvalidFamilySpec("truth_table values outside [0, 1]")
        oracle = ValueOracle.from_table(values, label=label)
        return oracle

    raise InvalidFamilySpec(f"unknown family {family!r}")


def generate_random(family: str, n: int, seed: int) -> FamilySpec:
    """Deterministic random instance of a family; always passes is_submodular."""
    rng = np.random.default_rng((0x5EED, seed, n, FAMILIES.index(family)))

    if family == "coverage":
        u = int(rng.integers(max(2, n // 2), 2 * n + 2))
        sets = []
        for _ in range(n):
            size = int(rng.integers(1, u + 1))
            sets.append(sorted(int(e) + 1 for e in rng.choice(u, size=size, replace=False)))
        return FamilySpec(family, n, {"universe_size": u, "sets": sets})

    if family == "cut":
        pairs = [(a + 1, b + 1) for a in range(n) for b in range(a + 1, n)]
        m = int(rng.integers(1, len(pairs) + 1)) if pairs else 1
        chosen = rng.choice(len(pairs), size=m, replace=False) if pairs else []
        edges = [list(pairs[int(i)]) for i in sorted(int(c) for c in chosen)]
        if not edges:  # n == 1 has no pairs; fall back to a self-free dummy
            raise InvalidFamilySpec("cut family needs n >= 2")
        return FamilySpec(family, n, {"edges": edges})

    if family == "budget_additive":
        weights = [float(w) for w in rng.uniform(0.05, 1.0, size=n)]
        budget = float(rng.uniform(max(weights), sum(weights)))
        return FamilySpec(family, n, {"weights": weights, "budget": budget})

    if family == "matroid_rank_partition":
        k = int(rng.integers(1, n + 1))
        owners = rng.integers(0, k, size=n)
        blocks = [[i + 1 for i in range(n) if owners[i] == j] for j in range(k)]
        blocks = [b for b in blocks if b]
        caps = [int(rng.integers(1, len(b) + 1)) for b in blocks]
        return FamilySpec(family, n, {"blocks": blocks, "caps": caps})

    if family == "concave_profile":
        # sorted nonincreasing increments give a concave weight profile;
        # negative tail increments allowed so some instances are non-monotone
        increments = np.sort(rng.uniform(-0.6, 1.0, size=n))[::-1]
        values = np.concatenate([[0.0], np.cumsum(increments)])
        lo, hi = float(values.min()), float(values.max())
        if hi - lo < 1e-12:
            profile = [0.5] * (n + 1)
        else:
            profile = [float((v - lo) / (hi - lo)) for v in values]
        return FamilySpec(family, n, {"profile": profile})

    raise InvalidFamilySpec(f"cannot generate family {family!r}")


GENERATED_FAMILIES = (
    "coverage",
    "cut",
    "budget_additive",
    "matroid_rank_partition",
    "concave_profile",
)


def iter_corpus(
    families: Sequence[str] = GENERATED_FAMILIES,
    ns: Sequence[int] = tuple(range(4, 11)),
    seeds: Sequence[int] = tuple(range(20)),
) -> Iterator[tuple[str, ValueOracle]]:
    """The generated test corpus: (instance id, oracle) pairs."""
    for family in families:
        for n in ns:
            for seed in seeds:
                spec = generate_random(family, n, seed)
                oracle = instantiate(spec)
                yield f"{family}-n{n}-s{seed}", oracle


def describe_witness(witness: tuple, n: int) -> str:
    """1-based rendering of a checker witness for messages and reports."""
    if witness is None:
        return ""
    *coords, x = witness
    pretty = ",".join(str(c + 1) for c in coords)
    return f"(i={pretty}, x={format_point(x, n)})"
