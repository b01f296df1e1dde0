"""Learning algorithms driven by the decision-tree structure theory.

Pipeline for PAC learning a submodular target from uniform examples:
degree-1 and degree-2 coefficient estimates locate the influential
variables (a large coefficient anywhere forces a large pair coefficient,
by the pairwise bound for submodular functions), and a low-degree
regression over those variables produces the hypothesis.

``km_search`` is a degree-restricted Kushilevitz-Mansour search for all
significant coefficients of a [-1,1]-valued oracle.  Its output contract,
for threshold theta and degree cap d:
  (1) every retained mask has size <= d;
  (2) every S with |coeff(S)| >= theta and |S| <= d is retained;
  (3) no S with |coeff(S)| <= theta/2 is retained;
  (4) every retained estimate is within theta/4 of the true coefficient.
The guarantee is probabilistic; sample sizes are set so each clause holds
with high probability per run.  Running it at theta = eps^2 / (2L) gives an
agnostic learner against every competitor of spectral l1 norm at most L and
degree at most d, losing only eps in l2 distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fourier
from .cube import mask_of, subset_members
from .dtree import DecisionTree, map_leaves
from .fourier import Spectrum, empirical_coefficients, parity_signs, sample_points, transform
from .funcs import ValueOracle


@dataclass(frozen=True)
class LearnerBudget:
    """Knobs of the sampled learners; every randomized run replays from seed."""

    m: int = 1 << 16
    seed: int = 0
    gamma: float = 0.1
    degree: int = 2
    theta: float = 0.1
    epsilon: float = 0.25
    L: float = 1.0

    def __post_init__(self) -> None:
        if self.m < 1 or self.degree < 0:
            raise ValueError("sample count and degree must be positive")
        if not 0 < self.gamma < 0.5:
            raise ValueError(f"gamma must be in (0, 1/2), got {self.gamma}")
        for name, v in (("theta", self.theta), ("epsilon", self.epsilon), ("L", self.L)):
            if v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")


@dataclass
class Hypothesis:
    """A learned sparse spectrum plus the budget actually spent."""

    spectrum: Spectrum
    variables_used: int
    degree: int | None
    samples_used: int
    queries_used: int
    info: dict = field(default_factory=dict)

    def evaluate(self, x: int) -> float:
        return self.spectrum.evaluate(x)

    def to_oracle(self, label: str = "hypothesis") -> ValueOracle:
        return self.spectrum.to_oracle(label)


@dataclass(frozen=True)
class LabeledSample:
    """Uniform examples (packed points, real labels)."""

    n: int
    xs: np.ndarray
    ys: np.ndarray

    def __len__(self) -> int:
        return len(self.xs)


def draw_sample(f: ValueOracle, m: int, seed) -> LabeledSample:
    if m < 1:
        raise ValueError("need at least one example")
    xs = sample_points(f.n, m, seed)
    return LabeledSample(f.n, xs, f.eval_many(xs))


def _low_order_coefficients(data) -> tuple[dict[int, float], int]:
    """All degree-1 and degree-2 coefficients: exact for an oracle, shared-
    sample estimates for a LabeledSample.  Returns (coeffs, n)."""
    if isinstance(data, ValueOracle):
        sp = transform(data)
        n = data.n
        out = {}
        for i in range(n):
            out[1 << i] = sp.coeffs.get(1 << i, 0.0)
            for j in range(i + 1, n):
                m = (1 << i) | (1 << j)
                out[m] = sp.coeffs.get(m, 0.0)
        return out, n
    if not isinstance(data, LabeledSample):
        raise TypeError("expected a ValueOracle or LabeledSample")
    if len(data) == 0:
        raise ValueError("empty sample")
    n = data.n
    masks = [1 << i for i in range(n)]
    masks += [(1 << i) | (1 << j) for i in range(n) for j in range(i + 1, n)]
    return empirical_coefficients(data.xs, data.ys, n, masks), n


def find_influential_variables(data, gamma: float) -> tuple[int, ...]:
    """Variables that can matter for a submodular target, from degree <= 2
    coefficients only.

    Keeps i when some pair estimate |c({i,j})| >= 3 gamma^2 / 2 or the
    singleton estimate |c({i})| >= gamma / 2.  For submodular targets this
    catches every variable appearing in any coefficient of magnitude >= gamma
    (a set coefficient that large forces a pair coefficient >= 2 gamma^2, with
    slack covering estimation error gamma^2 / 2).
    """
    if not 0 < gamma < 0.5:
        raise ValueError(f"gamma must be in (0, 1/2), got {gamma}")
    coeffs, n = _low_order_coefficients(data)
    J = set()
    pair_cut = 1.5 * gamma * gamma
    single_cut = gamma / 2.0
    for mask, c in coeffs.items():
        k = mask.bit_count()
        if k == 2 and abs(c) >= pair_cut:
            J.update(subset_members(mask))
        elif k == 1 and abs(c) >= single_cut:
            J.update(subset_members(mask))
    return tuple(sorted(J))


def default_gamma(epsilon: float) -> float:
    return max(2.0**-20, 2.0 ** (-4.0 / (epsilon * epsilon)))


def default_degree(epsilon: float) -> int:
    return math.ceil(1.0 / (epsilon * epsilon))


def pac_learn(
    data,
    epsilon: float,
    *,
    gamma: float | None = None,
    degree: int | None = None,
    m: int | None = None,
    seed: int = 0,
    exact: bool = False,
    budget: int = 1 << 20,
) -> Hypothesis:
    """Learn a [0,1] submodular target within l2 error epsilon.

    ``data`` is a ValueOracle (sampled from with ``m`` examples, or used
    exactly with ``exact=True``) or a ready LabeledSample.  One sample feeds
    both stages.  gamma and degree default from epsilon but every suite here
    passes them explicitly.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    gamma = gamma if gamma is not None else default_gamma(epsilon)
    degree = degree if degree is not None else default_degree(epsilon)

    if exact and not isinstance(data, ValueOracle):
        raise ValueError("exact mode needs a ValueOracle")
    queries_before = data.query_count if isinstance(data, ValueOracle) else 0
    if isinstance(data, ValueOracle) and not exact:
        if m is None:
            raise ValueError("sampled mode needs m")
        sample = draw_sample(data, m, seed)
        stage_data = sample
    else:
        stage_data = data

    J = find_influential_variables(stage_data, gamma)
    Jmask = mask_of(J)
    if exact:
        spectrum = fourier.low_degree_estimate(data, Jmask, degree, exact=True, budget=budget)
        samples_used = 0
    else:
        sample = stage_data
        spectrum = fourier.low_degree_estimate(
            (sample.xs, sample.ys), Jmask, degree, n=sample.n, budget=budget
        )
        samples_used = len(sample)
    queries_used = (data.query_count - queries_before) if isinstance(data, ValueOracle) else 0
    return Hypothesis(
        spectrum=spectrum,
        variables_used=Jmask,
        degree=degree,
        samples_used=samples_used,
        queries_used=queries_used,
        info={"J": list(J), "gamma": gamma, "epsilon": epsilon},
    )


# --- significant-coefficient search ------------------------------------------


def _bucket_weight_estimate(
    f: ValueOracle, k: int, pattern: int, m: int, rng: np.random.Generator
) -> float:
    """Paired-sample estimate of sum of coeff(S)^2 over S with S cap [k] =
    pattern: E[f(x1,y) f(x2,y) chi(x1) chi(x2)] with shared suffix y."""
    n = f.n
    x1 = rng.integers(0, 1 << k, size=m, dtype=np.int64)
    x2 = rng.integers(0, 1 << k, size=m, dtype=np.int64)
    y = rng.integers(0, 1 << (n - k), size=m, dtype=np.int64) if n > k else np.zeros(m, np.int64)
    p1 = x1 | (y << k)
    p2 = x2 | (y << k)
    terms = (
        f.eval_many(p1)
        * f.eval_many(p2)
        * parity_signs(pattern, x1)
        * parity_signs(pattern, x2)
    )
    return float(np.mean(terms))


def _km_sample_sizes(theta: float, n: int) -> tuple[int, int]:
    scale = math.log(48.0 * max(n, 2))
    bucket = math.ceil(64.0 * scale / theta**4)
    coeff = math.ceil(256.0 * scale / theta**2)
    return bucket, coeff


def km_search(
    f: ValueOracle,
    theta: float,
    degree: int | None = None,
    seed: int = 0,
    *,
    bucket_samples: int | None = None,
    coeff_samples: int | None = None,
) -> Hypothesis:
    """All significant Fourier coefficients of a [-1,1]-valued oracle.

    Recursive prefix-bucket search: a bucket holds the masks agreeing with a
    fixed membership pattern on the first k coordinates, and is expanded
    while its estimated weight (sum of squared coefficients) stays above
    theta^2 / 2.  Buckets whose pattern already exceeds the degree cap are
    pruned.  Surviving singleton masks keep their estimated coefficient when
    |estimate| >= 3 theta / 4.  Each estimate draws from its own
    bucket-derived seed, so results are independent of evaluation order.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    n = f.n
    d = degree if degree is not None else n
    mb_default, mc_default = _km_sample_sizes(theta, n)
    mb = bucket_samples if bucket_samples is not None else mb_default
    mc = coeff_samples if coeff_samples is not None else mc_default

    queries_before = f.query_count
    expand_cut = theta * theta / 2.0
    keep_cut = 0.75 * theta
    buckets_examined = 0
    retained: dict[int, float] = {}

    stack = [(0, 0)]
    while stack:
        k, pattern = stack.pop()
        if k == n:
            rng = np.random.default_rng((0x6B37, seed, n, pattern, 1))
            xs = sample_points(n, mc, rng)
            est = float(np.mean(f.eval_many(xs) * parity_signs(pattern, xs)))
            if abs(est) >= keep_cut:
                retained[pattern] = est
            continue
        for bit in (1, 0):
            child = pattern | (bit << k)
            if child.bit_count() > d:
                continue
            buckets_examined += 1
            rng = np.random.default_rng((0x6B37, seed, n, child, 0, k + 1))
            w = _bucket_weight_estimate(f, k + 1, child, mb, rng)
            if w >= expand_cut:
                stack.append((k + 1, child))

    spectrum = Spectrum(n, dict(sorted(retained.items())))
    return Hypothesis(
        spectrum=spectrum,
        variables_used=spectrum.support_union(),
        degree=d,
        samples_used=0,
        queries_used=f.query_count - queries_before,
        info={
            "theta": theta,
            "buckets_examined": buckets_examined,
            "bucket_samples": mb,
            "coeff_samples": mc,
        },
    )


def _rescaled_to_signed(f: ValueOracle) -> ValueOracle:
    """x -> 2 f(x) - 1, sharing f's counter."""
    table = None
    if f._table is not None:
        table = 2.0 * f._table - 1.0
    return ValueOracle(
        f.n, lambda x: 2.0 * f._fn(x) - 1.0, label=f"{f.label}|signed", counter=f._counter, table=table
    )


def agnostic_l2_learn(
    f: ValueOracle,
    epsilon: float,
    L: float,
    degree: int | None = None,
    seed: int = 0,
    *,
    unit_range: bool = False,
    bucket_samples: int | None = None,
    coeff_samples: int | None = None,
) -> Hypothesis:
    """Agnostic l2 learning of low-spectral-norm competitors via km_search.

    For f with range [-1,1], runs km_search at theta = epsilon^2 / (2 L); the
    retained estimates h satisfy, for every g of spectral l1 norm <= L and
    degree <= d, the bound ||f - h||_2 <= ||f - g||_2 + epsilon.

    ``unit_range=True`` accepts a [0,1]-valued oracle: labels are rescaled to
    2f - 1, the competitor norm maps to 2L + 1 and the accuracy to
    2 * epsilon, and the output spectrum is mapped back; the stated guarantee
    then holds verbatim in the original [0,1] space.
    """
    if epsilon <= 0 or L <= 0:
        raise ValueError("epsilon and L must be positive")
    if unit_range:
        F = _rescaled_to_signed(f)
        eps_eff = 2.0 * epsilon
        L_eff = 2.0 * L + 1.0
    else:
        F = f
        eps_eff = epsilon
        L_eff = L
    theta = eps_eff * eps_eff / (2.0 * L_eff)
    hyp = km_search(
        F, theta, degree, seed, bucket_samples=bucket_samples, coeff_samples=coeff_samples
    )
    if unit_range:
        coeffs = {s: c / 2.0 for s, c in hyp.spectrum.coeffs.items()}
        coeffs[0] = coeffs.get(0, 0.0) + 0.5
        hyp.spectrum = Spectrum(f.n, coeffs)
        hyp.variables_used = hyp.spectrum.support_union()
    hyp.info.update({"epsilon": epsilon, "L": L, "unit_range": unit_range})
    return hyp


# --- threshold decomposition --------------------------------------------------


def threshold_oracle(g: ValueOracle, theta: float) -> ValueOracle:
    """Boolean indicator of g(x) >= theta (one g query per call)."""
    table = None
    if g._table is not None:
        table = (g._table >= theta).astype(float)
    return ValueOracle(
        g.n,
        lambda x: 1.0 if g._fn(x) >= theta else 0.0,
        label=f"{g.label}|>={theta:g}",
        counter=g._counter,
        table=table,
    )


def threshold_decompose(g: ValueOracle, epsilon: float) -> tuple[list[ValueOracle], ValueOracle]:
    """Split a [0,1]-valued g into level indicators plus their recombination.

    Returns the indicators of g >= i*epsilon for i = 1 .. floor(1/epsilon)
    and g' = epsilon * (their sum); g' never exceeds g and is within epsilon
    of it everywhere.
    """
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    count = int(math.floor(1.0 / epsilon))
    levels = [threshold_oracle(g, i * epsilon) for i in range(1, count + 1)]

    def recombined(x: int) -> float:
        v = g._fn(x)
        return epsilon * sum(1.0 for i in range(1, count + 1) if v >= i * epsilon)

    table = None
    if g._table is not None:
        acc = np.zeros_like(g._table)
        for i in range(1, count + 1):
            acc += (g._table >= i * epsilon).astype(float)
        table = epsilon * acc
    gp = ValueOracle(
        g.n, recombined, label=f"{g.label}|staircase", counter=g._counter, table=table
    )
    return levels, gp


def threshold_tree(tree: DecisionTree, theta: float) -> DecisionTree:
    """Same-shape tree computing the indicator of (tree value >= theta).

    Leaf relabeling leaves the shape untouched, so the thresholded tree has
    exactly the original rank, size and depth.
    """
    return map_leaves(tree, lambda leaf: 1.0 if leaf.value >= theta else 0.0)
