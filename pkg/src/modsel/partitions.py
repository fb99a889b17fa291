"""Interval partitions of [0,1], weighted families, and complexity accounting.

A partition is an increasing breakpoint sequence 0 = y_0 < ... < y_{D+1} = 1
defining D+1 intervals (half-open except the last). Families of partitions
carry per-member weights whose Kraft sum sum_m exp(-weight_m) must stay at
or below 1; weights are stored exactly as (coeff)*log(2) + offset with
rational fields so Kraft checks never fail by rounding.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

#: Resolution cap for classifying a float breakpoint as dyadic. Every binary
#: float is a dyadic rational, so dyadicity only means "level <= this".
MAX_DYADIC_LEVEL = 40

#: Enumeration caps keep exact arithmetic desk-scale; larger requests error
#: rather than silently approximate.
MAX_DYADIC_RESOLUTION = 2**12
MAX_FAMILY_MEMBERS = 100_000
MAX_TREE_LEAVES = 31

_LN2 = math.log(2.0)


class PartitionError(ValueError):
    """Invalid partition, family, or enumeration request."""


class Partition:
    """Breakpoints 0 = y_0 < y_1 < ... < y_{D+1} = 1 of the unit interval."""

    __slots__ = ("breakpoints",)

    def __init__(self, breakpoints: Iterable[float]):
        b = np.array(list(breakpoints), dtype=float)
        if b.ndim != 1 or b.size < 2:
            raise PartitionError("need at least the two endpoints 0 and 1")
        if b[0] != 0.0 or b[-1] != 1.0:
            raise PartitionError("breakpoints must start at 0 and end at 1")
        if not np.all(np.diff(b) > 0):
            raise PartitionError("breakpoints must be strictly increasing")
        b.flags.writeable = False
        self.breakpoints = b

    @property
    def size(self) -> int:
        """Number of intervals |m|."""
        return self.breakpoints.size - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def interior(self) -> np.ndarray:
        return self.breakpoints[1:-1]

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and np.array_equal(
            self.breakpoints, other.breakpoints
        )

    def __hash__(self) -> int:
        return hash(tuple(self.breakpoints.tolist()))

    def __repr__(self) -> str:
        return f"Partition({self.breakpoints.tolist()})"

    def is_regular(self) -> bool:
        n = self.size
        return np.array_equal(self.breakpoints, np.arange(n + 1) / n)

    def is_dyadic(self, max_level: int = MAX_DYADIC_LEVEL) -> bool:
        try:
            self.dyadic_level(max_level=max_level)
        except PartitionError:
            return False
        return True

    def dyadic_level(self, max_level: int = MAX_DYADIC_LEVEL) -> int:
        """Smallest k with every breakpoint of the form j/2^k.

        The trivial partition has level 0. Raises for non-dyadic breakpoints
        (resolution beyond ``max_level``).
        """
        level = 0
        for y in self.interior.tolist():
            num, den = Fraction(y).as_integer_ratio()
            k = den.bit_length() - 1
            if den != 1 << k or k > max_level:
                raise PartitionError(f"breakpoint {y} is not dyadic at level <= {max_level}")
            level = max(level, k)
        return level

    def to_line(self) -> str:
        """Serialize as the comma-separated line format "0,y_1,...,1"."""
        return ",".join(repr(float(y)) for y in self.breakpoints)

    @classmethod
    def from_line(cls, line: str) -> "Partition":
        return cls(float(tok) for tok in line.strip().split(","))


def regular_partition(D: int) -> Partition:
    """The partition of [0,1] into D+1 equal intervals; D=0 is trivial."""
    if D < 0:
        raise PartitionError("D must be >= 0")
    return Partition(np.arange(D + 2) / (D + 1))


@dataclass(frozen=True)
class DyadicIndex:
    """Resolution k and interval-count index D of the family M_{D,k}."""

    k: int
    D: int

    def __post_init__(self):
        if self.k < 1:
            raise PartitionError("resolution k must be >= 1")
        if not 1 <= self.D < 2**self.k:
            raise PartitionError("need 1 <= D < 2^k")


def dyadic_family_size(idx: DyadicIndex) -> int:
    """Exact member count of M_{D,k}: partitions at resolution exactly k."""
    return math.comb(2**idx.k - 1, idx.D) - math.comb(2 ** (idx.k - 1) - 1, idx.D)


def enumerate_dyadic_family(
    idx: DyadicIndex,
    *,
    max_resolution: int = MAX_DYADIC_RESOLUTION,
    max_members: int = MAX_FAMILY_MEMBERS,
) -> list[Partition]:
    """All partitions with D+1 intervals, endpoints in J_k but not all in J_{k-1}."""
    if 2**idx.k > max_resolution:
        raise PartitionError(
            f"family too large to enumerate: resolution 2^{idx.k} exceeds cap {max_resolution}"
        )
    expected = dyadic_family_size(idx)
    if expected > max_members:
        raise PartitionError(
            f"family too large to enumerate: {expected} members exceed cap {max_members}"
        )
    scale = 2**idx.k
    members = []
    for combo in itertools.combinations(range(1, scale), idx.D):
        # membership requires at least one endpoint at odd numerator, i.e.
        # not representable one level coarser
        if all(j % 2 == 0 for j in combo):
            continue
        members.append(Partition([0.0] + [j / scale for j in combo] + [1.0]))
    if len(members) != expected:
        raise PartitionError("enumeration does not match the exact count")
    return members


# ---------------------------------------------------------------------------
# Adaptive splitting (greedy midpoint refinement under a local error functional)
# ---------------------------------------------------------------------------


def _step_prefix(values: np.ndarray) -> Callable[[float], float]:
    """Exact running integral of the step function tabulated by ``values``."""
    n = values.size
    cum = np.concatenate([[0.0], np.cumsum(values)]) / n

    def F(x: float) -> float:
        t = x * n
        i = min(int(t), n - 1)
        return cum[i] + (t - i) * values[i] / n

    return F


def _best_constant_sq_error(values: np.ndarray) -> Callable[[float, float], float]:
    F1 = _step_prefix(values)
    F2 = _step_prefix(values**2)

    def J(a: float, b: float) -> float:
        mass = F1(b) - F1(a)
        return max(F2(b) - F2(a) - mass * mass / (b - a), 0.0)

    return J


LOCAL_FUNCTIONALS: dict[str, Callable[[np.ndarray], Callable[[float, float], float]]] = {
    "l2-const": _best_constant_sq_error,
}


@dataclass(frozen=True)
class AdaptiveResult:
    partition: Partition
    converged: bool


def adaptive_partition(
    values: Iterable[float],
    functional: str,
    epsilon: float,
    max_leaves: int,
) -> AdaptiveResult:
    """Grow a complete binary tree of dyadic intervals until the local error
    functional falls to ``epsilon`` on every leaf.

    The leaf with the largest violation is split at its midpoint (leftmost on
    ties). If ``max_leaves`` is reached first the current partition is
    returned with ``converged=False``.
    """
    f = np.asarray(list(values), dtype=float)
    if f.ndim != 1 or f.size == 0 or not np.all(np.isfinite(f)):
        raise PartitionError("target values must be a finite 1-D table")
    if epsilon <= 0:
        raise PartitionError("epsilon must be positive")
    if max_leaves < 1:
        raise PartitionError("max_leaves must be >= 1")
    if functional not in LOCAL_FUNCTIONALS:
        raise PartitionError(f"unknown local functional {functional!r}")
    J = LOCAL_FUNCTIONALS[functional](f)

    leaves: list[tuple[float, float]] = [(0.0, 1.0)]
    scores: list[float] = [J(0.0, 1.0)]
    while True:
        worst = max(scores)
        if worst <= epsilon:
            return AdaptiveResult(_partition_from_leaves(leaves), True)
        if len(leaves) >= max_leaves:
            return AdaptiveResult(_partition_from_leaves(leaves), False)
        i = scores.index(worst)  # leftmost tie: leaves stay sorted by position
        a, b = leaves[i]
        mid = (a + b) / 2
        leaves[i : i + 1] = [(a, mid), (mid, b)]
        scores[i : i + 1] = [J(a, mid), J(mid, b)]


def _partition_from_leaves(leaves: Sequence[tuple[float, float]]) -> Partition:
    return Partition([a for a, _ in leaves] + [1.0])


def is_tree_partition(p: Partition, max_level: int = MAX_DYADIC_LEVEL) -> bool:
    """True iff ``p`` arises from complete-binary-tree midpoint splitting."""
    if not p.is_dyadic(max_level=max_level):
        return False

    def complete(lo: float, hi: float, pts: list[float]) -> bool:
        if not pts:
            return True
        mid = (lo + hi) / 2  # exact for dyadic endpoints at level <= 52
        if mid not in pts:
            return False
        i = pts.index(mid)
        return complete(lo, mid, pts[:i]) and complete(mid, hi, pts[i + 1 :])

    return complete(0.0, 1.0, p.interior.tolist())


def count_complete_binary_trees(leaves: int) -> int:
    """Number of complete binary trees with the given leaf count (a Catalan
    number). Exact integer arithmetic; capped at 31 leaves."""
    if not 1 <= leaves <= MAX_TREE_LEAVES:
        raise PartitionError(f"leaf count must be in [1, {MAX_TREE_LEAVES}]")
    j = leaves - 1
    return math.comb(2 * j, j) // (j + 1)


# ---------------------------------------------------------------------------
# Weights, Kraft sums, and weighted families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Weight:
    """A model weight stored exactly as log2_coeff * ln(2) + offset."""

    log2_coeff: Fraction = Fraction(0)
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "log2_coeff", Fraction(self.log2_coeff))
        object.__setattr__(self, "offset", Fraction(self.offset))
        if self.value <= 0:
            raise PartitionError("weights must be positive")

    @property
    def value(self) -> float:
        return float(self.log2_coeff) * _LN2 + float(self.offset)

    def exp_neg(self) -> float:
        """exp(-weight), with the power-of-two part evaluated exactly."""
        return 2.0 ** (-float(self.log2_coeff)) * math.exp(-float(self.offset))

    @classmethod
    def of(cls, w) -> "Weight":
        if isinstance(w, Weight):
            return w
        return cls(Fraction(0), Fraction(w))


class WeightedFamily:
    """Partitions with positive weights satisfying the Kraft condition."""

    def __init__(self, members: Iterable[tuple[Partition, Weight | float | int]], label: str = ""):
        pairs = [(p, Weight.of(w)) for p, w in members]
        if not pairs:
            raise PartitionError("a weighted family needs at least one member")
        total = math.fsum(w.exp_neg() for _, w in pairs)
        if total > 1.0 + 1e-12:
            raise PartitionError(f"Kraft condition violated: sum exp(-weight) = {total}")
        self.members: tuple[tuple[Partition, Weight], ...] = tuple(pairs)
        self.label = label

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[tuple[Partition, Weight]]:
        return iter(self.members)

    @property
    def partitions(self) -> list[Partition]:
        return [p for p, _ in self.members]

    @property
    def weights(self) -> list[Weight]:
        return [w for _, w in self.members]

    def kraft_sum(self) -> float:
        return math.fsum(w.exp_neg() for _, w in self.members)

    def holdout_ready(self) -> bool:
        """Hold-out selection additionally needs every weight >= 1."""
        return all(w.value >= 1.0 - 1e-12 for _, w in self.members)

    def to_json(self) -> str:
        doc = {
            "label": self.label,
            "members": [
                {
                    "partition": p.to_line(),
                    "weight": w.value,
                    "weight_log2_coeff": str(w.log2_coeff),
                    "weight_offset": str(w.offset),
                }
                for p, w in self.members
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "WeightedFamily":
        doc = json.loads(text)
        members = [
            (
                Partition.from_line(entry["partition"]),
                Weight(Fraction(entry["weight_log2_coeff"]), Fraction(entry["weight_offset"])),
            )
            for entry in doc["members"]
        ]
        return cls(members, label=doc.get("label", ""))


def kraft_sum(family: WeightedFamily) -> float:
    """sum_m exp(-weight_m); the family constructor already rejects > 1."""
    return family.kraft_sum()


WEIGHT_SCHEMES = ("ordered-nested", "dyadic-default", "regular-bonus", "tree-bonus", "mixed")


def _dyadic_default_weight(p: Partition) -> Weight:
    if p.size == 1:
        return Weight(Fraction(0), Fraction(1))
    k = p.dyadic_level()
    D = p.size - 1
    return Weight(Fraction((k + 1) * (D + 1) + 1), Fraction(0))


def _is_pow2_regular(p: Partition) -> bool:
    return p.is_regular() and p.size & (p.size - 1) == 0


def assign_weights(family: Sequence[Partition], scheme: str) -> WeightedFamily:
    """Attach the named weight scheme to a family of partitions.

    Schemes: "ordered-nested" charges the 1-based rank; "dyadic-default"
    charges [(k+1)(D+1)+1]*log 2 by dyadic resolution (trivial partition: 1);
    "regular-bonus" charges |m| for regular partitions; "tree-bonus" charges
    2|m| for complete-tree dyadic partitions; "mixed" is dyadic-default
    overridden by |m| on power-of-two regulars and 2|m| on tree partitions.
    The resulting Kraft sum is checked by the WeightedFamily constructor.
    """
    family = list(family)
    if scheme == "ordered-nested":
        weights = [Weight(Fraction(0), Fraction(i + 1)) for i in range(len(family))]
    elif scheme == "dyadic-default":
        weights = [_dyadic_default_weight(p) for p in family]
    elif scheme == "regular-bonus":
        for p in family:
            if not p.is_regular():
                raise PartitionError("regular-bonus applies to regular partitions only")
        weights = [Weight(Fraction(0), Fraction(p.size)) for p in family]
    elif scheme == "tree-bonus":
        for p in family:
            if not is_tree_partition(p):
                raise PartitionError("tree-bonus applies to complete-tree dyadic partitions only")
        weights = [Weight(Fraction(0), Fraction(2 * p.size)) for p in family]
    elif scheme == "mixed":
        weights = []
        for p in family:
            if _is_pow2_regular(p):
                weights.append(Weight(Fraction(0), Fraction(p.size)))
            elif is_tree_partition(p):
                weights.append(Weight(Fraction(0), Fraction(2 * p.size)))
            else:
                weights.append(_dyadic_default_weight(p))
    else:
        raise PartitionError(f"unknown weight scheme {scheme!r}; choose from {WEIGHT_SCHEMES}")
    return WeightedFamily(zip(family, weights), label=scheme)


# ---------------------------------------------------------------------------
# Family-level Kraft constants
# ---------------------------------------------------------------------------


def regular_family_kraft_total(tol: float = 1e-16) -> float:
    """sum_{k>=0} exp(-2^k), the Kraft total of |m|-weights on power-of-two
    regulars; strictly below 0.522."""
    total, k = 0.0, 0
    while True:
        term = math.exp(-(2.0**k))
        total += term
        if term < tol:
            return total
        k += 1


def tree_family_kraft_total(tol: float = 1e-16) -> float:
    """sum_{j>=0} Catalan(j) exp(-2(j+1)), the Kraft total of 2|m|-weights on
    all complete-tree dyadic partitions; strictly below 1/4."""
    total, j = 0.0, 0
    while True:
        term = (math.comb(2 * j, j) // (j + 1)) * math.exp(-2.0 * (j + 1))
        total += term
        if j > 2 and term < tol:
            return total
        j += 1


def dyadic_family_kraft_truncated(max_k: int) -> Fraction:
    """Exact rational Kraft sum of the default dyadic weights over all
    M_{D,k} with k <= max_k plus the trivial partition's exp(-1); the dyadic
    part alone is <= 1/4 for every truncation level."""
    if max_k < 1:
        raise PartitionError("max_k must be >= 1")
    total = Fraction(0)
    for k in range(1, max_k + 1):
        for D in range(1, 2**k):
            count = dyadic_family_size(DyadicIndex(k, D))
            total += count * Fraction(1, 2 ** ((k + 1) * (D + 1) + 1))
    return total


# ---------------------------------------------------------------------------
# Complexity index
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplexityReport:
    """Census-based complexity of a model family.

    ``census`` maps j to H(j), the number of members with dimension bound in
    [j/2, (j+1)/2); ``index`` is sup_j log_+(H(j))/j; ``canonical_weights``
    are (j+1)/2 + log_+(H(j)) per member, which always satisfy the Kraft
    condition.
    """

    index: float
    census: dict[int, int]
    canonical_weights: tuple[float, ...]


def complexity_index(family) -> ComplexityReport:
    """Complexity of a family given per-member dimension bounds.

    Accepts a WeightedFamily (dimension bound |m|/2 per partition) or any
    iterable of dimension bounds >= 1/2. Families that cannot be enumerated
    have no finite census; use a scheme-based weight assignment instead.
    """
    if isinstance(family, WeightedFamily):
        dims = [p.size / 2 for p in family.partitions]
    else:
        dims = [float(d) for d in family]
    if not dims:
        raise PartitionError("empty family")
    if min(dims) < 0.5:
        raise PartitionError("dimension bounds must be >= 1/2")
    census: dict[int, int] = {}
    js = []
    for d in dims:
        j = int(math.floor(2 * d))
        if not (j / 2 <= d < (j + 1) / 2):  # guards float-boundary drift
            j += 1 if d >= (j + 1) / 2 else -1
        js.append(j)
        census[j] = census.get(j, 0) + 1
    index = max(math.log(h) / j if h > 1 else 0.0 for j, h in census.items())
    weights = tuple((j + 1) / 2 + (math.log(census[j]) if census[j] > 1 else 0.0) for j in js)
    total = math.fsum(math.exp(-w) for w in weights)
    if total >= 1.0:
        raise PartitionError("canonical weights violate the Kraft condition")
    return ComplexityReport(index=index, census=dict(sorted(census.items())), canonical_weights=weights)
