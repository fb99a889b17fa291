"""Hypercube lower-bound construction and Assouad-type risk floors.

The hard family places D disjoint two-level bumps on [0,1]; switching bump
j on or off moves the density by a fixed L2 step while barely moving it in
Hellinger distance. Averaging over the 2^D vertices turns any estimator's
risk into a Hamming-decoding risk, which the affinity between neighbors
bounds from below.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .densities import Affinity, PiecewiseDensity, l2_distance
from .partitions import Partition

MAX_ENUMERATED_BITS = 16


class LowerBoundError(ValueError):
    """Invalid hard-family parameters."""


@dataclass(frozen=True)
class HammingIndex:
    """A vertex of the binary hypercube indexing one hard density."""

    delta: tuple[int, ...]

    def __post_init__(self):
        if not self.delta or any(b not in (0, 1) for b in self.delta):
            raise LowerBoundError("index must be a nonempty 0/1 vector")
        object.__setattr__(self, "delta", tuple(int(b) for b in self.delta))

    def distance(self, other: "HammingIndex") -> int:
        if len(self.delta) != len(other.delta):
            raise LowerBoundError("indices have different lengths")
        return sum(a != b for a, b in zip(self.delta, other.delta))


class AssouadFamily:
    """The 2^D densities 1 + sum_j delta_j g_j with two-level bumps g_j.

    Construction parameters: a = D/(4n) is the bump depth, theta solves
    (1-theta)/theta = 4nL/D, so each bump has supremum L, infimum -a, zero
    integral, and squared L2 norm exactly L/(4n).
    """

    def __init__(self, D: int, L: float, n: int):
        if not 1 <= D <= 3 * n:
            raise LowerBoundError("need 1 <= D <= 3n so the bump depth stays <= 3/4")
        if L <= 0:
            raise LowerBoundError("L must be positive")
        self.D = int(D)
        self.L = float(L)
        self.n = int(n)
        self.depth = D / (4.0 * n)
        self.theta = D / (D + 4.0 * n * L)
        self.peak = self.depth * (1.0 - self.theta) / self.theta  # equals L
        breaks = [0.0]
        for j in range(D):
            breaks.append((j + (1.0 - self.theta)) / D)
            breaks.append((j + 1.0) / D)
        breaks[-1] = 1.0
        self.partition = Partition(breaks)

    @property
    def bump_sq_norm(self) -> float:
        """||g||^2 = L/(4n), the per-coordinate L2 step of the hypercube."""
        return self.L / (4.0 * self.n)

    def member(self, delta) -> PiecewiseDensity:
        idx = delta if isinstance(delta, HammingIndex) else HammingIndex(tuple(delta))
        if len(idx.delta) != self.D:
            raise LowerBoundError(f"index must have {self.D} bits")
        bits = np.array(idx.delta, dtype=float)
        heights = np.empty(2 * self.D)
        heights[0::2] = 1.0 - self.depth * bits
        heights[1::2] = 1.0 + self.peak * bits
        return PiecewiseDensity(self.partition, heights)

    def vertices(self) -> list[HammingIndex]:
        if self.D > MAX_ENUMERATED_BITS:
            raise LowerBoundError(
                f"enumeration of 2^{self.D} members is capped at D = {MAX_ENUMERATED_BITS}; use member()"
            )
        return [HammingIndex(bits) for bits in itertools.product((0, 1), repeat=self.D)]

    def sample_vertices(self, seed: int, cap_bits: int = 10) -> list[HammingIndex]:
        """Vertex grid for sup-over-delta Monte Carlo: every vertex for small
        D, otherwise 2^cap_bits random vertices plus the two corners."""
        if self.D <= cap_bits:
            return self.vertices()
        rng = np.random.default_rng(seed)
        picks = {(0,) * self.D, (1,) * self.D}
        while len(picks) < 2**cap_bits + 2:
            picks.add(tuple(int(b) for b in rng.integers(0, 2, self.D)))
        return [HammingIndex(bits) for bits in sorted(picks)]

    def pair_sq_distance(self, d1: HammingIndex, d2: HammingIndex) -> float:
        """||s_d1 - s_d2||^2 = (L/4n) * Hamming(d1, d2): the cube embeds
        isometrically."""
        return self.bump_sq_norm * d1.distance(d2)

    def neighbor_affinity(self) -> Affinity:
        """Exact affinity between members at Hamming distance 1; at least
        1 - 1/(6n)."""
        r = (1.0 - self.theta) * math.sqrt(1.0 - self.depth) + self.theta * math.sqrt(1.0 + self.peak)
        return Affinity(1.0 - (1.0 - r) / self.D)

    def pair_affinity(self, d1: HammingIndex, d2: HammingIndex) -> Affinity:
        r = (1.0 - self.theta) * math.sqrt(1.0 - self.depth) + self.theta * math.sqrt(1.0 + self.peak)
        return Affinity(1.0 - d1.distance(d2) * (1.0 - r) / self.D)

    def nearest_member(self, density: PiecewiseDensity) -> tuple[HammingIndex, PiecewiseDensity]:
        """Coordinatewise L2 decoding of an arbitrary step density onto the
        family (the proof's discretization step). Ties choose bit 0."""
        bits = []
        for j in range(self.D):
            lo, mid, hi = j / self.D, (j + 1.0 - self.theta) / self.D, (j + 1.0) / self.D
            if j == self.D - 1:
                hi = 1.0
            cost = []
            for b in (0.0, 1.0):
                low_h = 1.0 - self.depth * b
                high_h = 1.0 + self.peak * b
                cost.append(
                    _sq_gap(density, lo, mid, low_h) + _sq_gap(density, mid, hi, high_h)
                )
            bits.append(0 if cost[0] <= cost[1] else 1)
        idx = HammingIndex(tuple(bits))
        return idx, self.member(idx)

    def verify(self) -> dict:
        """Recompute the construction's identities from the densities
        themselves and report values next to their targets."""
        zero = HammingIndex((0,) * self.D)
        first = HammingIndex((1,) + (0,) * (self.D - 1))
        f = self.member(zero)
        fg = self.member(first)
        bump_integral = float(
            (fg.heights - f.heights) @ self.partition.lengths
        )
        sup_g = float(np.max(fg.heights - f.heights))
        inf_g = float(np.min(fg.heights - f.heights))
        sq_norm = l2_distance(f, fg) ** 2
        h2_neighbor = 1.0 - self.neighbor_affinity().value
        checks = {
            "bump_integral": bump_integral,
            "bump_sup": sup_g,
            "bump_sup_target": self.L,
            "bump_inf": inf_g,
            "bump_inf_target": -self.depth,
            "bump_sq_norm": sq_norm,
            "bump_sq_norm_target": self.bump_sq_norm,
            "neighbor_h2": h2_neighbor,
            "neighbor_h2_cap": 1.0 / (6.0 * self.n),
            "sup_norm_cap": self.L + 1.0,
        }
        checks["ok"] = bool(
            abs(bump_integral) < 1e-12
            and abs(sup_g - self.L) < 1e-9 * max(self.L, 1.0)
            and abs(inf_g + self.depth) < 1e-12
            and abs(sq_norm - self.bump_sq_norm) < 1e-12 * max(1.0, self.bump_sq_norm)
            and h2_neighbor <= 1.0 / (6.0 * self.n) + 1e-15
        )
        return checks

    def report(self) -> dict:
        return {
            "D": self.D,
            "L": self.L,
            "n": self.n,
            "depth": self.depth,
            "theta": self.theta,
            "bump_sq_norm": self.bump_sq_norm,
            "neighbor_affinity": self.neighbor_affinity().value,
            "l2_floor": l2_minimax_floor(self.D, self.L, self.n),
            "checks": self.verify(),
        }

    def export_report(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.report(), indent=2, sort_keys=True))
        return path


def _sq_gap(density: PiecewiseDensity, a: float, b: float, level: float) -> float:
    """Exact integral of (density - level)^2 over [a, b]."""
    breaks = density.breaks
    clipped = np.clip(breaks, a, b)
    return float(np.diff(clipped) @ (density.heights - level) ** 2)


def build_assouad_family(D: int, L: float, n: int) -> AssouadFamily:
    family = AssouadFamily(D, L, n)
    checks = family.verify()
    if not checks["ok"]:
        raise LowerBoundError(f"construction identities failed: {checks}")
    return family


def assouad_bound(D: int, rho_bar, n: int) -> float:
    """Hamming-risk floor (D/2)(1 - sqrt(1 - rho_bar^{2n}))."""
    rho = rho_bar.value if isinstance(rho_bar, Affinity) else float(rho_bar)
    if not 0.0 <= rho <= 1.0:
        raise LowerBoundError("rho_bar must lie in [0, 1]")
    if D < 1 or n < 1:
        raise LowerBoundError("D and n must be >= 1")
    return (D / 2.0) * (1.0 - math.sqrt(max(1.0 - rho ** (2 * n), 0.0)))


def assouad_bound_weak(D: int, rho_bar, n: int) -> float:
    """The simpler floor D rho_bar^{2n} / 4 implied by the main bound."""
    rho = rho_bar.value if isinstance(rho_bar, Affinity) else float(rho_bar)
    if not 0.0 <= rho <= 1.0:
        raise LowerBoundError("rho_bar must lie in [0, 1]")
    return D * rho ** (2 * n) / 4.0


def l2_minimax_floor(D: int, L: float, n: int) -> float:
    """Explicit L2 risk floor (LD/32n)(1 - sqrt(11)/6) > 0.0139 DL/n.

    Not attainable-free: every estimator's sup risk over the hard family
    exceeds it. The constant uses the n = 1 value of (1 - 1/(6n))^{2n},
    which is increasing in n.
    """
    if not 1 <= D <= 3 * n:
        raise LowerBoundError("need 1 <= D <= 3n")
    if L <= 0:
        raise LowerBoundError("L must be positive")
    floor = (L * D / (32.0 * n)) * (1.0 - math.sqrt(11.0) / 6.0)
    if not floor > 0.0139 * D * L / n:
        raise LowerBoundError("floor constant fell below 0.0139 DL/n")
    return floor
