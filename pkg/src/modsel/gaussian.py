"""Gaussian mean estimation: projections on linear models, lattice nets and
their counting geometry, robust two-point tests, and penalized selection.

The observation is X = s + sigma * xi in R^n with known sigma. Linear models
carry a metric-dimension bound of half their linear dimension; the lattice
(2 lambda Z)^D inside a model realizes an eta-net with eta = lambda sqrt(D)
whose ball counts stay below exp(x^2 D / 2).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

_MIN_SPACING_FACTOR = 4.0 * math.sqrt(3.0)


class GaussianError(ValueError):
    """Invalid observation, model, or lattice request."""


@dataclass(frozen=True)
class GaussianObservation:
    """A single draw of a Gaussian vector with known noise level."""

    x: np.ndarray
    sigma: float

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.ndim != 1 or x.size < 1 or not np.all(np.isfinite(x)):
            raise GaussianError("observation must be a finite 1-D vector")
        if self.sigma <= 0:
            raise GaussianError("sigma must be positive")
        x.flags.writeable = False
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.size


class LinearModel:
    """The span of linearly independent basis vectors in R^n.

    The metric dimension bound is dim/2; ``weight`` is the complexity charge
    used by penalized selection.
    """

    __slots__ = ("basis", "ortho", "weight", "label")

    def __init__(self, basis, weight: float = 1.0, label: str = ""):
        B = np.array(basis, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if B.ndim != 2 or B.shape[1] < 1 or B.shape[0] < B.shape[1]:
            raise GaussianError("basis must be n x D with 1 <= D <= n")
        if np.linalg.matrix_rank(B) != B.shape[1]:
            raise GaussianError("basis is rank-deficient")
        if weight <= 0:
            raise GaussianError("model weight must be positive")
        q, _ = np.linalg.qr(B)
        B.flags.writeable = False
        q.flags.writeable = False
        self.basis = B
        self.ortho = q
        self.weight = float(weight)
        self.label = label

    @classmethod
    def from_vectors(cls, vectors: Iterable[Sequence[float]], weight: float = 1.0, label: str = "") -> "LinearModel":
        return cls(np.column_stack([np.asarray(v, dtype=float) for v in vectors]), weight, label)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def metric_dim(self) -> float:
        return self.dim / 2.0

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.ortho @ (self.ortho.T @ x)

    def coords(self, x: np.ndarray) -> np.ndarray:
        return self.ortho.T @ x


def gaussian_sample(s, sigma: float, seed: int) -> GaussianObservation:
    """X = s + sigma * xi with standard normal xi, deterministic per seed."""
    s = np.asarray(s, dtype=float)
    if sigma <= 0:
        raise GaussianError("sigma must be positive")
    rng = np.random.default_rng(seed)
    return GaussianObservation(s + sigma * rng.standard_normal(s.size), sigma)


def project_mle(obs: GaussianObservation, model: LinearModel) -> np.ndarray:
    """Orthogonal projection of the observation onto the model span."""
    if model.ambient_dim != obs.n:
        raise GaussianError("model and observation dimensions differ")
    return model.project(obs.x)


def gaussian_two_point_test(obs: GaussianObservation, v, u) -> np.ndarray:
    """Likelihood choice between two mean vectors; ties break toward v.

    For spherical Gaussians the likelihood comparison is the nearest-point
    rule in Euclidean norm.
    """
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if v.shape != u.shape or v.shape != obs.x.shape:
        raise GaussianError("mean vectors must match the observation length")
    if np.array_equal(v, u):
        raise GaussianError("the two candidate means must differ")
    dv = obs.x - v
    du = obs.x - u
    return v if float(dv @ dv) <= float(du @ du) else u


# ---------------------------------------------------------------------------
# Lattice nets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LatticeNet:
    """The lattice (2 lambda Z)^D in model coordinates.

    ``sigma`` is the noise level the net was built for; the spacing floor
    lambda >= 4 sqrt(3) sigma is the discretized-MLE precondition.
    """

    model: LinearModel
    spacing: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise GaussianError("sigma must be positive")
        if self.spacing < _MIN_SPACING_FACTOR * self.sigma - 1e-12:
            raise GaussianError("lattice spacing must be at least 4*sqrt(3)*sigma")

    @property
    def covering_radius(self) -> float:
        """Any model point is within lambda sqrt(D) of the lattice."""
        return self.spacing * math.sqrt(self.model.dim)

    def nearest(self, x: np.ndarray) -> np.ndarray:
        """Nearest lattice point to x (through projection onto the model)."""
        c = self.model.coords(x)
        z = np.round(c / (2.0 * self.spacing))
        return self.model.ortho @ (2.0 * self.spacing * z)

    def is_lattice_point(self, t: np.ndarray, tol: float = 1e-8) -> bool:
        span_gap = float(np.linalg.norm(t - self.model.project(t)))
        c = self.model.coords(t) / (2.0 * self.spacing)
        return span_gap <= tol and bool(np.all(np.abs(c - np.round(c)) <= tol))


def lattice_mle(
    obs: GaussianObservation,
    net: LatticeNet,
    anchor: np.ndarray,
    radius_cap: float | None = None,
) -> np.ndarray:
    """Likelihood maximizer over the lattice, localized around the anchor.

    Equivalently the lattice point nearest the projected observation; the
    cap (default 8 * lambda * sqrt(2D)) turns an implausibly distant
    maximizer into an error instead of silently returning it.
    """
    if net.sigma != obs.sigma:
        raise GaussianError("net was built for a different noise level")
    if not net.is_lattice_point(np.asarray(anchor, dtype=float)):
        raise GaussianError("anchor must be a lattice point")
    if radius_cap is None:
        radius_cap = 8.0 * net.spacing * math.sqrt(2.0 * net.model.dim)
    t = net.nearest(obs.x)
    if float(np.linalg.norm(t - anchor)) > radius_cap:
        raise GaussianError("lattice maximizer fell outside the radius cap")
    return t


def count_lattice_in_ball(
    net: LatticeNet, center, radius: float, *, max_nodes: int = 5_000_000
) -> int:
    """Exact number of lattice points in the Euclidean ball B(center, radius).

    The center may sit anywhere in the ambient space; only the in-span
    component of the radius counts. Enumeration deliberately errors beyond a
    node budget instead of approximating.
    """
    center = np.asarray(center, dtype=float)
    if radius < 0:
        raise GaussianError("radius must be >= 0")
    c = net.model.coords(center)
    perp_sq = max(float(center @ center) - float(c @ c), 0.0)
    r_sq = radius**2 * (1.0 + 1e-12) - perp_sq
    if r_sq < 0:
        return 0
    step = 2.0 * net.spacing
    D = net.model.dim

    # expand coordinates one dimension at a time, keeping per-prefix residual
    # radius^2; the last dimension is counted in closed form
    residual = np.array([r_sq])
    for d in range(D - 1):
        half = np.sqrt(residual)
        lo = np.ceil((c[d] - half) / step).astype(int)
        hi = np.floor((c[d] + half) / step).astype(int)
        widths = np.maximum(hi - lo + 1, 0)
        total = int(widths.sum())
        if total > max_nodes:
            raise GaussianError("lattice enumeration budget exceeded")
        if total == 0:
            return 0
        reps = np.repeat(np.arange(residual.size), widths)
        offsets = np.arange(total) - np.repeat(np.cumsum(widths) - widths, widths)
        coords = (np.repeat(lo, widths) + offsets) * step
        residual = residual[reps] - (coords - c[d]) ** 2
        residual = residual[residual >= 0]
        if residual.size == 0:
            return 0
    half = np.sqrt(residual)
    lo = np.ceil((c[D - 1] - half) / step)
    hi = np.floor((c[D - 1] + half) / step)
    return int(np.maximum(hi - lo + 1, 0).sum())


def metric_dim_ball_bound(x: float, metric_dim: float) -> float:
    """Ball-count ceiling exp(x^2 * metric_dim) for radius x * eta, x >= 2."""
    return math.exp(x**2 * metric_dim)


@dataclass(frozen=True)
class NetPropertyReport:
    eta: float
    covering_max: float
    ball_checks: tuple[tuple[float, int, float], ...]  # (x, max count, ceiling)
    floor_count: int
    floor_required: int
    passed: bool


def verify_net_property(
    model: LinearModel, eta: float, *, probes: int = 1000, xs: Sequence[float] = (2.0, 3.0, 4.0), seed: int = 0
) -> NetPropertyReport:
    """Check the eta-net definition on the model's lattice net.

    Verifies covering distance <= eta over random model points, the ball
    count ceiling exp(x^2 D/2) at random ambient centers, and the
    volume-comparison floor: at least 2^D net points within 3*eta of a model
    point (the count that forces the dimension lower bound).
    """
    if eta <= 0:
        raise GaussianError("eta must be positive")
    D = model.dim
    spacing = eta / math.sqrt(D)
    net = LatticeNet(model, spacing, sigma=spacing / _MIN_SPACING_FACTOR)
    rng = np.random.default_rng(seed)

    box = 10.0 * eta
    covering_max = 0.0
    for _ in range(probes):
        t = model.ortho @ rng.uniform(-box, box, D)
        covering_max = max(covering_max, float(np.linalg.norm(t - net.nearest(t))))

    n_centers = max(3, probes // 40)
    ball_checks = []
    for x in xs:
        worst = 0
        for i in range(n_centers):
            center = model.ortho @ rng.uniform(-box, box, D)
            if i % 2:
                # push the center off the span; counts can only drop
                perp = rng.standard_normal(model.ambient_dim)
                perp -= model.project(perp)
                norm = np.linalg.norm(perp)
                if norm > 0:
                    center = center + perp / norm * (x * eta / 2.0)
            worst = max(worst, count_lattice_in_ball(net, center, x * eta))
        ball_checks.append((float(x), worst, metric_dim_ball_bound(x, model.metric_dim)))

    floor_center = model.ortho @ rng.uniform(-box, box, D)
    floor_count = count_lattice_in_ball(net, floor_center, 3.0 * eta)
    floor_required = 2**D

    passed = (
        covering_max <= eta * (1.0 + 1e-9)
        and all(count < ceiling for _, count, ceiling in ball_checks)
        and floor_count >= floor_required
    )
    return NetPropertyReport(eta, covering_max, tuple(ball_checks), floor_count, floor_required, passed)


# ---------------------------------------------------------------------------
# Penalized model selection and variable-selection families
# ---------------------------------------------------------------------------


def kraft_total(models: Sequence[LinearModel]) -> float:
    return math.fsum(math.exp(-m.weight) for m in models)


def penalized_select(
    obs: GaussianObservation, models: Sequence[LinearModel], kappa: float = 4.0
) -> tuple[LinearModel, np.ndarray]:
    """Least squares with complexity penalty kappa sigma^2 max(dim, weight).

    Ties break toward the smaller dimension, then the label. The weights
    must satisfy the Kraft condition.
    """
    models = list(models)
    if not models:
        raise GaussianError("model list is empty")
    if kappa <= 0:
        raise GaussianError("kappa must be positive")
    if kraft_total(models) > 1.0 + 1e-9:
        raise GaussianError("model weights violate the Kraft condition")
    best = None
    for m in models:
        proj = project_mle(obs, m)
        resid = obs.x - proj
        crit = float(resid @ resid) + kappa * obs.sigma**2 * max(m.dim, m.weight)
        key = (crit, m.dim, m.label)
        if best is None or key < best[0]:
            best = (key, m, proj)
    return best[1], best[2]


def oracle_penalized_value(s, models: Sequence[LinearModel], sigma: float) -> float:
    """inf_m { sigma^2 dim_m + ||s - P_m s||^2 }: the benchmark the selected
    estimator is measured against."""
    s = np.asarray(s, dtype=float)
    best = math.inf
    for m in models:
        gap = s - m.project(s)
        best = min(best, sigma**2 * m.dim + float(gap @ gap))
    return best


def build_variable_selection_family(
    Z: np.ndarray, mode: str, max_card: int | None = None
) -> list[LinearModel]:
    """Variable-selection model families over the columns of Z.

    "ordered" yields the p nested prefix models with weight q; "all-subsets"
    yields every nonvoid subset with weight 1 + q log p (requires p <= 20
    unless capped); "mixed" weights prefixes q + 1/2 and other subsets
    1 + q log p. Labels are 1-based column lists like "1,3,4".
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise GaussianError("design matrix must be 2-D (rows = observations)")
    n, p = Z.shape
    if p < 1 or n < 1:
        raise GaussianError("design matrix must be nonempty")

    def subset_label(cols: tuple[int, ...]) -> str:
        return ",".join(str(c + 1) for c in cols)

    models: list[LinearModel] = []
    if mode == "ordered":
        for q in range(1, p + 1):
            cols = tuple(range(q))
            models.append(LinearModel(Z[:, :q], weight=q, label=subset_label(cols)))
    elif mode in ("all-subsets", "mixed"):
        cap = p if max_card is None else min(max_card, p)
        if max_card is None and p > 20:
            raise GaussianError("all-subsets beyond p = 20 requires a max_card cap")
        log_p = math.log(p) if p > 1 else 0.0
        for q in range(1, cap + 1):
            for cols in itertools.combinations(range(p), q):
                if mode == "mixed" and cols == tuple(range(q)):
                    weight = q + 0.5
                else:
                    weight = 1.0 + q * log_p
                models.append(LinearModel(Z[:, cols], weight=weight, label=subset_label(cols)))
    else:
        raise GaussianError(f"unknown family mode {mode!r}")
    if kraft_total(models) > 1.0 + 1e-9:
        raise GaussianError("family weights violate the Kraft condition")
    return models


def load_design_matrix(path: str | Path) -> np.ndarray:
    """CSV with one observation per row, one explanatory variable per column."""
    Z = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    return Z
