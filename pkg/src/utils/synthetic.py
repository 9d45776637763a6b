"""
Planted-anomaly synthetic contexts.

Background rows are drawn from a mixture of itemset patterns; a few rows
are then replaced with anomalies of a chosen style. Everything is drawn
from one ``numpy`` generator, so a seed fixes the whole dataset.
"""

from dataclasses import dataclass
from typing import List, Set, Tuple

import numpy as np

from ..models.context_models import Context, GroundTruth
from ..models.plan_models import SyntheticSpec
from .exceptions import ConfigurationError
from .logging import get_logger

logger = get_logger("provad.synthetic")

_DISTINCT_PATTERN_ATTEMPTS = 100


@dataclass(frozen=True)
class SyntheticDataset:
    """A generated context with its truth and the mixture it came from."""

    context: Context
    truth: GroundTruth
    patterns: Tuple[Tuple[int, ...], ...]
    weights: Tuple[float, ...]
    # Pattern index behind every row; -1 marks a planted anomaly
    assignments: Tuple[int, ...]

    @property
    def anomaly_positions(self) -> List[int]:
        return [i for i, p in enumerate(self.assignments) if p < 0]


def _infeasible(message: str, setting: str, value) -> ConfigurationError:
    return ConfigurationError(f"Infeasible synthetic spec: {message}", setting_name=setting, setting_value=value)


def _draw_patterns(rng: np.random.Generator, spec: SyntheticSpec, background: int) -> List[Tuple[int, ...]]:
    low, high = spec.pattern_length
    if spec.patterns > background:
        raise _infeasible(f"{spec.patterns} patterns but only {background} background attributes",
                          "patterns", spec.patterns)
    if low > background:
        raise _infeasible(f"patterns of length {low} do not fit {background} background attributes",
                          "pattern_length", spec.pattern_length)
    high = min(high, background)

    if spec.disjoint_patterns:
        lengths = rng.integers(low, high + 1, size=spec.patterns)
        if int(lengths.sum()) > background:
            raise _infeasible(f"{int(lengths.sum())} pattern items exceed {background} background attributes",
                              "disjoint_patterns", True)
        order = rng.permutation(background).tolist()
        patterns, start = [], 0
        for length in lengths.tolist():
            patterns.append(tuple(sorted(order[start:start + length])))
            start += length
        return patterns

    patterns: List[Tuple[int, ...]] = []
    seen: Set[Tuple[int, ...]] = set()
    for _ in range(spec.patterns):
        for _attempt in range(_DISTINCT_PATTERN_ATTEMPTS):
            length = int(rng.integers(low, high + 1))
            candidate = tuple(sorted(rng.choice(background, size=length, replace=False).tolist()))
            if candidate not in seen:
                break
        else:
            raise _infeasible("cannot draw enough distinct patterns", "patterns", spec.patterns)
        seen.add(candidate)
        patterns.append(candidate)
    return patterns


class _AnomalyPlanter:
    """Builds anomaly rows against a fixed background."""

    def __init__(self, rng: np.random.Generator, spec: SyntheticSpec, patterns: List[Tuple[int, ...]],
                 weights: np.ndarray, background_matrix: np.ndarray, background: int):
        self.rng = rng
        self.spec = spec
        self.patterns = patterns
        self.weights = weights
        self.background = background
        self._cooccurrence = None
        self._matrix = background_matrix

    def _base_pattern(self) -> int:
        return int(self.rng.choice(len(self.patterns), p=self.weights))

    def rare_singleton(self, index: int) -> frozenset:
        reserved = self.background + index % self.spec.reserved_count
        return frozenset(self.patterns[self._base_pattern()]) | {reserved}

    def rare_combination(self, index: int) -> frozenset:
        if self._cooccurrence is None:
            dense = self._matrix.astype(np.int64)
            self._cooccurrence = dense.T @ dense
        cooc = self._cooccurrence
        used = np.diag(cooc) > 0
        for p in self.rng.permutation(len(self.patterns)).tolist():
            pattern = self.patterns[p]
            for a in self.rng.permutation(pattern).tolist():
                allowed = used & (cooc[a] == 0)
                allowed[list(pattern)] = False
                candidates = np.flatnonzero(allowed)
                if candidates.size:
                    b = int(self.rng.choice(candidates))
                    return frozenset(pattern) | {b}
        raise _infeasible("every pair of background attributes co-occurs; no rare combination exists",
                          "anomaly_style", self.spec.anomaly_style)

    def missing_expected(self, index: int) -> frozenset:
        eligible = [p for p, pattern in enumerate(self.patterns) if len(pattern) >= 2]
        if not eligible:
            raise _infeasible("missing-expected anomalies need a pattern with at least two items",
                              "pattern_length", self.spec.pattern_length)
        pattern = self.patterns[int(self.rng.choice(eligible))]
        dropped = int(self.rng.choice(pattern))
        return frozenset(pattern) - {dropped}

    def plant(self, index: int) -> frozenset:
        style = self.spec.anomaly_style
        if style == "rare-singleton":
            return self.rare_singleton(index)
        if style == "rare-combination":
            return self.rare_combination(index)
        return self.missing_expected(index)


def generate_synthetic_dataset(spec: SyntheticSpec, seed: int) -> SyntheticDataset:
    """
    Generate a planted-anomaly context together with its mixture.

    Args:
        spec: Shape, mixture and anomaly settings
        seed: Seed of the single random generator used

    Returns:
        SyntheticDataset with context named "synthetic" and its ground truth
    """
    rng = np.random.default_rng(seed)
    n, m = spec.n, spec.m
    k = spec.anomaly_count
    if k >= n:
        raise _infeasible(f"{k} anomalies leave no background rows among {n}", "anomalies", k)

    reserved = spec.reserved_count
    background = m - reserved
    if background < 1:
        raise _infeasible(f"{reserved} reserved attributes leave no background attributes", "m", m)

    patterns = _draw_patterns(rng, spec, background)
    weights = rng.uniform(spec.support_range[0], spec.support_range[1], size=len(patterns))
    weights = weights / weights.sum()

    pattern_matrix = np.zeros((len(patterns), background), dtype=bool)
    for p, pattern in enumerate(patterns):
        pattern_matrix[p, list(pattern)] = True

    assignments = rng.choice(len(patterns), size=n, p=weights)
    dense = pattern_matrix[assignments]
    if spec.noise > 0:
        dense ^= rng.random(dense.shape) < spec.noise

    positions = np.sort(rng.choice(n, size=k, replace=False)) if k else np.empty(0, dtype=np.int64)
    rows = [frozenset(np.flatnonzero(x).tolist()) for x in dense]

    planter = _AnomalyPlanter(rng, spec, patterns, weights, np.delete(dense, positions, axis=0), background)
    assigned = assignments.tolist()
    for index, position in enumerate(positions.tolist()):
        rows[position] = planter.plant(index)
        assigned[position] = -1

    width = max(6, len(str(n - 1)))
    row_ids = tuple(f"row{i:0{width}d}" for i in range(n))
    name_width = max(3, len(str(m - 1)))
    attributes = tuple(f"attr{j:0{name_width}d}" for j in range(background)) + \
        tuple(f"rare{j:0{name_width}d}" for j in range(reserved))

    context = Context("synthetic", attributes, row_ids, tuple(rows))
    truth = GroundTruth(frozenset(row_ids[i] for i in positions.tolist()))
    logger.info("Generated synthetic context", n=n, m=m, anomalies=k, style=spec.anomaly_style, seed=seed)
    return SyntheticDataset(context, truth, tuple(patterns), tuple(float(w) for w in weights), tuple(assigned))


def generate_synthetic(spec: SyntheticSpec, seed: int) -> Tuple[Context, GroundTruth]:
    """Generate a planted-anomaly context and its ground truth."""
    dataset = generate_synthetic_dataset(spec, seed)
    return dataset.context, dataset.truth
