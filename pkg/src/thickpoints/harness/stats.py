"""Streaming estimators and interval helpers.

Summaries keep (n, sum, sum of squares, min, max) so that merging is an
exact associative and commutative fold for integer-valued streams, and
stable to ~1e-12 for float streams of moderate magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class EstimatorSummary:
    n: int = 0
    total: float = 0.0
    total_sq: float = 0.0
    minimum: float = math.inf
    maximum: float = -math.inf

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls()
        return cls(
            n=int(values.size),
            total=float(values.sum()),
            total_sq=float((values * values).sum()),
            minimum=float(values.min()),
            maximum=float(values.max()),
        )

    def add(self, value):
        self.n += 1
        self.total += value
        self.total_sq += value * value
        self.minimum = min(self.minimum, value)
        self.maximum = max(self.maximum, value)

    def merge(self, other):
        return EstimatorSummary(
            n=self.n + other.n,
            total=self.total + other.total,
            total_sq=self.total_sq + other.total_sq,
            minimum=min(self.minimum, other.minimum),
            maximum=max(self.maximum, other.maximum),
        )

    @property
    def mean(self):
        return self.total / self.n if self.n else math.nan

    @property
    def variance(self):
        if self.n < 2:
            return math.nan
        v = (self.total_sq - self.total * self.total / self.n) / (self.n - 1)
        return max(v, 0.0)

    @property
    def stderr(self):
        return math.sqrt(self.variance / self.n) if self.n >= 2 else math.nan

    def ci95(self):
        half = 1.96 * self.stderr
        return (self.mean - half, self.mean + half)

    def to_dict(self):
        return {
            "n": self.n,
            "mean": self.mean if self.n else None,
            "variance": self.variance if self.n >= 2 else None,
            "stderr": self.stderr if self.n >= 2 else None,
            "min": self.minimum if self.n else None,
            "max": self.maximum if self.n else None,
        }


def wilson_interval(successes, n, z=1.96):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def proportion_interval(successes, n, wilson_threshold=30, z=1.96):
    """Wilson interval when either tail count is small, normal otherwise."""
    few = min(successes, n - successes) < wilson_threshold
    if few:
        return wilson_interval(successes, n, z)
    p = successes / n
    half = z * math.sqrt(p * (1 - p) / n)
    return (p - half, p + half)
