"""Reference models implementing the export protocol, for demos and tests."""

from __future__ import annotations

import random


class ConstantModel:
    """Always emits the same distribution; exports aggregate to zero variance."""

    def __init__(self, probs=(0.9, 0.1)):
        self.probs = [float(p) for p in probs]
        self.n_classes = len(self.probs)

    def stochastic_proba(self, texts):
        return [list(self.probs) for _ in texts]


class JitteredModel:
    """Seedable mock whose passes wobble around a text-length heuristic."""

    def __init__(self, n_classes: int = 2, spread: float = 0.08):
        self.n_classes = n_classes
        self.spread = spread
        self._rng = random.Random(0)

    def seed(self, value: int) -> None:
        self._rng = random.Random(value)

    def stochastic_proba(self, texts):
        rows = []
        for text in texts:
            base = 0.2 + 0.6 * ((len(text) % 7) / 6.0)
            pos = min(max(base + self._rng.gauss(0.0, self.spread), 0.0), 1.0)
            rest = (1.0 - pos) / (self.n_classes - 1)
            rows.append([rest] * (self.n_classes - 1) + [pos])
        return rows


def constant_model() -> ConstantModel:
    return ConstantModel()


def jittered_model() -> JitteredModel:
    return JitteredModel()
