"""Momentum SGD: ``v <- momentum * v - lr * g``; ``theta <- theta + v``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .errors import ShapeError


@dataclass
class SGDMomentum:
    learning_rate: float = 0.001
    momentum: float = 0.9
    velocity: Dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]):
        """Update ``params`` in place and return them."""
        for name, theta in params.items():
            g = grads[name]
            if g.shape != theta.shape:
                raise ShapeError(f"{name}: gradient {g.shape} vs parameter {theta.shape}")
            v = self.velocity.get(name)
            if v is None:
                v = np.zeros_like(theta)
            elif v.shape != theta.shape:
                raise ShapeError(f"{name}: velocity {v.shape} vs parameter {theta.shape}")
            v = self.momentum * v - self.learning_rate * g
            self.velocity[name] = v
            theta += v
        return params
