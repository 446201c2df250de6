"""Central finite-difference verification of model gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .errors import ConfigurationError

MAX_PARAMS = 20_000
FULL_TENSOR_LIMIT = 500
SAMPLED_COORDS = 100


@dataclass
class GradCheckReport:
    per_tensor: Dict[str, float]
    coordinates: Dict[str, int]

    @property
    def max_error(self) -> float:
        return max(self.per_tensor.values(), default=0.0)

    def passed(self, tol: float = 1e-4) -> bool:
        return self.max_error <= tol


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(1e-8, abs(a) + abs(b))


def finite_difference_check(model, params, grids, labels, h: float = 1e-5,
                            masks: Optional[dict] = None,
                            rng: Optional[np.random.Generator] = None) -> GradCheckReport:
    """Compare analytic gradients with ``(L(theta + h) - L(theta - h)) / 2h``.

    Tensors with at most 500 entries are checked everywhere, larger ones at
    100 random coordinates. ``masks`` fixes dropout so the loss is deterministic.
    """
    total = sum(p.size for p in params.values())
    if total > MAX_PARAMS:
        raise ConfigurationError(f"{total} parameters exceeds gradcheck limit {MAX_PARAMS}")
    rng = rng if rng is not None else np.random.default_rng(0)
    params = {k: v.copy() for k, v in params.items()}
    _, grads = model.loss_and_grads(params, grids, labels, masks)
    errors, counts = {}, {}
    for name, theta in params.items():
        flat = theta.reshape(-1)
        if flat.size <= FULL_TENSOR_LIMIT:
            coords = np.arange(flat.size)
        else:
            coords = rng.choice(flat.size, SAMPLED_COORDS, replace=False)
        worst = 0.0
        for i in coords:
            orig = flat[i]
            flat[i] = orig + h
            up, _ = model.loss_and_grads(params, grids, labels, masks)
            flat[i] = orig - h
            down, _ = model.loss_and_grads(params, grids, labels, masks)
            flat[i] = orig
            fd = (up - down) / (2 * h)
            worst = max(worst, relative_error(grads[name].reshape(-1)[i], fd))
        errors[name] = worst
        counts[name] = int(len(coords))
    return GradCheckReport(errors, counts)
