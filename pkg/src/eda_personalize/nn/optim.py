"""First-order optimizers over named gradient maps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, ShapeError


@dataclass
class OptimizerState:
    """Adam or plain SGD; moment buffers materialize on first use."""

    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    moments: dict = field(default_factory=dict)  # (layer, param) -> (m, v)

    def __post_init__(self):
        if self.kind not in ("adam", "sgd"):
            raise ConfigError(f"optimizer kind must be 'adam' or 'sgd', got {self.kind!r}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")

    def apply(self, weights: dict, grads: dict) -> None:
        """Update ``weights`` in place from a gradient map."""
        self.step += 1
        for lname, lgrads in grads.items():
            for pname, g in lgrads.items():
                w = weights[lname][pname]
                if g.shape != w.shape:
                    raise ShapeError(
                        f"gradient shape {g.shape} does not match {lname}.{pname} {w.shape}"
                    )
                if self.kind == "sgd":
                    w -= np.asarray(self.learning_rate, dtype=w.dtype) * g
                    continue
                key = (lname, pname)
                if key not in self.moments:
                    self.moments[key] = (np.zeros_like(w), np.zeros_like(w))
                m, v = self.moments[key]
                one = np.asarray(1.0, dtype=w.dtype)
                b1 = np.asarray(self.beta1, dtype=w.dtype)
                b2 = np.asarray(self.beta2, dtype=w.dtype)
                m *= b1
                m += (one - b1) * g
                v *= b2
                v += (one - b2) * (g * g)
                m_hat = m / (one - b1**self.step)
                v_hat = v / (one - b2**self.step)
                w -= np.asarray(self.learning_rate, dtype=w.dtype) * m_hat / (
                    np.sqrt(v_hat) + np.asarray(self.eps, dtype=w.dtype)
                )


def make_optimizer(kind: str = "adam", learning_rate: float = 1e-3, **kwargs) -> OptimizerState:
    return OptimizerState(kind=kind, learning_rate=learning_rate, **kwargs)
