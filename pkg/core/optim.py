"""
Adam optimizer with global-norm gradient clipping for numkit parameters.
"""

# Standard library imports
from typing import Dict, Optional

# Third-party imports
import numpy as np

# Local imports
from core.numkit import Tensor


def clip_by_global_norm(grads: Dict[str, np.ndarray], max_norm: Optional[float]) -> float:
    """
    Scale gradients in place so their joint L2 norm is at most max_norm.

    Returns:
        The norm before clipping
    """
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if max_norm and norm > max_norm:
        scale = max_norm / norm
        for name in grads:
            grads[name] = grads[name] * scale
    return norm


class Adam:
    """Adaptive moment estimation over a dict of named parameter tensors."""

    def __init__(
        self,
        params: Dict[str, Tensor],
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ):
        self.params = params
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def step(self, grads: Dict[str, np.ndarray]) -> None:
        self.step_count += 1
        correction1 = 1.0 - self.beta1**self.step_count
        correction2 = 1.0 - self.beta2**self.step_count
        for name, grad in grads.items():
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * grad
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * grad * grad
            m_hat = self.m[name] / correction1
            v_hat = self.v[name] / correction2
            self.params[name].data -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)
