"""Finite-difference gradient checking.

``check_gradients`` rebuilds a graph from float64 leaves, compares the
analytic gradient of each leaf against central differences, and reports the
worst relative error per leaf. Relative error uses max(|analytic|,
|numeric|, 1.0) in the denominator so near-zero gradients do not blow up.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .autodiff import Node, backward


class GradientCheckFailure(AssertionError):
    pass


def numeric_gradient(
    fn: Callable[[Mapping[str, np.ndarray]], float],
    values: Mapping[str, np.ndarray],
    name: str,
    h: float = 1e-3,
) -> np.ndarray:
    """Central-difference gradient of ``fn`` with respect to ``values[name]``."""
    base = {k: np.array(v, dtype=np.float64) for k, v in values.items()}
    target = base[name]
    grad = np.zeros_like(target)
    it = np.nditer(target, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = target[idx]
        target[idx] = orig + h
        f_plus = fn(base)
        target[idx] = orig - h
        f_minus = fn(base)
        target[idx] = orig
        grad[idx] = (f_plus - f_minus) / (2.0 * h)
        it.iternext()
    return grad


def check_gradients(
    build: Callable[[Mapping[str, Node]], Node],
    values: Mapping[str, np.ndarray],
    h: float = 1e-3,
    tol: float = 1e-3,
) -> dict[str, float]:
    """Compare analytic and numeric gradients for every named leaf.

    ``build`` maps named leaf nodes to a scalar loss node. Returns the worst
    relative error per leaf and raises :class:`GradientCheckFailure` if any
    exceeds ``tol``.
    """
    values64 = {k: np.array(v, dtype=np.float64) for k, v in values.items()}

    leaves = {k: Node(v.copy(), op="param", name=k) for k, v in values64.items()}
    loss = build(leaves)
    backward(loss)

    def scalar_loss(vals: Mapping[str, np.ndarray]) -> float:
        fresh = {k: Node(np.array(v, dtype=np.float64), op="param", name=k) for k, v in vals.items()}
        return float(build(fresh).value)

    errors: dict[str, float] = {}
    for name, leaf in leaves.items():
        analytic = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.value)
        numeric = numeric_gradient(scalar_loss, values64, name, h=h)
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
        rel = np.abs(analytic - numeric) / denom
        errors[name] = float(rel.max()) if rel.size else 0.0

    bad = {k: e for k, e in errors.items() if e > tol}
    if bad:
        detail = ", ".join(f"{k}: {e:.2e}" for k, e in sorted(bad.items()))
        raise GradientCheckFailure(f"gradient mismatch above {tol:g}: {detail}")
    return errors
