"""Finite-difference verification of the autodiff adjoints.

Central differences (default step 1e-4, meant for inputs scaled to unit
order) are compared per parameter block against one reverse-mode pass.  The
`corrupt` hook scales selected adjoint blocks before comparison; it exists so
the harness can prove to itself that an injected fault in one block is
localized to exactly that block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .engine import Tensor, no_grad
from .layers import Parameter

__all__ = ["BlockReport", "GradCheckReport", "grad_check"]


@dataclass(frozen=True)
class BlockReport:
    name: str
    max_rel_error: float
    ok: bool


@dataclass(frozen=True)
class GradCheckReport:
    blocks: tuple[BlockReport, ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(b.ok for b in self.blocks)

    @property
    def max_rel_error(self) -> float:
        return max(b.max_rel_error for b in self.blocks)

    @property
    def failures(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.blocks if not b.ok)

    def __str__(self) -> str:
        lines = [f"grad_check tolerance={self.tolerance:g}"]
        for b in self.blocks:
            lines.append(f"  {'ok ' if b.ok else 'FAIL'} {b.name}: {b.max_rel_error:.3e}")
        return "\n".join(lines)


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Parameter],
    step: float = 1e-4,
    tolerance: float = 1e-4,
    corrupt: Mapping[str, float] | None = None,
) -> GradCheckReport:
    """Compare reverse-mode gradients of ``loss_fn`` against central differences.

    ``loss_fn`` must be a deterministic scalar function of the current
    parameter values.  The relative error of a coordinate is
    ``|adjoint - fd| / max(1, |adjoint|, |fd|)``, and each block reports its
    maximum.
    """
    if not params:
        raise ValueError("grad_check needs at least one parameter block")
    names = [p.name for p in params]
    if len(set(names)) != len(names):
        raise ValueError("parameter names must be unique")
    unknown = sorted(set(corrupt or ()) - set(names))
    if unknown:
        raise ValueError(f"corrupt refers to unknown parameters: {unknown}")

    for p in params:
        p.grad = None
    loss = loss_fn()
    if loss.data.size != 1:
        raise ValueError("loss_fn must return a scalar")
    loss.backward()
    adjoints = {
        p.name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data)) for p in params
    }
    if corrupt:
        for name, scale in corrupt.items():
            adjoints[name] = adjoints[name] * float(scale)

    def evaluate() -> float:
        with no_grad():
            return float(loss_fn().data)

    blocks: list[BlockReport] = []
    for p in params:
        flat = p.data.reshape(-1)
        fd = np.zeros_like(flat)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + step
            hi = evaluate()
            flat[i] = saved - step
            lo = evaluate()
            flat[i] = saved
            fd[i] = (hi - lo) / (2.0 * step)
        a = adjoints[p.name].reshape(-1)
        denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(fd)))
        rel = float(np.max(np.abs(a - fd) / denom)) if flat.size else 0.0
        blocks.append(BlockReport(p.name, rel, rel < tolerance))
    return GradCheckReport(tuple(blocks), tolerance)
