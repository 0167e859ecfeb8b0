"""
Finite-difference verification of the analytic backward pass.
"""

import logging
from typing import Iterable, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from shared.exceptions import InvalidParameterError
from tensor_core import Mode, RealMatrix

from .network import GltrNetwork, GradientTape, batch_loss, forward_backward

logger = logging.getLogger(__name__)

INPUT_GROUP = "input"


class GroupCheck(BaseModel):
    """Gradient agreement for one parameter group."""

    name: str = Field(..., min_length=1, description="Parameter group name")
    max_relative_error: float = Field(..., ge=0.0, description="Largest relative error over checked entries")
    num_checked: int = Field(..., ge=0, description="Number of entries compared")
    passed: bool = Field(..., description="Whether the error is within tolerance")


class GradCheckReport(BaseModel):
    """Per-group outcome of a gradient check."""

    step: float = Field(..., gt=0.0, description="Central-difference step h")
    tolerance: float = Field(..., gt=0.0, description="Maximum allowed relative error")
    loss: float = Field(..., description="Loss at the unperturbed point")
    groups: List[GroupCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(group.passed for group in self.groups)

    @property
    def failing(self) -> dict[str, float]:
        return {g.name: g.max_relative_error for g in self.groups if not g.passed}

    def errors(self) -> dict[str, float]:
        return {g.name: g.max_relative_error for g in self.groups}


def relative_error(analytic: float, numeric: float) -> float:
    """``|a - n| / max(1e-8, |a| + |n|)``."""
    return abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))


def _entries(size: int, limit: Optional[int], rng: np.random.Generator) -> Iterable[int]:
    if limit is None or limit >= size:
        return range(size)
    return sorted(rng.choice(size, size=limit, replace=False).tolist())


def grad_check(net: GltrNetwork, f: RealMatrix, label: int, h: float = 1e-4, tol: float = 1e-5,
               max_entries_per_group: Optional[int] = None, seed: int = 0,
               include_input: bool = True) -> GradCheckReport:
    """
    Compare analytic gradients against central differences.

    Batch norm runs in inference mode so the loss is a fixed function of the
    parameters. Parameters are perturbed in place and restored exactly.

    Args:
        net: Network under test
        f: d×T input sequence
        label: Identity label
        h: Central-difference step
        tol: Relative-error tolerance
        max_entries_per_group: Optional cap on entries checked per group
        seed: Seed for choosing entries when capped
        include_input: Also check ∂loss/∂input

    Returns:
        GradCheckReport with one entry per parameter group
    """
    if not h > 0:
        raise InvalidParameterError("finite-difference step must be positive", parameter="h", value=h)
    tape = GradientTape()
    loss = forward_backward(f, label, net, tape, mode=Mode.INFERENCE)
    picker = np.random.default_rng(seed)

    def perturb_check(array: np.ndarray, analytic: np.ndarray, evaluate) -> tuple[float, int]:
        flat = array.reshape(-1)
        flat_grad = analytic.reshape(-1)
        worst = 0.0
        count = 0
        for index in _entries(flat.size, max_entries_per_group, picker):
            original = flat[index]
            flat[index] = original + h
            plus = evaluate()
            flat[index] = original - h
            minus = evaluate()
            flat[index] = original
            numeric = (plus - minus) / (2.0 * h)
            worst = max(worst, relative_error(float(flat_grad[index]), numeric))
            count += 1
        return worst, count

    groups: List[GroupCheck] = []
    for name, array in net.parameters().items():
        worst, count = perturb_check(array, tape.grads[name], lambda: batch_loss([f], [label], net, Mode.INFERENCE))
        groups.append(GroupCheck(name=name, max_relative_error=worst, num_checked=count, passed=worst <= tol))
        logger.debug(f"gradcheck {name}: max relative error {worst:.3e} over {count} entries")

    if include_input:
        perturbed_input = np.array(f, dtype=np.float64, copy=True)
        worst, count = perturb_check(perturbed_input, tape.input_grads[0],
                                     lambda: batch_loss([perturbed_input], [label], net, Mode.INFERENCE))
        groups.append(GroupCheck(name=INPUT_GROUP, max_relative_error=worst, num_checked=count,
                                 passed=worst <= tol))

    report = GradCheckReport(step=h, tolerance=tol, loss=loss, groups=groups)
    if not report.passed:
        logger.warning(f"Gradient check failed for groups: {sorted(report.failing)}")
    return report


def randomize_zero_init(net: GltrNetwork, rng: np.random.Generator, scale: float = 0.5) -> None:
    """
    Fill the attention output projection and batch-norm shifts with uniform
    values in ±scale. With a zero output projection every upstream attention
    gradient is exactly zero.
    """
    if net.tsa is None:
        return
    out = net.tsa.out_proj
    out.weight = rng.uniform(-scale, scale, size=out.weight.shape)
    out.bias = rng.uniform(-scale, scale, size=out.bias.shape)
    for bn in (net.tsa.bn_b, net.tsa.bn_c):
        bn.beta = rng.uniform(-scale, scale, size=bn.beta.shape)
