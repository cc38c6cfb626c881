"""Style transfer by optimizing pixels against FDL style and phase content terms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..losses import FdlConfig, content_features, fdl_features, frequency_features
from ..numerics import AdamState, Tensor, adam_step, as_tensor, backward, param, scale, stack_sum

__all__ = ["StyleResult", "TraceRow", "style_transfer", "style_objective"]


SCHEDULES = ("cosine", "constant")


class DivergenceError(RuntimeError):
    """The objective became non-finite."""


@dataclass(frozen=True)
class TraceRow:
    step: int
    objective: float
    content: float
    style: float


@dataclass
class StyleResult:
    image: np.ndarray
    trace: list[TraceRow] = field(default_factory=list)
    initial_objective: float = 0.0
    final_objective: float = 0.0


def _terms(R, fs, ft, cfg, alpha, beta, eval_id):
    fr = frequency_features(R, cfg)
    content = content_features(fr, ft, cfg, eval_id) if alpha else None
    style = fdl_features(fr, fs, cfg, eval_id) if beta else None
    parts = []
    if content is not None:
        parts.append(scale(content, alpha))
    if style is not None:
        parts.append(scale(style, beta))
    total = stack_sum(parts) if parts else Tensor(0.0)
    return total, content, style


def style_objective(R, content, style, cfg: FdlConfig, alpha: float, beta: float, eval_id: int = 0) -> float:
    """``alpha * content_loss(R, content) + beta * style_loss(R, style)`` at one eval id."""
    fs = frequency_features(as_tensor(style), cfg)
    ft = frequency_features(as_tensor(content), cfg)
    return _terms(as_tensor(R), fs, ft, cfg, alpha, beta, eval_id)[0].item()


def style_transfer(
    content,
    style,
    cfg: FdlConfig,
    alpha: float = 1.0,
    beta: float = 1.0,
    steps: int = 300,
    lr: float = 0.01,
    reference_eval_id: int = 0,
    schedule: str = "cosine",
) -> StyleResult:
    """Optimize pixels starting from ``content``; step ``t`` uses eval id ``t + 1``.

    ``schedule`` is ``"cosine"`` (step size decays from ``lr`` towards 0,
    which damps the noise of the fresh projections per step) or
    ``"constant"``. The initial and final objectives are both evaluated at
    ``reference_eval_id`` so they see the same projections. The returned
    image is clipped to [0, 1].
    """
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}, got {schedule!r}")
    T, S = as_tensor(content), as_tensor(style)
    if T.shape != S.shape:
        raise ValueError(f"content {T.shape} and style {S.shape} must have the same shape")
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    fs = frequency_features(S, cfg)
    ft = frequency_features(T, cfg)
    R = param(T.data.copy())
    initial = _terms(Tensor(R.data), fs, ft, cfg, alpha, beta, reference_eval_id)[0].item()
    state = AdamState.for_params([R], lr=lr)
    trace = []
    for step in range(steps):
        if schedule == "cosine":
            state.lr = lr * 0.5 * (1.0 + np.cos(np.pi * step / steps))
        total, c, s = _terms(R, fs, ft, cfg, alpha, beta, step + 1)
        value = total.item()
        if not np.isfinite(value):
            raise DivergenceError(f"objective became {value} at step {step}")
        trace.append(TraceRow(step, value, c.item() if c is not None else 0.0, s.item() if s is not None else 0.0))
        if not total.requires_grad:
            continue
        grad = backward(total, [R])[R]
        (R.data,), state = adam_step([R], [grad], state)
    final = np.clip(R.data, 0.0, 1.0)
    final_obj = _terms(Tensor(final), fs, ft, cfg, alpha, beta, reference_eval_id)[0].item()
    return StyleResult(final, trace, initial, final_obj)
