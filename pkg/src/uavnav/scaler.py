"""Depth-label scaling: discrete planner labels to metric step sizes.

A planner emits a depth label in {1..L} expressing intended forward travel.
In adaptive mode the label is mapped through a nonlinear curve

    step = max(d_min, s * (label / L) ** p)

so the vehicle takes long strides when the target is far (label near L) and
short, cautious ones when close.  Fixed mode ignores the label and always
returns a constant step (used for ablation runs via ``--fixed-step``).
"""

from __future__ import annotations

from dataclasses import dataclass

MODE_ADAPTIVE = "adaptive"
MODE_FIXED = "fixed"


@dataclass(frozen=True)
class ScalerConfig:
    s: float = 10.0          # global scale: step at label L, meters
    num_labels: int = 10     # L, count of depth labels
    p: float = 1.8           # curve exponent
    d_min: float = 0.1       # step floor, meters
    mode: str = MODE_ADAPTIVE
    fixed_step: float = 2.0  # used only in fixed mode, meters

    def __post_init__(self):
        if self.num_labels < 1:
            raise ValueError(f"num_labels must be >= 1, got {self.num_labels}")
        if not self.p > 0.0:
            raise ValueError(f"exponent p must be > 0, got {self.p}")
        if not 0.0 < self.d_min <= self.s:
            raise ValueError(f"need 0 < d_min <= s, got d_min={self.d_min}, s={self.s}")
        if self.mode not in (MODE_ADAPTIVE, MODE_FIXED):
            raise ValueError(f"unknown scaler mode {self.mode!r}")
        if not self.fixed_step > 0.0:
            raise ValueError(f"fixed_step must be > 0, got {self.fixed_step}")


def scale_depth(cfg: ScalerConfig, label: int) -> float:
    """Convert a depth label into a metric step size.

    The label must already be inside {1..L}; planners clamp raw model output
    before it reaches this point, so an out-of-range label here is a bug.
    """
    if not isinstance(label, int) or isinstance(label, bool):
        raise ValueError(f"depth label must be an int, got {label!r}")
    if not 1 <= label <= cfg.num_labels:
        raise ValueError(f"depth label {label} outside {{1..{cfg.num_labels}}}")
    if cfg.mode == MODE_FIXED:
        return cfg.fixed_step
    return max(cfg.d_min, cfg.s * (label / cfg.num_labels) ** cfg.p)
