"""Solver configuration shared by the library and the CLI."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class SolverConfig:
    """Accuracy targets, constant multipliers and problem constants.

    ``c_N`` and ``c_r`` scale the iteration horizon and the batch-size rule;
    both rules are only known up to constants. Problem constants left as
    ``None`` are derived from the graph and oracles where possible.
    """

    eps: float
    delta: float = 0.05
    seed: int = 0
    c_N: float = 1.0
    c_r: float = 1.0
    L_psi: float | None = None
    mu: float | None = None
    M_F_sq: float | None = None
    sigma_x_sq: float | None = None
    N_override: int | None = None
    batch_cap: int = 10_000_000
    trials: int = 1

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if not 0.0 < self.delta < 0.25:
            raise ConfigError(f"delta must lie in (0, 0.25), got {self.delta}")
        for name in ("c_N", "c_r"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("L_psi", "mu"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be > 0, got {v}")
        for name in ("M_F_sq", "sigma_x_sq"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ConfigError(f"{name} must be >= 0, got {v}")
        if self.N_override is not None and self.N_override < 1:
            raise ConfigError(f"N_override must be >= 1, got {self.N_override}")
        if self.batch_cap < 1:
            raise ConfigError(f"batch_cap must be >= 1, got {self.batch_cap}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)
