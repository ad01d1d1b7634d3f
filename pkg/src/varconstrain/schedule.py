"""Penalty-factor and learning-rate schedules.

The penalty factor is a stopped geometric sequence mu_k = min(mu1 * r^(k-1),
mu_max).  The learning rate oscillates geometrically inside windows of S0
steps (restarting at every window) until a tipping step T, after which it
decays once and for all.  S0, T and S1 are derived from the run sizes:

    S0 = 2E/P,   T = floor(2E(mu_max - mu1) / (P r)),   S1 = E - T.

Step indices are 1-based: step j of subproblem k uses delta((k-1)Q + j).
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["PenaltySchedule", "LRSchedule", "mu", "delta", "derive_lr_params", "ScheduleError"]


class ScheduleError(Exception):
    pass


@dataclass(frozen=True)
class PenaltySchedule:
    mu1: float
    r: float
    mu_max: float

    def __post_init__(self):
        if not (self.mu1 > 0 and self.r > 1.0 and self.mu_max >= self.mu1):
            raise ScheduleError("need mu1 > 0, r > 1, mu_max >= mu1")


@dataclass(frozen=True)
class LRSchedule:
    L0: float
    D0: float
    S0: int
    T: int
    L1: float | None = None
    D1: float | None = None
    S1: int | None = None

    def __post_init__(self):
        if self.S0 <= 0:
            raise ScheduleError("S0 must be positive")


def mu(schedule: PenaltySchedule, k: int) -> float:
    """Penalty factor for subproblem k >= 1."""
    if k < 1:
        raise ScheduleError("subproblem index starts at 1")
    return min(schedule.mu1 * schedule.r ** (k - 1), schedule.mu_max)


def delta(schedule: LRSchedule, t: int) -> float:
    """Learning rate at global step t (the solver calls this with t >= 1)."""
    if t < 0:
        raise ScheduleError("negative step index")
    if t < schedule.T:
        return schedule.L0 * schedule.D0 ** ((t % schedule.S0) / schedule.S0)
    if schedule.L1 is None or schedule.D1 is None or schedule.S1 is None:
        raise ScheduleError(f"step {t} reached the tipping point but no final-phase rates are configured")
    return schedule.L1 * schedule.D1 ** ((t - schedule.T) / schedule.S1)


def derive_lr_params(E: int, P: int, penalty: PenaltySchedule) -> tuple[int, int, int]:
    """(S0, T, S1) from the run sizes; 2E/P must be an integer step count."""
    if E <= 0 or P <= 0:
        raise ScheduleError("E and P must be positive")
    if (2 * E) % P != 0:
        raise ScheduleError(f"2E/P = {2 * E}/{P} is not an integer step count")
    s0 = (2 * E) // P
    t = int(2 * E * (penalty.mu_max - penalty.mu1) / (P * penalty.r))
    s1 = E - t
    return s0, t, s1


def build_lr(E: int, P: int, penalty: PenaltySchedule, L0: float, D0: float, L1=None, D1=None) -> LRSchedule:
    s0, t, s1 = derive_lr_params(E, P, penalty)
    if t <= E and (L1 is None or D1 is None):
        raise ScheduleError("tipping point T <= E requires final-phase rates L1, D1")
    return LRSchedule(L0=L0, D0=D0, S0=s0, T=t, L1=L1, D1=D1, S1=s1)
