"""Fixed-time signal plans expressed over link-to-link movements."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParamError


@dataclass(frozen=True)
class SignalPlan:
    """Cyclic fixed-time plan.

    phases: ordered (duration_s, permitted movements) pairs, each followed by
    an all-red interphase.  Movements are (from_link, to_link) pairs.  The
    cycle length equals the sum of phase durations plus one interphase per
    phase.
    """

    phases: tuple[tuple[int, frozenset[tuple[int, int]]], ...]
    interphase: int = 4

    @property
    def cycle(self) -> int:
        return sum(d for d, _ in self.phases) + len(self.phases) * self.interphase

    def validate(self) -> None:
        if any(d <= 0 for d, _ in self.phases):
            raise ParamError("phase durations must be positive")
        if self.interphase < 0:
            raise ParamError("interphase must be >= 0")

    def phase_windows(self) -> list[tuple[int, int, frozenset[tuple[int, int]]]]:
        """(start_s, end_s, movements) for each phase within one cycle."""
        windows = []
        t = 0
        for dur, movs in self.phases:
            windows.append((t, t + dur, movs))
            t += dur + self.interphase
        return windows


def default_two_ring_plan(ns_left, ns_through_right, ew_left, ew_through_right) -> SignalPlan:
    """10/30/10/30 plan with 4 s interphases (96 s cycle).

    Protected lefts get the short phases, through+right the long ones,
    north-south served before east-west.
    """
    return SignalPlan(
        phases=(
            (10, frozenset(ns_left)),
            (30, frozenset(ns_through_right)),
            (10, frozenset(ew_left)),
            (30, frozenset(ew_through_right)),
        ),
        interphase=4,
    )


def green_mask(plan: SignalPlan, movements, always_green) -> np.ndarray:
    """uint8 matrix [n_movements, cycle_s]: 1 where the movement may discharge.

    ``movements`` is the ordered list of (from, to) pairs the mask rows follow;
    ``always_green`` is a set of pairs that ignore the signal (mid-block
    junctions, ramp merges, exits).
    """
    plan.validate()
    cycle = plan.cycle
    mask = np.zeros((len(movements), cycle), dtype=np.uint8)
    index = {mv: i for i, mv in enumerate(movements)}
    for mv in always_green:
        if mv in index:
            mask[index[mv], :] = 1
    for start, end, movs in plan.phase_windows():
        for mv in movs:
            if mv in index:
                mask[index[mv], start:end] = 1
    return mask
