"""Terminal reward computation.

A finished sequence is judged in three stages: does it compile, does it
behave correctly, and how good is its synthesized area-delay product (ADP).
The reward is a single scalar:

    non-compilable        -> alpha_nc            (< 0, default -1.0)
    compilable, wrong     -> alpha_nf            (< 0, default -0.1)
    functional            -> alpha_b + (1 - (a*d) / (a_ref * d_ref))

where (a_ref, d_ref) is the baseline: the area and delay of the first
functional result seen in the run. The first functional result therefore
scores exactly alpha_b, and anything with a lower ADP scores higher.
Rewards are not clipped; a functional result worse than the baseline can
go negative.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional


@dataclass(frozen=True)
class Baseline:
    """Area and delay of the first functional synthesis result in a run."""

    area: float
    delay: float

    def __post_init__(self) -> None:
        if not (self.area > 0 and self.delay > 0):
            raise ValueError(f"baseline area/delay must be positive, got {self}")

    @property
    def adp(self) -> float:
        return self.area * self.delay


@dataclass(frozen=True)
class RewardParams:
    alpha_nc: float = -1.0
    alpha_nf: float = -0.1
    alpha_b: float = 0.5
    baseline: Optional[Baseline] = None

    def __post_init__(self) -> None:
        if not self.alpha_nc < 0:
            raise ValueError(f"alpha_nc must be negative, got {self.alpha_nc}")
        if not self.alpha_nf < 0:
            raise ValueError(f"alpha_nf must be negative, got {self.alpha_nf}")
        if not self.alpha_b > 0:
            raise ValueError(f"alpha_b must be positive, got {self.alpha_b}")


@dataclass(frozen=True)
class EvaluationOutcome:
    """Verdict for one terminal sequence.

    ``functional`` is meaningful only when ``compilable``; area and delay are
    present exactly when functional. Area or delay of zero can occur for
    degenerate wire-only circuits; such an outcome cannot seed a baseline.
    ``artifacts`` points at tool logs kept for diagnosis.
    """

    compilable: bool
    functional: bool
    area: Optional[float] = None
    delay: Optional[float] = None
    artifacts: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.functional and not self.compilable:
            raise ValueError("functional outcome must be compilable")
        if self.functional:
            if self.area is None or self.delay is None:
                raise ValueError("functional outcome requires area and delay")
            if self.area < 0 or self.delay < 0:
                raise ValueError(f"area/delay must be non-negative, got {self}")
        elif self.area is not None or self.delay is not None:
            raise ValueError("area/delay are only meaningful for functional outcomes")

    @property
    def adp(self) -> Optional[float]:
        if self.area is None or self.delay is None:
            return None
        return self.area * self.delay


def compute_reward(outcome: Optional[EvaluationOutcome], params: RewardParams) -> float:
    """Score an outcome; ``None`` marks a non-terminal state and scores 0."""
    if outcome is None:
        return 0.0
    if not outcome.compilable:
        return params.alpha_nc
    if not outcome.functional:
        return params.alpha_nf
    if params.baseline is None:
        raise RuntimeError(
            "functional outcome scored before a baseline was set; "
            "call set_baseline on the first functional outcome"
        )
    assert outcome.adp is not None
    return params.alpha_b + (1.0 - outcome.adp / params.baseline.adp)


def set_baseline(params: RewardParams, outcome: EvaluationOutcome) -> RewardParams:
    """Pin the run baseline to the first functional outcome's area and delay.

    The baseline is immutable for the rest of the run; attempting to reset it
    is an error so accidental re-baselining cannot skew later rewards.
    """
    if not outcome.functional:
        raise ValueError("baseline can only be set from a functional outcome")
    if params.baseline is not None:
        raise ValueError("baseline is already set and cannot be replaced")
    assert outcome.area is not None and outcome.delay is not None
    return replace(params, baseline=Baseline(area=outcome.area, delay=outcome.delay))


NON_COMPILABLE = EvaluationOutcome(compilable=False, functional=False)
NON_FUNCTIONAL = EvaluationOutcome(compilable=True, functional=False)


def functional_outcome(
    area: float, delay: float, artifacts: tuple[str, ...] = ()
) -> EvaluationOutcome:
    return EvaluationOutcome(
        compilable=True, functional=True, area=area, delay=delay, artifacts=artifacts
    )
