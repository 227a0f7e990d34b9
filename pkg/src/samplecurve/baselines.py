from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidPrevalence, InvalidSpec


@dataclass(frozen=True)
class EpvInput:
    p: int
    prevalence: float
    epv: float = 10.0


def epv_sample_size(inp: EpvInput) -> int:
    """Events-per-variable rule: ceil(epv * p / event fraction).

    The event fraction is the minority class share, so prevalences above 0.5
    count non-events as the events.
    """
    if not 0 < inp.prevalence < 1:
        raise InvalidPrevalence(f"prevalence must lie in (0, 1), got {inp.prevalence}")
    if inp.p < 1 or inp.epv <= 0:
        raise InvalidSpec("need p >= 1 and epv > 0")
    events = min(inp.prevalence, 1 - inp.prevalence)
    # guard against 10 * 10 / 0.1 landing a hair above an integer
    return math.ceil(round(inp.epv * inp.p / events, 9))
