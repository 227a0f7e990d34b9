from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch


@dataclass(frozen=True)
class Dataset:
    """One finite draw: predictors, outcomes and the oracle mean for each row.

    ``true_prob`` holds the event probability for binary outcomes and the
    conditional mean for continuous ones.
    """

    predictors: np.ndarray
    outcomes: np.ndarray
    true_prob: np.ndarray
    outcome_type: str = "binary"

    def __post_init__(self) -> None:
        if self.predictors.ndim != 2:
            raise DimensionMismatch("predictors must be a 2-d array")
        n = self.predictors.shape[0]
        if self.outcomes.shape != (n,) or self.true_prob.shape != (n,):
            raise DimensionMismatch("predictors, outcomes and true_prob are not row-aligned")

    @property
    def n(self) -> int:
        return int(self.predictors.shape[0])

    @property
    def p(self) -> int:
        return int(self.predictors.shape[1])
