"""Model indicators for the two stages and the admissible model set.

Second-stage indicator ``L`` has length ``1 + p``: slot 0 is the endogenous
regressor, slots ``1..p`` the columns of ``W``.  First-stage indicator ``M``
has length ``q + p``: instruments first, then the columns of ``W``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelPair",
    "is_valid_pair",
    "neighborhood_propose",
    "flip",
    "log_prior",
    "full_pair",
    "indicator_string",
]


@dataclass(frozen=True)
class ModelPair:
    L: np.ndarray
    M: np.ndarray
    q: int

    def __post_init__(self):
        L = np.asarray(self.L, dtype=bool)
        M = np.asarray(self.M, dtype=bool)
        p = L.shape[0] - 1
        if p < 0 or M.shape[0] != self.q + p:
            raise ValueError(f"inconsistent indicator lengths {L.shape[0]} and {M.shape[0]} for q={self.q}")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "M", M)

    @property
    def valid(self) -> bool:
        return is_valid_pair(self.L, self.M, self.q)


def is_valid_pair(L: np.ndarray, M: np.ndarray, q: int) -> bool:
    """True iff M contains a variable that L does not.

    Instruments never enter the outcome equation, so any included instrument
    is enough; an included ``W`` column counts only if L excludes it.
    """
    if M[:q].any():
        return True
    return bool(np.any(M[q:] & ~L[1:]))


def flip(indicator: np.ndarray, slot: int) -> np.ndarray:
    out = indicator.copy()
    out[slot] = not out[slot]
    return out


def neighborhood_propose(current: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Flip one slot chosen uniformly; returns the proposal and the slot.

    Every indicator of a given length has the same number of neighbours, so
    the proposal is symmetric and needs no Hastings correction.
    """
    slot = int(rng.integers(current.shape[0]))
    return flip(current, slot), slot


def log_prior(pair: ModelPair) -> float:
    """Unnormalised uniform prior over admissible pairs."""
    return 0.0 if pair.valid else -np.inf


def full_pair(p: int, q: int) -> ModelPair:
    return ModelPair(np.ones(1 + p, dtype=bool), np.ones(q + p, dtype=bool), q)


def indicator_string(indicator: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in indicator)
