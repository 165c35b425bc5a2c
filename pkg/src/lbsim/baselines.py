"""Level-oblivious comparison policies: uniform random and round-robin."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .balancer import DomainState


class NoServerError(RuntimeError):
    pass


def _candidates(state: DomainState) -> list[int]:
    ids = sorted(state.powered_on)
    if not ids:
        raise NoServerError("no powered-on server to select")
    return ids


def random_select(state: DomainState, rng: np.random.Generator) -> int:
    ids = _candidates(state)
    return ids[int(rng.integers(len(ids)))]


@dataclass(frozen=True)
class RoundRobinCursor:
    next_index: int = 0


def round_robin_select(state: DomainState, cursor: RoundRobinCursor) -> tuple[int, RoundRobinCursor]:
    ids = _candidates(state)
    index = cursor.next_index % len(ids)
    return ids[index], RoundRobinCursor((index + 1) % len(ids))
