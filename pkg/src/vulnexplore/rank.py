"""Coverage-based ranking: matches in functions the fuzzer never entered come first."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .corpus import Coverset
from .templates import Match


@dataclass(frozen=True)
class RankedMatches:
    high: tuple[Match, ...] = ()
    low: tuple[Match, ...] = ()

    def __len__(self) -> int:
        return len(self.high) + len(self.low)


def is_high(match: Match, coverset: Coverset) -> bool:
    """Untested code ranks high: the match's function is absent from the coverset."""
    return match.enclosing_function not in coverset


def rank_matches(matches: Iterable[Match], coverset: Coverset) -> RankedMatches:
    """Stable partition into (high, low); input order is preserved within each list."""
    high, low = [], []
    for m in matches:
        (high if is_high(m, coverset) else low).append(m)
    return RankedMatches(tuple(high), tuple(low))
