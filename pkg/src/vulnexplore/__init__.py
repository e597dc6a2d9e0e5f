"""Static vulnerability exploration for MiniC programs.

Starting from a fuzzer-found crash, localize the fault, turn it into an AST
template, find recurring instances across the code base and rank them by
whether fuzzing ever reached them.
"""

from __future__ import annotations

from .corpus import Coverset, CorpusEntry, ExecutionSlice, FunctionKey, FuzzCorpus, compute_coverset, load_corpus
from .errors import VulnExploreError
from .explore import ExploreConfig, ExploreReport, render_report, run_explore
from .frontend import load_program
from .interp import CrashReport, RunResult, execute
from .localize import FaultDice, FaultLocus, localize_failure, obtain_dice
from .rank import RankedMatches, is_high, rank_matches
from .templates import Match, MatchSet, derive_syntactic_template, match_template, parse_matcher, render_matcher

__version__ = "0.1.0"

__all__ = [
    "Coverset",
    "CorpusEntry",
    "CrashReport",
    "ExecutionSlice",
    "ExploreConfig",
    "ExploreReport",
    "FaultDice",
    "FaultLocus",
    "FunctionKey",
    "FuzzCorpus",
    "Match",
    "MatchSet",
    "RankedMatches",
    "RunResult",
    "VulnExploreError",
    "compute_coverset",
    "derive_syntactic_template",
    "execute",
    "is_high",
    "load_corpus",
    "load_program",
    "localize_failure",
    "match_template",
    "obtain_dice",
    "parse_matcher",
    "rank_matches",
    "render_matcher",
    "render_report",
    "run_explore",
]
