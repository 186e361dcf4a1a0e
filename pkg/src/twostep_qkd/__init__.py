"""Simulation of eavesdropping on two-step quantum key distribution protocols."""

from .adversary import (
    BranchQnd,
    DelayLine,
    DummyParticle,
    InterceptResend,
    MirrorTeam,
    NoAttack,
    Protocol,
)
from .harness import Summary, mutual_information, play_round, run_experiment
from .protocols import AnnouncePolicy, RoundRecord, Scenario, run_round
from .spacetime import Geometry

__all__ = [
    "AnnouncePolicy",
    "BranchQnd",
    "DelayLine",
    "DummyParticle",
    "Geometry",
    "InterceptResend",
    "MirrorTeam",
    "NoAttack",
    "Protocol",
    "RoundRecord",
    "Scenario",
    "Summary",
    "mutual_information",
    "play_round",
    "run_experiment",
    "run_round",
]
