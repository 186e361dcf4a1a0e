"""Single-round state machines for the four protocols.

Each ``run_*_round`` threads one carrier from Alice to Bob past the
adversary and returns a :class:`RoundRecord`. Rounds are pure functions of
``(scenario, bit, rng)``; every random choice comes from ``rng`` in a fixed
order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import adversary as adv
from . import quantum as q
from .adversary import (
    AccessViolation,
    BranchQnd,
    Carrier,
    DelayLine,
    DummyParticle,
    InfeasibleAttack,
    InterceptResend,
    MirrorTeam,
    NoAttack,
    Protocol,
    Strategy,
    Tap,
    TapContext,
)
from .quantum import Basis, Detector, PureState
from .spacetime import Geometry, TimingVerdict, eve_windows, schedule, timing_check


class AnnouncePolicy(enum.Enum):
    AFTER_RECEIPT = "after_receipt"
    BEFORE_EMISSION = "before_emission"


@dataclass(frozen=True)
class Scenario:
    protocol: Protocol
    geometry: Geometry = field(default_factory=Geometry)
    announce: AnnouncePolicy = AnnouncePolicy.AFTER_RECEIPT
    strategy: Strategy = field(default_factory=NoAttack)
    timing_tolerance: float = 0.01
    # channel lengths of the two separated paths (relativistic variant only)
    paths: tuple[float, float] | None = None

    def __post_init__(self):
        adv.check_applicable(self.strategy, self.protocol)
        if not self.timing_tolerance >= 0:
            raise ValueError("timing_tolerance must be >= 0")
        if self.paths is not None:
            paths = tuple(float(p) for p in self.paths)
            if len(paths) != 2 or not all(p > 0 for p in paths):
                raise ValueError("paths must be two positive lengths")
            object.__setattr__(self, "paths", paths)

    @property
    def path_lengths(self) -> tuple[float, float]:
        if self.paths is None:
            return self.geometry.L, self.geometry.L
        return self.paths

    @property
    def attacked(self) -> bool:
        return not isinstance(self.strategy, NoAttack)


@dataclass
class RoundRecord:
    protocol: str
    alice_bit: int
    alice_secret: Any
    eve_guess: int | None
    eve_observable: int | None
    eve_taps: list[Tap]
    bob_bit: int | None
    bob_detector: str
    detection_time: float
    timing_verdict: TimingVerdict
    alarm: bool
    attacked: bool
    emission_time: float = 0.0
    sifted: bool | None = None
    eve_emissions: list[Tap] = field(default_factory=list)
    note: str | None = None
    index: int | None = None
    seed: int | None = None

    @property
    def kept(self) -> bool:
        """Bob holds a bit that survives sifting."""
        return self.bob_bit is not None and self.sifted is not False

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "seed": self.seed,
            "protocol": self.protocol,
            "alice_bit": self.alice_bit,
            "alice_secret": self.alice_secret,
            "emission_time": self.emission_time,
            "eve_guess": self.eve_guess,
            "eve_observable": self.eve_observable,
            "eve_taps": [list(t) for t in self.eve_taps],
            "eve_emissions": [list(t) for t in self.eve_emissions],
            "bob_bit": self.bob_bit,
            "bob_detector": self.bob_detector,
            "detection_time": self.detection_time,
            "timing_verdict": str(self.timing_verdict),
            "timing_delta": self.timing_verdict.delta,
            "sifted": self.sifted,
            "alarm": self.alarm,
            "attacked": self.attacked,
            "note": self.note,
        }


def _require(s: Scenario, protocol: Protocol) -> None:
    if s.protocol is not protocol:
        raise ValueError(f"scenario protocol is {s.protocol.value!r}, expected {protocol.value!r}")
    adv.check_applicable(s.strategy, s.protocol)


def _coin(rng: np.random.Generator) -> int:
    return 1 if rng.random() < 0.5 else 0


def two_step_state(bit: int, convention: int) -> PureState:
    """GV state under interferometer A (standard) or B (extra pi on branch b)."""
    return q.phase_shift(q.encode_gv_bit(bit), "b", math.pi * convention)


@dataclass
class _EveResult:
    guess: int | None = None
    observable: int | None = None
    attacked: bool = False
    note: str | None = None


def _gv_family_attack(
    s: Scenario, carrier: Carrier, t0: float, public: dict[str, Any], rng: np.random.Generator
) -> _EveResult:
    g = s.geometry
    wa, wb = eve_windows(t0, g)
    contexts = (TapContext("a", wa, carrier, public), TapContext("b", wb, carrier, public))
    match s.strategy:
        case NoAttack():
            return _EveResult()
        case BranchQnd(branch=branch, destructive=destructive):
            ctx = contexts[0] if branch == "a" else contexts[1]
            outcome = adv.branch_qnd(ctx, rng, destructive)
            return _EveResult(adv.qnd_guess(outcome), outcome, True)
        case DelayLine():
            bit = adv.delay_line(contexts, rng)
            return _EveResult(bit, bit, True)
        case DummyParticle():
            try:
                bit = adv.dummy_particle(contexts, public.get("announced_t0"), rng)
            except InfeasibleAttack as exc:
                return _EveResult(note=f"infeasible: {exc}")
            return _EveResult(bit, bit, True)
    raise adv.ApplicabilityError(f"no GV-family handler for {s.strategy.name!r}")


def _bob_gv(carrier: Carrier, rng: np.random.Generator) -> Detector:
    return q.gv_decode(carrier.state, rng.random())


def _finish_gv_family(
    s: Scenario,
    bit: int,
    secret: Any,
    t0: float,
    carrier: Carrier,
    detector: Detector,
    eve: _EveResult,
) -> RoundRecord:
    g = s.geometry
    detection_time = schedule(t0, g).bs2 + carrier.delay
    verdict = timing_check(t0, detection_time, g, s.timing_tolerance)
    return RoundRecord(
        protocol=s.protocol.value,
        alice_bit=bit,
        alice_secret=secret,
        eve_guess=eve.guess,
        eve_observable=eve.observable,
        eve_taps=list(carrier.taps),
        eve_emissions=list(carrier.emissions),
        bob_bit=detector.bit,
        bob_detector=detector.value,
        detection_time=detection_time,
        timing_verdict=verdict,
        alarm=(not verdict.ok) or detector is Detector.NO_CLICK,
        attacked=eve.attacked,
        emission_time=t0,
        note=eve.note,
    )


def run_gv_round(s: Scenario, bit: int, rng: np.random.Generator) -> RoundRecord:
    """One GV round; the emission time is the withheld information."""
    _require(s, Protocol.GV)
    t0 = float(rng.random())
    carrier = Carrier(q.encode_gv_bit(bit))
    public: dict[str, Any] = {"geometry": s.geometry}
    if s.announce is AnnouncePolicy.BEFORE_EMISSION:
        public["announced_t0"] = t0
    eve = _gv_family_attack(s, carrier, t0, public, rng)
    detector = _bob_gv(carrier, rng)
    return _finish_gv_family(s, bit, t0, t0, carrier, detector, eve)


def run_two_step_round(s: Scenario, bit: int, rng: np.random.Generator) -> RoundRecord:
    """Emission time public in advance; withheld secret is interferometer A or B.

    Bob stores the photon, learns the convention once he holds it, undoes the
    extra phase and decodes.
    """
    _require(s, Protocol.TWO_STEP)
    t0 = float(rng.random())
    convention = _coin(rng)
    carrier = Carrier(two_step_state(bit, convention))
    public: dict[str, Any] = {"geometry": s.geometry, "announced_t0": t0}
    eve = _gv_family_attack(s, carrier, t0, public, rng)
    if isinstance(s.strategy, DelayLine) and eve.guess is not None:
        # Eve's stored classical result combines with the later disclosure
        eve.guess = eve.observable = eve.guess ^ convention
    carrier.state = q.phase_shift(carrier.state, "b", math.pi * convention)
    detector = _bob_gv(carrier, rng)
    return _finish_gv_family(s, bit, "AB"[convention], t0, carrier, detector, eve)


def run_relativistic_round(s: Scenario, bit: int, rng: np.random.Generator) -> RoundRecord:
    """Two spatially separated paths, no storage rings, simultaneous emission."""
    _require(s, Protocol.RELATIVISTIC)
    g = s.geometry
    t0 = float(rng.random())
    paths = s.path_lengths
    carrier = Carrier(q.encode_gv_bit(bit))
    shifts = (0.0, 0.0)
    eve = _EveResult()
    if isinstance(s.strategy, MirrorTeam):
        outcome = adv.mirror_team(carrier, t0, paths, s.strategy.detours, g.c, rng)
        shifts = outcome.shifts
        eve = _EveResult(outcome.eve_bit, outcome.eve_bit, True)
    detector = _bob_gv(carrier, rng)
    verdicts = [
        timing_check(t0, t0 + length / g.c + shift, g, s.timing_tolerance, expected_delay=length / g.c)
        for length, shift in zip(paths, shifts)
    ]
    verdict = max(verdicts, key=lambda v: (not v.ok, abs(v.delta)))
    # Bob's compensating delay lines align both packets on the longer path
    detection_time = t0 + max(paths) / g.c + max(shifts)
    return RoundRecord(
        protocol=s.protocol.value,
        alice_bit=bit,
        alice_secret=t0,
        eve_guess=eve.guess,
        eve_observable=eve.observable,
        eve_taps=list(carrier.taps),
        eve_emissions=list(carrier.emissions),
        bob_bit=detector.bit,
        bob_detector=detector.value,
        detection_time=detection_time,
        timing_verdict=verdict,
        alarm=(not verdict.ok) or detector is Detector.NO_CLICK,
        attacked=eve.attacked,
        emission_time=t0,
    )


def run_bb84_round(s: Scenario, bit: int, rng: np.random.Generator) -> RoundRecord:
    """Random-basis BB84; the basis is disclosed after Bob's measurement."""
    _require(s, Protocol.BB84)
    g = s.geometry
    t0 = float(rng.random())
    alice_basis = adv.random_basis(rng)
    qubit = q.bb84_encode(bit, alice_basis)
    taps: list[Tap] = []
    eve_bit = None
    if isinstance(s.strategy, InterceptResend):
        eve_bit, qubit, eve_basis = adv.intercept_resend(qubit, rng)
        taps.append(Tap(t0 + g.x_E / g.c, "flight", f"measure_resend:{eve_basis.value}"))
    bob_basis = adv.random_basis(rng)
    bob_bit, _ = q.measure_basis(qubit, bob_basis, rng.random())
    detection_time = t0 + g.transit
    verdict = timing_check(t0, detection_time, g, s.timing_tolerance, expected_delay=g.transit)
    return RoundRecord(
        protocol=s.protocol.value,
        alice_bit=bit,
        alice_secret=alice_basis.value,
        eve_guess=eve_bit,
        eve_observable=eve_bit,
        eve_taps=taps,
        bob_bit=bob_bit,
        bob_detector=f"{bob_basis.value}{bob_bit}",
        detection_time=detection_time,
        timing_verdict=verdict,
        alarm=not verdict.ok,
        attacked=eve_bit is not None,
        emission_time=t0,
        sifted=alice_basis is bob_basis,
    )


_RUNNERS = {
    Protocol.GV: run_gv_round,
    Protocol.BB84: run_bb84_round,
    Protocol.TWO_STEP: run_two_step_round,
    Protocol.RELATIVISTIC: run_relativistic_round,
}


def run_round(s: Scenario, bit: int, rng: np.random.Generator) -> RoundRecord:
    return _RUNNERS[s.protocol](s, bit, rng)


def tap_outside_windows(record: RoundRecord, g: Geometry) -> list[Tap]:
    """Taps in a GV-family record that fall outside both access windows."""
    windows = eve_windows(record.emission_time, g)
    return [t for t in record.eve_taps if not any(w.contains(t.time) for w in windows)]


__all__ = [
    "AccessViolation",
    "AnnouncePolicy",
    "Basis",
    "Protocol",
    "RoundRecord",
    "Scenario",
    "run_bb84_round",
    "run_gv_round",
    "run_relativistic_round",
    "run_round",
    "run_two_step_round",
    "tap_outside_windows",
    "two_step_state",
]
