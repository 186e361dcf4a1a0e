"""Eavesdropping strategies and the access rules they must obey.

A GV-family attack never sees the carrier directly. It gets one
:class:`TapContext` per access window, and each context can act only on
the branch passing Eve at that moment, or on a branch Eve captured earlier.
Anything else raises :class:`AccessViolation`, which always indicates a bug
in a strategy.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Any, ClassVar, Mapping, NamedTuple

import numpy as np

from . import quantum as q
from .quantum import Basis, Detector, Mode, PureState, Qubit
from .spacetime import Geometry, Window

VACUUM = PureState.basis(0, 0)


class Protocol(enum.Enum):
    GV = "gv"
    BB84 = "bb84"
    TWO_STEP = "two_step"
    RELATIVISTIC = "relativistic"


GV_FAMILY = frozenset({Protocol.GV, Protocol.TWO_STEP})


class ApplicabilityError(ValueError):
    """Strategy cannot be mounted against the chosen protocol."""


class AccessViolation(RuntimeError):
    """A strategy touched a branch or time it has no access to."""


class InfeasibleAttack(Exception):
    """The attack's precondition does not hold this round."""


class Tap(NamedTuple):
    time: float
    branch: str
    action: str


# --- strategy catalog -----------------------------------------------------


@dataclass(frozen=True)
class Strategy:
    name: ClassVar[str]
    protocols: ClassVar[frozenset[Protocol]]

    def params(self) -> dict[str, Any]:
        return asdict(self)

    def applicable(self, protocol: Protocol) -> bool:
        return protocol in self.protocols


@dataclass(frozen=True)
class NoAttack(Strategy):
    name: ClassVar[str] = "none"
    protocols: ClassVar[frozenset[Protocol]] = frozenset(Protocol)


@dataclass(frozen=True)
class BranchQnd(Strategy):
    """Photon-number measurement on a single branch.

    With ``destructive`` set, a detected photon is absorbed instead of
    continuing to Bob.
    """

    name: ClassVar[str] = "branch_qnd"
    protocols: ClassVar[frozenset[Protocol]] = GV_FAMILY
    branch: Mode = "a"
    destructive: bool = False

    def __post_init__(self):
        if self.branch not in q.MODES:
            raise ValueError(f"branch_qnd.branch must be 'a' or 'b', got {self.branch!r}")


@dataclass(frozen=True)
class DelayLine(Strategy):
    name: ClassVar[str] = "delay_line"
    protocols: ClassVar[frozenset[Protocol]] = GV_FAMILY


@dataclass(frozen=True)
class DummyParticle(Strategy):
    name: ClassVar[str] = "dummy_particle"
    protocols: ClassVar[frozenset[Protocol]] = frozenset({Protocol.GV})


@dataclass(frozen=True)
class MirrorTeam(Strategy):
    """Reroute both paths through a common inspection point.

    ``detours`` is ``(a_in, a_out, b_in, b_out)``: the length from Alice to
    the inspection point and from there to Bob, per branch. ``None`` means
    a length-preserving reroute that splits each original path in half.
    """

    name: ClassVar[str] = "mirror_team"
    protocols: ClassVar[frozenset[Protocol]] = frozenset({Protocol.RELATIVISTIC})
    detours: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if self.detours is not None:
            detours = tuple(float(d) for d in self.detours)
            if len(detours) != 4 or not all(d > 0 for d in detours):
                raise ValueError("mirror_team.detours must be four positive lengths")
            object.__setattr__(self, "detours", detours)


@dataclass(frozen=True)
class InterceptResend(Strategy):
    name: ClassVar[str] = "intercept_resend"
    protocols: ClassVar[frozenset[Protocol]] = frozenset({Protocol.BB84})


STRATEGIES: dict[str, type[Strategy]] = {
    cls.name: cls
    for cls in (NoAttack, BranchQnd, DelayLine, DummyParticle, MirrorTeam, InterceptResend)
}


def applicability_table() -> dict[Protocol, set[str]]:
    return {p: {name for name, cls in STRATEGIES.items() if p in cls.protocols} for p in Protocol}


def check_applicable(strategy: Strategy, protocol: Protocol) -> None:
    if not strategy.applicable(protocol):
        raise ApplicabilityError(
            f"strategy {strategy.name!r} is not applicable to protocol {protocol.value!r}"
        )


# --- access control -------------------------------------------------------


class Carrier:
    """The photon in flight for one round, plus everything Eve did to it.

    ``delay`` is the extra time Bob's detection is late because of Eve.
    """

    def __init__(self, state: PureState):
        self.state = state
        self.custody: dict[str, str] = {"a": "channel", "b": "channel"}
        self.delay = 0.0
        self.taps: list[Tap] = []
        self.emissions: list[Tap] = []


@dataclass
class TapContext:
    branch: Mode
    window: Window
    carrier: Carrier
    public: Mapping[str, Any] = field(default_factory=dict)

    @property
    def time(self) -> float:
        return self.window.start

    def _require(self, mode: str) -> None:
        if mode != self.branch and self.carrier.custody[mode] != "eve":
            raise AccessViolation(
                f"branch {mode!r} is not reachable during the branch-{self.branch} window"
            )

    def _log(self, action: str, branch: str | None = None) -> None:
        if not self.window.contains(self.time):
            raise AccessViolation(f"tap at t={self.time} outside {self.window}")
        self.carrier.taps.append(Tap(self.time, branch or self.branch, action))

    def view(self) -> q.DensityMatrix:
        """Reduced state of the exposed branch."""
        return q.partial_trace(self.carrier.state.density(), self.branch)

    def measure_number(self, draw: float) -> int:
        outcome, self.carrier.state = q.measure_number(self.carrier.state, self.branch, draw)
        self._log(f"measure_number:{outcome}")
        return outcome

    def phase_shift(self, phi: float, mode: Mode | None = None) -> None:
        mode = mode or self.branch
        self._require(mode)
        self.carrier.state = q.phase_shift(self.carrier.state, mode, phi)
        self._log("phase_shift", mode)

    def absorb(self) -> None:
        """Remove the photon from the exposed branch (after it was found there)."""
        if self.carrier.state.photon_probability(self.branch) < 1.0 - q.ALGEBRA_TOL:
            raise AccessViolation("absorb requires the photon to be localized in this branch")
        self.carrier.state = VACUUM
        self._log("absorb")

    def capture(self) -> None:
        """Divert the exposed branch into Eve's storage."""
        self.carrier.custody[self.branch] = "eve"
        self._log("capture")

    def interfere(self, draw: float) -> Detector:
        """Run both branches through Eve's own decoder; the photon is consumed."""
        for mode in q.MODES:
            self._require(mode)
        detector = q.gv_decode(self.carrier.state, draw)
        self.carrier.state = VACUUM
        self._log(f"interfere:{detector.value}", "ab")
        return detector

    def substitute(self, state: PureState, delay: float, emissions: list[Tap]) -> None:
        """Hand Bob a carrier of Eve's making, ``delay`` later than the original."""
        self.carrier.state = state
        self.carrier.delay = delay
        self.carrier.custody = {"a": "channel", "b": "channel"}
        self.carrier.emissions.extend(emissions)


# --- attacks --------------------------------------------------------------


def branch_qnd(ctx: TapContext, rng: np.random.Generator, destructive: bool = False) -> int:
    """Count photons in the exposed branch; returns the count."""
    outcome = ctx.measure_number(rng.random())
    if destructive and outcome == 1:
        ctx.absorb()
    return outcome


def qnd_guess(outcome: int) -> int:
    # any fixed map is equally (un)informative
    return outcome


def delay_line(contexts: tuple[TapContext, TapContext], rng: np.random.Generator) -> int:
    """Hold branch a until branch b arrives, interfere them, resend late.

    Returns the detector bit Eve read. The fresh pair she sends carries that
    bit and trails the honest schedule by the ring delay.
    """
    ctx_a, ctx_b = contexts
    tau = ctx_a.public["geometry"].tau
    ctx_a.capture()
    detector = ctx_b.interfere(rng.random())
    bit = detector.bit
    if bit is None:
        raise AccessViolation("delay line received no photon")
    t = ctx_b.time
    ctx_b.substitute(
        q.encode_gv_bit(bit),
        delay=tau,
        emissions=[Tap(t, "a", "emit"), Tap(t + tau, "b", "emit")],
    )
    return bit


def dummy_particle(
    contexts: tuple[TapContext, TapContext],
    announced_t0: float | None,
    rng: np.random.Generator,
) -> int:
    """Send Bob a dummy photon whose sign is set after reading the real one.

    Requires the emission time before the real branch a passes Eve;
    otherwise :class:`InfeasibleAttack` is raised before anything is touched.
    """
    ctx_a, ctx_b = contexts
    g: Geometry = ctx_a.public["geometry"]
    if announced_t0 is None:
        raise InfeasibleAttack("emission time not public while the photon is in flight")
    mimic = announced_t0 + g.x_E / g.c
    if not math.isclose(mimic, ctx_a.time, rel_tol=0.0, abs_tol=1e-12):
        raise InfeasibleAttack(f"dummy would pass at {mimic}, real packet at {ctx_a.time}")
    dummy = q.encode_gv_bit(0)
    ctx_a.capture()
    detector = ctx_b.interfere(rng.random())
    bit = detector.bit
    if bit is None:
        raise AccessViolation("dummy-particle attack received no photon")
    dummy = q.phase_shift(dummy, "b", math.pi * bit)
    ctx_b.substitute(
        dummy,
        delay=0.0,
        emissions=[Tap(mimic, "a", "emit_dummy"), Tap(ctx_b.time, "b", "release_dummy")],
    )
    return bit


@dataclass(frozen=True)
class MirrorOutcome:
    eve_bit: int
    shifts: tuple[float, float]
    inspection_time: float


def mirror_team(
    carrier: Carrier,
    t0: float,
    paths: tuple[float, float],
    detours: tuple[float, float, float, float] | None,
    c: float,
    rng: np.random.Generator,
) -> MirrorOutcome:
    """Route both packets to one inspection point, decode, and resend.

    The earlier packet waits at the inspection point for the later one, so
    each branch arrives at Bob ``(max(a_in, b_in) + out - path) / c`` late.
    """
    path_a, path_b = paths
    if detours is None:
        detours = (path_a / 2, path_a / 2, path_b / 2, path_b / 2)
    a_in, a_out, b_in, b_out = detours
    if min(detours) <= 0:
        raise ValueError("reroute lengths must be positive")
    meet = max(a_in, b_in)
    shifts = ((meet + a_out - path_a) / c, (meet + b_out - path_b) / c)
    detector = q.gv_decode(carrier.state, rng.random())
    bit = detector.bit
    if bit is None:
        raise AccessViolation("mirror team received no photon")
    t_inspect = t0 + meet / c
    carrier.taps.append(Tap(t_inspect, "ab", f"interfere:{detector.value}"))
    carrier.state = q.encode_gv_bit(bit)
    carrier.emissions.extend([Tap(t_inspect, "a", "emit"), Tap(t_inspect, "b", "emit")])
    return MirrorOutcome(bit, shifts, t_inspect)


def random_basis(rng: np.random.Generator) -> Basis:
    return Basis.Z if rng.random() < 0.5 else Basis.X


def intercept_resend(qubit: Qubit, rng: np.random.Generator) -> tuple[int, Qubit, Basis]:
    """Measure in a random basis and forward the collapsed eigenstate."""
    basis = random_basis(rng)
    bit, resent = q.measure_basis(qubit, basis, rng.random())
    return bit, resent, basis
