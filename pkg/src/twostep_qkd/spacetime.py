"""Worldlines of the two wavepackets and the eavesdropper's access windows.

Alice sits at x = 0 and Bob at x = L. Branch a enters the channel at
emission and waits in Bob's storage ring; branch b waits in Alice's ring
first. Both rings delay by the same ``tau`` so the packets meet at Bob's
second beamsplitter.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .quantum import Mode


@dataclass(frozen=True)
class Geometry:
    L: float = 1.0
    c: float = 1.0
    tau: float = 1.5
    x_E: float = 0.5
    w: float = 0.1

    def __post_init__(self):
        for name in ("L", "c", "w"):
            if not getattr(self, name) > 0:
                raise ValueError(f"geometry.{name} must be > 0, got {getattr(self, name)!r}")
        if not self.tau >= 0:
            raise ValueError(f"geometry.tau must be >= 0, got {self.tau!r}")
        if not 0 < self.x_E < self.L:
            raise ValueError(f"geometry.x_E must lie in (0, L={self.L}), got {self.x_E!r}")

    @property
    def transit(self) -> float:
        """Channel transit time L/c."""
        return self.L / self.c

    @property
    def long_rings(self) -> bool:
        """True when the storage delay exceeds transit plus packet width."""
        return self.tau > self.transit + self.w

    def with_(self, **changes) -> "Geometry":
        return replace(self, **changes)


@dataclass(frozen=True)
class Window:
    """Half-open time interval [start, end)."""

    start: float
    end: float

    def __post_init__(self):
        if not self.end > self.start:
            raise ValueError(f"window end {self.end!r} must exceed start {self.start!r}")

    def contains(self, t: float) -> bool:
        return self.start <= t < self.end

    def overlaps(self, other: "Window") -> bool:
        return self.start < other.end and other.start < self.end

    def shifted(self, dt: float) -> "Window":
        return Window(self.start + dt, self.end + dt)


@dataclass(frozen=True)
class BranchSchedule:
    emission: float
    channel_entry: float
    arrival: float
    bs2: float

    @property
    def channel_interval(self) -> tuple[float, float]:
        return self.channel_entry, self.arrival

    def shifted(self, dt: float) -> "BranchSchedule":
        return BranchSchedule(
            self.emission + dt, self.channel_entry + dt, self.arrival + dt, self.bs2 + dt
        )


@dataclass(frozen=True)
class WorldlineSchedule:
    a: BranchSchedule
    b: BranchSchedule

    def __getitem__(self, branch: Mode) -> BranchSchedule:
        if branch == "a":
            return self.a
        if branch == "b":
            return self.b
        raise KeyError(branch)

    @property
    def bs2(self) -> float:
        return self.a.bs2

    def channel_disjoint(self) -> bool:
        a0, a1 = self.a.channel_interval
        b0, b1 = self.b.channel_interval
        return a1 <= b0 or b1 <= a0

    def shifted(self, dt: float) -> "WorldlineSchedule":
        return WorldlineSchedule(self.a.shifted(dt), self.b.shifted(dt))


def schedule(t0: float, g: Geometry) -> WorldlineSchedule:
    meet = t0 + g.tau + g.transit
    return WorldlineSchedule(
        a=BranchSchedule(emission=t0, channel_entry=t0, arrival=t0 + g.transit, bs2=meet),
        b=BranchSchedule(
            emission=t0, channel_entry=t0 + g.tau, arrival=meet, bs2=meet
        ),
    )


def eve_windows(t0: float, g: Geometry) -> tuple[Window, Window]:
    """Intervals during which each packet passes x_E, branch a first."""
    pass_a = t0 + g.x_E / g.c
    pass_b = pass_a + g.tau
    return Window(pass_a, pass_a + g.w), Window(pass_b, pass_b + g.w)


def windows_overlap(g: Geometry) -> bool:
    wa, wb = eve_windows(0.0, g)
    return wa.overlaps(wb)


@dataclass(frozen=True)
class TimingVerdict:
    ok: bool
    delta: float

    def __str__(self) -> str:
        return "Ok" if self.ok else f"Anomaly({self.delta:.6g})"


def timing_check(
    announced_t0: float,
    detection_time: float,
    g: Geometry,
    tol: float,
    expected_delay: float | None = None,
) -> TimingVerdict:
    """Compare a detection against the honest schedule.

    ``expected_delay`` defaults to the ring-delayed path ``tau + L/c``; the
    ring-free protocols pass their own.
    """
    if tol < 0:
        raise ValueError("timing tolerance must be >= 0")
    if expected_delay is None:
        expected_delay = g.tau + g.transit
    delta = detection_time - (announced_t0 + expected_delay)
    return TimingVerdict(abs(delta) <= tol, delta)
