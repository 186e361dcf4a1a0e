"""Seeded Monte Carlo runner and summary statistics.

Round ``i`` of a run with master seed ``m`` uses the generator
``numpy.random.default_rng(round_seed(m, i))`` where::

    round_seed(m, i) = splitmix64(splitmix64(m mod 2**64) XOR i)

and ``splitmix64`` is the standard finalizer (increment 0x9E3779B97F4A7C15,
multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB, shifts 30/27/31).
The round's first draw, ``integers(2)``, is Alice's bit. Rounds therefore
depend only on ``(scenario, m, i)``; execution order and worker count do
not change any result.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .adversary import check_applicable
from .protocols import RoundRecord, Scenario, run_round

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def round_seed(master_seed: int, index: int) -> int:
    return splitmix64(splitmix64(master_seed & MASK64) ^ index)


def play_round(s: Scenario, seed: int, index: int | None = None) -> RoundRecord:
    """Run a single round from its own seed (also used to replay logs)."""
    rng = np.random.default_rng(seed)
    bit = int(rng.integers(2))
    record = run_round(s, bit, rng)
    record.seed = seed
    record.index = index
    return record


def mutual_information(joint_counts) -> float:
    """Plug-in mutual information in bits of a contingency table."""
    counts = np.asarray(joint_counts, dtype=float)
    if counts.ndim != 2:
        raise ValueError("joint_counts must be a 2-D table")
    if (counts < 0).any():
        raise ValueError("joint_counts must be nonnegative")
    total = counts.sum()
    if total <= 0:
        raise ValueError("joint_counts is all zero")
    p = counts / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    nz = p > 0
    mi = float((p[nz] * np.log2(p[nz] / (px @ py)[nz])).sum())
    return max(mi, 0.0)


@dataclass
class Tally:
    """Additive round counters; merging is commutative."""

    rounds: int = 0
    kept: int = 0
    errors: int = 0
    attacked: int = 0
    attacked_alarms: int = 0
    alarms: int = 0
    infeasible: int = 0
    guessed: int = 0
    correct_guesses: int = 0
    sifted: int = 0
    # (alice_bit, eve_observable) -> count over attacked rounds
    joint: dict[tuple[int, int], int] = field(default_factory=dict)

    def add(self, r: RoundRecord) -> None:
        self.rounds += 1
        self.alarms += r.alarm
        if r.sifted:
            self.sifted += 1
        if r.kept:
            self.kept += 1
            self.errors += r.bob_bit != r.alice_bit
        if r.note and r.note.startswith("infeasible"):
            self.infeasible += 1
        if r.attacked:
            self.attacked += 1
            self.attacked_alarms += r.alarm
            # BB84 guesses only count where Alice and Bob keep the bit
            if r.eve_guess is not None and r.sifted is not False:
                self.guessed += 1
                self.correct_guesses += r.eve_guess == r.alice_bit
            if r.eve_observable is not None:
                key = (r.alice_bit, r.eve_observable)
                self.joint[key] = self.joint.get(key, 0) + 1

    def merge(self, other: "Tally") -> "Tally":
        out = Tally(
            **{
                name: getattr(self, name) + getattr(other, name)
                for name in self.__dataclass_fields__
                if name != "joint"
            }
        )
        out.joint = dict(self.joint)
        for key, n in other.joint.items():
            out.joint[key] = out.joint.get(key, 0) + n
        return out

    def joint_table(self) -> np.ndarray | None:
        if not self.joint:
            return None
        columns = sorted({y for _, y in self.joint})
        table = np.zeros((2, len(columns)), dtype=np.int64)
        for (x, y), n in self.joint.items():
            table[x, columns.index(y)] = n
        return table


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


SUMMARY_FIELDS = (
    "protocol",
    "strategy",
    "rounds",
    "seed",
    "qber",
    "detection_prob",
    "eve_accuracy",
    "mutual_info_bits",
    "sift_rate",
)


@dataclass(frozen=True)
class Summary:
    protocol: str
    strategy: str
    rounds: int
    seed: int
    qber: float | None
    detection_prob: float | None
    eve_accuracy: float | None
    mutual_info_bits: float | None
    sift_rate: float | None
    alarm_rate: float
    infeasible_rate: float

    @classmethod
    def from_tally(cls, s: Scenario, seed: int, t: Tally) -> "Summary":
        table = t.joint_table()
        return cls(
            protocol=s.protocol.value,
            strategy=s.strategy.name,
            rounds=t.rounds,
            seed=seed,
            qber=_ratio(t.errors, t.kept),
            detection_prob=_ratio(t.attacked_alarms, t.attacked),
            eve_accuracy=_ratio(t.correct_guesses, t.guessed),
            mutual_info_bits=None if table is None else mutual_information(table),
            sift_rate=_ratio(t.sifted, t.rounds) if s.protocol.value == "bb84" else None,
            alarm_rate=t.alarms / t.rounds,
            infeasible_rate=t.infeasible / t.rounds,
        )

    def as_row(self) -> dict[str, object]:
        """The flat key-value form written by the CLI."""
        return {name: getattr(self, name) for name in SUMMARY_FIELDS}


@dataclass
class ExperimentResult:
    summary: Summary
    tally: Tally
    records: list[RoundRecord] | None = None


def _run_chunk(
    s: Scenario, master_seed: int, indices: range, keep: bool
) -> tuple[Tally, list[RoundRecord] | None]:
    tally = Tally()
    records: list[RoundRecord] | None = [] if keep else None
    for i in indices:
        r = play_round(s, round_seed(master_seed, i), i)
        tally.add(r)
        if records is not None:
            records.append(r)
    return tally, records


def _chunks(n: int, parts: int) -> list[range]:
    size = math.ceil(n / parts)
    return [range(lo, min(lo + size, n)) for lo in range(0, n, size)]


def run_experiment(
    s: Scenario,
    n: int,
    master_seed: int,
    *,
    keep_records: bool = False,
    workers: int = 1,
) -> ExperimentResult:
    """Run ``n`` independent rounds and aggregate them.

    With ``workers > 1`` rounds are spread over a process pool; the result
    is identical to the serial run.
    """
    if n < 1:
        raise ValueError("round count must be >= 1")
    check_applicable(s.strategy, s.protocol)
    if workers <= 1:
        parts = [_run_chunk(s, master_seed, range(n), keep_records)]
    else:
        chunks = _chunks(n, workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    _run_chunk,
                    [s] * len(chunks),
                    [master_seed] * len(chunks),
                    chunks,
                    [keep_records] * len(chunks),
                )
            )
    tally = Tally()
    records: list[RoundRecord] | None = [] if keep_records else None
    for part_tally, part_records in parts:
        tally = tally.merge(part_tally)
        if records is not None and part_records:
            records.extend(part_records)
    return ExperimentResult(Summary.from_tally(s, master_seed, tally), tally, records)


def replay(s: Scenario, logged: Iterable[dict]) -> Sequence[RoundRecord]:
    """Re-run logged rounds from their recorded seeds."""
    return [play_round(s, entry["seed"], entry.get("index")) for entry in logged]
