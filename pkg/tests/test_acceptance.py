"""Exit criteria for the simulator, one test per criterion."""

import itertools
import math

import numpy as np

from oracles import bb84_intercept_resend, decoder_distribution
from twostep_qkd import quantum as q
from twostep_qkd.adversary import (
    BranchQnd,
    DelayLine,
    DummyParticle,
    InterceptResend,
    MirrorTeam,
    Protocol,
)
from twostep_qkd.cli import format_csv, format_json
from twostep_qkd.harness import run_experiment
from twostep_qkd.protocols import AnnouncePolicy, Scenario, two_step_state
from twostep_qkd.spacetime import Geometry, eve_windows, schedule

SEED = 2024
HALF_IDENTITY = np.eye(2) / 2


def test_1_eve_blindness(criterion):
    states = {("gv", bit, None): q.encode_gv_bit(bit) for bit in (0, 1)}
    states.update(
        {("two_step", bit, conv): two_step_state(bit, conv) for bit in (0, 1) for conv in (0, 1)}
    )
    worst_identity = worst_pair = 0.0
    for mode in "ab":
        reduced = {key: q.partial_trace(s.density(), mode) for key, s in states.items()}
        for rho in reduced.values():
            worst_identity = max(worst_identity, float(np.abs(rho.entries - HALF_IDENTITY).max()))
        for r1, r2 in itertools.combinations(reduced.values(), 2):
            worst_pair = max(worst_pair, q.trace_distance(r1, r2))
    criterion(
        1,
        "Eve-blindness",
        worst_identity <= 1e-12 and worst_pair <= 1e-12,
        f"max |rho' - I/2| = {worst_identity:.1e}, max trace distance = {worst_pair:.1e}",
    )


def test_2_honest_correctness(criterion, experiment):
    details, ok = [], True
    for protocol in Protocol:
        summary = experiment(Scenario(protocol), 10_000, SEED).summary
        good = summary.qber == 0.0 and summary.alarm_rate == 0.0
        ok &= good
        details.append(f"{protocol.value} qber={summary.qber} alarms={summary.alarm_rate}")
    criterion(2, "honest correctness", ok, "; ".join(details))


def test_3_branch_qnd(criterion, experiment):
    result = experiment(Scenario(Protocol.GV, strategy=BranchQnd("a")), 100_000, SEED)
    s = result.summary
    p_photon = np.mean([r.eve_observable for r in result.records])
    ok = abs(s.qber - 0.5) <= 0.01 and s.mutual_info_bits <= 0.01 and abs(p_photon - 0.5) <= 0.01
    criterion(
        3,
        "BranchQnd on GV",
        ok,
        f"qber={s.qber:.4f} MI={s.mutual_info_bits:.2e} P(photon)={p_photon:.4f}",
    )


def test_4_delay_line(criterion, experiment):
    g = Geometry()
    s = Scenario(Protocol.GV, strategy=DelayLine(), announce=AnnouncePolicy.AFTER_RECEIPT)
    result = experiment(s, 10_000, SEED)
    worst = max(abs(r.timing_verdict.delta - g.tau) for r in result.records)
    summary = result.summary
    ok = summary.eve_accuracy == 1.0 and worst <= 1e-9 and summary.detection_prob == 1.0
    criterion(
        4,
        "DelayLine on GV",
        ok,
        f"eve_accuracy={summary.eve_accuracy} max|anomaly-tau|={worst:.1e} "
        f"detection={summary.detection_prob}",
    )


def test_5_dummy_particle(criterion, experiment):
    early = experiment(
        Scenario(Protocol.GV, strategy=DummyParticle(), announce=AnnouncePolicy.BEFORE_EMISSION),
        10_000,
        SEED,
    ).summary
    late = experiment(
        Scenario(Protocol.GV, strategy=DummyParticle(), announce=AnnouncePolicy.AFTER_RECEIPT),
        10_000,
        SEED,
    ).summary
    ok = (
        early.eve_accuracy == 1.0
        and early.alarm_rate == 0.0
        and early.qber == 0.0
        and late.infeasible_rate == 1.0
    )
    criterion(
        5,
        "DummyParticle vs announce policy",
        ok,
        f"before-emission: acc={early.eve_accuracy} alarms={early.alarm_rate} qber={early.qber}; "
        f"after-receipt infeasible={late.infeasible_rate}",
    )


def test_6_bb84_intercept_resend(criterion, experiment):
    p_sift, qber, eve_acc = bb84_intercept_resend()
    s = experiment(Scenario(Protocol.BB84, strategy=InterceptResend()), 100_000, SEED).summary
    ok = (
        abs(s.sift_rate - p_sift) <= 0.01
        and abs(s.qber - qber) <= 0.01
        and abs(s.eve_accuracy - eve_acc) <= 0.01
    )
    criterion(
        6,
        "BB84 InterceptResend",
        ok,
        f"sift={s.sift_rate:.4f} (oracle {p_sift:.2f}) qber={s.qber:.4f} (oracle {qber:.2f}) "
        f"eve={s.eve_accuracy:.4f} (oracle {eve_acc:.2f})",
    )


def test_7_mirror_team(criterion, experiment):
    quiet = experiment(Scenario(Protocol.RELATIVISTIC, strategy=MirrorTeam()), 10_000, SEED).summary
    detour = experiment(
        Scenario(
            Protocol.RELATIVISTIC,
            strategy=MirrorTeam((0.6, 0.6, 0.5, 0.5)),
            timing_tolerance=0.01,
        ),
        10_000,
        SEED,
    ).summary
    ok = quiet.eve_accuracy == 1.0 and quiet.detection_prob == 0.0 and detour.detection_prob == 1.0
    criterion(
        7,
        "MirrorTeam on RelativisticGV",
        ok,
        f"preserving: acc={quiet.eve_accuracy} detection={quiet.detection_prob}; "
        f"+0.2 detour: detection={detour.detection_prob}",
    )


def test_8_spacetime_invariants(criterion):
    rng = np.random.default_rng(SEED)
    failures = 0
    for _ in range(100):
        L, c, w = rng.uniform(0.1, 10), rng.uniform(0.1, 10), rng.uniform(0.01, 2)
        g = Geometry(L=L, c=c, w=w, x_E=rng.uniform(0.01, 0.99) * L, tau=L / c + w + rng.uniform(1e-6, 5))
        t0 = rng.uniform(-10, 10)
        wa, wb = eve_windows(t0, g)
        failures += wa.overlaps(wb) or not schedule(t0, g).channel_disjoint()
    criterion(8, "spacetime invariants", failures == 0, f"{failures}/100 geometries violated")


def test_9_determinism(criterion):
    s = Scenario(Protocol.GV, strategy=BranchQnd("b"))
    outputs = []
    for workers in (1, 1, 4):
        summary = run_experiment(s, 3000, SEED, workers=workers).summary
        outputs.append((format_csv(summary) + format_json(summary)).encode())
    criterion(
        9,
        "determinism",
        len(set(outputs)) == 1,
        "serial, repeat and 4-worker summaries byte-identical" if len(set(outputs)) == 1 else "differ",
    )


def _random_state(rng):
    vec = np.zeros(4, dtype=complex)
    vec[:3] = rng.normal(size=3) + 1j * rng.normal(size=3)
    vec[0] *= rng.uniform()  # vary vacuum weight
    return q.PureState(vec / np.linalg.norm(vec))


def test_10_numerical_core(criterion):
    rng = np.random.default_rng(SEED)
    worst = {"unitarity": 0.0, "normalization": 0.0, "hermiticity": 0.0, "decoder": 0.0}
    for _ in range(1000):
        s1, s2 = _random_state(rng), _random_state(rng)
        phi, mode = rng.uniform(-7, 7), "ab"[rng.integers(2)]
        for op in (q.beamsplitter, lambda s: q.phase_shift(s, mode, phi)):
            o1, o2 = op(s1), op(s2)
            worst["unitarity"] = max(worst["unitarity"], abs(o1.inner(o2) - s1.inner(s2)))
            worst["normalization"] = max(worst["normalization"], abs(o1.inner(o1) - 1))
        _, post = q.measure_number(s1, mode, rng.uniform())
        worst["normalization"] = max(worst["normalization"], abs(post.inner(post) - 1))
        for rho in (s1.density(), q.partial_trace(s1.density(), mode)):
            m = rho.entries
            worst["hermiticity"] = max(worst["hermiticity"], float(np.abs(m - m.conj().T).max()))
            worst["normalization"] = max(worst["normalization"], abs(np.trace(m) - 1))
        dist = q.gv_decode_distribution(s1)
        ref = decoder_distribution(s1.amplitudes)
        got = (dist[q.Detector.D0], dist[q.Detector.D1], dist[q.Detector.NO_CLICK])
        worst["decoder"] = max(worst["decoder"], max(abs(a - b) for a, b in zip(got, ref)))
    ok = all(v <= 1e-12 for v in worst.values())
    criterion(10, "numerical core", ok, " ".join(f"{k}={v:.1e}" for k, v in worst.items()))
