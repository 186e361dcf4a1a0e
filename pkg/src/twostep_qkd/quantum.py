"""Finite-dimensional photon states for dual-rail and polarization carriers.

Two-mode states live in the photon-number basis ``|n_a n_b>`` with
``n in {0, 1}``, ordered ``|00>, |01>, |10>, |11>`` (index ``2*n_a + n_b``).
Single-mode reduced states are 2x2 matrices over ``{|0>, |1>}``.

Every stochastic function takes an explicit uniform draw in ``[0, 1)`` so the
caller owns the randomness.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

ALGEBRA_TOL = 1e-12
EIGEN_TOL = 1e-10

SQRT_HALF = 1.0 / math.sqrt(2.0)

Mode = Literal["a", "b"]
MODES: tuple[Mode, Mode] = ("a", "b")

# photon number of each basis index in mode a / mode b
_N_A = np.array([0, 0, 1, 1])
_N_B = np.array([0, 1, 0, 1])


def _mode_numbers(mode: str) -> np.ndarray:
    if mode == "a":
        return _N_A
    if mode == "b":
        return _N_B
    raise ValueError(f"unknown mode {mode!r}, expected 'a' or 'b'")


def _frozen(values, dim: int | tuple[int, int]) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if arr.shape != (dim if isinstance(dim, tuple) else (dim,)):
        raise ValueError(f"expected shape {dim}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized two-mode state vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes, 4)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ALGEBRA_TOL:
            raise ValueError(f"state not normalized: norm^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, n_a: int, n_b: int) -> "PureState":
        amps = np.zeros(4, dtype=complex)
        amps[2 * n_a + n_b] = 1.0
        return cls(amps)

    def inner(self, other: "PureState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def isclose(self, other: "PureState", atol: float = ALGEBRA_TOL) -> bool:
        return bool(np.allclose(self.amplitudes, other.amplitudes, rtol=0.0, atol=atol))

    def same_ray(self, other: "PureState", atol: float = ALGEBRA_TOL) -> bool:
        """Equal up to a global phase."""
        return abs(abs(self.inner(other)) - 1.0) <= atol

    def photon_probability(self, mode: Mode) -> float:
        """Probability of finding one photon in ``mode``."""
        probs = np.abs(self.amplitudes) ** 2
        return float(probs[_mode_numbers(mode) == 1].sum())

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self) -> str:
        return f"PureState({np.round(self.amplitudes, 6).tolist()})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix of dimension 2 or 4."""

    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 4):
            raise ValueError(f"density matrix must be 2x2 or 4x4, got {rho.shape}")
        if not np.allclose(rho, rho.conj().T, rtol=0.0, atol=ALGEBRA_TOL):
            raise ValueError("density matrix is not Hermitian")
        trace = complex(np.trace(rho))
        if abs(trace - 1.0) > ALGEBRA_TOL:
            raise ValueError(f"density matrix trace is {trace!r}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -EIGEN_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        rho.flags.writeable = False
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def isclose(self, other: "DensityMatrix", atol: float = ALGEBRA_TOL) -> bool:
        return self.dim == other.dim and bool(
            np.allclose(self.entries, other.entries, rtol=0.0, atol=atol)
        )

    def __repr__(self) -> str:
        return f"DensityMatrix({np.round(self.entries, 6).tolist()})"


MAXIMALLY_MIXED_MODE = DensityMatrix(np.eye(2) / 2)


def encode_gv_bit(bit: int) -> PureState:
    """Dual-rail state between the two beamsplitters: (|01> +/- |10>)/sqrt2.

    Bit 0 takes the plus sign, bit 1 the minus sign.
    """
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    sign = 1.0 if bit == 0 else -1.0
    return PureState([0.0, SQRT_HALF, sign * SQRT_HALF, 0.0])


def beamsplitter(state: PureState) -> PureState:
    """Real 50/50 beamsplitter on the <=1 photon sector.

    |00> -> |00>, |10> -> (|10> + |01>)/sqrt2, |01> -> (|10> - |01>)/sqrt2.
    The map is its own inverse.
    """
    v00, v01, v10, v11 = state.amplitudes
    if abs(v11) > ALGEBRA_TOL:
        raise ValueError("beamsplitter: amplitude on |11> is outside the modeled sector")
    return PureState(
        [v00, SQRT_HALF * (v10 - v01), SQRT_HALF * (v10 + v01), 0.0]
    )


def phase_shift(state: PureState, mode: Mode, phi: float) -> PureState:
    """Multiply each amplitude by exp(i * phi * n_mode)."""
    phases = np.exp(1j * phi * _mode_numbers(mode))
    return PureState(state.amplitudes * phases)


def partial_trace(rho: DensityMatrix, keep: Mode) -> DensityMatrix:
    """Reduced state of one branch, summing out the other."""
    if rho.dim != 4:
        raise ValueError("partial_trace expects a two-mode (4x4) density matrix")
    t = rho.entries.reshape(2, 2, 2, 2)  # [n_a, n_b, n_a', n_b']
    if keep == "a":
        reduced = np.einsum("ijkj->ik", t)
    elif keep == "b":
        reduced = np.einsum("ijik->jk", t)
    else:
        raise ValueError(f"unknown mode {keep!r}, expected 'a' or 'b'")
    return DensityMatrix(reduced)


def trace_distance(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """Half the trace norm of rho1 - rho2."""
    if rho1.dim != rho2.dim:
        raise ValueError(f"dimension mismatch: {rho1.dim} vs {rho2.dim}")
    eigs = np.linalg.eigvalsh(rho1.entries - rho2.entries)
    return float(min(1.0, 0.5 * np.abs(eigs).sum()))


_OCCUPIED = {"a": (False, False, True, True), "b": (False, True, False, True)}


def measure_number(state: PureState, mode: Mode, draw: float) -> tuple[int, PureState]:
    """Photon-number measurement of one mode.

    Outcome 1 iff ``draw < P(n_mode = 1)``; the collapsed state is the
    renormalized projection onto the outcome.
    """
    try:
        occupied = _OCCUPIED[mode]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}, expected 'a' or 'b'") from None
    amps = state.amplitudes.tolist()
    p_one = sum(abs(v) ** 2 for v, hit in zip(amps, occupied) if hit)
    outcome = 1 if draw < p_one else 0
    kept = [v if hit == bool(outcome) else 0j for v, hit in zip(amps, occupied)]
    if not any(kept):
        # draw landed on a rounding gap at the CDF edge
        outcome = 1 - outcome
        kept = [v if hit == bool(outcome) else 0j for v, hit in zip(amps, occupied)]
    # rescale first: outcomes of subnormal probability would underflow the norm
    top = max(abs(v) for v in kept)
    kept = [v / top for v in kept]
    norm = math.sqrt(sum(abs(v) ** 2 for v in kept))
    return outcome, PureState([v / norm for v in kept])


class Detector(enum.Enum):
    D0 = "D0"
    D1 = "D1"
    NO_CLICK = "NoClick"

    @property
    def bit(self) -> int | None:
        return {Detector.D0: 0, Detector.D1: 1}.get(self)


def gv_decode_distribution(state: PureState) -> dict[Detector, float]:
    """Exact detector probabilities after Bob's second beamsplitter."""
    out = beamsplitter(state)
    probs = np.abs(out.amplitudes) ** 2
    return {
        Detector.D0: float(probs[2]),
        Detector.D1: float(probs[1]),
        Detector.NO_CLICK: float(probs[0]),
    }


def gv_decode(state: PureState, draw: float) -> Detector:
    """Beamsplitter, then photon counting: D0 means the photon left in mode a."""
    out = beamsplitter(state)
    in_a, collapsed = measure_number(out, "a", draw)
    if in_a:
        return Detector.D0
    # draw was >= P(a); rescale into [0, 1) for the remaining mode
    p_a = out.photon_probability("a")
    rest = (draw - p_a) / (1.0 - p_a)
    in_b, _ = measure_number(collapsed, "b", rest)
    return Detector.D1 if in_b else Detector.NO_CLICK


class Basis(enum.Enum):
    Z = "Z"
    X = "X"


@dataclass(frozen=True, eq=False)
class Qubit:
    """Normalized 2-vector over {|0>, |1>}."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes, 2)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ALGEBRA_TOL:
            raise ValueError(f"qubit not normalized: norm^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    def inner(self, other: "Qubit") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def isclose(self, other: "Qubit", atol: float = ALGEBRA_TOL) -> bool:
        return bool(np.allclose(self.amplitudes, other.amplitudes, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        return f"Qubit({np.round(self.amplitudes, 6).tolist()})"


_BASIS_STATES = {
    (0, Basis.Z): Qubit([1.0, 0.0]),
    (1, Basis.Z): Qubit([0.0, 1.0]),
    (0, Basis.X): Qubit([SQRT_HALF, SQRT_HALF]),
    (1, Basis.X): Qubit([SQRT_HALF, -SQRT_HALF]),
}


def bb84_encode(bit: int, basis: Basis) -> Qubit:
    try:
        return _BASIS_STATES[bit, Basis(basis)]
    except KeyError:
        raise ValueError(f"bit must be 0 or 1, got {bit!r}") from None


def measure_basis(q: Qubit, basis: Basis, draw: float) -> tuple[int, Qubit]:
    """Born-rule measurement; result 0 iff ``draw < P(0)``."""
    zero = _BASIS_STATES[0, basis]
    p_zero = abs(zero.inner(q)) ** 2
    bit = 0 if draw < p_zero else 1
    return bit, _BASIS_STATES[bit, basis]
