"""Pulse algebra, the standard gate library, and compilation to bit trains.

A pulse is either (B, phi), a fraction phi/2pi of a magnetic period with all
couplings off, or (couplings, theta), a resonant-stepped hyperfine rotation.
Pulse sequences are stored in execution order (first applied first); gate
constructors that follow operator-product notation reverse internally.

Mind the global field: (B, phi) rotates every encoded pair in the register at
once.  The library gates are written for registers of at most two logical
qubits, where the constructions below account for that joint action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .device import DeviceLayout, PhysicalParams, apply_shuttle, register_for
from .errors import CompileError, ValidationError
from .evolution import (BitTrain, Coupling, Segment, ShuttleEvent, TrainItem,
                        UnitaryOperator, ideal_pulse, make_train,
                        resonant_step_segments)

PI = math.pi
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Pulse:
    """One pulse: generator 'B' (couplings None) or a hyperfine coupling set."""

    couplings: frozenset[Coupling] | None
    angle: float

    def __post_init__(self):
        if not 0.0 <= self.angle < TWO_PI + 1e-12:
            raise ValidationError("pulse angle must lie in [0, 2pi)")
        if self.couplings is not None and not self.couplings:
            raise ValidationError("hyperfine pulse needs at least one coupling")

    @property
    def is_magnetic(self) -> bool:
        return self.couplings is None


def B(angle: float) -> Pulse:
    return Pulse(None, angle)


def A(couplings: Iterable[Coupling], angle: float) -> Pulse:
    return Pulse(frozenset((int(e), int(s)) for (e, s) in couplings), angle)


@dataclass(frozen=True)
class LogicalQubit:
    """One encoded qubit: an electron and its home donor site."""

    electron: int
    site: int


@dataclass(frozen=True)
class PulseSeq:
    """Ordered pulses (first applied first) over an initial device layout."""

    pulses: tuple[Pulse, ...]
    layout: DeviceLayout

    def __add__(self, other: "PulseSeq") -> "PulseSeq":
        if other.layout != self.layout:
            raise ValidationError("cannot concatenate sequences over different layouts")
        return PulseSeq(self.pulses + other.pulses, self.layout)

    def validate_grid(self, params: PhysicalParams) -> None:
        for p in self.pulses:
            grid = params.magnetic_angle_grid if p.is_magnetic else params.hyperfine_angle_grid
            steps = p.angle / grid
            if abs(steps - round(steps)) > 1e-9:
                raise CompileError(
                    f"angle {p.angle!r} not on the "
                    f"{'magnetic' if p.is_magnetic else 'hyperfine'} grid {grid!r}")


def _check_distinct(q1: LogicalQubit, q2: LogicalQubit) -> None:
    if q1.electron == q2.electron or q1.site == q2.site:
        raise ValidationError("logical qubits must use distinct electrons and sites")


# ---------------------------------------------------------------------------
# gate library


def swap_en(qubit: LogicalQubit, layout: DeviceLayout) -> PulseSeq:
    """(A, pi): the complete electron-nucleus spin swap on one pair."""
    return PulseSeq((A([(qubit.electron, qubit.site)], PI),), layout)


def entangler(q1: LogicalQubit, q2: LogicalQubit, layout: DeviceLayout) -> PulseSeq:
    """The five-pulse two-qubit entangling primitive N.

    In operator-product order (rightmost applied first):
    (A12+A21, 3pi/2) (B, pi/2) (A21, pi) (B, 3pi/2) (A12+A21, pi/2),
    where A12 couples q1's electron to q2's nucleus and A21 the converse.
    Both cross couplings require the electrons swapped onto each other's
    sites; the compiler inserts the shuttles.
    """
    _check_distinct(q1, q2)
    a12 = (q1.electron, q2.site)
    a21 = (q2.electron, q1.site)
    return PulseSeq((
        A([a12, a21], PI / 2),
        B(3 * PI / 2),
        A([a21], PI),
        B(PI / 2),
        A([a12, a21], 3 * PI / 2),
    ), layout)


def _local_dressing(q1: LogicalQubit, q2: LogicalQubit) -> tuple[Pulse, ...]:
    # (B,3pi/2)(A11+A22,pi)(A11,pi/2)(B,pi/2) in product order, returned in
    # execution order.
    a11 = (q1.electron, q1.site)
    a22 = (q2.electron, q2.site)
    return (B(PI / 2), A([a11], PI / 2), A([a11, a22], PI), B(3 * PI / 2))


def adjoint(seq: PulseSeq) -> PulseSeq:
    """Inverse sequence: reversed order, every angle complemented to 2pi.

    Exact up to a global phase for hyperfine pulses and up to one constant
    phase per spin-z sector for magnetic pulses.
    """
    out = []
    for p in reversed(seq.pulses):
        angle = (TWO_PI - p.angle) % TWO_PI
        if angle == 0.0:
            continue
        out.append(Pulse(p.couplings, angle))
    return PulseSeq(tuple(out), seq.layout)


def fast_adjoint(seq: PulseSeq) -> PulseSeq:
    """Inverse sequence that undoes hyperfine angles below pi by conjugating
    with (B, pi) instead of complementing them.

    On the encoded subspace (B, pi) acts as an X on every pair, and
    X Rz(theta) X = Rz(-theta), so [(B,pi),(A,theta),(B,pi)] inverts
    (A,theta) exactly there at cost theta + one magnetic period rather than
    2pi - theta.  Away from the encoded subspace the two realizations differ
    by within-sector phases, so use ``adjoint`` when full-space inversion
    matters.
    """
    out: list[Pulse] = []
    for p in reversed(seq.pulses):
        if p.is_magnetic:
            angle = (TWO_PI - p.angle) % TWO_PI
            if angle:
                out.append(B(angle))
        elif p.angle < PI:
            out.extend((B(PI), Pulse(p.couplings, p.angle), B(PI)))
        else:
            out.append(Pulse(p.couplings, (TWO_PI - p.angle) % TWO_PI))
    return PulseSeq(tuple(out), seq.layout)


def cnot(control: LogicalQubit, target: LogicalQubit, layout: DeviceLayout,
         fast_inverse: bool = True) -> PulseSeq:
    """Controlled-NOT: local dressing around the entangler, L N L^dag with
    L = (B,3pi/2)(A11+A22,pi)(A11,pi/2)(B,pi/2) acting on (control, target).

    ``fast_inverse`` realizes L^dag with (B,pi)-conjugated hyperfine angles
    (see ``fast_adjoint``), which is logically identical and about 13% faster
    than complementing the angles.
    """
    _check_distinct(control, target)
    dress = PulseSeq(_local_dressing(control, target), layout)
    inverse = fast_adjoint(dress) if fast_inverse else adjoint(dress)
    return inverse + entangler(control, target, layout) + dress


def ideal_sequence_unitary(seq: PulseSeq, params: PhysicalParams) -> UnitaryOperator:
    """Product of the ideal pulse unitaries, first pulse applied first."""
    register = register_for(seq.layout)
    u = np.eye(register.dim, dtype=complex)
    for p in seq.pulses:
        gen = "B" if p.is_magnetic else p.couplings
        u = ideal_pulse(register, gen, p.angle, params).matrix @ u
    return UnitaryOperator(u, label="ideal sequence")


# ---------------------------------------------------------------------------
# compilation


def _plan_shuttles(layout: DeviceLayout, couplings: frozenset[Coupling]
                   ) -> tuple[DeviceLayout, list[ShuttleEvent]]:
    """Move electrons so every (e, s) coupling is activatable.

    Displaces blocking electrons to the lowest-index free site that is not
    itself a coupling target; deterministic and sufficient for the two-qubit
    choreography (one spare site).
    """
    targets = dict(sorted((e, s) for (e, s) in couplings))
    if len(set(targets.values())) != len(targets):
        raise CompileError("two couplings target the same site")
    moves: list[ShuttleEvent] = []
    current = layout.idle()

    def free_site() -> int:
        occupied = set(current.electron_site)
        for s in range(current.n_sites):
            if s not in occupied and s not in targets.values():
                return s
        raise CompileError("no spare site available for shuttle plan")

    for e, s in targets.items():
        if current.electron_site[e] == s:
            continue
        occupant = current.site_occupant(s)
        if occupant is not None:
            spare = free_site()
            current = apply_shuttle(current, occupant, spare)
            moves.append(ShuttleEvent(occupant, spare))
        current = apply_shuttle(current, e, s)
        moves.append(ShuttleEvent(e, s))
    return current, moves


def compile(seq: PulseSeq, params: PhysicalParams, merge: bool = False) -> BitTrain:
    """Lower a pulse sequence to a bit train.

    Magnetic pulses become one all-off wait of phi/2pi of a magnetic period;
    hyperfine pulses become resonant-stepped trains, preceded by whatever
    shuttle events their couplings need.  ``merge`` coalesces adjacent
    all-off segments afterwards without changing any duration.
    """
    seq.validate_grid(params)
    layout = seq.layout.idle()
    items: list[TrainItem] = []
    for p in seq.pulses:
        if p.is_magnetic:
            cycles = round(p.angle / TWO_PI * params.cycles_per_TB)
            if cycles:
                items.append(Segment(cycles))
            continue
        layout, moves = _plan_shuttles(layout, p.couplings)
        for mv in moves:
            items.append(mv)
            if params.shuttle_cycles:
                items.append(Segment(params.shuttle_cycles))
        items.extend(resonant_step_segments(p.couplings, p.angle, params))
    if merge:
        items = _merge_waits(items)
    return make_train(params, items)


def _merge_waits(items: list[TrainItem]) -> list[TrainItem]:
    out: list[TrainItem] = []
    for item in items:
        if (out and isinstance(item, Segment) and isinstance(out[-1], Segment)
                and item.couplings == out[-1].couplings):
            out[-1] = Segment(out[-1].cycles + item.cycles, item.couplings)
        else:
            out.append(item)
    return out


# ---------------------------------------------------------------------------
# single-qubit Euler decomposition
#
# On one encoded pair, (A, theta) is a Z rotation by theta and (B, phi) an X
# rotation by phi (both up to global phase), so any SU(2) target factors as
# (A,theta1)(B,phi)(A,theta2) in product order.


def _rz(a: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])


def _rx(a: float) -> np.ndarray:
    c, s = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


@dataclass(frozen=True)
class EulerDecomposition:
    seq: PulseSeq                 # exact angles
    quantized: PulseSeq           # angles snapped to the compilable grids
    residual: float               # 1 - fidelity of quantized vs target


def _zxz_angles(target: np.ndarray) -> tuple[float, float, float]:
    """target ~ Rz(a) Rx(b) Rz(c) up to global phase; returns (a, b, c)."""
    u = np.asarray(target, dtype=complex)
    b = 2.0 * math.atan2(abs(u[1, 0]), abs(u[0, 0]))
    if abs(u[0, 0]) < 1e-12:
        # cos(b/2) = 0: a + c unconstrained, put everything in a - c
        apc = 0.0
        amc = np.angle(u[1, 0]) - np.angle(u[0, 1])
    elif abs(u[1, 0]) < 1e-12:
        # sin(b/2) = 0: a - c unconstrained, fold the rotation into a alone
        apc = np.angle(u[1, 1]) - np.angle(u[0, 0])
        amc = apc
    else:
        apc = np.angle(u[1, 1]) - np.angle(u[0, 0])
        amc = np.angle(u[1, 0]) - np.angle(u[0, 1])
    return (apc + amc) / 2.0, b, (apc - amc) / 2.0


def _logical_pulse_product(angles: tuple[float, float, float]) -> np.ndarray:
    t1, phi, t2 = angles
    # (A,theta) acts as diag(e^{3i theta/4}, e^{-i theta/4}) on (|0>,|1>)
    def la(t):
        return np.diag([np.exp(0.75j * t), np.exp(-0.25j * t)])
    return la(t1) @ _rx(phi) @ la(t2)


def _fidelity2(u: np.ndarray, v: np.ndarray) -> float:
    return abs(np.trace(u.conj().T @ v)) ** 2 / 4.0


def euler_decompose(target: np.ndarray, qubit: LogicalQubit,
                    layout: DeviceLayout, params: PhysicalParams) -> EulerDecomposition:
    """Decompose a special-unitary 2x2 target into (A,theta1)(B,phi)(A,theta2)
    on one encoded qubit, then snap the angles to the compilable grids.

    The exact decomposition matches the target up to global phase; the
    quantization residual (an infidelity) is reported and bounded by the grid
    spacings.
    """
    u = np.asarray(target, dtype=complex)
    if u.shape != (2, 2) or np.abs(u @ u.conj().T - np.eye(2)).max() > 1e-9:
        raise ValidationError("target must be a unitary 2x2 matrix")
    det = np.linalg.det(u)
    if abs(det - 1.0) > 1e-9:
        raise ValidationError("target must have unit determinant")

    a, b, c = _zxz_angles(u)
    # Rz(a) ~ (A, -a): fold into [0, 2pi) using the global-phase freedom
    theta1 = (-a) % TWO_PI
    phi = b % TWO_PI
    theta2 = (-c) % TWO_PI
    if _fidelity2(_logical_pulse_product((theta1, phi, theta2)), u) < 1.0 - 1e-12:
        raise AssertionError("euler decomposition did not reproduce the target")

    coupling = [(qubit.electron, qubit.site)]

    def build(t1, ph, t2):
        pulses = []
        if t2 > 1e-12:
            pulses.append(A(coupling, t2))
        if ph > 1e-12:
            pulses.append(B(ph))
        if t1 > 1e-12:
            pulses.append(A(coupling, t1))
        return PulseSeq(tuple(pulses), layout)

    def snap(x, grid):
        return (round(x / grid) * grid) % TWO_PI

    qt1 = snap(theta1, params.hyperfine_angle_grid)
    qt2 = snap(theta2, params.hyperfine_angle_grid)
    qph = snap(phi, params.magnetic_angle_grid)
    residual = 1.0 - _fidelity2(_logical_pulse_product((qt1, qph, qt2)), u)
    return EulerDecomposition(seq=build(theta1, phi, theta2),
                              quantized=build(qt1, qph, qt2),
                              residual=float(residual))
