"""Exact propagators, ideal pulses, resonant hyperfine stepping, and
clock-cycle bit-train execution.

A bit train is the machine-level schedule: an ordered list of segments, each
an integer number of clock cycles with a fixed set of switched-on hyperfine
couplings, interleaved with instantaneous shuttle events.  Pure hyperfine
rotations are synthesized by resonant stepping: the couplings are switched on
for ``dt_cycles`` out of every magnetic period (``cycles_per_TB`` cycles),
and the leading/trailing waits are shortened by half a step so each full
period of magnetic evolution acts as the time-reversed correction of the
symmetric splitting.  The result is pure hyperfine evolution up to one
constant phase per total-spin-z sector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .device import (DeviceLayout, PhysicalParams, apply_shuttle,
                     build_hamiltonian, hyperfine_hamiltonian, register_for,
                     zeeman_hamiltonian, H_PLANCK)
from .errors import LayoutError, TrainFormatError, ValidationError
from .spinspace import (DensityState, HermitianOperator, SpinRegister,
                        SpinState, _readonly)

HBAR = H_PLANCK / (2.0 * math.pi)
UNITARITY_TOL = 1e-10


@dataclass(frozen=True)
class UnitaryOperator:
    """Dense unitary matrix with a textual label."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"{self.label or 'unitary'}: matrix must be square")
        dev = np.abs(m @ m.conj().T - np.eye(m.shape[0])).max()
        if dev > UNITARITY_TOL:
            raise ValueError(f"{self.label or 'unitary'}: not unitary (dev {dev:.2e})")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "UnitaryOperator":
        return UnitaryOperator(self.matrix.conj().T, label=self.label + "^dag")


def exact_propagator(H: HermitianOperator | np.ndarray, t_ns: float,
                     label: str = "") -> UnitaryOperator:
    """exp(-i H t / hbar) via eigendecomposition of the Hermitian input."""
    if t_ns < 0:
        raise ValueError("propagation time must be >= 0")
    m = H.matrix if isinstance(H, HermitianOperator) else np.asarray(H, dtype=complex)
    if np.abs(m - m.conj().T).max() > 1e-9 * max(1.0, np.abs(m).max()):
        raise ValueError("propagator input is not Hermitian")
    w, v = np.linalg.eigh(m)
    u = (v * np.exp(-1j * w * (t_ns / HBAR))) @ v.conj().T
    return UnitaryOperator(u, label=label or f"U(t={t_ns:.6g}ns)")


Coupling = tuple[int, int]


def _coupling_set(couplings: Iterable[Coupling]) -> frozenset[Coupling]:
    cs = frozenset((int(e), int(s)) for (e, s) in couplings)
    return cs


def ideal_pulse(register: SpinRegister, generator: Union[str, Iterable[Coupling]],
                angle: float, params: PhysicalParams) -> UnitaryOperator:
    """Ideal pulse unitary: (B, phi) evolves the Zeeman term alone for
    phi/2pi of a magnetic period; (couplings, theta) evolves the listed
    hyperfine contacts alone (no field) for theta/2pi of T_A.

    The hyperfine version is the idealization that resonant stepping
    approximates.
    """
    if not 0.0 <= angle < 2.0 * math.pi + 1e-12:
        raise ValueError("pulse angle must lie in [0, 2pi)")
    if isinstance(generator, str):
        if generator != "B":
            raise ValueError(f"unknown generator {generator!r}")
        H = zeeman_hamiltonian(register, params)
        t = angle * params.T_B / (2.0 * math.pi)
        return exact_propagator(H, t, label=f"(B,{angle:.6g})")
    couplings = _coupling_set(generator)
    H = hyperfine_hamiltonian(register, couplings, params)
    t = angle * params.T_A / (2.0 * math.pi)
    return exact_propagator(H, t, label=f"(A{sorted(couplings)},{angle:.6g})")


# ---------------------------------------------------------------------------
# bit trains


@dataclass(frozen=True)
class Segment:
    """``cycles`` clock cycles with exactly ``couplings`` switched on."""

    cycles: int
    couplings: frozenset[Coupling] = frozenset()

    def __post_init__(self):
        if self.cycles < 1:
            raise ValidationError("segment duration must be >= 1 cycle")


@dataclass(frozen=True)
class ShuttleEvent:
    electron: int
    site: int


TrainItem = Union[Segment, ShuttleEvent]


@dataclass(frozen=True)
class BitTrain:
    """Clock-cycle schedule: segments and shuttle events, plus the clock."""

    f_GHz: float
    items: tuple[TrainItem, ...]
    total_cycles: int

    def __post_init__(self):
        total = sum(it.cycles for it in self.items if isinstance(it, Segment))
        if total != self.total_cycles:
            raise ValidationError(
                f"total_cycles={self.total_cycles} but segments sum to {total}")

    @property
    def segments(self) -> tuple[Segment, ...]:
        return tuple(it for it in self.items if isinstance(it, Segment))

    def duration_ns(self) -> float:
        return self.total_cycles / self.f_GHz


def make_train(params: PhysicalParams, items: Iterable[TrainItem]) -> BitTrain:
    items = tuple(items)
    total = sum(it.cycles for it in items if isinstance(it, Segment))
    return BitTrain(params.f_GHz, items, total)


def validate_train(train: BitTrain, layout: DeviceLayout) -> DeviceLayout:
    """Walk the train, checking every segment's couplings against the evolving
    layout.  Returns the final layout."""
    current = layout.idle()
    for i, item in enumerate(train.items):
        if isinstance(item, ShuttleEvent):
            try:
                current = apply_shuttle(current, item.electron, item.site)
            except LayoutError as exc:
                raise LayoutError(f"train item {i}: {exc}") from exc
        else:
            for (e, s) in item.couplings:
                if not 0 <= e < current.n_electrons:
                    raise LayoutError(f"train item {i}: unknown electron {e}")
                if current.electron_site[e] != s:
                    raise LayoutError(
                        f"train item {i}: coupling ({e},{s}) but electron {e} "
                        f"is at site {current.electron_site[e]}")
            current = current.with_couplings(item.couplings)
    return current.idle()


def resonant_step_count(angle: float, params: PhysicalParams) -> int:
    """Number of hyperfine-on steps for a theta pulse; errors if theta is not
    on the compilable grid."""
    a_float = angle / (2.0 * math.pi) * params.cycles_per_TA / params.dt_cycles
    a = round(a_float)
    if a < 1 or abs(a_float - a) > 1e-9:
        raise ValidationError(
            f"angle {angle!r} is not a positive multiple of the hyperfine grid "
            f"2pi*{params.dt_cycles}/{params.cycles_per_TA}")
    return a


def resonant_step_segments(couplings: Iterable[Coupling], angle: float,
                           params: PhysicalParams) -> list[Segment]:
    """Segment list of a resonant-stepped (A, theta) pulse.

    One magnetic period per step: on for dt cycles, off for the rest, with the
    outer waits shortened to T_B - dt/2 so the half-period corrections of the
    symmetric splitting come out of the waits themselves.  Total cost is
    exactly (a + 1) magnetic periods.
    """
    cs = _coupling_set(couplings)
    if not cs:
        raise ValidationError("resonant stepping needs at least one coupling")
    a = resonant_step_count(angle, params)
    ctb, dt = params.cycles_per_TB, params.dt_cycles
    half = dt // 2
    segs = [Segment(ctb - half)]
    for k in range(a):
        segs.append(Segment(dt, cs))
        segs.append(Segment(ctb - dt if k < a - 1 else ctb - half))
    return segs


def resonant_step_train(couplings: Iterable[Coupling], angle: float,
                        params: PhysicalParams) -> BitTrain:
    return make_train(params, resonant_step_segments(couplings, angle, params))


# ---------------------------------------------------------------------------
# execution

@lru_cache(maxsize=8192)
def _segment_propagator(params: PhysicalParams, n_sites: int, n_electrons: int,
                        electron_site: tuple[int, ...],
                        couplings: frozenset[Coupling], cycles: int) -> np.ndarray:
    """Cached propagator of one segment.  Safe for concurrent use (lru_cache
    is locked); trains repeat a handful of segment kinds thousands of times.

    The electron positions only matter through the coupling validity checked
    elsewhere; the spin Hamiltonian depends on which couplings are on.
    """
    register = SpinRegister(n_electrons, n_sites)
    layout = DeviceLayout(n_sites, electron_site).with_couplings(couplings)
    H = build_hamiltonian(register, layout, params)
    return exact_propagator(H, params.cycles_to_ns(cycles)).matrix


def _segment_matrices(train: BitTrain, layout: DeviceLayout,
                      params: PhysicalParams):
    """Yield the propagator of each segment, walking shuttles for validity."""
    current = layout.idle()
    for i, item in enumerate(train.items):
        if isinstance(item, ShuttleEvent):
            try:
                current = apply_shuttle(current, item.electron, item.site)
            except LayoutError as exc:
                raise LayoutError(f"train item {i}: {exc}") from exc
            continue
        for (e, s) in item.couplings:
            if current.electron_site[e] != s:
                raise LayoutError(
                    f"train item {i}: coupling ({e},{s}) invalid; electron {e} "
                    f"is at site {current.electron_site[e]}")
        current = current.with_couplings(item.couplings)
        yield _segment_propagator(params, current.n_sites, current.n_electrons,
                                  current.electron_site, item.couplings,
                                  item.cycles)


State = Union[SpinState, DensityState]


def execute(state: State, train: BitTrain, layout: DeviceLayout,
            params: PhysicalParams) -> tuple[State, int]:
    """Evolve a pure or mixed state through a bit train.

    Shuttle events only update the layout bookkeeping; the spin state is
    position independent.  Returns the evolved state and the cycle count.
    """
    register = register_for(layout)
    if state.dim != register.dim:
        raise ValidationError(f"state dim {state.dim} != register dim {register.dim}")
    if isinstance(state, SpinState):
        v = state.vector
        for u in _segment_matrices(train, layout, params):
            v = u @ v
        return SpinState(v), train.total_cycles
    rho = state.matrix
    for u in _segment_matrices(train, layout, params):
        rho = u @ rho @ u.conj().T
    return DensityState(rho), train.total_cycles


def train_unitary(train: BitTrain, layout: DeviceLayout,
                  params: PhysicalParams) -> UnitaryOperator:
    """Full propagator of the train (product of its segment propagators)."""
    register = register_for(layout)
    u = np.eye(register.dim, dtype=complex)
    for m in _segment_matrices(train, layout, params):
        u = m @ u
    return UnitaryOperator(u, label="train")


# ---------------------------------------------------------------------------
# bit-train files
#
# Line-oriented ASCII, bit-exact round trip:
#   CLOCK <f_GHz>
#   SEG <cycles> A=<s1,s2,...>     sites whose A-gates are hyperfine-ON (A=- none)
#   SHUTTLE e<i> s<j>
#   TOTAL <n>                      optional trailer, checked on load
# '#' starts a comment.


def format_train(train: BitTrain, layout: DeviceLayout) -> str:
    current = layout.idle()
    lines = [f"CLOCK {train.f_GHz!r}"]
    for item in train.items:
        if isinstance(item, ShuttleEvent):
            current = apply_shuttle(current, item.electron, item.site)
            lines.append(f"SHUTTLE e{item.electron} s{item.site}")
        else:
            if item.couplings:
                sites = ",".join(str(s) for s in sorted(s for (_e, s) in item.couplings))
            else:
                sites = "-"
            lines.append(f"SEG {item.cycles} A={sites}")
            current = current.with_couplings(item.couplings)
    lines.append(f"TOTAL {train.total_cycles}")
    return "\n".join(lines) + "\n"


def write_train(train: BitTrain, layout: DeviceLayout, path: str | Path) -> None:
    Path(path).write_text(format_train(train, layout))


def parse_train(text: str, layout: DeviceLayout) -> BitTrain:
    """Parse a bit-train file against an initial layout.

    Segment site lists are resolved to (electron, site) couplings via the
    evolving occupancy; every inconsistency is a hard error with its line
    number.
    """
    f_GHz: float | None = None
    items: list[TrainItem] = []
    declared_total: int | None = None
    current = layout.idle()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0]
        if kind == "CLOCK":
            if f_GHz is not None:
                raise TrainFormatError(f"line {lineno}: duplicate CLOCK")
            try:
                f_GHz = float(fields[1])
            except (IndexError, ValueError):
                raise TrainFormatError(f"line {lineno}: bad CLOCK line {raw!r}")
        elif kind == "SEG":
            if f_GHz is None:
                raise TrainFormatError(f"line {lineno}: SEG before CLOCK")
            if declared_total is not None:
                raise TrainFormatError(f"line {lineno}: content after TOTAL")
            try:
                cycles = int(fields[1])
                spec = fields[2]
                if not spec.startswith("A="):
                    raise ValueError
            except (IndexError, ValueError):
                raise TrainFormatError(f"line {lineno}: bad SEG line {raw!r}")
            if cycles < 1:
                raise TrainFormatError(f"line {lineno}: segment cycles must be >= 1")
            couplings: set[Coupling] = set()
            if spec[2:] != "-":
                for tok in spec[2:].split(","):
                    try:
                        site = int(tok)
                    except ValueError:
                        raise TrainFormatError(f"line {lineno}: bad site {tok!r}")
                    occupant = current.site_occupant(site)
                    if occupant is None:
                        raise TrainFormatError(
                            f"line {lineno}: no electron at site {site}")
                    couplings.add((occupant, site))
            items.append(Segment(cycles, frozenset(couplings)))
            current = current.with_couplings(frozenset(couplings))
        elif kind == "SHUTTLE":
            if declared_total is not None:
                raise TrainFormatError(f"line {lineno}: content after TOTAL")
            try:
                electron = int(fields[1].lstrip("e"))
                site = int(fields[2].lstrip("s"))
            except (IndexError, ValueError):
                raise TrainFormatError(f"line {lineno}: bad SHUTTLE line {raw!r}")
            try:
                current = apply_shuttle(current.idle(), electron, site)
            except LayoutError as exc:
                raise TrainFormatError(f"line {lineno}: {exc}") from exc
            items.append(ShuttleEvent(electron, site))
        elif kind == "TOTAL":
            try:
                declared_total = int(fields[1])
            except (IndexError, ValueError):
                raise TrainFormatError(f"line {lineno}: bad TOTAL line {raw!r}")
        else:
            raise TrainFormatError(f"line {lineno}: unknown directive {kind!r}")

    if f_GHz is None:
        raise TrainFormatError("missing CLOCK line")
    total = sum(it.cycles for it in items if isinstance(it, Segment))
    if declared_total is not None and declared_total != total:
        raise TrainFormatError(
            f"TOTAL {declared_total} does not match recomputed {total}")
    return BitTrain(f_GHz, tuple(items), total)


def read_train(path: str | Path, layout: DeviceLayout) -> BitTrain:
    return parse_train(Path(path).read_text(), layout)
