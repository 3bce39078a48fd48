"""Logical encoding and readout, the spin-swap data bus to nuclear memory,
singlet/triplet projective measurement, and the initialization cascade.

The encoded qubit of a spin pair lives in its J_z = 0 subspace:
|0> = (|ud> - |du>)/sqrt(2) (the singlet) and |1> = (|ud> + |du>)/sqrt(2).
A pi pulse of hyperfine interaction between any electron and any nucleus is a
complete spin swap, which moves encoded qubits between electron-nucleus,
nucleus-nucleus, and electron-electron pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .device import DeviceLayout, PhysicalParams, register_for
from .errors import ValidationError
from .evolution import ideal_pulse, train_unitary
from .gates import A as APulse
from .gates import B as BPulse
from .gates import LogicalQubit, PulseSeq
from .gates import compile as compile_seq
from .spinspace import (DensityState, SpinRegister, SpinState,
                        embed_pair_operator, reduced_pair_density,
                        singlet_state, triplet0_state)

PI = math.pi

PAIR_REGISTER = SpinRegister(n_electrons=1, n_nuclei=1)


def encode_logical(alpha: complex, beta: complex) -> SpinState:
    """alpha |0> + beta |1> on a single electron-nucleus pair register."""
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-9:
        raise ValidationError("(alpha, beta) must be normalized")
    v = (alpha * singlet_state(PAIR_REGISTER, 0, 1).vector
         + beta * triplet0_state(PAIR_REGISTER, 0, 1).vector)
    return SpinState(v)


def readout_logical(state: SpinState | DensityState,
                    register: SpinRegister = PAIR_REGISTER,
                    pair: tuple[int, int] = (0, 1)
                    ) -> tuple[complex, complex, float]:
    """(alpha, beta, leakage) of the encoded qubit carried by ``pair``.

    For a pure state of a single-pair register these are the plain overlaps
    with |0> and |1>.  For anything larger the pair is reduced first and
    (alpha, beta) is read from the dominant eigenvector of its logical block,
    so the amplitudes are meaningful whenever the pair is nearly pure; the
    returned pair is phase-normalized to a real, nonnegative leading entry.
    Leakage is the weight outside the pair's J_z = 0 logical subspace.
    """
    first, second = pair
    if isinstance(state, SpinState) and register.dim == 4 and state.dim == 4:
        s0 = singlet_state(register, first, second).vector
        s1 = triplet0_state(register, first, second).vector
        alpha = complex(s0.conj() @ state.vector)
        beta = complex(s1.conj() @ state.vector)
        leakage = 1.0 - abs(alpha) ** 2 - abs(beta) ** 2
        return alpha, beta, max(0.0, leakage)

    rho4 = reduced_pair_density(state, register, first, second)
    s = 1 / math.sqrt(2)
    logical = np.array([[0, s, -s, 0], [0, s, s, 0]], dtype=complex)  # |0>, |1> rows
    block = logical.conj() @ rho4 @ logical.T
    leakage = max(0.0, 1.0 - float(np.trace(block).real))
    w, v = np.linalg.eigh(block)
    vec = v[:, -1] * math.sqrt(max(0.0, w[-1]))
    lead = vec[int(np.argmax(np.abs(vec)))]
    if abs(lead) > 0:
        vec = vec * (lead.conjugate() / abs(lead))
    return complex(vec[0]), complex(vec[1]), leakage


def bloch_fidelity(a1: complex, b1: complex, a2: complex, b2: complex) -> float:
    """|<psi1|psi2>|^2 between two (alpha, beta) qubits, norm-insensitive."""
    n1 = abs(a1) ** 2 + abs(b1) ** 2
    n2 = abs(a2) ** 2 + abs(b2) ** 2
    if n1 == 0 or n2 == 0:
        return 0.0
    return abs(np.conj(a1) * a2 + np.conj(b1) * b2) ** 2 / (n1 * n2)


# ---------------------------------------------------------------------------
# memory transfer


def memory_transfer(data: LogicalQubit, ancilla: LogicalQubit,
                    layout: DeviceLayout) -> PulseSeq:
    """Swap the data electron with the ancilla nucleus: one (A, pi) pulse
    between them (plus compiler-inserted shuttles).

    After ideal execution the data qubit's amplitudes are carried by the
    (ancilla-nucleus, data-nucleus) pair and the ancilla's by the electron
    pair.  A second transfer retrieves the qubit.
    """
    if data.electron == ancilla.electron or data.site == ancilla.site:
        raise ValidationError("data and ancilla qubits must be distinct")
    return PulseSeq((APulse([(data.electron, ancilla.site)], PI),), layout)


# ---------------------------------------------------------------------------
# singlet/triplet measurement


@dataclass(frozen=True)
class MeasurementOutcome:
    label: str                       # "singlet" | "triplet"
    probability: float
    post_state: SpinState | DensityState | None


def _singlet_projector(register: SpinRegister, pair: tuple[int, int]) -> np.ndarray:
    s = 1 / math.sqrt(2)
    ket = np.array([0, s, -s, 0], dtype=complex)  # (|ud> - |du>)/sqrt2, first spin fastest
    return embed_pair_operator(register, pair[0], pair[1], np.outer(ket, ket.conj()))


def measure_singlet_triplet(state: SpinState | DensityState,
                            register: SpinRegister,
                            electron_pair: tuple[int, int]
                            ) -> list[MeasurementOutcome]:
    """Projective singlet-vs-triplet measurement of an electron pair.

    Returns both branches with Born probabilities and collapsed, renormalized
    post states (``None`` for a zero-probability branch).
    """
    for spin in electron_pair:
        if not register.is_electron(spin):
            raise ValidationError(f"spin {spin} is not an electron")
    p_singlet_op = _singlet_projector(register, electron_pair)
    outcomes = []
    for label, proj in (("singlet", p_singlet_op),
                        ("triplet", np.eye(register.dim) - p_singlet_op)):
        if isinstance(state, SpinState):
            collapsed = proj @ state.vector
            p = float(np.linalg.norm(collapsed) ** 2)
            post = SpinState(collapsed / math.sqrt(p)) if p > 1e-15 else None
        else:
            collapsed = proj @ state.matrix @ proj.conj().T
            p = float(np.trace(collapsed).real)
            post = DensityState(collapsed / p) if p > 1e-15 else None
        outcomes.append(MeasurementOutcome(label, p, post))
    return outcomes


def sample_singlet_triplet(state: SpinState | DensityState,
                           register: SpinRegister,
                           electron_pair: tuple[int, int],
                           rng: np.random.Generator) -> MeasurementOutcome:
    outcomes = measure_singlet_triplet(state, register, electron_pair)
    r = rng.random()
    return outcomes[0] if r < outcomes[0].probability else outcomes[1]


# ---------------------------------------------------------------------------
# initialization cascade
#
# Register convention for the cascade (and for two-qubit work generally):
# data pair = (electron 0, site 0), measurement ancilla = electron 1 from
# (electron 1, site 1), and site 2 spare for the shuttle choreography.  The
# swap couples electron 1 to nucleus 0, which relocates the data qubit onto
# the electron pair (0, 1) where it can be measured.


@dataclass(frozen=True)
class CascadeReport:
    rounds: int
    yield_zero: float
    discarded: float
    residual: float
    log: tuple[dict, ...]
    mc_trajectories: int = 0
    mc_yield: float | None = None
    mc_sigma: float | None = None

    def __post_init__(self):
        if abs(self.yield_zero + self.discarded + self.residual - 1.0) > 1e-10:
            raise ValidationError("cascade branch weights must sum to 1")


def cascade_layout(n_sites: int = 3) -> DeviceLayout:
    if n_sites < 3:
        raise ValidationError("cascade needs a spare site (n_sites >= 3)")
    return DeviceLayout(n_sites, (0, 1))


def mixed_pair_input(layout: DeviceLayout) -> DensityState:
    """Maximally mixed data pair, every other spin down: the high-temperature
    starting point (Zeeman polarization at mT fields is negligible)."""
    register = register_for(layout)
    rho4 = np.eye(4, dtype=complex) / 4.0
    return _embed_data_density(register, rho4)


def encoded_pair_input(layout: DeviceLayout, alpha: complex, beta: complex) -> DensityState:
    register = register_for(layout)
    pure = encode_logical(alpha, beta)
    return _embed_data_density(register, pure.density().matrix)


def _embed_data_density(register: SpinRegister, rho4: np.ndarray) -> DensityState:
    e0 = register.electron(0)
    n0 = register.nucleus(0)
    dim = register.dim
    rho = np.zeros((dim, dim), dtype=complex)

    def full_index(pair_bits: int) -> int:
        return ((pair_bits & 1) << e0) | (((pair_bits >> 1) & 1) << n0)

    for i in range(4):
        for j in range(4):
            rho[full_index(i), full_index(j)] = rho4[i, j]
    return DensityState(rho)


class _CascadeCircuit:
    """Unitaries of one cascade round, ideal or compiled."""

    def __init__(self, layout: DeviceLayout, params: PhysicalParams,
                 compiled: bool):
        register = register_for(layout)
        self.register = register
        self.pair = (register.electron(0), register.electron(1))
        swap = PulseSeq((APulse([(1, 0)], PI),), layout)
        flip = PulseSeq((BPulse(PI),), layout)
        if compiled:
            self.u_swap = train_unitary(compile_seq(swap, params), layout, params).matrix
            self.u_flip = train_unitary(compile_seq(flip, params), layout, params).matrix
        else:
            self.u_swap = ideal_pulse(register, [(1, 0)], PI, params).matrix
            self.u_flip = ideal_pulse(register, "B", PI, params).matrix
        # data-pair triplet|m|=1 projector: those branches can never reach the
        # singlet (total spin-z is conserved by every operation here)
        e0, n0 = register.electron(0), register.nucleus(0)
        tplus = np.zeros((4, 4), dtype=complex)
        tplus[3, 3] = 1.0
        tminus = np.zeros((4, 4), dtype=complex)
        tminus[0, 0] = 1.0
        self.p_stretched = embed_pair_operator(register, e0, n0, tplus + tminus)


def init_cascade(input_state: DensityState, max_rounds: int,
                 params: PhysicalParams, layout: DeviceLayout | None = None,
                 compiled: bool = False, trajectories: int = 0,
                 seed: int = 0) -> CascadeReport:
    """Measure-flip-remeasure recycling of one electron-donor pair.

    Each round swaps the data qubit onto the electron pair and measures it.
    A singlet is swapped straight back as logical |0>; a triplet is swapped
    back, flipped |0> <-> |1> by half a magnetic period, and retried.  Exact
    branch probabilities always; Monte Carlo trajectories (seeded, one
    sub-stream per trajectory) when ``trajectories`` > 0.
    """
    if max_rounds < 1:
        raise ValidationError("max_rounds must be >= 1")
    layout = layout or cascade_layout()
    circuit = _CascadeCircuit(layout, params, compiled)
    if input_state.dim != circuit.register.dim:
        raise ValidationError("input state does not match the cascade register")

    yield_zero = 0.0
    log = []
    branch = input_state.matrix
    branch_prob = 1.0
    rounds_run = 0
    for r in range(1, max_rounds + 1):
        if branch_prob < 1e-15:
            break
        rounds_run = r
        state = circuit.u_swap @ branch @ circuit.u_swap.conj().T
        ds = DensityState(state / np.trace(state).real)
        singlet, triplet = measure_singlet_triplet(ds, circuit.register, circuit.pair)
        p_here = branch_prob * singlet.probability
        yield_zero += p_here
        log.append({"round": r, "p_singlet": singlet.probability,
                    "cumulative_yield": yield_zero})
        if triplet.post_state is None:
            branch_prob = 0.0
            break
        back = circuit.u_swap @ triplet.post_state.matrix @ circuit.u_swap.conj().T
        back = circuit.u_flip @ back @ circuit.u_flip.conj().T
        branch = back
        branch_prob *= triplet.probability

    if branch_prob > 1e-15:
        stretched = float(np.trace(circuit.p_stretched @ branch).real)
        discarded = branch_prob * stretched
        residual = branch_prob * (1.0 - stretched)
    else:
        discarded = 0.0
        residual = 0.0
    # soak up float dust so the report invariant is exact
    residual = max(0.0, 1.0 - yield_zero - discarded)

    mc_yield = None
    mc_sigma = None
    if trajectories:
        successes = 0
        evals, evecs = np.linalg.eigh(input_state.matrix)
        evals = np.clip(evals, 0.0, None)
        evals = evals / evals.sum()
        for k in range(trajectories):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
            psi = evecs[:, rng.choice(len(evals), p=evals)].copy()
            for _r in range(max_rounds):
                psi = circuit.u_swap @ psi
                out = sample_singlet_triplet(SpinState(psi), circuit.register,
                                             circuit.pair, rng)
                if out.label == "singlet":
                    successes += 1
                    break
                psi = out.post_state.vector
                psi = circuit.u_flip @ (circuit.u_swap @ psi)
        mc_yield = successes / trajectories
        mc_sigma = math.sqrt(max(mc_yield * (1 - mc_yield), 1e-12) / trajectories)

    return CascadeReport(rounds=rounds_run, yield_zero=yield_zero,
                         discarded=discarded, residual=residual, log=tuple(log),
                         mc_trajectories=trajectories, mc_yield=mc_yield,
                         mc_sigma=mc_sigma)
