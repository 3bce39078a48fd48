"""The acceptance suite: every headline quantitative claim of the
architecture, each with its pinned tolerance.

Run via ``spintrain check`` or through pytest (tests/test_acceptance.py).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analysis, device, evolution
from .analysis import (gate_error, local_invariants, logical_basis_states,
                       sector_aligned_error, sensitivity_threshold,
                       trotter_convergence)
from .device import DeviceLayout, derive_clock, register_for
from .evolution import execute, ideal_pulse, resonant_step_train, train_unitary
from .gates import LogicalQubit, cnot, compile, ideal_sequence_unitary, swap_en
from .protocols import (bloch_fidelity, cascade_layout, init_cascade,
                        memory_transfer, mixed_pair_input, readout_logical)
from .spinspace import (SpinRegister, SpinState, compose_disjoint, jz_sectors,
                        reduced_pair_density, singlet_state, triplet0_state)

PI = math.pi


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str


def _result(index: int, name: str, checks: list[tuple[bool, str]]) -> CriterionResult:
    passed = all(ok for ok, _ in checks)
    detail = "; ".join(f"{'ok' if ok else 'FAIL'}: {msg}" for ok, msg in checks)
    return CriterionResult(index, name, passed, detail)


def _pair_setup():
    params = derive_clock()
    layout = DeviceLayout(1, (0,))
    register = register_for(layout)
    return params, layout, register


def _two_qubit_setup():
    params = derive_clock()
    layout = device.home_layout(3, 2)
    q0 = LogicalQubit(0, 0)
    q1 = LogicalQubit(1, 1)
    return params, layout, q0, q1


def criterion_1_derived_constants() -> CriterionResult:
    params = derive_clock()
    f_rel = abs(params.f_GHz - 11.2829) / 11.2829
    b_rel = abs(params.B_mT - 1.57171) / 1.57171
    return _result(1, "derived clock and field", [
        (f_rel <= 1e-4, f"f = {params.f_GHz:.6f} GHz, rel dev {f_rel:.2e} <= 1e-4"),
        (b_rel <= 5e-3, f"B = {params.B_mT:.6f} mT, rel dev {b_rel:.2e} <= 5e-3"),
    ])


def criterion_2_spin_swap() -> CriterionResult:
    params, layout, register = _pair_setup()
    train = compile(swap_en(LogicalQubit(0, 0), layout), params)
    cycles, us = analysis.duration_report(train, params)
    dur_rel = abs(us - 0.57) / 0.57
    u = train_unitary(train, layout, params)
    ideal = ideal_pulse(register, [(0, 0)], PI, params)
    err = sector_aligned_error(u, ideal, [p.matrix for _,
                               p in jz_sectors(register)])
    return _result(2, "spin swap duration and error", [
        (dur_rel <= 0.01, f"duration {us:.4f} us, rel dev {dur_rel:.2%} <= 1%"),
        (err <= 1e-6, f"sector-aligned error {err:.2e} <= 1e-6"),
    ])


_CNOT_IDEAL = np.array([[1, 0, 0, 0], [0, 1, 0, 0],
                        [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def criterion_3_cnot() -> CriterionResult:
    params, layout, q0, q1 = _two_qubit_setup()
    register = register_for(layout)
    seq = cnot(q0, q1, layout)
    train = compile(seq, params)
    cycles, us = analysis.duration_report(train, params)
    dur_rel = abs(us - 3.22) / 3.22

    basis = logical_basis_states(register, (q0, q1))
    u = train_unitary(train, layout, params)
    report = gate_error(u, ideal_sequence_unitary(seq, params), basis,
                        duration_cycles=cycles, params=params)

    P = np.column_stack([s.vector for s in basis])
    block = P.conj().T @ u.matrix @ P
    g1, g2 = local_invariants(block, atol=1e-4)
    ref_g1, ref_g2 = local_invariants(_CNOT_IDEAL)
    inv_dev = max(abs(g1 - ref_g1), abs(g2 - ref_g2))
    return _result(3, "CNOT class, error, duration", [
        (inv_dev <= 1e-6,
         f"local invariants ({g1.real:.2e}, {g2:.6f}) vs CNOT ({ref_g1.real:.0f}, "
         f"{ref_g2:.0f}), dev {inv_dev:.2e} <= 1e-6"),
        (report.avg_error <= 1e-5, f"avg_error {report.avg_error:.2e} <= 1e-5"),
        (dur_rel <= 0.15, f"duration {us:.4f} us vs 3.22 us, dev {dur_rel:.2%} <= 15%"),
    ])


def criterion_4_trotter_scaling() -> CriterionResult:
    params, _, _ = _pair_setup()
    res = trotter_convergence([(0, 0)], PI, (2, 4, 8, 16), params)
    checks = [(abs(res.order - 2.0) <= 0.3,
               f"stepping order {res.order:.3f} within 2.0 +/- 0.3")]
    params_2b = params.replace(B_mT=2 * params.B_mT)
    res_2b = trotter_convergence([(0, 0)], PI, (2, 4, 8, 16), params_2b)
    for (dt, e1), (_dt, e2) in zip(res.points, res_2b.points):
        checks.append((e2 > e1, f"dt={dt}: error at 2B {e2:.2e} > at B {e1:.2e}"))
    return _result(4, "stepping error scaling", checks)


def criterion_5_oracle_equivalence() -> CriterionResult:
    params, layout, register = _pair_setup()
    sectors = [p.matrix for _, p in jz_sectors(register)]
    checks = []
    for theta in (PI / 2, PI, 3 * PI / 2):
        train = resonant_step_train([(0, 0)], theta, params)
        u = train_unitary(train, layout, params)
        ideal = ideal_pulse(register, [(0, 0)], theta, params)
        err = sector_aligned_error(u, ideal, sectors)
        checks.append((err <= 1e-6,
                       f"theta={theta / PI:.2g}pi: aligned error {err:.2e} <= 1e-6"))
    return _result(5, "stepped pulses match ideal pulses", checks)


THRESHOLD_EXPECTATIONS = {
    "f": 1e-5, "B": 1e-5, "A": 5e-4, "g_e_interface": 5e-3,
}


def criterion_6_sensitivity_thresholds() -> CriterionResult:
    params, layout, q0, q1 = _two_qubit_setup()
    seq = cnot(q0, q1, layout)
    checks = []
    for parameter, expected in THRESHOLD_EXPECTATIONS.items():
        res = sensitivity_threshold(seq, parameter, 1e-5, params, (q0, q1),
                                    grid=(1e-6, 1e-4))
        ok = expected / 3 <= res.threshold <= expected * 3
        checks.append((ok, f"{parameter}: threshold {res.threshold:.2g} within "
                           f"x3 of {expected:.0e}"))
    return _result(6, "CNOT tuning-error thresholds", checks)


def criterion_7_initialization() -> CriterionResult:
    params = derive_clock()
    layout = cascade_layout()
    report = init_cascade(mixed_pair_input(layout), max_rounds=2, params=params,
                          layout=layout, trajectories=10_000, seed=20260810)
    mc_dev = abs(report.mc_yield - report.yield_zero)
    checks = [
        (abs(report.yield_zero - 0.5) <= 1e-6,
         f"exact yield {report.yield_zero:.7f} = 0.5 +/- 1e-6 in {report.rounds} rounds"),
        (report.rounds <= 2, f"{report.rounds} rounds <= 2"),
        (abs(report.discarded - 0.5) <= 1e-6,
         f"discarded (stretched triplets) {report.discarded:.7f} = 0.5 +/- 1e-6"),
        (mc_dev <= 3 * report.mc_sigma,
         f"Monte Carlo yield {report.mc_yield:.4f} within 3 sigma "
         f"({3 * report.mc_sigma:.4f}) of exact"),
    ]
    return _result(7, "initialization cascade yield", checks)


def criterion_8_memory_transfer() -> CriterionResult:
    params, layout, q0, q1 = _two_qubit_setup()
    register = register_for(layout)
    seq = memory_transfer(q0, q1, layout)
    u_ideal = ideal_pulse(register, [(0, 1)], PI, params).matrix
    u_train = train_unitary(compile(seq, params), layout, params).matrix

    nuc_pair = (register.nucleus(1), register.nucleus(0))
    data_pair = (register.electron(0), register.nucleus(0))
    rng = np.random.default_rng(8)
    worst_ideal = 0.0
    worst_train = 0.0
    worst_purity_dev = 0.0
    for _ in range(20):
        (a, b), (c, d) = _random_qubit(rng), _random_qubit(rng)
        state = _product_input(register, (a, b), (c, d))

        moved = SpinState(u_ideal @ state.vector)
        worst_purity_dev = max(worst_purity_dev,
                               abs(1.0 - _pair_purity(moved, register, nuc_pair)))
        back = SpinState(u_ideal @ moved.vector)
        ra, rb, _ = readout_logical(back, register, data_pair)
        worst_ideal = max(worst_ideal, 1.0 - bloch_fidelity(a, b, ra, rb))

        back = SpinState(u_train @ (u_train @ state.vector))
        ra, rb, _ = readout_logical(back, register, data_pair)
        worst_train = max(worst_train, 1.0 - bloch_fidelity(a, b, ra, rb))
    return _result(8, "memory transfer round trip", [
        (worst_ideal <= 1e-9, f"ideal retrieve infidelity {worst_ideal:.2e} <= 1e-9"),
        (worst_train <= 1e-5, f"compiled retrieve infidelity {worst_train:.2e} <= 1e-5"),
        (worst_purity_dev <= 1e-10,
         f"nuclear-pair purity dev {worst_purity_dev:.2e} <= 1e-10 (ideal transfer)"),
    ])


def _random_qubit(rng: np.random.Generator) -> tuple[complex, complex]:
    amps = rng.normal(size=2) + 1j * rng.normal(size=2)
    amps = amps / np.linalg.norm(amps)
    return complex(amps[0]), complex(amps[1])


def _pair_purity(state: SpinState, register: SpinRegister,
                 pair: tuple[int, int]) -> float:
    rho = reduced_pair_density(state, register, pair[0], pair[1])
    return float(np.trace(rho @ rho).real)


def _product_input(register: SpinRegister, data: tuple[complex, complex],
                   anc: tuple[complex, complex]) -> SpinState:
    def pair_vec(e, n, amps):
        return (amps[0] * singlet_state(register, e, n).vector
                + amps[1] * triplet0_state(register, e, n).vector)

    v = np.zeros(register.dim, dtype=complex)
    v[0] = 1.0
    v = compose_disjoint(v, pair_vec(register.electron(0), register.nucleus(0), data))
    v = compose_disjoint(v, pair_vec(register.electron(1), register.nucleus(1), anc))
    return SpinState(v)


def criterion_9_invariant_suite() -> CriterionResult:
    params, layout, register = _pair_setup()
    checks = []

    rng = np.random.default_rng(99)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = (m + m.conj().T) / 2
    u = evolution.exact_propagator(h, 1.0).matrix
    checks.append((np.abs(u @ u.conj().T - np.eye(8)).max() <= 1e-10,
                   "propagator unitary to 1e-10"))

    train = resonant_step_train([(0, 0)], PI, params)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    state = SpinState(v / np.linalg.norm(v))
    final, _ = execute(state, train, layout, params)
    checks.append((abs(np.linalg.norm(final.vector) - 1.0) <= 1e-10,
                   "norm preserved through a train"))

    drift = 0.0
    for _jz, proj in jz_sectors(register):
        before = float((state.vector.conj() @ proj.matrix @ state.vector).real)
        after = float((final.vector.conj() @ proj.matrix @ final.vector).real)
        drift = max(drift, abs(after - before))
    checks.append((drift <= 1e-10, f"J_z sector weights drift {drift:.1e} <= 1e-10"))

    ideal = ideal_pulse(register, [(0, 0)], PI, params)
    basis = logical_basis_states(register, (LogicalQubit(0, 0),))
    base = gate_error(ideal, ideal, basis).avg_error
    phase_dev = 0.0
    for _ in range(10):
        gamma = rng.uniform(0, 2 * PI)
        shifted = np.exp(1j * gamma) * ideal.matrix
        phase_dev = max(phase_dev,
                        abs(gate_error(shifted, ideal, basis).avg_error - base))
    checks.append((phase_dev <= 1e-12,
                   f"gate_error global-phase invariant to {phase_dev:.1e}"))

    lay2 = cascade_layout()
    r1 = init_cascade(mixed_pair_input(lay2), 2, params, lay2,
                      trajectories=200, seed=7)
    r2 = init_cascade(mixed_pair_input(lay2), 2, params, lay2,
                      trajectories=200, seed=7)
    checks.append((r1.mc_yield == r2.mc_yield, "Monte Carlo deterministic under a seed"))

    q = LogicalQubit(0, 0)
    t1 = evolution.format_train(compile(swap_en(q, layout), params), layout)
    t2 = evolution.format_train(compile(swap_en(q, layout), params), layout)
    checks.append((t1 == t2, "compilation deterministic"))

    return _result(9, "invariant suite", checks)


ALL_CRITERIA: tuple[Callable[[], CriterionResult], ...] = (
    criterion_1_derived_constants,
    criterion_2_spin_swap,
    criterion_3_cnot,
    criterion_4_trotter_scaling,
    criterion_5_oracle_equivalence,
    criterion_6_sensitivity_thresholds,
    criterion_7_initialization,
    criterion_8_memory_transfer,
    criterion_9_invariant_suite,
)


def run_all() -> list[CriterionResult]:
    return [fn() for fn in ALL_CRITERIA]
