"""Gate-error metrics, local-equivalence invariants, stepping-convergence
measurement, and parameter-sensitivity threshold search.

Error convention: ``avg_error`` is the Haar-average state infidelity over the
logical subspace, 1 - (Tr(M^dag M) + |Tr M|^2) / (d(d+1)) for the logical
block M of U_ideal^dag U_actual.  It is a probability-level quantity,
quadratic in the operator deviation; scaling exponents of the stepping scheme
are therefore quoted at amplitude level (half the infidelity's log-log
slope).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .device import DeviceLayout, PhysicalParams, register_for
from .errors import ValidationError
from .evolution import UnitaryOperator, ideal_pulse, resonant_step_train, train_unitary
from .gates import LogicalQubit, PulseSeq
from .gates import compile as compile_seq
from .gates import ideal_sequence_unitary
from .spinspace import (HermitianOperator, SpinRegister, SpinState,
                        compose_disjoint, jz_sectors, singlet_state,
                        triplet0_state)


@dataclass(frozen=True)
class ErrorReport:
    """Average/worst-case logical infidelity, leakage, and gate duration."""

    avg_error: float
    worst_error: float
    leakage: float
    duration_cycles: int = 0
    duration_us: float = 0.0

    def __post_init__(self):
        if not -1e-12 <= self.avg_error <= self.worst_error + 1e-12:
            raise ValidationError("want 0 <= avg_error <= worst_error")
        if not -1e-12 <= self.leakage <= 1 + 1e-12:
            raise ValidationError("leakage must lie in [0, 1]")


def _matrix(u) -> np.ndarray:
    return u.matrix if isinstance(u, (UnitaryOperator, HermitianOperator)) else np.asarray(u, dtype=complex)


def logical_basis_states(register: SpinRegister,
                         qubits: list[LogicalQubit] | tuple[LogicalQubit, ...]
                         ) -> list[SpinState]:
    """Encoded computational basis over the given qubits, first qubit the
    most significant; every spectator spin is down."""
    if not qubits:
        raise ValidationError("need at least one qubit")
    dim = register.dim
    vecs = []
    for bits in range(2 ** len(qubits)):
        v = np.zeros(dim, dtype=complex)
        v[0] = 1.0
        for k, q in enumerate(qubits):
            bit = (bits >> (len(qubits) - 1 - k)) & 1
            e = register.electron(q.electron)
            n = register.nucleus(q.site)
            pair = (triplet0_state if bit else singlet_state)(register, e, n)
            v = compose_disjoint(v, pair.vector)
        vecs.append(SpinState(v))
    return vecs


def _logical_block(U_actual, U_ideal, basis: list[SpinState]) -> np.ndarray:
    P = np.column_stack([s.vector for s in basis])
    gram = P.conj().T @ P
    if np.abs(gram - np.eye(len(basis))).max() > 1e-9:
        raise ValidationError("logical basis is not orthonormal")
    return P.conj().T @ _matrix(U_ideal).conj().T @ _matrix(U_actual) @ P


def gate_error(U_actual, U_ideal, logical_basis: list[SpinState],
               duration_cycles: int = 0, params: PhysicalParams | None = None
               ) -> ErrorReport:
    """Average probability of incorrectly transforming the logical subspace.

    M = P U_ideal^dag U_actual P on the span of ``logical_basis``;
    avg_error = 1 - (Tr(M^dag M) + |Tr M|^2)/(d(d+1)), which is invariant
    under a global phase of U_actual.  worst_error probes the basis states
    and their pairwise equal-weight superpositions (four relative phases);
    leakage = 1 - Tr(M^dag M)/d.
    """
    M = _logical_block(U_actual, U_ideal, logical_basis)
    d = M.shape[0]
    trMM = float(np.trace(M.conj().T @ M).real)
    avg = 1.0 - (trMM + abs(np.trace(M)) ** 2) / (d * (d + 1))
    leakage = max(0.0, 1.0 - trMM / d)

    probes = [np.eye(d)[:, i] for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            for ph in (1.0, -1.0, 1.0j, -1.0j):
                v = np.zeros(d, dtype=complex)
                v[i] = 1 / math.sqrt(2)
                v[j] = ph / math.sqrt(2)
                probes.append(v)
    worst = max(1.0 - abs(v.conj() @ M @ v) ** 2 for v in probes)
    # the probe set only lower-bounds the true worst case; the Haar average
    # is itself a lower bound, so report at least that
    worst = max(worst, avg)

    us = params.cycles_to_us(duration_cycles) if params and duration_cycles else 0.0
    return ErrorReport(avg_error=max(0.0, avg), worst_error=min(1.0, worst),
                       leakage=leakage, duration_cycles=duration_cycles,
                       duration_us=us)


def sector_aligned_error(U1, U2, projectors) -> float:
    """Haar-average infidelity between U1 and U2, minimized over one free
    phase per spin-z sector (phases that resonant stepping is allowed to
    accumulate).  The optimum per sector is the phase of Tr(P U2^dag U1 P).
    """
    m1, m2 = _matrix(U1), _matrix(U2)
    if m1.shape != m2.shape:
        raise ValidationError("operators must have equal dimension")
    d = m1.shape[0]
    M = m2.conj().T @ m1
    aligned_trace = 0.0
    for proj in projectors:
        p = _matrix(proj)
        aligned_trace += abs(np.trace(p @ M @ p))
    fid = (float(np.trace(M.conj().T @ M).real) + aligned_trace ** 2) / (d * (d + 1))
    return max(0.0, 1.0 - fid)


# ---------------------------------------------------------------------------
# two-qubit local equivalence (invariants in the magic basis)

_MAGIC = np.array([[1, 0, 0, 1j],
                   [0, 1j, 1, 0],
                   [0, 1j, -1, 0],
                   [1, 0, 0, -1j]], dtype=complex) / math.sqrt(2)


def closest_unitary(m: np.ndarray) -> np.ndarray:
    w, _s, vh = np.linalg.svd(m)
    return w @ vh


def local_invariants(U_logical, atol: float = 1e-6) -> tuple[complex, float]:
    """Local invariants (g1, g2) of a two-qubit unitary, computed in the
    magic basis; identical for all gates equivalent under single-qubit
    rotations.  Identity gives (1, 3); CNOT gives (0, 1).
    """
    m = _matrix(U_logical)
    if m.shape != (4, 4):
        raise ValidationError("need a 4x4 logical unitary")
    dev = np.abs(m @ m.conj().T - np.eye(4)).max()
    if dev > atol:
        raise ValidationError(f"input deviates from unitarity by {dev:.2e}")
    u = closest_unitary(m)
    um = _MAGIC.conj().T @ u @ _MAGIC
    det = np.linalg.det(um)
    mm = um.T @ um
    tr2 = np.trace(mm) ** 2
    g1 = tr2 / (16.0 * det)
    g2 = (tr2 - np.trace(mm @ mm)) / (4.0 * det)
    return complex(g1), float(g2.real)


# ---------------------------------------------------------------------------
# stepping convergence


@dataclass(frozen=True)
class ConvergenceResult:
    """Measured convergence of resonant stepping against the ideal pulse.

    ``points`` holds (dt_cycles, sector-aligned infidelity).  ``order`` is
    the amplitude-level scaling exponent, i.e. half the log-log slope of the
    infidelity, matching the per-step operator error O(dt^3) accumulated over
    theta/dt steps (total amplitude ~ dt^2).
    """

    order: float
    points: tuple[tuple[int, float], ...]


def trotter_convergence(couplings, theta: float, dt_list,
                        params: PhysicalParams) -> ConvergenceResult:
    """Sector-aligned stepping error vs step size, with fitted order."""
    dts = sorted(set(int(d) for d in dt_list))
    if len(dts) < 3:
        raise ValidationError("need at least 3 step sizes")
    cs = frozenset((int(e), int(s)) for (e, s) in couplings)
    n_e = max(e for (e, _s) in cs) + 1
    n_s = max(s for (_e, s) in cs) + 1
    register = SpinRegister(n_e, n_s)
    layout = DeviceLayout(n_s, tuple(range(n_e)))
    projectors = [p.matrix for (_jz, p) in jz_sectors(register)]
    ideal = ideal_pulse(register, cs, theta, params)

    points = []
    for dt in dts:
        p_dt = params.replace(dt_cycles=dt)
        train = resonant_step_train(cs, theta, p_dt)
        u = train_unitary(train, layout, p_dt)
        points.append((dt, sector_aligned_error(u, ideal, projectors)))
    slope = np.polyfit(np.log([d for d, _ in points]),
                       np.log([e for _, e in points]), 1)[0]
    return ConvergenceResult(order=float(slope) / 2.0, points=tuple(points))


# ---------------------------------------------------------------------------
# sensitivity sweeps

SWEEP_PARAMETERS = ("f", "B", "A", "g_e_interface")


def perturbed_params(params: PhysicalParams, parameter: str,
                     delta: float) -> PhysicalParams:
    """Physics with one parameter scaled by (1 + delta), controller beliefs
    (cycle counts, compiled trains) untouched.

    ``g_e_interface`` perturbs the donor/interface g-factor mismatch: the
    clock is calibrated against the g seen during the long all-off waits, so
    the uncompensated quantity is the bound-electron value, scaled here.
    """
    if parameter == "f":
        return params.replace(f_GHz=params.f_GHz * (1 + delta))
    if parameter == "B":
        return params.replace(B_mT=params.B_mT * (1 + delta))
    if parameter == "A":
        return params.replace(A=params.A * (1 + delta))
    if parameter == "g_e_interface":
        return params.replace(g_e_donor=params.g_e_donor * (1 + delta))
    raise ValidationError(f"unknown sweep parameter {parameter!r}; "
                          f"choose from {SWEEP_PARAMETERS}")


def perturbed_params_local(params: PhysicalParams, parameter: str, delta: float,
                           index: int, n: int) -> PhysicalParams:
    """Site-local (A) or electron-local (g) version of ``perturbed_params``."""
    if parameter == "A":
        scale = [1.0] * n
        scale[index] = 1 + delta
        return params.replace(site_A_scale=tuple(scale))
    if parameter == "g_e_interface":
        scale = [1.0] * n
        scale[index] = 1 + delta
        return params.replace(electron_g_donor_scale=tuple(scale))
    raise ValidationError(f"no local variant for parameter {parameter!r}")


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    deltas: tuple[float, ...]
    reports: tuple[ErrorReport, ...]
    threshold: float
    nominal_error: float


def _round_sig(x: float, sig: int = 2) -> float:
    if x == 0:
        return 0.0
    return float(f"{x:.{sig - 1}e}")


DEFAULT_SWEEP_GRID = (1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2)


def sensitivity_threshold(seq: PulseSeq, parameter: str, error_budget: float,
                          params: PhysicalParams,
                          qubits: list[LogicalQubit] | tuple[LogicalQubit, ...],
                          grid=DEFAULT_SWEEP_GRID,
                          bracket: tuple[float, float] = (1e-8, 1e-1),
                          iterations: int = 40) -> SweepResult:
    """Largest relative perturbation the compiled gate tolerates.

    The bit train is compiled once at nominal parameters (the controller's
    beliefs) and re-executed under perturbed physics; the threshold is the
    largest |delta| keeping avg_error <= error_budget, bisected in log space
    separately for both signs and refined to two significant figures.
    """
    layout = seq.layout
    register = register_for(layout)
    basis = logical_basis_states(register, qubits)
    train = compile_seq(seq, params)
    ideal = ideal_sequence_unitary(seq, params)

    def report(delta: float) -> ErrorReport:
        p = perturbed_params(params, parameter, delta)
        u = train_unitary(train, layout, p)
        return gate_error(u, ideal, basis,
                          duration_cycles=train.total_cycles, params=params)

    nominal = report(0.0).avg_error
    if nominal >= error_budget:
        raise ValidationError(
            f"error budget {error_budget} is below the nominal gate error {nominal}")

    deltas, reports = [], []
    for g in sorted(grid):
        for s in (-1.0, 1.0):
            deltas.append(s * g)
            reports.append(report(s * g))
    order = np.argsort(deltas)
    deltas = [deltas[i] for i in order]
    reports = [reports[i] for i in order]

    lo0, hi0 = bracket
    sides = []
    for sign in (1.0, -1.0):
        if report(sign * lo0).avg_error > error_budget:
            sides.append(lo0)
            continue
        if report(sign * hi0).avg_error <= error_budget:
            sides.append(hi0)
            continue
        llo, lhi = math.log10(lo0), math.log10(hi0)
        for _ in range(iterations):
            mid = 0.5 * (llo + lhi)
            if report(sign * 10 ** mid).avg_error <= error_budget:
                llo = mid
            else:
                lhi = mid
        sides.append(10 ** llo)
    threshold = _round_sig(min(sides))
    return SweepResult(parameter=parameter, deltas=tuple(deltas),
                       reports=tuple(reports), threshold=threshold,
                       nominal_error=nominal)


def sweep_csv(result: SweepResult) -> str:
    lines = ["param,delta,avg_error,worst_error,leakage"]
    for d, r in zip(result.deltas, result.reports):
        lines.append(f"{result.parameter},{d!r},{r.avg_error!r},"
                     f"{r.worst_error!r},{r.leakage!r}")
    return "\n".join(lines) + "\n"


def duration_report(train, params: PhysicalParams) -> tuple[int, float]:
    """(total clock cycles, duration in microseconds)."""
    return train.total_cycles, params.cycles_to_us(train.total_cycles)
