"""Hilbert-space layout and spin operators for electron/nuclear registers.

Basis convention, shared by every module in the package: a basis index is a
bit string in which bit ``i`` carries the state of spin ``i`` (bit value 1
means spin up, sigma_z = +1).  Electrons occupy bit positions
``0 .. n_electrons-1``, nuclei the positions after them.  Bit 0 is the
fastest-varying index of the state vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Iterable

import numpy as np

HERMITICITY_TOL = 1e-12
UNIT_NORM_TOL = 1e-10

PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}
_ID2 = np.eye(2, dtype=complex)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpinRegister:
    """A register of spin-1/2 particles: electrons first, then nuclei."""

    n_electrons: int
    n_nuclei: int

    def __post_init__(self):
        if self.n_electrons < 0 or self.n_nuclei < 0 or self.n_spins == 0:
            raise ValueError("register needs at least one spin")

    @property
    def n_spins(self) -> int:
        return self.n_electrons + self.n_nuclei

    @property
    def dim(self) -> int:
        return 2 ** self.n_spins

    def electron(self, i: int) -> int:
        """Spin index of electron ``i``."""
        if not 0 <= i < self.n_electrons:
            raise IndexError(f"electron index {i} out of range")
        return i

    def nucleus(self, j: int) -> int:
        """Spin index of nucleus ``j`` (the donor at site ``j``)."""
        if not 0 <= j < self.n_nuclei:
            raise IndexError(f"nucleus index {j} out of range")
        return self.n_electrons + j

    def is_electron(self, spin: int) -> bool:
        if not 0 <= spin < self.n_spins:
            raise IndexError(f"spin index {spin} out of range")
        return spin < self.n_electrons


@dataclass(frozen=True)
class HermitianOperator:
    """Dense Hermitian matrix over a register basis, with a textual label."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"{self.label or 'operator'}: matrix must be square")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.conj().T).max() > HERMITICITY_TOL * scale:
            raise ValueError(f"{self.label or 'operator'}: not Hermitian")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpinState:
    """Pure state: a unit-norm complex amplitude vector."""

    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(v) - 1.0) > UNIT_NORM_TOL:
            raise ValueError("state vector is not normalized")
        object.__setattr__(self, "vector", _readonly(v))

    @property
    def dim(self) -> int:
        return self.vector.shape[0]

    def density(self) -> "DensityState":
        return DensityState(np.outer(self.vector, self.vector.conj()))


@dataclass(frozen=True)
class DensityState:
    """Mixed state: Hermitian, positive semidefinite, unit trace."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if np.abs(m - m.conj().T).max() > UNIT_NORM_TOL:
            raise ValueError("density matrix not Hermitian")
        if abs(np.trace(m).real - 1.0) > UNIT_NORM_TOL:
            raise ValueError("density matrix trace != 1")
        if np.linalg.eigvalsh(m).min() < -UNIT_NORM_TOL:
            raise ValueError("density matrix not positive semidefinite")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


# ---------------------------------------------------------------------------
# operator construction


@lru_cache(maxsize=None)
def _pauli_matrix(n_spins: int, spin: int, axis: str) -> np.ndarray:
    ops = [_ID2] * n_spins
    ops[spin] = PAULI[axis]
    # bit 0 is the fastest index, hence the reversed kron order
    return _readonly(reduce(np.kron, ops[::-1]))


def embed_pauli(register: SpinRegister, spin: int, axis: str) -> HermitianOperator:
    """Pauli operator on one spin, identity on the rest."""
    if axis not in PAULI:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    if not 0 <= spin < register.n_spins:
        raise IndexError(f"spin index {spin} out of range for {register.n_spins} spins")
    return HermitianOperator(_pauli_matrix(register.n_spins, spin, axis),
                             label=f"sigma_{axis}[{spin}]")


@lru_cache(maxsize=None)
def _heisenberg_matrix(n_spins: int, i: int, j: int) -> np.ndarray:
    m = sum(_pauli_matrix(n_spins, i, ax) @ _pauli_matrix(n_spins, j, ax)
            for ax in ("x", "y", "z"))
    return _readonly(m)


def heisenberg(register: SpinRegister, electron: int, nucleus: int) -> HermitianOperator:
    """Unit-strength contact coupling sigma_e . sigma_n between two spins.

    ``electron`` and ``nucleus`` are global spin indices and must address one
    spin of each species.
    """
    if not register.is_electron(electron):
        raise ValueError(f"spin {electron} is not an electron")
    if register.is_electron(nucleus):
        raise ValueError(f"spin {nucleus} is not a nucleus")
    return HermitianOperator(_heisenberg_matrix(register.n_spins, electron, nucleus),
                             label=f"sigma.sigma[{electron},{nucleus}]")


def _jz_of_index(idx: int, n_spins: int) -> float:
    ups = bin(idx).count("1")
    return ups - n_spins / 2.0


def jz_values(register: SpinRegister) -> tuple[float, ...]:
    """Attainable total-sigma_z/2 eigenvalues, ascending."""
    n = register.n_spins
    return tuple(k - n / 2.0 for k in range(n + 1))


def jz_sector_projector(register: SpinRegister, jz: float) -> HermitianOperator:
    """Diagonal projector onto the basis states with (ups - downs)/2 == jz."""
    n = register.n_spins
    n_up = jz + n / 2.0
    if abs(n_up - round(n_up)) > 1e-9 or not 0 <= round(n_up) <= n:
        raise ValueError(f"jz={jz} is not attainable for {n} spins")
    n_up = round(n_up)
    diag = np.array([1.0 if bin(i).count("1") == n_up else 0.0
                     for i in range(register.dim)])
    return HermitianOperator(np.diag(diag).astype(complex), label=f"P(jz={jz})")


def jz_sectors(register: SpinRegister) -> tuple[tuple[float, HermitianOperator], ...]:
    return tuple((jz, jz_sector_projector(register, jz)) for jz in jz_values(register))


def total_sigma_z(register: SpinRegister) -> HermitianOperator:
    m = sum(_pauli_matrix(register.n_spins, s, "z") for s in range(register.n_spins))
    return HermitianOperator(m, label="sum sigma_z")


# ---------------------------------------------------------------------------
# state construction


def basis_state(register: SpinRegister, up_spins: Iterable[int] = ()) -> SpinState:
    """Computational basis ket with the listed spins up, all others down."""
    idx = 0
    for s in up_spins:
        if not 0 <= s < register.n_spins:
            raise IndexError(f"spin index {s} out of range")
        idx |= 1 << s
    v = np.zeros(register.dim, dtype=complex)
    v[idx] = 1.0
    return SpinState(v)


def pair_superposition(register: SpinRegister, first: int, second: int,
                       amp_ud: complex, amp_du: complex,
                       others_up: Iterable[int] = ()) -> SpinState:
    """State amp_ud |first-up, second-down> + amp_du |first-down, second-up>.

    All remaining spins are down unless listed in ``others_up``.
    """
    base = 0
    for s in others_up:
        base |= 1 << s
    v = np.zeros(register.dim, dtype=complex)
    v[base | (1 << first)] += amp_ud
    v[base | (1 << second)] += amp_du
    return SpinState(v)


def singlet_state(register: SpinRegister, first: int, second: int,
                  others_up: Iterable[int] = ()) -> SpinState:
    s = 1 / np.sqrt(2)
    return pair_superposition(register, first, second, s, -s, others_up)


def triplet0_state(register: SpinRegister, first: int, second: int,
                   others_up: Iterable[int] = ()) -> SpinState:
    s = 1 / np.sqrt(2)
    return pair_superposition(register, first, second, s, s, others_up)


def compose_disjoint(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Product of two state vectors with disjoint spin support (their basis
    indices combine by bitwise or)."""
    out = np.zeros_like(v)
    for i in np.nonzero(v)[0]:
        for j in np.nonzero(w)[0]:
            out[i | j] += v[i] * w[j]
    return out


def embed_pair_operator(register: SpinRegister, first: int, second: int,
                        op4: np.ndarray) -> np.ndarray:
    """Lift a two-spin operator (4x4, basis |s2 s1> with ``first`` fastest)
    to the full register, identity on all other spins."""
    op4 = np.asarray(op4, dtype=complex)
    if op4.shape != (4, 4):
        raise ValueError("pair operator must be 4x4")
    dim = register.dim
    full = np.zeros((dim, dim), dtype=complex)
    mask = (1 << first) | (1 << second)

    def pair_bits(idx: int) -> int:
        return ((idx >> first) & 1) | (((idx >> second) & 1) << 1)

    for col in range(dim):
        rest = col & ~mask
        pc = pair_bits(col)
        for pr in range(4):
            val = op4[pr, pc]
            if val == 0:
                continue
            row = rest | ((pr & 1) << first) | (((pr >> 1) & 1) << second)
            full[row, col] += val
    return full


def reduced_pair_density(state: SpinState | DensityState, register: SpinRegister,
                         first: int, second: int) -> np.ndarray:
    """Partial trace down to the (first, second) pair; 4x4, ``first`` fastest."""
    if isinstance(state, SpinState):
        rho = np.outer(state.vector, state.vector.conj())
    else:
        rho = state.matrix
    dim = register.dim
    mask = (1 << first) | (1 << second)
    out = np.zeros((4, 4), dtype=complex)

    def pair_bits(idx: int) -> int:
        return ((idx >> first) & 1) | (((idx >> second) & 1) << 1)

    for i in range(dim):
        rest_i = i & ~mask
        for j in range(dim):
            if (j & ~mask) != rest_i:
                continue
            out[pair_bits(i), pair_bits(j)] += rho[i, j]
    return out
