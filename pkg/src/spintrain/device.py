"""Physical constants, derived clock parameters, donor-site layout, and the
instantaneous Hamiltonian of the switched hyperfine + Zeeman system.

Internal units throughout the package: energy in neV, time in ns, magnetic
field in mT, frequency in GHz.  All of the architecture's constants are then
order one, which keeps float error small.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, LayoutError
from .spinspace import (HermitianOperator, SpinRegister, _pauli_matrix,
                        _heisenberg_matrix)

H_PLANCK = 4135.667696  # neV ns
MU_B = 57.883818        # Bohr magneton, neV/mT

# 31P donor defaults.  The hyperfine strength is the measured ground-state
# contact value; 0.07131 neV/mT is g_n mu_N for the 31P nucleus.
DEFAULT_A = 121.517
DEFAULT_G_E = 2.0023
DEFAULT_GN_MUN = 0.07131


@dataclass(frozen=True)
class PhysicalParams:
    """Device constants plus the derived clock/field working point.

    ``g_e_interface`` is the electron g-factor where the electrons sit while
    their A-gate voltage holds them off the donor (which is where they spend
    nearly all of their time); ``g_e_donor`` applies while a coupling is
    switched on.  The field is calibrated against the interface value because
    the magnetic-period resonance is defined by the long all-off waits.

    ``site_A_scale`` / ``electron_g_donor_scale`` support site- and
    electron-local perturbation studies; ``None`` means uniform.
    """

    A: float = DEFAULT_A
    g_e_donor: float = DEFAULT_G_E
    g_e_interface: float = DEFAULT_G_E
    gn_muN: float = DEFAULT_GN_MUN
    B_mT: float = 0.0
    f_GHz: float = 0.0
    cycles_per_TA: int = 96
    cycles_per_TB: int = 256
    dt_cycles: int = 2
    shuttle_cycles: int = 0
    site_A_scale: tuple[float, ...] | None = None
    electron_g_donor_scale: tuple[float, ...] | None = None

    def __post_init__(self):
        if min(self.A, self.g_e_donor, self.g_e_interface, self.gn_muN) <= 0:
            raise ConfigError("A and g-factors must be positive")
        if self.B_mT <= 0 or self.f_GHz <= 0:
            raise ConfigError("B and f must be positive (use derive_clock)")
        if self.dt_cycles % 2 or self.dt_cycles < 2:
            raise ConfigError("dt_cycles must be even and >= 2")
        if self.dt_cycles >= self.cycles_per_TB:
            raise ConfigError("dt_cycles must be smaller than cycles_per_TB")
        if self.shuttle_cycles < 0:
            raise ConfigError("shuttle_cycles must be >= 0")

    @property
    def h(self) -> float:
        return H_PLANCK

    @property
    def T_A(self) -> float:
        """Hyperfine period h/(4A), ns."""
        return H_PLANCK / (4.0 * self.A)

    @property
    def delta_E_e(self) -> float:
        """Electron Zeeman splitting at the interface g, neV."""
        return self.g_e_interface * MU_B * self.B_mT

    @property
    def delta_E_n(self) -> float:
        return self.gn_muN * self.B_mT

    @property
    def delta_E_r(self) -> float:
        return self.delta_E_e + self.delta_E_n

    @property
    def T_B(self) -> float:
        """Magnetic period h/delta_E_r, ns."""
        return H_PLANCK / self.delta_E_r

    @property
    def ns_per_cycle(self) -> float:
        return 1.0 / self.f_GHz

    def cycles_to_ns(self, cycles: int) -> float:
        return cycles / self.f_GHz

    def cycles_to_us(self, cycles: int) -> float:
        return cycles / self.f_GHz * 1e-3

    @property
    def hyperfine_angle_grid(self) -> float:
        """Smallest compilable hyperfine pulse angle, radians."""
        return 2.0 * np.pi * self.dt_cycles / self.cycles_per_TA

    @property
    def magnetic_angle_grid(self) -> float:
        return 2.0 * np.pi / self.cycles_per_TB

    def replace(self, **kw) -> "PhysicalParams":
        return dataclasses.replace(self, **kw)


def derive_clock(A: float = DEFAULT_A,
                 g_e_donor: float = DEFAULT_G_E,
                 g_e_interface: float | None = None,
                 gn_muN: float = DEFAULT_GN_MUN,
                 cycles_per_TA: int = 96,
                 cycles_per_TB: int = 256,
                 dt_cycles: int = 2,
                 f_GHz: float | None = None,
                 B_mT: float | None = None,
                 shuttle_cycles: int = 0) -> PhysicalParams:
    """Fix the working point: divide T_A into clock cycles, then choose the
    field so one magnetic period is ``cycles_per_TB`` cycles.

    T_A = h/(4A) and f = cycles_per_TA / T_A, unless ``f_GHz`` overrides the
    clock.  The splitting delta_E_r = h f / cycles_per_TB then sets
    B = delta_E_r / (g_e mu_B + g_n mu_N) unless ``B_mT`` overrides it.
    """
    if min(A, g_e_donor, gn_muN) <= 0:
        raise ConfigError("inputs must be positive")
    if g_e_interface is None:
        g_e_interface = g_e_donor
    T_A = H_PLANCK / (4.0 * A)
    f = cycles_per_TA / T_A if f_GHz is None else f_GHz
    if B_mT is None:
        delta_E_r = H_PLANCK * f / cycles_per_TB
        B_mT = delta_E_r / (g_e_interface * MU_B + gn_muN)
    return PhysicalParams(A=A, g_e_donor=g_e_donor, g_e_interface=g_e_interface,
                          gn_muN=gn_muN, B_mT=B_mT, f_GHz=f,
                          cycles_per_TA=cycles_per_TA, cycles_per_TB=cycles_per_TB,
                          dt_cycles=dt_cycles, shuttle_cycles=shuttle_cycles)


# ---------------------------------------------------------------------------
# layout

@dataclass(frozen=True)
class DeviceLayout:
    """Donor sites (one nucleus each) and the electrons' current positions.

    ``active`` holds the (electron, site) couplings currently switched on; a
    coupling is valid only while its electron sits bound at that site.
    """

    n_sites: int
    electron_site: tuple[int, ...]
    electron_bound: tuple[bool, ...] = ()
    active: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        if not self.electron_bound:
            object.__setattr__(self, "electron_bound",
                               tuple(False for _ in self.electron_site))
        if len(self.electron_bound) != self.n_electrons:
            raise LayoutError("bound flags must match electron count")
        if self.n_electrons > self.n_sites:
            raise LayoutError("more electrons than sites")
        seen = set()
        for e, s in enumerate(self.electron_site):
            if not 0 <= s < self.n_sites:
                raise LayoutError(f"electron {e} at invalid site {s}")
            if s in seen:
                raise LayoutError(f"site {s} occupied by two electrons")
            seen.add(s)
        for (e, s) in self.active:
            if not 0 <= e < self.n_electrons:
                raise LayoutError(f"coupling references unknown electron {e}")
            if self.electron_site[e] != s:
                raise LayoutError(f"coupling ({e},{s}) but electron {e} is at "
                                  f"site {self.electron_site[e]}")
            if not self.electron_bound[e]:
                raise LayoutError(f"coupling ({e},{s}) on an unbound electron")

    @property
    def n_electrons(self) -> int:
        return len(self.electron_site)

    def site_occupant(self, site: int) -> int | None:
        for e, s in enumerate(self.electron_site):
            if s == site:
                return e
        return None

    def with_couplings(self, couplings: frozenset[tuple[int, int]]) -> "DeviceLayout":
        """Layout for one bit-train segment: exactly the coupled electrons are
        bound on their donors, everyone else is held at the interface."""
        coupled = {e for (e, _s) in couplings}
        return DeviceLayout(self.n_sites, self.electron_site,
                            tuple(e in coupled for e in range(self.n_electrons)),
                            frozenset(couplings))

    def idle(self) -> "DeviceLayout":
        return self.with_couplings(frozenset())


def home_layout(n_sites: int, n_electrons: int) -> DeviceLayout:
    """Electron ``i`` parked at site ``i``, nothing switched on."""
    return DeviceLayout(n_sites, tuple(range(n_electrons)))


def register_for(layout: DeviceLayout) -> SpinRegister:
    return SpinRegister(n_electrons=layout.n_electrons, n_nuclei=layout.n_sites)


def apply_shuttle(layout: DeviceLayout, electron: int, target_site: int) -> DeviceLayout:
    """Coherent, instantaneous relocation of one electron to a free site."""
    if not 0 <= electron < layout.n_electrons:
        raise LayoutError(f"unknown electron {electron}")
    if not 0 <= target_site < layout.n_sites:
        raise LayoutError(f"unknown site {target_site}")
    if any(e == electron for (e, _s) in layout.active):
        raise LayoutError(f"electron {electron} is coupled; switch off before shuttling")
    occupant = layout.site_occupant(target_site)
    if occupant is not None and occupant != electron:
        raise LayoutError(f"target site {target_site} occupied by electron {occupant}")
    sites = list(layout.electron_site)
    sites[electron] = target_site
    bound = list(layout.electron_bound)
    bound[electron] = False
    return DeviceLayout(layout.n_sites, tuple(sites), tuple(bound), layout.active)


# ---------------------------------------------------------------------------
# Hamiltonian assembly

def _check_register(register: SpinRegister, layout: DeviceLayout) -> None:
    if register.n_electrons != layout.n_electrons or register.n_nuclei != layout.n_sites:
        raise LayoutError("register does not match layout (one nucleus per site)")


def _site_A(params: PhysicalParams, site: int) -> float:
    if params.site_A_scale is None:
        return params.A
    return params.A * params.site_A_scale[site]


def _electron_g(params: PhysicalParams, electron: int, bound: bool) -> float:
    if not bound:
        return params.g_e_interface
    g = params.g_e_donor
    if params.electron_g_donor_scale is not None:
        g *= params.electron_g_donor_scale[electron]
    return g


def zeeman_hamiltonian(register: SpinRegister, params: PhysicalParams,
                       bound: tuple[bool, ...] | None = None) -> np.ndarray:
    """Sum over spins of (delta_E/2) sigma_z, electrons +, nuclei -.

    ``bound`` selects the donor g-factor per electron; default all-interface.
    """
    n = register.n_spins
    if bound is None:
        bound = (False,) * register.n_electrons
    H = np.zeros((register.dim, register.dim), dtype=complex)
    for e in range(register.n_electrons):
        dE = _electron_g(params, e, bound[e]) * MU_B * params.B_mT
        H += (dE / 2.0) * _pauli_matrix(n, register.electron(e), "z")
    for j in range(register.n_nuclei):
        H -= (params.delta_E_n / 2.0) * _pauli_matrix(n, register.nucleus(j), "z")
    return H


def hyperfine_hamiltonian(register: SpinRegister,
                          couplings: frozenset[tuple[int, int]],
                          params: PhysicalParams) -> np.ndarray:
    """A * sigma_e . sigma_n summed over the switched-on couplings only."""
    H = np.zeros((register.dim, register.dim), dtype=complex)
    for (e, s) in couplings:
        H += _site_A(params, s) * _heisenberg_matrix(
            register.n_spins, register.electron(e), register.nucleus(s))
    return H


def build_hamiltonian(register: SpinRegister, layout: DeviceLayout,
                      params: PhysicalParams) -> HermitianOperator:
    """Instantaneous Hamiltonian of the layout: switched hyperfine contacts
    plus the always-on Zeeman term."""
    _check_register(register, layout)
    H = hyperfine_hamiltonian(register, frozenset(layout.active), params)
    H += zeeman_hamiltonian(register, params, layout.electron_bound)
    label = "H[" + ",".join(f"({e},{s})" for (e, s) in sorted(layout.active)) + "]"
    return HermitianOperator(H, label=label)


# ---------------------------------------------------------------------------
# configuration files

_CONFIG_KEYS = {
    "A_neV": float,
    "g_e_donor": float,
    "g_e_interface": float,
    "gn_muN_neV_per_mT": float,
    "cycles_per_TA": int,
    "cycles_per_TB": int,
    "dt_cycles": int,
    "f_GHz": float,
    "B_mT": float,
    "n_sites": int,
    "n_electrons": int,
}

DEFAULT_N_SITES = 3
DEFAULT_N_ELECTRONS = 2


def parse_config(text: str) -> dict:
    """Parse the line-oriented ``key = value`` config format.

    Unknown keys are an error; blank lines and ``#`` comments are skipped.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from exc
    return values


def resolve_config(values: dict) -> tuple[PhysicalParams, DeviceLayout]:
    params = derive_clock(
        A=values.get("A_neV", DEFAULT_A),
        g_e_donor=values.get("g_e_donor", DEFAULT_G_E),
        g_e_interface=values.get("g_e_interface"),
        gn_muN=values.get("gn_muN_neV_per_mT", DEFAULT_GN_MUN),
        cycles_per_TA=values.get("cycles_per_TA", 96),
        cycles_per_TB=values.get("cycles_per_TB", 256),
        dt_cycles=values.get("dt_cycles", 2),
        f_GHz=values.get("f_GHz"),
        B_mT=values.get("B_mT"),
    )
    layout = home_layout(values.get("n_sites", DEFAULT_N_SITES),
                         values.get("n_electrons", DEFAULT_N_ELECTRONS))
    return params, layout


def load_config(path: str | Path) -> tuple[PhysicalParams, DeviceLayout]:
    return resolve_config(parse_config(Path(path).read_text()))


def format_config(params: PhysicalParams, layout: DeviceLayout) -> str:
    """Canonical key = value form of a resolved configuration (for report
    headers; feeding it back through parse_config reproduces the run)."""
    lines = [
        f"A_neV = {params.A!r}",
        f"g_e_donor = {params.g_e_donor!r}",
        f"g_e_interface = {params.g_e_interface!r}",
        f"gn_muN_neV_per_mT = {params.gn_muN!r}",
        f"cycles_per_TA = {params.cycles_per_TA}",
        f"cycles_per_TB = {params.cycles_per_TB}",
        f"dt_cycles = {params.dt_cycles}",
        f"f_GHz = {params.f_GHz!r}",
        f"B_mT = {params.B_mT!r}",
        f"n_sites = {layout.n_sites}",
        f"n_electrons = {layout.n_electrons}",
    ]
    return "\n".join(lines)
