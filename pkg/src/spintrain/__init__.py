"""spintrain: exact simulator and bit-train compiler for digitally
controlled electron-donor spin-pair qubits."""

from .analysis import (ConvergenceResult, ErrorReport, SweepResult,
                       duration_report, gate_error, local_invariants,
                       logical_basis_states, sector_aligned_error,
                       sensitivity_threshold, sweep_csv, trotter_convergence)
from .device import (DeviceLayout, PhysicalParams, apply_shuttle,
                     build_hamiltonian, derive_clock, home_layout, load_config,
                     register_for)
from .errors import (CompileError, ConfigError, LayoutError, TrainFormatError,
                     ValidationError)
from .evolution import (BitTrain, Segment, ShuttleEvent, UnitaryOperator,
                        exact_propagator, execute, ideal_pulse, read_train,
                        resonant_step_train, train_unitary, write_train)
from .gates import (EulerDecomposition, LogicalQubit, Pulse, PulseSeq, adjoint,
                    cnot, compile, entangler, euler_decompose, fast_adjoint,
                    ideal_sequence_unitary, swap_en)
from .protocols import (CascadeReport, MeasurementOutcome, bloch_fidelity,
                        cascade_layout, encode_logical, init_cascade,
                        measure_singlet_triplet, memory_transfer,
                        mixed_pair_input, readout_logical,
                        sample_singlet_triplet)
from .spinspace import (DensityState, HermitianOperator, SpinRegister,
                        SpinState, basis_state, embed_pauli, heisenberg,
                        jz_sector_projector, jz_sectors, jz_values,
                        singlet_state, total_sigma_z, triplet0_state)

__version__ = "0.1.0"
