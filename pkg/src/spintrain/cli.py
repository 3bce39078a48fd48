"""Command-line entry point.

Commands: gate (compile a library gate to a bit-train file), run (evolve a
state through a train file), sweep (parameter-sensitivity CSV + threshold),
init (initialization cascade), check (the acceptance suite).

Exit codes: 0 success, 1 usage error, 2 validation error, 3 acceptance-check
failure.  Identical configuration and seed give bit-identical reports.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import acceptance, analysis, device, evolution, gates, protocols
from .errors import ValidationError
from .spinspace import SpinState, compose_disjoint, jz_sectors, singlet_state, triplet0_state

GATE_NAMES = ("swap_en", "entangler", "cnot", "rot")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors -> exit code 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="spintrain",
                description="simulator and bit-train compiler for "
                            "electron-donor spin-pair qubits")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--override", action="append", default=[],
                   metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--seed", type=int, default=0, help="root RNG seed")
    p.add_argument("--out", default=".", help="output directory")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gate", help="compile a library gate to a bit-train file")
    g.add_argument("name", choices=GATE_NAMES)
    g.add_argument("--merge", action="store_true",
                   help="coalesce adjacent all-off segments (same total cycles)")
    g.add_argument("--dt", type=int, help="override dt_cycles")
    g.add_argument("--matrix", type=float, nargs=8, metavar="F",
                   help="rot target: row-major re,im pairs of a 2x2 unitary")

    r = sub.add_parser("run", help="evolve a state through a bit-train file")
    r.add_argument("train", help="bit-train file")
    r.add_argument("--state", default="1,0",
                   help="per-qubit logical amplitudes 'a,b[;a,b]' (complex ok)")
    r.add_argument("--ideal", choices=GATE_NAMES,
                   help="also report the gate error against this ideal gate")

    s = sub.add_parser("sweep", help="sensitivity sweep of a compiled gate")
    s.add_argument("gate", choices=("swap_en", "entangler", "cnot"))
    s.add_argument("parameter", choices=analysis.SWEEP_PARAMETERS)
    s.add_argument("budget", type=float)

    i = sub.add_parser("init", help="initialization cascade report")
    i.add_argument("--rounds", type=int, default=2)
    i.add_argument("--trajectories", type=int, default=0)

    sub.add_parser("check", help="run the acceptance suite")
    return p


def _load(args) -> tuple[device.PhysicalParams, device.DeviceLayout]:
    values = device.parse_config(Path(args.config).read_text()) if args.config else {}
    for item in args.override:
        if "=" not in item:
            raise ValidationError(f"--override needs KEY=VALUE, got {item!r}")
        extra = device.parse_config(item)
        values.update(extra)
    if getattr(args, "dt", None):
        values["dt_cycles"] = args.dt
    return device.resolve_config(values)


def _header(params, layout, seed) -> str:
    cfg = device.format_config(params, layout)
    lines = [f"# {line}" for line in cfg.splitlines()]
    lines.append(f"# seed = {seed}")
    return "\n".join(lines)


def _qubits(layout) -> list[gates.LogicalQubit]:
    return [gates.LogicalQubit(e, layout.electron_site[e])
            for e in range(layout.n_electrons)]


def _gate_seq(name: str, layout, params, matrix=None) -> gates.PulseSeq:
    qs = _qubits(layout)
    if name == "swap_en":
        return gates.swap_en(qs[0], layout)
    if name in ("entangler", "cnot"):
        if len(qs) < 2 or layout.n_sites < 3:
            raise ValidationError(f"{name} needs 2 electrons and a spare site")
        fn = gates.entangler if name == "entangler" else gates.cnot
        return fn(qs[0], qs[1], layout)
    if name == "rot":
        if matrix is None:
            raise ValidationError("rot needs --matrix with 8 floats")
        m = np.array([[matrix[0] + 1j * matrix[1], matrix[2] + 1j * matrix[3]],
                      [matrix[4] + 1j * matrix[5], matrix[6] + 1j * matrix[7]]])
        det = np.linalg.det(m)
        m = m / np.sqrt(det)  # caller-normalized phase, be forgiving about scale
        dec = gates.euler_decompose(m, qs[0], layout, params)
        print(f"# rot quantization residual = {dec.residual:.3e}")
        return dec.quantized
    raise ValidationError(f"unknown gate {name!r}")


def cmd_gate(args, params, layout) -> int:
    seq = _gate_seq(args.name, layout, params, getattr(args, "matrix", None))
    train = gates.compile(seq, params, merge=args.merge)
    cycles, us = analysis.duration_report(train, params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.name}.train"
    evolution.write_train(train, layout, path)
    print(_header(params, layout, args.seed))
    print(f"gate {args.name}: wrote {path}")
    print(f"cycles {cycles}")
    print(f"duration_us {us!r}")
    return 0


def _parse_state(spec: str, layout) -> SpinState:
    register = device.register_for(layout)
    parts = spec.split(";")
    if len(parts) > layout.n_electrons:
        raise ValidationError(f"state spec has {len(parts)} qubits but the "
                              f"layout holds {layout.n_electrons}")
    v = np.zeros(register.dim, dtype=complex)
    v[0] = 1.0
    for k in range(layout.n_electrons):
        part = parts[k] if k < len(parts) else "1,0"
        try:
            a, b = (complex(tok) for tok in part.split(","))
        except ValueError:
            raise ValidationError(f"bad amplitude pair {part!r}")
        norm = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
        if norm == 0:
            raise ValidationError("state amplitudes cannot both be zero")
        a, b = a / norm, b / norm
        e = register.electron(k)
        n = register.nucleus(layout.electron_site[k])
        pair = (a * singlet_state(register, e, n).vector
                + b * triplet0_state(register, e, n).vector)
        v = compose_disjoint(v, pair)
    return SpinState(v)


def cmd_run(args, params, layout) -> int:
    train = evolution.read_train(args.train, layout)
    state = _parse_state(args.state, layout)
    final, cycles = evolution.execute(state, train, layout, params)
    register = device.register_for(layout)

    print(_header(params, layout, args.seed))
    print(f"cycles {cycles}")
    print(f"duration_us {params.cycles_to_us(cycles)!r}")
    for k in range(layout.n_electrons):
        e = register.electron(k)
        n = register.nucleus(layout.electron_site[k])
        a, b, leak = protocols.readout_logical(final, register, (e, n))
        print(f"qubit{k} alpha {a!r}")
        print(f"qubit{k} beta {b!r}")
        print(f"qubit{k} leakage {leak!r}")
    for jz, proj in jz_sectors(register):
        w = float((final.vector.conj() @ proj.matrix @ final.vector).real)
        if w > 1e-12:
            print(f"sector jz={jz:+.1f} weight {w!r}")

    if args.ideal:
        seq = _gate_seq(args.ideal, layout, params)
        ideal = gates.ideal_sequence_unitary(seq, params)
        actual = evolution.train_unitary(train, layout, params)
        basis = analysis.logical_basis_states(register, _qubits(layout))
        rep = analysis.gate_error(actual, ideal, basis,
                                  duration_cycles=cycles, params=params)
        print(f"avg_error {rep.avg_error!r}")
        print(f"worst_error {rep.worst_error!r}")
        print(f"leakage {rep.leakage!r}")
    return 0


def cmd_sweep(args, params, layout) -> int:
    seq = _gate_seq(args.gate, layout, params)
    qs = _qubits(layout) if args.gate != "swap_en" else [_qubits(layout)[0]]
    result = analysis.sensitivity_threshold(seq, args.parameter, args.budget,
                                            params, qs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"sweep_{args.gate}_{args.parameter}.csv"
    header = _header(params, layout, args.seed)
    csv_path.write_text(header + "\n" + analysis.sweep_csv(result))
    print(header)
    print(f"nominal_error {result.nominal_error!r}")
    print(f"wrote {csv_path}")
    print(f"THRESHOLD {args.parameter} {result.threshold:.2g}")
    return 0


def cmd_init(args, params, layout) -> int:
    cascade_layout = protocols.cascade_layout(max(layout.n_sites, 3))
    report = protocols.init_cascade(protocols.mixed_pair_input(cascade_layout),
                                    args.rounds, params, cascade_layout,
                                    trajectories=args.trajectories,
                                    seed=args.seed)
    print(_header(params, cascade_layout, args.seed))
    print(f"rounds {report.rounds}")
    print(f"yield_zero {report.yield_zero!r}")
    print(f"discarded {report.discarded!r}")
    print(f"residual {report.residual!r}")
    for entry in report.log:
        print(f"round {entry['round']} p_singlet {entry['p_singlet']!r} "
              f"cumulative {entry['cumulative_yield']!r}")
    if args.trajectories:
        print(f"mc_yield {report.mc_yield!r} (n={report.mc_trajectories}, "
              f"3sigma={3 * report.mc_sigma:.4f})")
    return 0


def cmd_check(args, params, layout) -> int:
    results = acceptance.run_all()
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] criterion {r.index}: {r.name} -- {r.detail}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 3 if failed else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        params, layout = _load(args)
        handler = {"gate": cmd_gate, "run": cmd_run, "sweep": cmd_sweep,
                   "init": cmd_init, "check": cmd_check}[args.command]
        return handler(args, params, layout)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
