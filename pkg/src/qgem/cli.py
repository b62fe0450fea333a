"""Command-line entry point: ``qgem {generate,calibrate,mitigate,run,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import calibration as cal
from .circuits import bits_to_index, load_circuit, save_circuit, strip_gates
from .harness import (
    ExperimentConfig,
    SimulatorBackend,
    derive_seed,
    emit_report,
    generate_circuits,
    load_records,
    render_report,
    run_experiment,
    save_records,
)
from .mitigation import SolverConfig, solve
from .simulator import Distribution, NoiseModel

log = logging.getLogger("qgem")


def _read_json(path: str) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def cmd_generate(args) -> int:
    cfg = ExperimentConfig.from_toml(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, c in enumerate(generate_circuits(cfg)):
        save_circuit(c, out / f"circuit_{i:04d}.json")
    log.info("wrote %d circuits to %s", cfg.num_circuits, out)
    return 0


def cmd_calibrate(args) -> int:
    circuit = load_circuit(args.circuit)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    method = args.method.lower()
    if method == "qem":
        sets = {"qem": cal.qem_calibration_circuits(circuit.num_qubits)}
    elif method == "gem":
        first, second = cal.gem_calibration_circuits(circuit)
        sets = {"gem_half1": first, "gem_half2": second}
    else:
        stripped = strip_gates(circuit, args.strip)
        sets = {"direct": cal.direct_calibration_circuits(stripped)}
    for name, circuits in sets.items():
        for k, c in enumerate(circuits):
            save_circuit(c, out / f"{name}_{k:04d}.json")
    if args.noise is None:
        return 0

    backend = SimulatorBackend(NoiseModel.from_dict(_read_json(args.noise)))
    matrices = {
        name: [
            backend.run(c, args.shots, derive_seed(args.seed, s, k))
            for k, c in enumerate(circuits)
        ]
        for s, (name, circuits) in enumerate(sets.items())
    }
    if method == "qem":
        matrix = cal.build_matrix(matrices["qem"], cal.MatrixKind.QEM)
    elif method == "gem":
        matrix = cal.combine(
            cal.build_matrix(matrices["gem_half1"], cal.MatrixKind.GEM_HALF1),
            cal.build_matrix(matrices["gem_half2"], cal.MatrixKind.GEM_HALF2),
        )
    else:
        outputs = cal.ideal_output_states(strip_gates(circuit, args.strip))
        matrix = cal.build_direct_matrix(matrices["direct"], outputs)
    matrix.save(out / "matrix.json")
    log.info("calibration matrix written to %s", out / "matrix.json")
    return 0


def _load_observed(path: str, num_qubits: int) -> Distribution:
    """A distribution JSON, or a ``{"counts": {"01": 812, ...}}`` histogram."""
    d = _read_json(path)
    if "counts" not in d:
        return Distribution.from_dict(d)
    hist = np.zeros(2**num_qubits)
    for bits, n in d["counts"].items():
        if len(bits) != num_qubits:
            raise ValueError(f"{path}: outcome {bits!r} does not match {num_qubits} qubits")
        hist[bits_to_index(bits)] += n
    if hist.sum() <= 0:
        raise ValueError(f"{path}: no shots recorded")
    return Distribution(hist / hist.sum(), num_qubits)


def cmd_mitigate(args) -> int:
    matrix = cal.CalibrationMatrix.load(args.matrix)
    counts = _load_observed(args.counts, matrix.num_qubits)
    cfg = SolverConfig(restarts=args.restarts, seed=args.seed)
    result = solve(matrix, counts, cfg)
    if not result.converged:
        log.warning("solver stopped after %d iterations without converging", result.iterations)
    text = json.dumps(result.distribution.to_dict()) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_run(args) -> int:
    cfg = ExperimentConfig.from_toml(args.config)
    records = run_experiment(cfg)
    save_records(records, args.out)
    log.info("wrote %d records to %s", len(records), args.out)
    if args.report:
        emit_report(records, args.report, args.format)
    return 0


def cmd_report(args) -> int:
    records = load_records(args.records)
    if args.out:
        emit_report(records, args.out, args.format)
    else:
        sys.stdout.write(render_report(records, args.format))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgem", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write random circuits from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("calibrate", help="write calibration circuits (and a matrix if --noise)")
    p.add_argument("--circuit", required=True)
    p.add_argument("--method", choices=["gem", "qem", "direct"], default="gem")
    p.add_argument("--strip", nargs="*", default=["Rx", "Ry"], help="gates dropped for direct")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--noise", help="noise model JSON; executes the circuits on the simulator")
    p.add_argument("--shots", type=int, default=8192)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("mitigate", help="mitigate measured frequencies with a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--counts", required=True, help="distribution JSON or bitstring histogram")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mitigate)

    p = sub.add_parser("run", help="run a full experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="records JSON")
    p.add_argument("--report")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="render records as CSV or JSON")
    p.add_argument("--records", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


def entry() -> None:
    """Console-script wrapper: report bad input on stderr instead of a traceback."""
    try:
        code = main()
    except (ValueError, OSError, KeyError) as exc:
        sys.stderr.write(f"qgem: error: {exc}\n")
        code = 1
    raise SystemExit(code)


if __name__ == "__main__":
    entry()
