"""Command-line driver: certify, distill, sweep, coincidence.

Built-in state specs (``noisy-ghz:P``, ``noisy-w:P``, ``noise-model:P,Q,R``)
cover the canonical states; anything else is read as a density-matrix JSON
file ``{"n_qubits": k, "re": [[...]], "im": [[...]]}``.

Every run validates its inputs before computing and writes its whole report
atomically at the end, so no partial output file is ever left behind.  With
identical configuration (including seeds) the output files are
byte-identical.  ``SUPERACT_THREADS`` caps the worker count used by sweep
fan-outs; results are collected in grid order regardless.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import certify as cert
from . import coincidence as coin
from . import thresholds as thr
from .distill import distill_cnot, distill_tripartite, localize
from .sdp import SolverConfig, ppt_mixer_witness
from .states import (
    DensityMatrix,
    StateValidationError,
    bell_phi_plus,
    fidelity_with_pure,
    ghz3,
    load_density_matrix,
    noise_model_state,
    noisy_ghz,
    noisy_w,
)


@dataclass(frozen=True)
class RunConfig:
    """Resolved options of one CLI invocation."""

    subcommand: str
    inputs: tuple[str, ...]
    grid: tuple[float, float, int] | None
    tolerance: float | None
    seed: int
    output: str | None
    fmt: str

    def __post_init__(self):
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.fmt!r}")
        if self.grid is not None and self.grid[2] < 1:
            raise ValueError("grid count must be at least 1")
        if self.tolerance is not None and self.tolerance <= 0:
            raise ValueError("tolerances must be positive")


def worker_count() -> int:
    raw = os.environ.get("SUPERACT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _ordered_map(fn, items):
    """Apply fn across items, optionally threaded, preserving order."""
    workers = worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def parse_state_spec(spec: str) -> DensityMatrix:
    """Resolve a built-in state spec or a density-matrix JSON file path."""
    if ":" in spec:
        name, _, argstr = spec.partition(":")
        args = [float(tok) for tok in argstr.split(",") if tok]
        if name == "noisy-ghz" and len(args) == 1:
            return noisy_ghz(args[0])
        if name == "noisy-w" and len(args) == 1:
            return noisy_w(args[0])
        if name == "noise-model" and len(args) == 3:
            return noise_model_state(*args)
        raise ValueError(f"unrecognized state spec {spec!r}")
    return load_density_matrix(spec)


def _atomic_write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".superact-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _flatten(doc, prefix=""):
    flat = {}
    for key, value in doc.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        elif isinstance(value, (list, tuple)):
            flat[name] = ";".join(str(v) for v in value)
        else:
            flat[name] = value
    return flat


def _render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    flat = _flatten(doc)
    keys = list(flat)
    fmt_val = lambda v: format(v, ".17g") if isinstance(v, float) else str(v)
    return (",".join(keys) + "\n"
            + ",".join(fmt_val(flat[k]) for k in keys) + "\n")


# ---------------------------------------------------------------------------
# subcommands

def cmd_certify(config: RunConfig, full_certificates: bool = False) -> str:
    rho = parse_state_spec(config.inputs[0])
    report: dict = {"input": config.inputs[0]}

    view = cert.x_shape_view(rho)
    report["x_shape_leakage"] = view.max_off_pattern_magnitude
    try:
        report["gme_concurrence"] = cert.gme_concurrence_x(rho)
    except cert.NotXShapedError:
        report["gme_concurrence"] = None

    report["ghz_witness_expectation"] = cert.ghz_witness_expectation(rho)
    report["w_witness_expectation"] = cert.w_witness_expectation(rho)

    solver = SolverConfig() if config.tolerance is None else SolverConfig(
        feasibility_tol=config.tolerance)
    witness = ppt_mixer_witness(rho, solver)
    report["ppt_mixer"] = {
        "optimal_value": witness.optimal_value,
        "certified_sign": witness.certified_sign,
        "converged": witness.converged,
        "iterations": witness.iterations,
        "max_residual": max(witness.residuals),
    }

    sle = {}
    for label, quantifier in (("negativity", cert.QUANTIFIER_NEGATIVITY),
                              ("min_eigenvalue", cert.QUANTIFIER_MIN_EIGENVALUE)):
        result = cert.sle_quantify(rho, quantifier=quantifier)
        if full_certificates:
            sle[label] = cert.sle_result_to_json_dict(result)
        else:
            sle[label] = {"value": result.value, "theta": result.theta,
                          "phi": result.phi}
    report["sle"] = sle
    if full_certificates:
        from .sdp import witness_result_to_json_dict

        report["ppt_mixer"] = witness_result_to_json_dict(witness)
    return _render(report, config.fmt)


def cmd_distill(config: RunConfig, protocol: str, localize_spec: str | None,
                recertify: bool) -> str:
    specs = list(config.inputs)
    if len(specs) == 1:
        specs = specs * 2
    if len(specs) != 2:
        raise ValueError("distill takes one or two input states")
    rho1, rho2 = parse_state_spec(specs[0]), parse_state_spec(specs[1])
    if protocol == "pbs":
        outcome = distill_tripartite(rho1, rho2)
    elif protocol == "cnot":
        outcome = distill_cnot(rho1, rho2)
    else:
        raise ValueError(f"unknown protocol {protocol!r}")

    report: dict = {
        "protocol": protocol,
        "inputs": specs,
        "success_probability": outcome.success_probability,
        "branch_weights": {label: w for label, w in outcome.parity_branch_weights},
    }
    if outcome.state.n_qubits == 3:
        report["fidelity_ghz"] = fidelity_with_pure(outcome.state, ghz3())
        report["w_witness_expectation"] = cert.w_witness_expectation(outcome.state)

    if localize_spec is not None:
        basis, _, qubit = localize_spec.partition(":")
        state, weight = localize(outcome.state, int(qubit), basis, 0)
        report["localized"] = {
            "basis": basis,
            "qubit": int(qubit),
            "outcome": 0,
            "weight": weight,
            "fidelity_epr": fidelity_with_pure(state, bell_phi_plus()),
        }
    if recertify:
        witness = ppt_mixer_witness(outcome.state)
        report["recertify"] = {
            "gme_concurrence": cert.gme_concurrence_x(outcome.state)
            if cert.x_shape_view(outcome.state).max_off_pattern_magnitude <= 1e-8
            else None,
            "ppt_mixer_value": witness.optimal_value,
            "ppt_mixer_sign": witness.certified_sign,
        }
    return _render(report, config.fmt)


def _parse_grid(spec: str) -> tuple[float, float, int]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid spec {spec!r} is not START:STOP:COUNT")
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise ValueError("grid count must be at least 1")
    return start, stop, count


def _grid_values(grid: tuple[float, float, int]) -> np.ndarray:
    start, stop, count = grid
    if count == 1:
        return np.array([start])
    return np.linspace(start, stop, count)


def cmd_sweep(config: RunConfig, mode: str, names: list[str] | None) -> str:
    if mode == "curves":
        return thr.fidelity_curves_csv(_grid_values(config.grid))
    if mode == "certify":
        values = _grid_values(config.grid)

        def one(p: float) -> str:
            rho = noisy_ghz(p)
            row = (p,
                   cert.gme_concurrence_x(rho),
                   cert.ghz_witness_expectation(rho),
                   cert.sle_quantify(rho).value)
            return ",".join(format(v, ".17g") for v in row)

        rows = _ordered_map(one, list(values))
        return ("p,gme_concurrence,ghz_witness_expectation,sle_negativity\n"
                + "\n".join(rows) + "\n")
    if mode == "thresholds":
        wanted = names or ["all"]
        if wanted == ["all"]:
            wanted = list(thr.DEFAULT_RANGES)
        unknown = [n for n in wanted if n not in thr.DEFAULT_RANGES]
        if unknown:
            raise ValueError(f"unknown threshold properties: {unknown}")

        def one(name: str) -> thr.ThresholdReport:
            return thr.find_threshold(name, tolerance=config.tolerance)

        reports = _ordered_map(one, wanted)
        return thr.threshold_reports_csv(reports)
    raise ValueError(f"unknown sweep mode {mode!r}")


def cmd_coincidence(config: RunConfig, schedule_p: float | None,
                    sample_args: dict | None) -> str:
    if schedule_p is not None:
        return coin.preparation_schedule(schedule_p).to_csv()
    if sample_args is not None:
        missing = [k for k in ("setting", "shots") if k not in sample_args]
        if missing:
            raise ValueError(f"--sample needs {missing} as KEY=VALUE tokens")
        setting = sample_args["setting"]
        shots = int(sample_args["shots"])
        seed = int(sample_args.get("seed", config.seed))
        rho = parse_state_spec(sample_args.get("state", "noisy-ghz:1.0"))
        hist = coin.sample_counts(rho, setting, shots, seed)
        doc = coin.histogram_to_json_dict(setting, shots, seed, hist)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    return coin.enumerate_same_order_events().to_csv()


# ---------------------------------------------------------------------------
# argument parsing

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superact",
        description="Entanglement distillation and certification engine")
    parser.add_argument("--config", help="JSON file with default options")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_cert = sub.add_parser("certify", help="run all certifiers on one state")
    p_cert.add_argument("--input",
                        help="state spec or density-matrix JSON path")
    p_cert.add_argument("--full-certificates", action="store_true",
                        dest="full_certificates",
                        help="embed complete witness and localized-state "
                             "matrices in the report")

    p_dist = sub.add_parser("distill", help="distill two copies of a state")
    p_dist.add_argument("--protocol", choices=("pbs", "cnot"), default=None)
    p_dist.add_argument("--input", action="append",
                        help="state spec; repeat for two different inputs")
    p_dist.add_argument("--localize", metavar="BASIS:QUBIT",
                        help="also localize the output, e.g. x:2")
    p_dist.add_argument("--recertify", action="store_true",
                        help="re-run GME certifiers on the output")

    p_sweep = sub.add_parser("sweep", help="tabulate curves or thresholds")
    group = p_sweep.add_mutually_exclusive_group(required=True)
    group.add_argument("--curves", metavar="START:STOP:COUNT")
    group.add_argument("--certify", metavar="START:STOP:COUNT")
    group.add_argument("--thresholds", metavar="NAMES",
                       help="'all' or comma-separated property names")
    p_sweep.add_argument("--tolerance", type=float)

    p_coin = sub.add_parser("coincidence",
                            help="photonic network tables and sampling")
    group = p_coin.add_mutually_exclusive_group()
    group.add_argument("--schedule", type=float, metavar="P",
                       help="emit the preparation schedule for parameter P")
    group.add_argument("--sample", nargs="+", metavar="KEY=VALUE",
                       help="sample counts, e.g. setting=zzz shots=1000 seed=7")

    for p in (p_cert, p_dist, p_sweep, p_coin):
        p.add_argument("--output", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), dest="fmt")
        p.add_argument("--seed", type=int)
    return parser


def _merge_config(args: argparse.Namespace) -> dict:
    file_options = {}
    if args.config:
        with open(args.config) as fh:
            file_options = json.load(fh)
        if not isinstance(file_options, dict):
            raise ValueError("config file must hold a JSON object")
    merged = dict(file_options)
    for key, value in vars(args).items():
        if key != "config" and value is not None:
            merged[key] = value
    return merged


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        options = _merge_config(args)
        sub = options["subcommand"]
        inputs = options.get("input") or []
        if isinstance(inputs, str):
            inputs = [inputs]
        if sub in ("certify", "distill") and not inputs:
            raise ValueError(f"{sub} requires --input (flag or config file)")
        grid_spec = options.get("curves") or options.get("certify")
        config = RunConfig(
            subcommand=sub,
            inputs=tuple(inputs),
            grid=_parse_grid(grid_spec) if grid_spec else None,
            tolerance=options.get("tolerance"),
            seed=int(options.get("seed", 0)),
            output=options.get("output"),
            fmt=options.get("fmt") or ("csv" if sub in ("sweep", "coincidence")
                                       else "json"),
        )
        if sub == "certify":
            text = cmd_certify(config, bool(options.get("full_certificates")))
        elif sub == "distill":
            text = cmd_distill(config, options.get("protocol", "pbs"),
                               options.get("localize"),
                               bool(options.get("recertify")))
        elif sub == "sweep":
            if options.get("curves"):
                text = cmd_sweep(config, "curves", None)
            elif options.get("certify"):
                text = cmd_sweep(config, "certify", None)
            else:
                names = [n for n in str(options["thresholds"]).split(",") if n]
                text = cmd_sweep(config, "thresholds", names)
        elif sub == "coincidence":
            sample = None
            if options.get("sample"):
                tokens = options["sample"]
                if any("=" not in token for token in tokens):
                    raise ValueError("--sample tokens must look like KEY=VALUE")
                sample = dict(token.split("=", 1) for token in tokens)
            text = cmd_coincidence(config, options.get("schedule"), sample)
        else:
            raise ValueError(f"unknown subcommand {sub!r}")
    except (ValueError, OSError, StateValidationError, json.JSONDecodeError) as exc:
        print(f"superact: error: {exc}", file=sys.stderr)
        return 1
    try:
        _atomic_write(config.output, text)
    except BrokenPipeError:
        return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
