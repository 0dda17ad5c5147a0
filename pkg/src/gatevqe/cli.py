"""Command-line pipeline: schedule -> graph -> Hamiltonian -> VQE / oracle.

Exit codes: 0 success, 2 input error, 3 resource error, 4 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import secrets
import sys
import time
from pathlib import Path

from . import __version__
from .errors import InputError, OptimizerAbort, ResourceError
from .hamiltonian import (
    Encoding,
    EncodingKind,
    IsingHamiltonian,
    build_hamiltonian,
    default_binary_penalty,
    default_onehot_penalty,
    resource_report,
)
from .optim import OptimizerConfig
from .oracle import (
    DEFAULT_ORACLE_CAP,
    brute_force_ground_state,
    coloring_dumps,
    greedy_coloring,
    is_colorable,
    verify_coloring,
)
from .schedule import ConflictGraph, build_conflict_graph, export_dot, graph_dumps, parse_schedule
from .simulator import build_ansatz, logical_depth, max_qubits
from .vqe import VqeConfig, vqe_solve

log = logging.getLogger("gatevqe")

EXIT_OK, EXIT_INPUT, EXIT_RESOURCE, EXIT_INTERNAL = 0, 2, 3, 4


class ResourceExit(Exception):
    """Cap exceeded; carries the report printed before exiting with code 3."""

    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {path}")
    return p.read_text(encoding="utf-8")


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_graph(path: str, gates: int | None, buffer: int) -> tuple[ConflictGraph, int | None]:
    """Graph plus the gate count the input carries (schedules only)."""
    text = _read_text(path)
    if path.lower().endswith(".csv"):
        try:
            sched = parse_schedule(text, gates)
        except InputError as exc:
            raise InputError(f"{path}: {exc}") from None
        return build_conflict_graph(sched, buffer), sched.gate_count
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    return ConflictGraph.from_json(data), gates


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(out: Path, name: str, text: str) -> str:
    p = out / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def _manifest(args, argv: list[str], inputs: list[str], outputs: list[str], started: float, seed=None) -> dict:
    return {
        "command": args.command,
        "argv": argv,
        "config": {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)},
        "input_sha256": {p: _sha256(p) for p in inputs},
        "seed": seed,
        "tool_version": __version__,
        "duration_s": round(time.perf_counter() - started, 6),
        "outputs": outputs,
    }


def _emit(args, summary: dict, text: str) -> None:
    if args.json:
        sys.stdout.write(_dump(summary))
    else:
        sys.stdout.write(text.rstrip("\n") + "\n")


def _penalty(enc: Encoding, graph: ConflictGraph, penalty: float | None) -> float:
    if penalty is not None:
        return penalty
    if enc.kind is EncodingKind.ONE_HOT:
        return default_onehot_penalty(graph)
    return default_binary_penalty(enc.n_colors)


def _resource_summary(graph: ConflictGraph, k: int) -> dict:
    rows = {}
    for kind in EncodingKind:
        if kind is EncodingKind.BINARY and k < 2:
            continue
        rows[kind.value] = Encoding(kind, graph.n, k).n_qubits
    return rows


def cmd_graph(args) -> int:
    graph, k = _load_graph(args.input, args.gates, args.buffer)
    out = _outdir(args.output)
    outputs = [_write(out, "graph.json", graph_dumps(graph))]
    colors = None
    if args.color:
        colors, used = greedy_coloring(graph)
        outputs.append(_write(out, "coloring.json", coloring_dumps(colors)))
    outputs.append(_write(out, "graph.dot", export_dot(graph, colors)))
    summary = {"n": graph.n, "edges": len(graph.edges), "gates": k, "outputs": outputs}
    text = f"graph: {graph.n} nodes, {len(graph.edges)} edges -> {out}"
    if colors is not None:
        summary["colors_used"] = used
        summary["proper"] = verify_coloring(graph, colors, used)
        text += f"\nDSATUR coloring uses {used} colors"
    _emit(args, summary, text)
    return EXIT_OK


def cmd_hamiltonian(args) -> int:
    graph, k = _load_graph(args.input, args.gates, args.buffer)
    k = args.k if args.k is not None else k
    if k is None:
        raise InputError("number of colors unknown: pass --k")
    enc = Encoding(EncodingKind(args.encoding), graph.n, k)
    h = build_hamiltonian(graph, enc, _penalty(enc, graph, args.penalty))
    out = _outdir(args.output)
    path = _write(out, "hamiltonian.json", h.dumps())
    rep = resource_report(enc, h)
    _emit(args, {**rep, "output": path}, f"{enc.kind.value}: {rep['qubits']} qubits, {rep['terms']} terms -> {path}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    text = _read_text(args.input)
    data = None
    if args.input.lower().endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.input}: invalid JSON ({exc})") from None
    if data is not None and "n_qubits" in data:
        h = IsingHamiltonian.from_json(data)
    else:
        graph, k = _load_graph(args.input, args.gates, args.buffer)
        k = args.k if args.k is not None else k
        if k is None:
            raise InputError("number of colors unknown: pass --k")
        enc = Encoding(EncodingKind(args.encoding), graph.n, k)
        h = build_hamiltonian(graph, enc, _penalty(enc, graph, args.penalty))
    gt = brute_force_ground_state(h, cap=args.oracle_cap)
    out = _outdir(args.output)
    path = _write(out, "groundtruth.json", gt.dumps())
    shown = ", ".join(gt.ground_states[:8]) + (" ..." if gt.n_ground_states > 8 else "")
    _emit(
        args,
        {**gt.to_json(), "output": path},
        f"ground energy {gt.ground_energy:g} ({gt.n_ground_states} states: {shown}) -> {path}",
    )
    return EXIT_OK


def cmd_solve(args) -> int:
    started = time.perf_counter()
    if args.seed is None:
        args.seed = secrets.randbits(32)
    seed = args.seed
    graph, k = _load_graph(args.input, args.gates, args.buffer)
    k = args.k if args.k is not None else k
    if k is None:
        raise InputError("number of colors unknown: pass --k or use a schedule with a gates directive")
    enc = Encoding(EncodingKind(args.encoding), graph.n, k)
    cap = max_qubits()
    if enc.n_qubits > cap:
        report = {
            "error": "qubit cap exceeded",
            "encoding": enc.kind.value,
            "n": graph.n,
            "k": k,
            "qubits": enc.n_qubits,
            "cap": cap,
            "qubits_by_encoding": _resource_summary(graph, k),
        }
        hint = ""
        if enc.kind is EncodingKind.ONE_HOT and report["qubits_by_encoding"].get("binary", cap + 1) <= cap:
            hint = " Try --encoding binary."
        raise ResourceExit(f"{enc.n_qubits} qubits needed, statevector cap is {cap}.{hint}", report)

    penalty = _penalty(enc, graph, args.penalty)
    h = build_hamiltonian(graph, enc, penalty)
    ground = None
    if h.n_qubits <= args.oracle_cap:
        ground = brute_force_ground_state(h, cap=args.oracle_cap)
    opt = OptimizerConfig(max_evals=args.max_evals, rho_begin=args.rho_begin, rho_end=args.rho_end)
    cfg = VqeConfig(
        layers=args.layers,
        optimizer=args.optimizer,
        opt=opt,
        mode=args.mode,
        shots=args.shots,
        seed=seed,
        restarts=args.restarts,
        readout_flip=args.readout_flip,
    )
    res = vqe_solve(h, enc, cfg, ground)

    colors = list(res.decoded.color_of)
    proper = verify_coloring(graph, res.decoded, k)
    labels = graph.labels or tuple(str(i) for i in range(graph.n))
    result = {
        "tool_version": __version__,
        "input_sha256": _sha256(args.input),
        "config": {**cfg.to_json(), "encoding": enc.kind.value, "k": k, "penalty": penalty, "buffer": args.buffer},
        "problem": {**resource_report(enc, h), "edges": len(graph.edges)},
        "vqe": res.to_json(),
        "assignment": {labels[i]: (c if c >= 0 else None) for i, c in enumerate(colors)},
        "valid": res.decoded.valid,
        "proper_coloring": proper,
        "oracle": None
        if ground is None
        else {
            "ground_energy": ground.ground_energy,
            "n_ground_states": ground.n_ground_states,
            "zero_energy_exists": ground.ground_energy == 0.0,
            "k_colorable": ground.ground_energy == 0.0 if enc.kind is EncodingKind.BINARY else None,
        },
    }
    if enc.kind is EncodingKind.ONE_HOT and graph.n <= 12 and result["oracle"] is not None:
        result["oracle"]["k_colorable"] = is_colorable(graph, k)

    out = _outdir(args.output)
    outputs = [
        _write(out, "result.json", _dump(result)),
        _write(out, "trace.csv", res.trace.to_csv()),
        _write(out, "histogram.json", res.final_histogram.dumps()),
    ]
    argv = _replay_argv(args, seed)
    manifest = _manifest(args, argv, [args.input], outputs, started, seed)
    _write(out, "manifest.json", _dump(manifest))

    gap = res.ground_truth_gap
    text = (
        f"{enc.kind.value} encoding, {h.n_qubits} qubits, seed {seed}\n"
        f"best energy {res.best_energy:.6g}"
        + ("" if gap is None else f" (oracle gap {gap:.3g})")
        + f"\nbitstring {res.best_bitstring} -> colors {colors} "
        + ("proper" if proper else ("invalid" if not res.decoded.valid else "not proper"))
        + f"\nwrote {out}"
    )
    _emit(args, {"result": result, "outputs": outputs}, text)
    return EXIT_OK


def _complete_graph(n: int) -> ConflictGraph:
    return ConflictGraph(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))


def compare_rows(graph: ConflictGraph, k: int, layers: int) -> dict:
    """Qubits, term counts and logical ansatz depth for both encodings."""
    rows = {}
    for kind in (EncodingKind.ONE_HOT, EncodingKind.BINARY):
        enc = Encoding(kind, graph.n, k)
        h = build_hamiltonian(graph, enc)
        rep = resource_report(enc, h)
        rep["depth"] = logical_depth(build_ansatz(enc.n_qubits, layers)) if enc.n_qubits else 0
        rows[kind.value] = rep
    return rows


def cmd_compare(args) -> int:
    started = time.perf_counter()
    inputs = []
    if args.input:
        graph, k = _load_graph(args.input, args.gates, args.buffer)
        k = args.k if args.k is not None else k
        inputs.append(args.input)
    else:
        if args.n is None or args.k is None:
            raise InputError("compare needs a graph/schedule file or both --n and --k")
        graph, k = _complete_graph(args.n), args.k
    if k is None:
        raise InputError("number of colors unknown: pass --k")
    if k < 2:
        raise InputError("compare needs k >= 2 (binary encoding)")
    rows = compare_rows(graph, k, args.layers)
    if args.solve:
        seed = args.seed if args.seed is not None else 0
        for kind, row in rows.items():
            if row["qubits"] > max_qubits():
                row["solve_seconds"] = None
                continue
            enc = Encoding(EncodingKind(kind), graph.n, k)
            h = build_hamiltonian(graph, enc)
            t0 = time.perf_counter()
            vqe_solve(h, enc, VqeConfig(layers=args.layers, seed=seed, restarts=1))
            row["solve_seconds"] = round(time.perf_counter() - t0, 3)
    table = {"n": graph.n, "k": k, "edges": len(graph.edges), "layers": args.layers, "encodings": rows}
    lines = [f"n={graph.n} k={k} edges={len(graph.edges)} layers={args.layers}", f"{'':16}{'one-hot':>10}{'binary':>10}"]
    keys = ["qubits", "terms", "max_locality", "depth"] + (["solve_seconds"] if args.solve else [])
    for key in keys:
        a, b = rows["onehot"].get(key), rows["binary"].get(key)
        lines.append(f"{key:16}{str(a):>10}{str(b):>10}")
    outputs = []
    if args.output:
        out = _outdir(args.output)
        outputs.append(_write(out, "compare.json", _dump(table)))
        manifest = _manifest(args, _replay_argv(args, args.seed), inputs, outputs, started, args.seed)
        _write(out, "manifest.json", _dump(manifest))
    _emit(args, table, "\n".join(lines))
    return EXIT_OK


def _replay_argv(args, seed) -> list[str]:
    """Argument list reproducing this run (output directory excluded)."""
    argv = [args.command]
    skip = {"command", "func", "output", "json", "verbose"}
    for key, val in sorted(vars(args).items()):
        if key == "seed":
            val = seed
        if key in skip or val is None or key == "input":
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        else:
            argv += [flag, str(val)]
    if getattr(args, "input", None):
        argv.append(args.input)
    return argv


def cmd_replay(args) -> int:
    try:
        manifest = json.loads(_read_text(args.manifest))
        argv = list(manifest["argv"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{args.manifest}: not a run manifest ({exc})") from None
    for path, digest in manifest.get("input_sha256", {}).items():
        if Path(path).is_file() and _sha256(path) != digest:
            log.warning("input %s changed since the manifest was written", path)
    extra = ["--json"] if args.json else []
    return main(argv[:1] + extra + ["-o", args.output] + argv[1:])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable stdout")

    graph_in = argparse.ArgumentParser(add_help=False)
    graph_in.add_argument("--gates", type=int, help="override the schedule's gate count")
    graph_in.add_argument("--buffer", type=int, default=0, help="turnaround minutes between flights at a gate")

    ham = argparse.ArgumentParser(add_help=False)
    ham.add_argument("--encoding", choices=[e.value for e in EncodingKind], default="binary")
    ham.add_argument("--k", type=int, help="number of gates (colors)")
    ham.add_argument("--penalty", type=float, help="constraint penalty weight")

    p = argparse.ArgumentParser(prog="gatevqe", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graph", parents=[common, graph_in], help="schedule CSV -> conflict graph JSON + DOT")
    g.add_argument("input")
    g.add_argument("-o", "--output", default=".")
    g.add_argument("--color", action="store_true", help="also write a DSATUR coloring")
    g.set_defaults(func=cmd_graph)

    hm = sub.add_parser("hamiltonian", parents=[common, graph_in, ham], help="graph -> Ising Hamiltonian JSON")
    hm.add_argument("input")
    hm.add_argument("-o", "--output", default=".")
    hm.set_defaults(func=cmd_hamiltonian)

    s = sub.add_parser("solve", parents=[common, graph_in, ham], help="VQE gate assignment")
    s.add_argument("input", help="graph.json or schedule .csv")
    s.add_argument("-o", "--output", default=".")
    s.add_argument("--optimizer", choices=["spsa", "cobyla"], default="cobyla")
    s.add_argument("--mode", choices=["exact", "sampled"], default="exact")
    s.add_argument("--shots", type=int, default=1024)
    s.add_argument("--layers", type=int, default=2)
    s.add_argument("--seed", type=int)
    s.add_argument("--restarts", type=int, default=3)
    s.add_argument("--max-evals", type=int, default=1000, help="objective evaluations per restart")
    s.add_argument("--rho-begin", type=float, default=0.5)
    s.add_argument("--rho-end", type=float, default=1e-4)
    s.add_argument("--readout-flip", type=float, default=0.0)
    s.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", parents=[common, graph_in], help="one-hot vs binary resource table")
    c.add_argument("input", nargs="?", help="graph.json or schedule .csv (default: complete graph K_n)")
    c.add_argument("--n", type=int)
    c.add_argument("--k", type=int)
    c.add_argument("--layers", type=int, default=2)
    c.add_argument("--solve", action="store_true", help="also time an exact VQE run per encoding")
    c.add_argument("--seed", type=int)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compare)

    o = sub.add_parser("oracle", parents=[common, graph_in, ham], help="exhaustive ground state")
    o.add_argument("input", help="hamiltonian.json, graph.json or schedule .csv")
    o.add_argument("-o", "--output", default=".")
    o.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    o.set_defaults(func=cmd_oracle)

    r = sub.add_parser("replay", parents=[common], help="re-run a solve/compare from its manifest")
    r.add_argument("manifest")
    r.add_argument("-o", "--output", required=True)
    r.set_defaults(func=cmd_replay)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ResourceExit as exc:
        if args.json:
            sys.stdout.write(_dump(exc.report))
        sys.stderr.write(f"error: {exc}\n{_dump(exc.report)}")
        return EXIT_RESOURCE
    except ResourceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RESOURCE
    except (InputError, OptimizerAbort) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT if isinstance(exc, InputError) else EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        sys.stderr.write(f"internal error: {exc!r}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
