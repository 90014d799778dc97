"""Command-line entry point: ``dasandwich {lab,qr,bounds}``.

Exit codes: 0 success, 1 bad input or usage, 2 a checked property failed.
Every output record embeds the fully resolved configuration and the
package version, so rerunning with that configuration reproduces it.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import appendix_b_uniform_check, empirical_sup_check
from .diagnostics import summarize_trace
from .distributions import RngStream
from .exceptions import FileFormatError, ParameterError, UnsupportedQuantileError
from .quantreg import QuantileModel, load_dataset, quadrature_posterior_moments, run_chain, write_trace_csv
from .speclab import (
    GroupAction,
    build_group_R,
    check_shared_conditional,
    domination_report,
    format_report,
    identity_kernel,
    load_action,
    load_table,
    verify_lemma1,
    verify_lemma2,
)

EXIT_OK, EXIT_INPUT, EXIT_PROPERTY = 0, 1, 2

DEFAULTS = {
    "lab": {"table": "bundled:table_2x2.txt", "action": None, "out": None},
    "qr": {
        "data": "bundled:reference.csv",
        "kind": "da",
        "r": 0.5,
        "seed": 0,
        "chains": 1,
        "iters": 10_000,
        "burnin": 1_000,
        "thin": 1,
        "max_lag": 20,
        "keep_y": False,
        "oracle": False,
        "out": None,
    },
    "bounds": {
        "mode": "c",
        "vectors": "bundled:bounds_p3n4.txt",
        "data": "bundled:reference.csv",
        "samples": 100_000,
        "seed": 0,
        "out": None,
    },
}


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for failed checks here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _resolve(path):
    if path.startswith("bundled:"):
        res = resources.files("dasandwich") / "data" / path.split(":", 1)[1]
        if not res.is_file():
            raise InputError(f"no bundled file named {path!r}")
        return str(res)
    if not Path(path).is_file():
        raise InputError(f"{path}: no such file")
    return path


def _status(ok, stream=None):
    stream = stream or sys.stderr
    word = "PASS" if ok else "FAIL"
    if stream.isatty() and "NO_COLOR" not in os.environ:
        word = f"\033[{32 if ok else 31}m{word}\033[0m"
    print(word, file=stream)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _provenance(command, config):
    return {"command": command, "version": __version__, "config": config}


# lab ------------------------------------------------------------------------


def cmd_lab(config) -> int:
    table = load_table(_resolve(config["table"]))
    if config["action"] is None:
        action = GroupAction.trivial(table.shape[1])
        R = identity_kernel(table.f_y)
    else:
        action = load_action(_resolve(config["action"]))
        if action.n_states != table.shape[1]:
            raise InputError(f"action acts on {action.n_states} states but the table has {table.shape[1]} columns")
        R = build_group_R(table.f_y, action)
    report = domination_report(table, R)
    singular = verify_lemma1(table)
    projection = verify_lemma2(table.f_y, action)
    shared = check_shared_conditional(table, action)
    record = {}
    for k, v in _provenance("lab", config).items():
        if k == "config":
            for ck, cv in sorted(v.items()):
                record[f"config.{ck}"] = "" if cv is None else str(cv)
        else:
            record[k] = str(v)
    record.update(report.as_record())
    record["svd_residual"] = repr(singular.max_residual)
    record["projection_residual"] = repr(projection.max_residual)
    record["shared_conditional"] = "true" if shared else "false"
    # a shared conditional forces equal traces; otherwise the trace must drop
    trace_consistent = (abs(report.trace_K - report.trace_Kstar) < 1e-9) == shared
    record["trace_drop_consistent"] = "true" if trace_consistent else "false"
    ok = report.ok and singular.ok and projection.ok and trace_consistent
    record["all_checks"] = "pass" if ok else "fail"
    _emit(format_report(record), config["out"])
    _status(ok)
    return EXIT_OK if ok else EXIT_PROPERTY


# qr -------------------------------------------------------------------------


def _run_one(args):
    model, kind, iters, burnin, thin, seed, stream_id, keep_y = args
    return run_chain(model, kind, iters, burnin, thin, seed, stream_id, keep_y=keep_y)


def cmd_qr(config) -> int:
    X, z, names = load_dataset(_resolve(config["data"]))
    model = QuantileModel(X, z, config["r"])
    kind = config["kind"]
    if kind == "sandwich" and model.r != 0.5:
        raise UnsupportedQuantileError(f"the sandwich move is only available for r = 0.5, got r = {model.r!r}")
    if model.r != 0.5:
        print("warning: posterior propriety is only established here for r = 0.5", file=sys.stderr)
    jobs = [
        (model, kind, config["iters"], config["burnin"], config["thin"], config["seed"], c, config["keep_y"])
        for c in range(config["chains"])
    ]
    if len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(len(jobs), os.cpu_count() or 1)) as pool:
            traces = list(pool.map(_run_one, jobs))
    else:
        traces = [_run_one(jobs[0])]

    oracle = None
    if config["oracle"] and model.p <= 2:
        mean, cov = quadrature_posterior_moments(model)
        oracle = {"mean": mean.tolist(), "variance": np.diag(cov).tolist()}

    lines = []
    for tr in traces:
        coords = [summarize_trace(tr.beta[:, j], config["max_lag"]).as_record() for j in range(model.p)]
        rec = _provenance("qr", config)
        rec.update(
            {
                "record": "chain",
                "chain": tr.stream_id,
                "kind": tr.kind,
                "seed": tr.seed,
                "stream_id": tr.stream_id,
                "model": tr.model_fingerprint,
                "columns": names[:-1],
                "coordinates": coords,
            }
        )
        if oracle is not None:
            rec["oracle"] = oracle
        lines.append(json.dumps(rec, sort_keys=True))
    summary = "\n".join(lines) + "\n"

    if config["out"] is None:
        sys.stdout.write(summary)
    else:
        out = Path(config["out"])
        out.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        write_trace_csv(traces, buf, keep_y=config["keep_y"])
        (out / "trace.csv").write_text(buf.getvalue())
        (out / "summary.jsonl").write_text(summary)
    return EXIT_OK


# bounds ---------------------------------------------------------------------


def _load_vectors(path):
    rows = []
    for no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([float(t) for t in line.split()])
        except ValueError as exc:
            raise FileFormatError(str(exc), path, no) from None
        if len(rows[-1]) != len(rows[0]):
            raise FileFormatError(f"expected {len(rows[0])} components, got {len(rows[-1])}", path, no)
    if not rows:
        raise FileFormatError("no vectors", path)
    return np.array(rows)


def cmd_bounds(config) -> int:
    rng = RngStream(config["seed"])
    if config["mode"] == "c":
        V = _load_vectors(_resolve(config["vectors"]))
        report = empirical_sup_check(V[0], list(V[1:]), config["samples"], rng)
    else:
        X, z, _ = load_dataset(_resolve(config["data"]))
        report = appendix_b_uniform_check(X, z, config["samples"], rng)
    rec = _provenance("bounds", config)
    rec.update({"record": "bound", "mode": config["mode"], **report.as_record()})
    _emit(json.dumps(rec, sort_keys=True) + "\n", config["out"])
    _status(report.ok)
    return EXIT_OK if report.ok else EXIT_PROPERTY


# parsing --------------------------------------------------------------------


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} must be >= 1")
    return v


def _nonneg(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text} must be >= 0")
    return v


def build_parser():
    parser = _Parser(prog="dasandwich", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file of option values; flags override it")
        p.add_argument("--out", help="output path")

    p = sub.add_parser("lab", help="spectral comparison of DA and sandwich kernels on a finite table")
    common(p)
    p.add_argument("--table", help="joint table file (default: bundled 2x2)")
    p.add_argument("--action", help="group action file (default: trivial group)")

    p = sub.add_parser("qr", help="run quantile-regression chains on a CSV dataset")
    common(p)
    p.add_argument("--data", help="CSV, covariates then response (default: bundled reference)")
    p.add_argument("--kind", choices=("da", "sandwich"))
    p.add_argument("--r", type=float)
    p.add_argument("--seed", type=_u64)
    p.add_argument("--chains", type=_positive)
    p.add_argument("--iters", type=_positive)
    p.add_argument("--burnin", type=_nonneg)
    p.add_argument("--thin", type=_positive)
    p.add_argument("--max-lag", dest="max_lag", type=_nonneg)
    p.add_argument("--keep-y", dest="keep_y", action="store_const", const=True)
    p.add_argument("--oracle", action="store_const", const=True, help="add quadrature moments (p <= 2)")

    p = sub.add_parser("bounds", help="check the recursive matrix bound by sampling")
    common(p)
    p.add_argument("--mode", choices=("c", "appendix-b"))
    p.add_argument("--vectors", help="text file, one vector per line, x1 first")
    p.add_argument("--data", help="CSV design and response for appendix-b mode")
    p.add_argument("--samples", type=_positive)
    p.add_argument("--seed", type=_u64)
    return parser


def resolve_config(args) -> dict:
    config = dict(DEFAULTS[args.command])
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"{args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError(f"{args.config}: expected a JSON object")
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        unknown = set(loaded) - set(config)
        if unknown:
            raise InputError(f"{args.config}: unknown keys {sorted(unknown)}")
        config.update(loaded)
    for key in config:
        val = getattr(args, key, None)
        if val is not None:
            config[key] = val
    return config


COMMANDS = {"lab": cmd_lab, "qr": cmd_qr, "bounds": cmd_bounds}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](config)
    except (InputError, FileFormatError, ParameterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
