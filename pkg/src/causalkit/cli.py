"""Command-line front end: ``generate``, ``learn``, ``evaluate``, ``benchmark``.

Reports go to standard output as JSON; failures print one line of the form
``causalkit: error: <kind>: <message>`` to standard error and exit with

* 2 for usage, parse and unknown-algorithm errors,
* 3 for data or parameter mismatches,
* 4 when a Markov blanket or local algorithm has no usable target.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

from .bn.bif import BifParseError
from .bn.gaussian import GaussianParseError
from .bn.model import NetworkValidationError
from .bn.sampling import forward_sample
from .ci import CiError, make_ci
from .dataset import DatasetFormatError, read_dataset, write_dataset
from .graph import GraphError, markov_blanket, read_graph, true_local, write_graph
from .local import LOCAL_ALGORITHMS, learn_local
from .mb import MB_ALGORITHMS, UnknownAlgorithmError, learn_mb
from .metrics import SET_FIELDS, STRUCTURE_FIELDS, compare_sets, compare_structure, record_efficiency
from .networks import resolve_network
from .scores import SCORE_KINDS, ScoreError
from .structure import GLOBAL_ALGORITHMS, OracleModeError, learn_global

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TARGET = 0, 2, 3, 4

FAMILIES = (("global", GLOBAL_ALGORITHMS), ("local", LOCAL_ALGORITHMS), ("mb", MB_ALGORITHMS))
ALL_ALGORITHMS = GLOBAL_ALGORITHMS + LOCAL_ALGORITHMS + MB_ALGORITHMS

CSV_HEADER = (
    ("network", "n", "algorithm", "seed", "target")
    + STRUCTURE_FIELDS
    + SET_FIELDS
    + ("elapsed_seconds", "n_tests", "error")
)

DATA_TYPES = {"dis": "discrete", "discrete": "discrete", "con": "continuous", "continuous": "continuous"}


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _one_line(msg) -> str:
    return " ".join(str(msg).split())


def resolve_algorithm(name: str) -> tuple:
    """``(family, canonical name)`` for a case-insensitive algorithm name."""
    for family, names in FAMILIES:
        for c in names:
            if c.lower() == str(name).lower():
                return family, c
    raise UnknownAlgorithmError(
        f"unknown algorithm {name!r}; available: {', '.join(ALL_ALGORITHMS)}"
    )


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise CliError(EXIT_USAGE, "usage", f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _max_cond(text: str):
    if text == "default":
        return text
    if text.lower() in ("none", "inf", "unbounded"):
        return None
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("max-cond must be nonnegative")
    return v


def _digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def _load_network(spec: str):
    try:
        return resolve_network(spec)
    except (KeyError, OSError, BifParseError, GaussianParseError, NetworkValidationError, ValueError) as e:
        raise CliError(EXIT_USAGE, "parse", f"cannot load network {spec!r}: {_one_line(e)}") from None


def _resolve_target(names, target) -> int:
    if target is None:
        raise CliError(EXIT_TARGET, "target", "a target is required for Markov blanket and local algorithms")
    if target in names:
        return names.index(target)
    raise CliError(EXIT_TARGET, "target", f"target {target!r} is not a column of the data")


# -- running one learner -------------------------------------------------------


def run_learner(source, family: str, algorithm: str, alpha: float, target=None, score="bdeu", ess=1.0,
                max_cond="default", k=1) -> tuple:
    """Run one learner; return ``(result payload, raw result, n_tests, elapsed)``."""
    names = source.node_names if hasattr(source, "node_names") else source.column_names
    if family == "global":
        res = learn_global(source, algorithm, alpha=alpha, score=score, ess=ess, max_cond=max_cond, k=k)
        payload = {
            "kind": "graph",
            "graph": write_graph(res.graph),
            "dag": write_graph(res.dag) if res.dag is not None else None,
        }
        return payload, res, res.n_ci_tests + res.n_score_evals, res.elapsed
    t = _resolve_target(list(names), target)
    ci = make_ci(source, alpha, max_cond)
    if family == "mb":
        res = learn_mb(ci, t, algorithm, k=k)
        payload = {
            "kind": "mb",
            "target": names[t],
            "mb": [names[i] for i in sorted(res.mb)],
            "pc": [names[i] for i in sorted(res.pc)],
        }
        return payload, res, res.n_ci_tests, res.elapsed
    res = learn_local(ci, t, algorithm)
    st = res.structure
    payload = {
        "kind": "local",
        "target": names[t],
        "parents": [names[i] for i in sorted(st.parents)],
        "children": [names[i] for i in sorted(st.children)],
        "undirected": [names[i] for i in sorted(st.undirected_neighbors)],
        "spouses": [names[i] for i in sorted(st.spouses)],
        "pc": [names[i] for i in sorted(st.pc)],
    }
    return payload, res, res.n_ci_tests, res.elapsed


def evaluate_payload(payload: dict, truth_graph) -> dict:
    """Metrics of a result payload against a true DAG (names must match)."""
    names = list(truth_graph.node_names)
    if payload.get("kind") == "graph":
        learned = read_graph(payload["graph"])
        return compare_structure(learned, truth_graph).as_dict()

    def idx(nodes):
        missing = [v for v in nodes if v not in names]
        if missing:
            raise GraphError(f"nodes not in the true network: {', '.join(map(str, missing))}")
        return {names.index(v) for v in nodes}

    target = payload.get("target")
    if target not in names:
        raise GraphError(f"target {target!r} is not a node of the true network")
    t = names.index(target)
    if payload.get("kind") == "mb":
        return compare_sets(idx(payload["mb"]), markov_blanket(truth_graph, t)).as_dict()
    if payload.get("kind") == "local":
        return compare_sets(idx(payload["pc"]), true_local(truth_graph, t).pc).as_dict()
    raise GraphError(f"unknown result kind {payload.get('kind')!r}")


# -- commands ------------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.n < 1:
        raise CliError(EXIT_USAGE, "usage", f"sample size must be at least 1, got {args.n}")
    if args.seed < 0:
        raise CliError(EXIT_USAGE, "usage", "seed must be nonnegative")
    bn = _load_network(args.network)
    text = write_dataset(forward_sample(bn, args.n, args.seed))
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    print(f"wrote {args.n} rows x {len(bn.node_names)} columns", file=sys.stderr)
    return EXIT_OK


def _read_data(path: str) -> tuple:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        raise CliError(EXIT_USAGE, "parse", f"cannot read {path!r}: {e.strerror}") from None
    try:
        return read_dataset(raw.decode("utf-8")), raw
    except (DatasetFormatError, UnicodeDecodeError) as e:
        raise CliError(EXIT_USAGE, "parse", f"{path}: {_one_line(e)}") from None


def build_report(args, argv) -> dict:
    family, algorithm = resolve_algorithm(args.algorithm)
    alpha = _check_alpha(args.alpha)
    kind = DATA_TYPES[args.data_type]
    if args.score not in SCORE_KINDS:
        raise CliError(EXIT_USAGE, "usage", f"score must be one of {', '.join(SCORE_KINDS)}")
    if family != "global" and args.target is None:
        raise CliError(EXIT_TARGET, "target", f"{algorithm} needs --target")
    data, raw = _read_data(args.data)
    if data.kind != kind:
        raise CliError(EXIT_DATA, "data", f"data type {args.data_type!r} given but {args.data} holds {data.kind} data")
    try:
        payload, _, n_tests, elapsed = run_learner(
            data, family, algorithm, alpha, target=args.target, score=args.score, ess=args.ess,
            max_cond=args.max_cond, k=args.k)
    except (ScoreError, CiError, OracleModeError) as e:
        raise CliError(EXIT_DATA, "data", _one_line(e)) from None
    params = {"alpha": alpha, "data_type": args.data_type, "seed": args.seed, "k": args.k,
              "max_cond": None if args.max_cond is None else args.max_cond, "target": args.target}
    if algorithm in ("GES", "MMHC", "F2SL-s"):
        params.update(score=args.score, ess=args.ess)
    if params["max_cond"] == "default":
        params["max_cond"] = 3
    report = {
        "command": ["learn"] + list(argv),
        "algorithm": algorithm,
        "family": family,
        "parameters": params,
        "input": {"data": args.data, "sha256": _digest(raw), "n": data.n, "columns": list(data.column_names)},
        "result": payload,
        "efficiency": record_efficiency(n_tests, elapsed).as_dict(),
    }
    if args.truth:
        bn = _load_network(args.truth)
        try:
            report["metrics"] = evaluate_payload(payload, bn.graph)
        except GraphError as e:
            raise CliError(EXIT_DATA, "data", _one_line(e)) from None
    return report


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def cmd_learn(args, argv=()) -> int:
    report = build_report(args, argv)
    text = _dump(report)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    eff = report["efficiency"]
    print(f"{report['algorithm']}: {eff['n_ci_tests_or_score_evals']} tests/evaluations in "
          f"{eff['elapsed_seconds']:.3f}s", file=sys.stderr)
    return EXIT_OK


def _read_result(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise CliError(EXIT_USAGE, "parse", f"cannot read {path!r}: {e.strerror}") from None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise CliError(EXIT_USAGE, "parse", f"{path}: {_one_line(e)}") from None
        return obj.get("result", obj)
    try:
        read_graph(text)
    except GraphError as e:
        raise CliError(EXIT_USAGE, "parse", f"{path}: {_one_line(e)}") from None
    return {"kind": "graph", "graph": text}


def cmd_evaluate(args) -> int:
    payload = _read_result(args.result)
    bn = _load_network(args.truth)
    try:
        metrics = evaluate_payload(payload, bn.graph)
    except GraphError as e:
        raise CliError(EXIT_DATA, "data", _one_line(e)) from None
    sys.stdout.write(_dump(metrics))
    return EXIT_OK


# -- benchmark -----------------------------------------------------------------

_CONFIG_KEYS = ("network", "n", "algorithm", "seed", "target", "alpha", "mode", "score", "max_cond", "k")


def parse_config(text: str) -> list:
    """Parse ``run`` ... ``end`` blocks into a list of dicts of value lists.

    Each line inside a block is ``key value [value ...]``; ``#`` starts a
    comment. Every block expands to the cartesian product of its lists.
    """
    blocks, cur = [], None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0].lower()
        if key == "run":
            if cur is not None:
                raise ValueError(f"line {lineno}: 'run' inside an open block")
            cur = {}
        elif key == "end":
            if cur is None:
                raise ValueError(f"line {lineno}: 'end' without 'run'")
            for need in ("network", "algorithm"):
                if need not in cur:
                    raise ValueError(f"line {lineno}: block lacks '{need}'")
            blocks.append(cur)
            cur = None
        else:
            if cur is None:
                raise ValueError(f"line {lineno}: '{key}' outside a run block")
            if key not in _CONFIG_KEYS:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            if len(parts) < 2:
                raise ValueError(f"line {lineno}: '{key}' needs a value")
            cur[key] = parts[1:]
    if cur is not None:
        raise ValueError("unterminated run block")
    return blocks


def expand_config(blocks: list) -> list:
    """Cartesian product of each block into run dicts, validated."""
    runs = []
    for b in blocks:
        mode = b.get("mode", ["data"])
        for m in mode:
            if m not in ("data", "oracle"):
                raise ValueError(f"mode must be 'data' or 'oracle', got {m!r}")
        try:
            ns = [int(v) for v in b.get("n", ["0"] if mode == ["oracle"] else [])]
            seeds = [int(v) for v in b.get("seed", ["0"])]
            alphas = [_check_alpha(float(v)) for v in b.get("alpha", ["0.05"])]
            ks = [int(v) for v in b.get("k", ["1"])]
            caps = [_max_cond(v) for v in b.get("max_cond", ["default"])]
        except (ValueError, argparse.ArgumentTypeError, CliError) as e:
            raise ValueError(f"bad numeric value: {_one_line(e)}") from None
        if not ns:
            raise ValueError("data-mode block lacks 'n'")
        if any(n < 1 for n in ns) and "data" in mode:
            raise ValueError("sample sizes must be at least 1")
        for a in b["algorithm"]:
            resolve_algorithm(a)
        for s in b.get("score", ["bdeu"]):
            if s not in SCORE_KINDS:
                raise ValueError(f"unknown score {s!r}")
        for combo in itertools.product(b["network"], ns, b["algorithm"], seeds, b.get("target", ["all"]),
                                       alphas, mode, b.get("score", ["bdeu"]), caps, ks):
            runs.append(dict(zip(("network", "n", "algorithm", "seed", "target", "alpha", "mode", "score",
                                  "max_cond", "k"), combo)))
    return runs


def _blank_row(run: dict, target: str) -> dict:
    row = {c: "" for c in CSV_HEADER}
    row.update(network=run["network"], n=run["n"], algorithm=run["algorithm"], seed=run["seed"], target=target)
    return row


def _bench_one(run: dict, network_cache: dict) -> list:
    """All CSV rows for one expanded run (one per target for local/MB algorithms)."""
    family, algorithm = resolve_algorithm(run["algorithm"])
    try:
        bn = network_cache[run["network"]]
        if isinstance(bn, Exception):
            raise bn
        truth = bn.graph
        if run["mode"] == "oracle":
            source = truth
        else:
            source = forward_sample(bn, run["n"], run["seed"])
        names = list(truth.node_names)
        if family == "global":
            targets = [""]
        elif run["target"] == "all":
            targets = names
        else:
            targets = [run["target"]]
    except Exception as e:  # noqa: BLE001 - recorded in the error column
        row = _blank_row(run, run["target"] if family != "global" else "")
        row["error"] = _one_line(f"{type(e).__name__}: {e}")
        return [row]
    rows = []
    for t in targets:
        row = _blank_row(run, t)
        try:
            payload, _, n_tests, elapsed = run_learner(
                source, family, algorithm, run["alpha"], target=t or None, score=run["score"],
                max_cond=run["max_cond"], k=run["k"])
            row.update(evaluate_payload(payload, truth))
            row["elapsed_seconds"] = f"{elapsed:.6f}"
            row["n_tests"] = n_tests
        except CliError as e:
            row["error"] = _one_line(str(e))
        except Exception as e:  # noqa: BLE001 - recorded in the error column
            row["error"] = _one_line(f"{type(e).__name__}: {e}")
        rows.append(row)
    return rows


def run_benchmark(runs: list, jobs: int = 1) -> list:
    """CSV rows in config order; runs may execute concurrently."""
    cache = {}
    for r in runs:
        if r["network"] not in cache:
            try:
                cache[r["network"]] = resolve_network(r["network"])
            except Exception as e:  # noqa: BLE001
                cache[r["network"]] = e
    if jobs <= 1:
        chunks = [_bench_one(r, cache) for r in runs]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(lambda r: _bench_one(r, cache), runs))
    return [row for chunk in chunks for row in chunk]


def format_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def cmd_benchmark(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        runs = expand_config(parse_config(text))
    except OSError as e:
        raise CliError(EXIT_USAGE, "parse", f"cannot read {args.config!r}: {e.strerror}") from None
    except (ValueError, UnknownAlgorithmError) as e:
        raise CliError(EXIT_USAGE, "parse", f"{args.config}: {_one_line(e)}") from None
    if args.jobs < 1:
        raise CliError(EXIT_USAGE, "usage", "jobs must be at least 1")
    rows = run_benchmark(runs, args.jobs)
    text = format_csv(rows)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows)} rows, {failed} failed", file=sys.stderr)
    return EXIT_OK


def cmd_algorithms(args) -> int:
    for family, names in FAMILIES:
        print(f"{family}: {' '.join(names)}")
    return EXIT_OK


# -- entry point ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, "usage", message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="causalkit", description="Causal structure and Markov blanket learning.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("generate", help="sample a dataset from a network")
    g.add_argument("network", help="bundled network name or network file")
    g.add_argument("-n", type=int, required=True, help="number of samples")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--out", help="output path (default: standard output)")
    g.set_defaults(func=cmd_generate)

    le = sub.add_parser("learn", help="run one learner on a dataset")
    le.add_argument("algorithm")
    le.add_argument("data", help="dataset text file")
    le.add_argument("data_type", choices=sorted(DATA_TYPES))
    le.add_argument("alpha", type=float)
    le.add_argument("--target", help="target column (Markov blanket and local algorithms)")
    le.add_argument("--score", default="bdeu")
    le.add_argument("--ess", type=float, default=1.0)
    le.add_argument("--max-cond", type=_max_cond, default="default", dest="max_cond")
    le.add_argument("--k", type=int, default=1)
    le.add_argument("--seed", type=int, default=0)
    le.add_argument("--out", help="report path (default: standard output)")
    le.add_argument("--truth", help="network to evaluate against")
    le.set_defaults(func=cmd_learn)

    ev = sub.add_parser("evaluate", help="score a learn report or graph file against a network")
    ev.add_argument("result")
    ev.add_argument("truth")
    ev.set_defaults(func=cmd_evaluate)

    bm = sub.add_parser("benchmark", help="run a benchmark config and write CSV")
    bm.add_argument("config")
    bm.add_argument("--out")
    bm.add_argument("--jobs", type=int, default=1)
    bm.set_defaults(func=cmd_benchmark)

    al = sub.add_parser("algorithms", help="list algorithm names")
    al.set_defaults(func=cmd_algorithms)
    return p


def main(argv: Optional[list] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.command == "learn":
            return cmd_learn(args, argv[1:])
        return args.func(args)
    except CliError as e:
        print(f"causalkit: error: {e.kind}: {_one_line(e)}", file=sys.stderr)
        return e.code
    except UnknownAlgorithmError as e:
        print(f"causalkit: error: algorithm: {_one_line(e)}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
