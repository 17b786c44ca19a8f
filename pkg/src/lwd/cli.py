"""Command-line entry point: ``lwd gen | train | eval | solve | oracle``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import nn
from .agent import Agent, config_from_store
from .datasets import MODELS, GraphModel, stream
from .env import feature_dim
from .graph import GraphError, load_edge_list, load_weights, save_edge_list, save_weights
from .ppo import ConfigError, TrainConfig, dump_config, evaluate_best_of_k, load_config, train
from .problems import ProblemKind, ProblemSpec, is_independent, sample_mwis_weights
from .sat import CNFError, load_dimacs, sat3_to_mis
from .solvers import SizeCapError, brute_force_generic, brute_force_mis, greedy_mis, local_search_2imp

EDGE_SUFFIX = ".edges"
WEIGHT_SUFFIX = ".weights"


class CLIError(Exception):
    pass


# ------------------------------------------------------------------------ gen

def _model_from_args(a) -> GraphModel:
    return GraphModel(a.model, a.n_min, a.n_max, a.p, a.m_attach, a.p_triad, a.k, a.p_rewire)


def _write_graph(out: Path, name: str, g, weights_seed: int | None):
    save_edge_list(g, out / f"{name}{EDGE_SUFFIX}")
    if weights_seed is not None:
        save_weights(sample_mwis_weights(g.n, np.random.default_rng([weights_seed, 6])),
                     out / f"{name}{WEIGHT_SUFFIX}")


def _distinct_seeds(seed: int, count: int) -> list[int]:
    rng = stream(seed, "gen")
    seeds: list[int] = []
    seen = set()
    while len(seeds) < count:
        s = int(rng.integers(2**63))
        if s not in seen:
            seen.add(s)
            seeds.append(s)
    return seeds


def cmd_gen(a) -> int:
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    if a.from_manifest:
        return _regen(Path(a.from_manifest), out)
    if a.model == "sat":
        if not a.cnf_dir:
            raise CLIError("--model sat needs --cnf-dir")
        return _gen_sat(Path(a.cnf_dir), out)
    model = _model_from_args(a)
    files = []
    for i, s in enumerate(_distinct_seeds(a.seed, a.count)):
        name = f"graph_{i:04d}"
        g = model.from_seed(s)
        _write_graph(out, name, g, s if a.weights else None)
        files.append(dict(file=name + EDGE_SUFFIX, seed=s, n=g.n, m=g.m))
    manifest = dict(model=a.model, params=model.params(), n_min=a.n_min, n_max=a.n_max, count=a.count,
                    seed=a.seed, weights=bool(a.weights), files=files)
    _write_json(out / "manifest.json", manifest)
    return 0


def _regen(manifest_path: Path, out: Path) -> int:
    m = json.loads(manifest_path.read_text())
    if m["model"] == "sat":
        raise CLIError("sat datasets are regenerated from their CNF files with --model sat")
    model = GraphModel(m["model"], m["n_min"], m["n_max"], **m["params"])
    for f in m["files"]:
        g = model.from_seed(f["seed"])
        if g.n != f["n"]:
            raise CLIError(f"{f['file']}: regenerated n={g.n}, manifest says {f['n']}")
        _write_graph(out, Path(f["file"]).stem, g, f["seed"] if m.get("weights") else None)
    if manifest_path.resolve() != (out / "manifest.json").resolve():
        _write_json(out / "manifest.json", m)
    return 0


def _gen_sat(cnf_dir: Path, out: Path) -> int:
    cnfs = sorted(cnf_dir.glob("*.cnf"))
    if not cnfs:
        raise CLIError(f"no .cnf files in {cnf_dir}")
    files = []
    for p in cnfs:
        num_vars, clauses = load_dimacs(p)
        g, _ = sat3_to_mis(clauses)
        save_edge_list(g, out / f"{p.stem}{EDGE_SUFFIX}")
        files.append(dict(file=p.stem + EDGE_SUFFIX, source=p.name, variables=num_vars,
                          clauses=len(clauses), n=g.n, m=g.m))
    _write_json(out / "manifest.json", dict(model="sat", params={}, files=files))
    return 0


def _write_json(path: Path, obj):
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------- train

def cmd_train(a) -> int:
    cfg = load_config(a.config)
    if a.seed is not None:
        cfg = cfg.replace(seed=a.seed)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.cfg").write_text(dump_config(cfg))
    res = train(cfg, out, progress=None if a.quiet else lambda r: print(json.dumps(r), flush=True))
    print(json.dumps(dict(best_val=res.best_val, updates=cfg.total_updates, out=str(out))))
    return 0


# -------------------------------------------------------- eval / solve / oracle

def _dataset(path) -> list[Path]:
    d = Path(path)
    if not d.is_dir():
        raise CLIError(f"dataset directory {d} does not exist")
    files = sorted(d.glob(f"*{EDGE_SUFFIX}"))
    if not files:
        raise CLIError(f"dataset directory {d} contains no {EDGE_SUFFIX} files")
    return files


def _spec_for(kind: ProblemKind, path: Path, n: int, cfg: TrainConfig | None) -> ProblemSpec:
    weights = None
    if kind is ProblemKind.MWIS:
        wp = path.with_suffix(WEIGHT_SUFFIX)
        if not wp.exists():
            raise CLIError(f"MWIS needs a weights file next to {path.name} ({wp.name})")
        weights = load_weights(wp, n)
    c = cfg or TrainConfig()
    return ProblemSpec(kind, weights, c.pcmis_lambda, c.ising_beta, c.ising_gamma)


class _Results:
    """Newline-delimited records plus a trailing summary, written only once complete."""

    def __init__(self, out):
        self.out = out
        self.records: list[dict] = []

    def add(self, rec: dict):
        self.records.append(rec)

    def close(self):
        o = np.array([r["objective"] for r in self.records], dtype=float)
        summary = dict(summary=True, count=len(o), mean=float(o.mean()), max=float(o.max()),
                       all_feasible=all(r["feasible"] for r in self.records))
        text = "".join(json.dumps(r) + "\n" for r in self.records + [summary])
        if self.out:
            with open(self.out, "w", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _record(path: Path, g, objective: float, feasible: bool, samples: int, ms: float, **extra) -> dict:
    rec = dict(file=path.name, n=g.n, m=g.m, objective=float(objective), feasible=bool(feasible),
               samples=samples, time_ms=round(ms, 3))
    rec.update(extra)
    return rec


def cmd_eval(a) -> int:
    kind = ProblemKind(a.problem)
    cfg = load_config(a.config) if a.config else None
    horizon = a.horizon or (cfg.horizon if cfg else TrainConfig().horizon)
    files = _dataset(a.dataset)
    store = nn.load_checkpoint(a.checkpoint)
    want = feature_dim(kind)
    have = config_from_store(store).in_dim
    if have != want:
        raise CLIError(f"checkpoint takes {have} input features but problem {kind.value} provides {want}")
    if a.local_search and kind is not ProblemKind.MIS:
        raise CLIError("--local-search applies to mis only")
    agent = Agent(store, need_value=False)
    graphs = [load_edge_list(p) for p in files]
    specs = [_spec_for(kind, p, g.n, cfg) for p, g in zip(files, graphs)]
    res = evaluate_best_of_k(agent, graphs, specs, horizon, a.samples, stream(a.seed, "eval"),
                             local_search=a.local_search)
    out = _Results(a.out)
    for p, g, r in zip(files, graphs, res):
        out.add(_record(p, g, r.best, r.feasible, a.samples, r.time_ms))
    out.close()
    return 0


def cmd_solve(a) -> int:
    out = _Results(a.out)
    for p in _dataset(a.dataset):
        g = load_edge_list(p)
        t0 = time.perf_counter()
        sol = greedy_mis(g)
        if a.method == "greedy+ls":
            sol = local_search_2imp(g, sol)
        ms = (time.perf_counter() - t0) * 1000
        x = np.zeros(g.n, dtype=np.int8)
        x[sol] = 1
        out.add(_record(p, g, len(sol), is_independent(g, x), 1, ms))
    out.close()
    return 0


def cmd_oracle(a) -> int:
    kind = ProblemKind(a.problem)
    cfg = load_config(a.config) if a.config else None
    files = _dataset(a.dataset)
    out = _Results(a.out)
    for p in files:
        g = load_edge_list(p)
        t0 = time.perf_counter()
        try:
            if kind is ProblemKind.MIS:
                val, wit = brute_force_mis(g)
                x = np.zeros(g.n, dtype=np.int8)
                x[wit] = 1
            else:
                val, x = brute_force_generic(_spec_for(kind, p, g.n, cfg), g)
        except SizeCapError as exc:
            raise CLIError(f"{p.name}: {exc}") from None
        ms = (time.perf_counter() - t0) * 1000
        feas = is_independent(g, x) if kind in (ProblemKind.MIS, ProblemKind.MWIS) else True
        out.add(_record(p, g, val, feas, 1, ms, exact=True))
    out.close()
    return 0


# ----------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lwd", description="Deferred-decision RL for independent sets.")
    sub = ap.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("gen", help="write a synthetic or SAT-derived dataset")
    g.add_argument("--model", choices=MODELS + ("sat",), default="er")
    g.add_argument("--n-min", type=int, default=15)
    g.add_argument("--n-max", type=int, default=20)
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--p", type=float, default=0.15, help="ER edge probability")
    g.add_argument("--m-attach", type=int, default=2, help="BA/HK edges per new vertex")
    g.add_argument("--p-triad", type=float, default=0.05, help="HK triad-closure probability")
    g.add_argument("--k", type=int, default=4, help="WS lattice degree")
    g.add_argument("--p-rewire", type=float, default=0.15, help="WS rewiring probability")
    g.add_argument("--weights", action="store_true", help="also write MWIS vertex weights")
    g.add_argument("--cnf-dir", help="directory of DIMACS .cnf files (with --model sat)")
    g.add_argument("--from-manifest", help="regenerate the files listed in a manifest")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen)

    t = sub.add_parser("train", help="train a policy from a config file")
    t.add_argument("--config", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, help="override the config seed")
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="best-of-k evaluation of a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--dataset", required=True)
    e.add_argument("--samples", type=int, default=10)
    e.add_argument("--local-search", action="store_true")
    e.add_argument("--problem", choices=[k.value for k in ProblemKind], default="mis")
    e.add_argument("--config", help="training config (horizon and problem parameters)")
    e.add_argument("--horizon", type=int)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out")
    e.set_defaults(fn=cmd_eval)

    s = sub.add_parser("solve", help="greedy MIS baseline, optionally with local search")
    s.add_argument("--dataset", required=True)
    s.add_argument("--method", choices=["greedy", "greedy+ls"], default="greedy")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_solve)

    o = sub.add_parser("oracle", help="exact solutions by exhaustive search")
    o.add_argument("--dataset", required=True)
    o.add_argument("--problem", choices=[k.value for k in ProblemKind], default="mis")
    o.add_argument("--config", help="problem parameters (lambda, beta, gamma)")
    o.add_argument("--out")
    o.set_defaults(fn=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CLIError, ConfigError, GraphError, CNFError, OSError, ValueError) as exc:
        print(f"lwd {args.verb}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
