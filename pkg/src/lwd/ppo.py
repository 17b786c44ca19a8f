"""PPO with per-vertex ratio clipping, coupled rollouts and best-of-k validation."""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .agent import Agent, Batch, NetConfig, forward, init_params
from .datasets import GraphModel, stream, stream_seed
from .env import RolloutBatch, feature_dim, rollout
from .problems import ProblemKind, ProblemSpec, is_independent, sample_mwis_weights
from .solvers import local_search_2imp


class ConfigError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    """Training hyperparameters; defaults are the published synthetic-graph settings."""

    problem: str = "mis"
    graph_model: str = "er"
    n_min: int = 50
    n_max: int = 100
    er_p: float = 0.15
    ba_m: int = 2
    hk_p_triad: float = 0.05
    ws_k: int = 4
    ws_p: float = 0.15
    pcmis_lambda: float = 0.5
    ising_beta: float = 1.0
    ising_gamma: float = 1.0
    horizon: int = 32
    unroll: int = 32
    envs_per_batch: int = 32
    minibatch: int = 16
    grad_steps: int = 4
    alpha: float = 0.1
    entropy_coef: float = 0.1
    clip_eps: float = 0.2
    value_coef: float = 0.5
    lr: float = 1e-4
    max_grad_norm: float = 0.5
    total_updates: int = 20000
    val_every: int = 100
    val_graphs: int = 100
    val_samples: int = 10
    log_every: int = 10
    seed: int = 0
    hidden: int = 128
    layers: int = 4
    shared_trunk: bool = False

    def __post_init__(self):
        ProblemKind(self.problem)
        for name in ("horizon", "unroll", "envs_per_batch", "minibatch", "grad_steps", "val_every",
                     "val_graphs", "val_samples", "log_every", "hidden", "layers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.total_updates < 0:
            raise ConfigError("total_updates must be >= 0")
        if not 0 < self.clip_eps < 1:
            raise ConfigError(f"clip_eps must lie in (0, 1), got {self.clip_eps}")
        if self.unroll < self.horizon:
            raise ConfigError("unroll must be >= horizon: episodes always run to termination")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")

    @property
    def graph(self) -> GraphModel:
        return GraphModel(self.graph_model, self.n_min, self.n_max, self.er_p, self.ba_m,
                          self.hk_p_triad, self.ws_k, self.ws_p)

    def spec(self, n: int, rng: np.random.Generator | None = None) -> ProblemSpec:
        kind = ProblemKind(self.problem)
        weights = sample_mwis_weights(n, rng) if kind is ProblemKind.MWIS else None
        return ProblemSpec(kind, weights, self.pcmis_lambda, self.ising_beta, self.ising_gamma)

    def replace(self, **kw) -> "TrainConfig":
        return dataclasses.replace(self, **kw)


def desk_profile(**overrides) -> TrainConfig:
    """Small-graph, short-horizon profile that trains on one CPU."""
    base = dict(n_min=15, n_max=20, er_p=0.15, horizon=16, unroll=16, total_updates=2000)
    base.update(overrides)
    return TrainConfig(**base)


def _parse_value(raw: str, typ):
    if typ in (bool, "bool"):
        low = raw.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"not a boolean: {raw!r}")
        return low in ("true", "1", "yes")
    if typ in (int, "int"):
        return int(raw)
    if typ in (float, "float"):
        return float(raw)
    return raw


def load_config(path) -> TrainConfig:
    """Read a flat ``key = value`` file; every TrainConfig field must be present."""
    fields = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (t.strip() for t in line.split("=", 1))
        if key not in fields:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _parse_value(raw, fields[key])
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    missing = [k for k in fields if k not in values]
    if missing:
        raise ConfigError(f"missing config key(s): {', '.join(missing)}")
    return TrainConfig(**values)


def dump_config(cfg: TrainConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ advantages

def compute_advantages(batch: RolloutBatch, alpha: float, reward_scale: float = 1.0):
    """Undiscounted reward-to-go of ``R + alpha * R_div`` minus the stored value.

    Returns ``(advantages, returns)`` arrays per trajectory; ``returns`` is the
    value-regression target.
    """
    out = []
    for tr in batch:
        r = np.array([st.reward + alpha * st.div_reward for st in tr.steps], dtype=np.float64)
        r *= reward_scale
        ret = np.cumsum(r[::-1])[::-1].copy()
        v = np.array([st.value for st in tr.steps], dtype=np.float64)
        out.append((ret - v, ret))
    return out


# ------------------------------------------------------------------------ loss

@dataclass
class Minibatch:
    batch: Batch
    actions: np.ndarray      # per vertex row
    old_logp: np.ndarray     # per vertex row, float64
    advantages: np.ndarray   # per step
    returns: np.ndarray      # per step

    @classmethod
    def from_steps(cls, steps, advantages, returns) -> "Minibatch":
        b = Batch.pack([s.sub for s in steps], [s.features for s in steps])
        return cls(b, np.concatenate([s.actions for s in steps]).astype(np.int64),
                   np.concatenate([s.logp for s in steps]).astype(np.float64),
                   np.asarray(advantages, dtype=np.float64), np.asarray(returns, dtype=np.float64))


def ppo_loss(tape: nn.Tape, store: nn.ParamStore, mb: Minibatch, clip_eps=0.2, value_coef=0.5,
             entropy_coef=0.0, cfg: NetConfig | None = None):
    """Clipped surrogate with the clip applied to every vertex's ratio before the product.

    Products of ratios are handled as sums of log-ratios; the min of the two
    surrogate branches is taken in log space according to the advantage sign.
    Returns ``(loss Var, stats dict)``.
    """
    logp, val = forward(store, mb.batch, tape, cfg)
    nsteps = mb.batch.num_graphs
    new = nn.astype(nn.gather_cols(logp, mb.actions), np.float64)
    diff = nn.sub(new, mb.old_logp)
    lo, hi = math.log(1 - clip_eps), math.log(1 + clip_eps)
    seg = mb.batch.segments
    log_r = nn.row_sum_pool(nn.reshape(diff, (-1, 1)), seg, nsteps)
    log_rc = nn.row_sum_pool(nn.reshape(nn.clip(diff, lo, hi), (-1, 1)), seg, nsteps)
    adv = mb.advantages.reshape(-1, 1)
    pos = np.broadcast_to(adv >= 0, log_r.shape)
    chosen = nn.select(pos, nn.minimum(log_r, log_rc), nn.maximum(log_r, log_rc))
    surrogate = nn.mul(nn.exp(chosen), adv)
    policy_loss = nn.scale(nn.mean(surrogate), -1.0)
    value_err = nn.sub(nn.astype(val, np.float64), mb.returns.reshape(-1, 1))
    value_loss = nn.mean(nn.square(value_err))
    rows = max(1, logp.shape[0])
    ent = nn.astype(nn.scale(nn.total(nn.mul(nn.exp(logp), logp)), -1.0 / rows), np.float64)
    loss = policy_loss + nn.scale(value_loss, value_coef) - nn.scale(ent, entropy_coef)
    value = float(loss.value)
    if not np.isfinite(value):
        raise TrainingError(f"non-finite PPO loss (policy={float(policy_loss.value)}, "
                            f"value={float(value_loss.value)}, entropy={float(ent.value)})")
    stats = dict(loss=value, policy_loss=float(policy_loss.value), value_loss=float(value_loss.value),
                 entropy=float(ent.value), clip_frac=float(np.mean(np.abs(diff.value) > hi)))
    return loss, stats


# ------------------------------------------------------------------ evaluation

@dataclass
class EvalResult:
    best: float
    mean: float
    best_x: np.ndarray
    feasible: bool
    time_ms: float
    solutions: list = field(default_factory=list)


def evaluate_best_of_k(policy, graphs, spec, horizon: int, k: int, rng: np.random.Generator,
                       local_search: bool = False, chunk: int = 1,
                       deterministic: bool = False) -> list[EvalResult]:
    """k independent rollouts per graph, best objective kept.

    Sample ``j`` of graph ``i`` always draws from the same child stream of
    ``rng``, so raising k only appends samples. ``chunk`` graphs are rolled
    out together; their wall time is split evenly.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    specs = [spec] * len(graphs) if isinstance(spec, ProblemSpec) else list(spec)
    if local_search and any(s.kind is not ProblemKind.MIS for s in specs):
        raise ValueError("2-improvement local search applies to MIS only")
    graph_rngs = rng.spawn(len(graphs))
    results: list[EvalResult] = []
    for start in range(0, len(graphs), chunk):
        idx = range(start, min(start + chunk, len(graphs)))
        t0 = time.perf_counter()
        rep_graphs = [graphs[i] for i in idx for _ in range(k)]
        rep_specs = [specs[i] for i in idx for _ in range(k)]
        rngs = [r for i in idx for r in graph_rngs[i].spawn(k)]
        batch = rollout(policy, rep_graphs, rep_specs, horizon, False, rng, deterministic, rngs=rngs)
        sols, objs = [], []
        for tr, g, sp_ in zip(batch, rep_graphs, rep_specs):
            x = tr.solution
            obj = tr.objective
            if local_search:
                chosen = local_search_2imp(g, np.flatnonzero(x == 1))
                x = np.zeros(g.n, dtype=np.int8)
                x[chosen] = 1
                obj = float(len(chosen))
            sols.append(x)
            objs.append(obj)
        elapsed = (time.perf_counter() - t0) * 1000 / len(idx)
        for j, i in enumerate(idx):
            o = np.array(objs[j * k:(j + 1) * k])
            b = int(np.argmax(o))
            x = sols[j * k + b]
            feas = is_independent(graphs[i], x) if specs[i].uses_cleanup else True
            results.append(EvalResult(float(o[b]), float(o.mean()), x, feas, elapsed,
                                      sols[j * k:(j + 1) * k]))
    return results


def mean_pairwise_l1(solutions) -> float:
    xs = np.array(solutions, dtype=np.int64)
    if len(xs) < 2:
        return 0.0
    d = np.abs(xs[:, None, :] - xs[None, :, :]).sum(axis=2)
    iu = np.triu_indices(len(xs), 1)
    return float(d[iu].mean())


# -------------------------------------------------------------------- training

@dataclass
class TrainResult:
    best: nn.ParamStore
    last: nn.ParamStore
    metrics: list[dict]
    best_val: float


def _validation_set(cfg: TrainConfig):
    rng = stream(cfg.seed, "val")
    graphs = [cfg.graph.sample(rng) for _ in range(cfg.val_graphs)]
    specs = [cfg.spec(g.n, rng) for g in graphs]
    return graphs, specs


def validate(store, cfg: TrainConfig, graphs, specs) -> list[EvalResult]:
    agent = Agent(store, need_value=False)
    return evaluate_best_of_k(agent, graphs, specs, cfg.horizon, cfg.val_samples,
                              stream(cfg.seed, "val-eval"), chunk=len(graphs))


def metrics_line(rec: dict) -> str:
    return json.dumps(rec, sort_keys=False)


def train(cfg: TrainConfig, out_dir=None, progress=None) -> TrainResult:
    """Run PPO; optionally write ``metrics.jsonl``, ``best.ckpt`` and ``last.ckpt`` to out_dir.

    Each update samples ``envs_per_batch`` fresh graphs, rolls out coupled
    pairs, then takes ``grad_steps`` Adam steps on minibatches of
    ``minibatch`` trajectories drawn without replacement from a shuffled order.
    """
    t_start = time.perf_counter()
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    net = NetConfig(feature_dim(cfg.problem), cfg.hidden, cfg.layers, cfg.shared_trunk)
    store = init_params(net, stream_seed(cfg.seed, "init"))
    rng = stream(cfg.seed, "train")
    model = cfg.graph
    scale = 1.0 / cfg.n_max
    val_graphs, val_specs = _validation_set(cfg)

    def run_val():
        res = validate(store, cfg, val_graphs, val_specs)
        return float(np.mean([r.best for r in res]))

    best_val = run_val()
    best = store.copy()
    last_val = best_val
    metrics: list[dict] = []
    fh = open(out / "metrics.jsonl", "w", newline="\n") if out is not None else None
    window = dict(ret=[], ent=[], loss=[])
    order: list[int] = []
    try:
        for update in range(1, cfg.total_updates + 1):
            graphs = [model.sample(rng) for _ in range(cfg.envs_per_batch)]
            specs = [cfg.spec(g.n, rng) for g in graphs]
            batch = rollout(Agent(store), graphs, specs, cfg.horizon, True, rng)
            adv = compute_advantages(batch, cfg.alpha, scale)
            trajs = batch.trajectories
            window["ret"].extend(t.total_return for t in trajs)
            order = list(rng.permutation(len(trajs)))
            for _ in range(cfg.grad_steps):
                if len(order) < min(cfg.minibatch, len(trajs)):
                    order = list(rng.permutation(len(trajs)))
                pick, order = order[:cfg.minibatch], order[cfg.minibatch:]
                steps, a_s, r_s = [], [], []
                for j in pick:
                    steps.extend(trajs[j].steps)
                    a_s.append(adv[j][0])
                    r_s.append(adv[j][1])
                mb = Minibatch.from_steps(steps, np.concatenate(a_s), np.concatenate(r_s))
                tape = nn.Tape()
                loss, stats = ppo_loss(tape, store, mb, cfg.clip_eps, cfg.value_coef,
                                       cfg.entropy_coef, net)
                store.zero_grad()
                tape.backward(loss)
                tape.flush(store)
                nn.clip_grad_norm(store, cfg.max_grad_norm)
                nn.adam_step(store, lr=cfg.lr)
                window["ent"].append(stats["entropy"])
                window["loss"].append(stats["loss"])
            if update % cfg.val_every == 0:
                last_val = run_val()
                if last_val > best_val:
                    best_val = last_val
                    best = store.copy()
            if update % cfg.log_every == 0:
                rec = dict(update=update, mean_return=float(np.mean(window["ret"])),
                           val_mean=last_val, val_best=best_val,
                           entropy=float(np.mean(window["ent"])), loss=float(np.mean(window["loss"])),
                           wall_ms=round((time.perf_counter() - t_start) * 1000, 3))
                metrics.append(rec)
                window = dict(ret=[], ent=[], loss=[])
                if fh is not None:
                    fh.write(metrics_line(rec) + "\n")
                    fh.flush()
                if progress is not None:
                    progress(rec)
    finally:
        if fh is not None:
            fh.close()
        if out is not None:
            nn.save_checkpoint(store, out / "last.ckpt")
            nn.save_checkpoint(best, out / "best.ckpt")
    return TrainResult(best, store, metrics, best_val)
