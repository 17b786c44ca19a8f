"""Deferred MDP: per-vertex {exclude, include, defer} decisions with clean-up.

Rewards are differences of the partial objective, so for MIS a step's reward
is the number of vertices newly fixed to "included", and the episode return
equals the final objective exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, induced_subgraph
from .problems import (DEFERRED, EXCLUDED, INCLUDED, ProblemKind, ProblemSpec, greedy_complete,
                       partial_objective)


class EnvError(RuntimeError):
    pass


def cleanup(g: Graph, s_hat) -> np.ndarray:
    """Repair an intermediate state.

    Phase 1 (simultaneous): included vertices with an included neighbor go back
    to deferred. Phase 2: deferred vertices next to an included vertex are
    excluded.
    """
    s = np.array(s_hat, dtype=np.int8)
    a = g.adjacency
    inc = (s == INCLUDED).astype(np.int32)
    conflict = (inc == 1) & ((a @ inc) > 0)
    s[conflict] = DEFERRED
    inc = (s == INCLUDED).astype(np.int32)
    s[(s == DEFERRED) & ((a @ inc) > 0)] = EXCLUDED
    return s


class EnvState:
    """Single-graph episode. Mutated in place by :func:`step`."""

    def __init__(self, g: Graph, spec: ProblemSpec, horizon: int):
        if horizon < 1:
            raise EnvError(f"horizon must be >= 1, got {horizon}")
        if spec.kind is ProblemKind.MWIS and len(spec.weights) != g.n:
            raise EnvError(f"{len(spec.weights)} weights for {g.n} vertices")
        self.g = g
        self.spec = spec
        self.horizon = horizon
        self.s = np.full(g.n, DEFERRED, dtype=np.int8)
        self.t = 0
        self.phi = 0.0
        self.done = g.n == 0

    @property
    def deferred(self) -> np.ndarray:
        return np.flatnonzero(self.s == DEFERRED)

    @property
    def solution(self) -> np.ndarray:
        if not self.done:
            raise EnvError("episode still running")
        return self.s.copy()


def reset(g: Graph, spec: ProblemSpec, horizon: int) -> EnvState:
    return EnvState(g, spec, horizon)


def step(env: EnvState, action) -> tuple[EnvState, float, bool]:
    """Apply an action indexed by the current deferred set (ascending vertex order)."""
    if env.done:
        raise EnvError("step called on a finished episode")
    dset = env.deferred
    action = np.asarray(action)
    if action.shape != (len(dset),):
        raise EnvError(f"action has shape {action.shape}, deferred set has {len(dset)} vertices")
    if len(action) and (action.min() < 0 or action.max() > 2):
        raise EnvError("action values must be 0 (exclude), 1 (include) or 2 (defer)")
    s_hat = env.s.copy()
    s_hat[dset] = action
    s_new = cleanup(env.g, s_hat) if env.spec.uses_cleanup else s_hat
    env.t += 1
    if env.t >= env.horizon and np.any(s_new == DEFERRED):
        s_new = greedy_complete(env.spec, env.g, s_new)
    phi_new = partial_objective(env.spec, env.g, s_new)
    reward = phi_new - env.phi
    env.s = s_new
    env.phi = phi_new
    env.done = env.t >= env.horizon or not np.any(s_new == DEFERRED)
    return env, reward, env.done


def div_reward(prev: tuple[np.ndarray, np.ndarray], nxt: tuple[np.ndarray, np.ndarray]) -> float:
    """Deviation reward between two coupled copies for one lockstep transition.

    A vertex contributes ``|x_i - xbar_i|`` once, at the step where the second
    of the two copies determines it (or both do at the same step).
    """
    s, sb = prev
    s2, sb2 = nxt
    newly = ((s == DEFERRED) & (s2 != DEFERRED)) | ((sb == DEFERRED) & (sb2 != DEFERRED))
    both = (s2 != DEFERRED) & (sb2 != DEFERRED)
    hit = newly & both
    return float(np.count_nonzero(s2[hit] != sb2[hit]))


class CoupledEnv:
    """Two copies of the MDP on the same graph, stepped in lockstep."""

    def __init__(self, g: Graph, spec: ProblemSpec, horizon: int):
        self.a = reset(g, spec, horizon)
        self.b = reset(g, spec, horizon)

    @property
    def done(self) -> bool:
        return self.a.done and self.b.done

    @property
    def t(self) -> int:
        return max(self.a.t, self.b.t)

    def step(self, action_a, action_b) -> tuple[float, float, float, bool]:
        """Advance both copies; a finished copy takes ``None``. Returns (R_a, R_b, R_div, done)."""
        prev = (self.a.s.copy(), self.b.s.copy())
        ra = rb = 0.0
        if not self.a.done:
            _, ra, _ = step(self.a, action_a)
        if not self.b.done:
            _, rb, _ = step(self.b, action_b)
        return ra, rb, div_reward(prev, (self.a.s, self.b.s)), self.done


@dataclass
class Observation:
    sub: Graph
    mapping: np.ndarray
    features: np.ndarray


def observe(env: EnvState) -> Observation:
    """Deferred-vertex subgraph and its feature rows.

    Features per deferred vertex: degree in the subgraph over the maximum such
    degree (at least 1), and ``t / T``; MWIS appends the vertex weight.
    """
    if env.done:
        raise EnvError("observation of a finished episode")
    sub, mapping = induced_subgraph(env.g, env.s == DEFERRED)
    deg = sub.degrees.astype(np.float32)
    cols = [deg / max(1.0, float(deg.max(initial=0.0))),
            np.full(sub.n, env.t / env.horizon, dtype=np.float32)]
    if env.spec.kind is ProblemKind.MWIS:
        cols.append(env.spec.weights[mapping].astype(np.float32))
    return Observation(sub, mapping, np.stack(cols, axis=1).astype(np.float32))


def features(env: EnvState) -> np.ndarray:
    return observe(env).features


def feature_dim(kind) -> int:
    return 3 if ProblemKind(kind) is ProblemKind.MWIS else 2


# ------------------------------------------------------------------- rollouts

@dataclass
class Step:
    sub: Graph
    features: np.ndarray
    actions: np.ndarray
    logp: np.ndarray
    reward: float
    div_reward: float
    value: float


@dataclass
class Trajectory:
    graph_index: int
    copy: int
    steps: list[Step] = field(default_factory=list)
    solution: np.ndarray | None = None
    objective: float = 0.0

    @property
    def total_return(self) -> float:
        return float(sum(st.reward for st in self.steps))

    @property
    def total_div(self) -> float:
        return float(sum(st.div_reward for st in self.steps))


@dataclass
class RolloutBatch:
    trajectories: list[Trajectory]

    def __iter__(self):
        return iter(self.trajectories)

    def __len__(self):
        return len(self.trajectories)

    @property
    def num_steps(self) -> int:
        return sum(len(t.steps) for t in self.trajectories)

    def pairs(self):
        """Coupled (copy 0, copy 1) trajectory pairs by graph index."""
        by = {}
        for tr in self.trajectories:
            by.setdefault(tr.graph_index, {})[tr.copy] = tr
        return [(d[0], d[1]) for _, d in sorted(by.items()) if 0 in d and 1 in d]


def _specs_for(spec, count):
    if isinstance(spec, ProblemSpec):
        return [spec] * count
    spec = list(spec)
    if len(spec) != count:
        raise EnvError(f"{len(spec)} problem specs for {count} graphs")
    return spec


def rollout(policy, graphs, spec, horizon: int, coupled: bool, rng: np.random.Generator,
            deterministic: bool = False, rngs=None) -> RolloutBatch:
    """Run one episode per graph (two lockstep copies when ``coupled``).

    ``policy(observations) -> (list[PolicyOutput], values)`` is queried once per
    step for all unfinished episodes. Each trajectory samples from its own child
    generator of ``rng`` (or from ``rngs`` when given), so results do not depend
    on how many episodes share a batch.
    """
    from .agent import argmax_actions, sample_actions

    specs = _specs_for(spec, len(graphs))
    copies = 2 if coupled else 1
    envs: list[EnvState] = []
    trajs: list[Trajectory] = []
    for gi, (g, sp_) in enumerate(zip(graphs, specs)):
        for c in range(copies):
            envs.append(reset(g, sp_, horizon))
            trajs.append(Trajectory(gi, c))
    if rngs is None:
        rngs = rng.spawn(len(envs))
    while True:
        live = [i for i, e in enumerate(envs) if not e.done]
        if not live:
            break
        obs = [observe(envs[i]) for i in live]
        outs, values = policy(obs)
        prev = {i: envs[i].s.copy() for i in live}
        rewards = {}
        for k, i in enumerate(live):
            if deterministic:
                a, lp = argmax_actions(outs[k])
            else:
                a, lp = sample_actions(outs[k], rngs[i])
            _, r, _ = step(envs[i], a)
            rewards[i] = r
            trajs[i].steps.append(Step(obs[k].sub, obs[k].features, a, lp, r, 0.0, float(values[k])))
        if coupled:
            for gi in range(len(graphs)):
                ia, ib = copies * gi, copies * gi + 1
                if ia not in prev and ib not in prev:
                    continue
                sa_prev = prev.get(ia, envs[ia].s)
                sb_prev = prev.get(ib, envs[ib].s)
                d = div_reward((sa_prev, sb_prev), (envs[ia].s, envs[ib].s))
                # shared bonus; a copy that already finished takes it on its last step
                trajs[ia].steps[-1].div_reward += d
                trajs[ib].steps[-1].div_reward += d
    for e, tr in zip(envs, trajs):
        tr.solution = e.s.copy()
        tr.objective = e.phi
    return RolloutBatch(trajs)
