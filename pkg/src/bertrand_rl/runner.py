"""Seeded runs, seed-sweep batches, and the fixed-opponent tuning protocol.

Reproducibility contract: a run is a pure function of (config, seed) within
one build. The master seed spawns three named substreams (environment init,
agent 0, agent 1), so the two learners never share exploration randomness
and batches parallelize without ordering effects.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np

from .agents import DQN, SAC, Agent, EpsilonSchedule, FixedAgent, PPOContinuous, PPODiscrete, TabularQ
from .env import ActionSpace, EnvState, PriceDuopoly, SpaceKind, logit_bounds, price_grid
from .errors import AgentDivergedError, WindowError
from .markets import EquilibriumInfo, MarketModel, demand, equilibrium_info, profit
from .metrics import WINDOW, RunClassification, classify, delta, rpdi

ALGORITHMS = ("tql", "dqn", "ppod", "ppoc", "sac")
MARKETS = ("standard", "edgeworth", "logit")
DISCRETE_ALGORITHMS = frozenset({"tql", "dqn", "ppod"})

WORKERS_ENV_VAR = "BERTRAND_RL_WORKERS"

_PAPER_T = {"tql": 2_000_000, "dqn": 200_000, "ppod": 200_000, "ppoc": 200_000, "sac": 200_000}
_PAPER_GAMMA = {"tql": 0.95, "dqn": 0.99, "ppod": 0.99, "ppoc": 0.99, "sac": 0.99}
_PAPER_ALPHA = {"tql": 0.125, "dqn": 1e-4, "ppod": 5e-5, "ppoc": 5e-5, "sac": 3e-4}
_MARKET_COST = {"standard": 0.0, "edgeworth": 0.0, "logit": 1.0}


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment; JSON-serializable field for field."""

    algorithm: str
    market: str
    T: int
    m: int = 15
    zeta: float = 0.1
    c: float = 0.0
    g: float = 2.0
    mu: float = 0.25
    k: float = 0.6
    alpha: float = 0.125
    gamma: float = 0.95
    eps_beta: Optional[float] = None  # None derives 2*ln(100)/T
    seeds: tuple = tuple(range(50))
    workers: int = 1
    keep_full_trace: bool = False
    # DQN
    buffer_size: int = 50_000
    batch_size: int = 64
    target_sync: int = 1_000
    warmup: int = 1_000
    # PPO
    rollout: int = 2048
    epochs: int = 10
    minibatch: int = 64
    clip: float = 0.2
    gae_lambda: float = 0.95
    ent_coef: float = 0.01
    vf_coef: float = 0.5
    max_grad_norm: float = 0.5
    # SAC
    sac_batch: int = 64
    sac_buffer: int = 100_000
    tau: float = 0.005
    target_entropy: float = -1.0
    start_steps: int = 1_000

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}, expected one of {ALGORITHMS}")
        if self.market not in MARKETS:
            raise ValueError(f"unknown market {self.market!r}, expected one of {MARKETS}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")

    @classmethod
    def defaults(cls, algorithm: str, market: str, **overrides) -> "ExperimentConfig":
        """Paper settings for (algorithm, market); any field overridable."""
        base = dict(
            algorithm=algorithm,
            market=market,
            T=_PAPER_T.get(algorithm, 200_000),
            gamma=_PAPER_GAMMA.get(algorithm, 0.99),
            alpha=_PAPER_ALPHA.get(algorithm, 1e-4),
            c=_MARKET_COST.get(market, 0.0),
        )
        base.update(overrides)
        return cls(**base)

    @property
    def epsilon_beta(self) -> float:
        if self.eps_beta is not None:
            return self.eps_beta
        return EpsilonSchedule.for_horizon(self.T).beta

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "seeds" in data:
            data["seeds"] = tuple(int(s) for s in data["seeds"])
        return cls(**data)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def build_market(config: ExperimentConfig) -> MarketModel:
    if config.market == "standard":
        return MarketModel.standard(c=config.c)
    if config.market == "edgeworth":
        return MarketModel.edgeworth(c=config.c, k=config.k)
    return MarketModel.logit(c=config.c, g=config.g, mu=config.mu)


def build_space(config: ExperimentConfig, eq: EquilibriumInfo) -> ActionSpace:
    """Price range per market ([0,1] fixed, logit extends the equilibrium band)."""
    if config.market == "logit":
        lo, hi = logit_bounds(eq, config.zeta)
    else:
        lo, hi = 0.0, 1.0
    if config.algorithm in DISCRETE_ALGORITHMS:
        return ActionSpace.discrete(lo, hi, config.m)
    return ActionSpace.continuous(lo, hi)


def build_agent(config: ExperimentConfig, space: ActionSpace, env: PriceDuopoly,
                rng: np.random.Generator) -> Agent:
    algo = config.algorithm
    schedule = EpsilonSchedule(config.epsilon_beta)
    if algo == "tql":
        return TabularQ(space, config.alpha, config.gamma, schedule, env.index_of)
    if algo == "dqn":
        return DQN(space, rng, alpha=config.alpha, gamma=config.gamma, schedule=schedule,
                   buffer_size=config.buffer_size, batch_size=config.batch_size,
                   target_sync=config.target_sync, warmup=config.warmup)
    ppo_kw = dict(alpha=config.alpha, gamma=config.gamma, rollout=config.rollout,
                  epochs=config.epochs, minibatch=config.minibatch, clip=config.clip,
                  gae_lambda=config.gae_lambda, ent_coef=config.ent_coef,
                  vf_coef=config.vf_coef, max_grad_norm=config.max_grad_norm)
    if algo == "ppod":
        return PPODiscrete(space, rng, **ppo_kw)
    if algo == "ppoc":
        return PPOContinuous(space, rng, **ppo_kw)
    return SAC(space, rng, alpha=config.alpha, gamma=config.gamma, tau=config.tau,
               batch_size=config.sac_batch, buffer_size=config.sac_buffer,
               target_entropy=config.target_entropy, start_steps=config.start_steps)


@dataclass
class RunTrace:
    """Retained per-step records of one run, ordered by t.

    Default retention keeps the final analysis window plus every 1000th
    earlier step as a decimated preview; full retention is opt-in.
    """

    T: int
    t: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    d0: np.ndarray
    d1: np.ndarray
    r0: np.ndarray
    r1: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def window(self) -> "RunTrace":
        """The final fixed-size analysis window; errors when incomplete."""
        mask = self.t > self.T - WINDOW
        if int(mask.sum()) != WINDOW:
            raise WindowError(
                f"trace holds {int(mask.sum())} of the {WINDOW} window steps for T={self.T}")
        return RunTrace(self.T, self.t[mask], self.p0[mask], self.p1[mask],
                        self.d0[mask], self.d1[mask], self.r0[mask], self.r1[mask])

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.t, self.p0, self.p1, self.d0, self.d1, self.r0, self.r1):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


class TraceRecorder:
    """Accumulates step records under the configured retention policy."""

    DECIMATION = 1_000

    def __init__(self, T: int, keep_full: bool = False):
        self.T = T
        self.keep_full = keep_full
        size = T if keep_full else min(T, WINDOW)
        self._ring = np.zeros((size, 7), dtype=np.float64)
        self._ring_size = size
        self._early: list = []

    def add(self, rec) -> None:
        row = (rec.t, rec.prices[0], rec.prices[1], rec.demands[0], rec.demands[1],
               rec.rewards[0], rec.rewards[1])
        if self.keep_full:
            self._ring[rec.t - 1] = row
            return
        if rec.t > self.T - WINDOW:
            self._ring[(rec.t - 1) % self._ring_size] = row
        elif rec.t % self.DECIMATION == 0:
            self._early.append(row)

    def build(self, steps_done: Optional[int] = None) -> RunTrace:
        if self.keep_full:
            rows = self._ring if steps_done is None else self._ring[:steps_done]
        else:
            ring = self._ring[self._ring[:, 0] > 0]
            early = np.array(self._early, dtype=np.float64).reshape(-1, 7)
            rows = np.concatenate([early, ring], axis=0)
            rows = rows[np.argsort(rows[:, 0], kind="stable")]
        return RunTrace(self.T, rows[:, 0].astype(np.int64), rows[:, 1], rows[:, 2],
                        rows[:, 3], rows[:, 4], rows[:, 5], rows[:, 6])


@dataclass
class RunResult:
    """One seeded run: retained trace, classification, and window indicators."""

    config_hash: str
    seed: int
    trace: RunTrace
    classification: Optional[RunClassification]
    rpdi_mean: tuple
    delta_mean: tuple
    failed: bool = False
    fail_step: Optional[int] = None

    @property
    def digest(self) -> str:
        return self.trace.digest()


AgentFactory = Callable[[ExperimentConfig, ActionSpace, PriceDuopoly, Sequence[np.random.Generator]], tuple]


def _spawn_rngs(seed: int) -> list:
    children = np.random.SeedSequence(seed).spawn(3)
    return [np.random.default_rng(c) for c in children]


def run_single(config: ExperimentConfig, seed: int,
               make_agents: Optional[AgentFactory] = None) -> RunResult:
    """Self-play run of T simultaneous steps; deterministic in (config, seed).

    ``make_agents`` injects scripted agents for harness tests; by default two
    fresh learners of the configured algorithm play each other.
    """
    model = build_market(config)
    eq = equilibrium_info(model)
    space = build_space(config, eq)
    env = PriceDuopoly(model, space)
    env_rng, rng0, rng1 = _spawn_rngs(seed)
    if make_agents is None:
        agents = (build_agent(config, space, env, rng0), build_agent(config, space, env, rng1))
    else:
        agents = make_agents(config, space, env, (rng0, rng1))
    recorder = TraceRecorder(config.T, config.keep_full_trace)
    state = env.reset(env_rng)
    failed = False
    fail_step: Optional[int] = None
    steps_done = 0
    try:
        for t in range(1, config.T + 1):
            a0 = agents[0].act(state, t, rng0)
            a1 = agents[1].act(state, t, rng1)
            next_state, record = env.step(state, a0, a1)
            recorder.add(record)
            steps_done = t
            agents[0].observe(state, a0, record.rewards[0], next_state)
            agents[1].observe(state, a1, record.rewards[1], next_state)
            state = next_state
    except AgentDivergedError as exc:
        failed = True
        fail_step = exc.step
    trace = recorder.build(steps_done if failed else None)

    classification = None
    rpdi_mean = (float("nan"), float("nan"))
    delta_mean = (float("nan"), float("nan"))
    if not failed and config.T >= WINDOW:
        win = trace.window()
        classification = classify(win.p0, win.p1, eq)
        rpdi_mean = (float(np.mean(rpdi(win.p0, eq.nash_price, eq.monopoly_price))),
                     float(np.mean(rpdi(win.p1, eq.nash_price, eq.monopoly_price))))
        delta_mean = (delta(float(np.mean(win.r0)), eq.nash_profit, eq.monopoly_profit),
                      delta(float(np.mean(win.r1)), eq.nash_profit, eq.monopoly_profit))
    return RunResult(config.config_hash(), seed, trace, classification,
                     rpdi_mean, delta_mean, failed, fail_step)


def resolve_workers(config: ExperimentConfig, workers: Optional[int] = None) -> int:
    if workers is not None:
        return max(1, workers)
    env_value = os.environ.get(WORKERS_ENV_VAR)
    if env_value:
        return max(1, int(env_value))
    return max(1, config.workers)


def run_batch(config: ExperimentConfig, seeds: Optional[Sequence[int]] = None,
              workers: Optional[int] = None) -> list:
    """Independent runs over a seed list; results come back in seed order.

    Failures of individual runs are reported in their RunResult, never fatal
    to the batch.
    """
    seeds = list(config.seeds if seeds is None else seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    n_workers = resolve_workers(config, workers)
    if n_workers == 1 or len(seeds) == 1:
        return [run_single(config, s) for s in seeds]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(partial(run_single, config), seeds))


def best_response(model: MarketModel, p_opponent: float, space: ActionSpace) -> float:
    """One-shot profit-maximizing price against a fixed opponent price.

    Discrete spaces enumerate the grid (ties break toward the lower price);
    continuous spaces refine a 1001-point grid until the bracket is below
    1e-6 wide.
    """
    def one_shot(p: float) -> float:
        return profit(model, p, demand(model, p, p_opponent))

    if space.kind is SpaceKind.DISCRETE:
        grid = price_grid(space)
        profits = [one_shot(float(p)) for p in grid]
        return float(grid[int(np.argmax(profits))])
    lo, hi = space.lower, space.upper
    while hi - lo > 1e-6:
        xs = np.linspace(lo, hi, 1001)
        vals = [one_shot(float(x)) for x in xs]
        j = int(np.argmax(vals))
        lo, hi = xs[max(j - 1, 0)], xs[min(j + 1, len(xs) - 1)]
    return 0.5 * (lo + hi)


@dataclass
class TuneEntry:
    """Ranking row for one (alpha, gamma) cell of the tuning grid."""

    alpha: float
    gamma: float
    mean_step: float
    n_converged: int
    steps: list = field(default_factory=list)


def learner_vs_fixed(config: ExperimentConfig, seed: int,
                     opponent_price: Optional[float] = None,
                     trailing: int = 1_000) -> Optional[int]:
    """Train one learner against a constant-price opponent.

    Returns the first step at which the learner's trailing mean price is
    within tolerance (one grid step, or 1% of the range for continuous
    spaces) of its best response to the opponent; None if that never
    happens within T steps.
    """
    model = build_market(config)
    eq = equilibrium_info(model)
    space = build_space(config, eq)
    env = PriceDuopoly(model, space)
    if opponent_price is None:
        opponent_price = eq.nash_price
    if space.kind is SpaceKind.DISCRETE:
        grid = price_grid(space)
        j = int(np.argmin(np.abs(grid - opponent_price)))
        opponent_action: object = j
        opponent_played = float(grid[j])
        tol = (space.upper - space.lower) / (space.m - 1)
    else:
        opponent_action = opponent_price
        opponent_played = opponent_price
        tol = 0.01 * space.span
    target = best_response(model, opponent_played, space)

    env_rng, rng0, _ = _spawn_rngs(seed)
    learner = build_agent(config, space, env, rng0)
    opponent = FixedAgent(opponent_action)
    state = env.reset(env_rng)
    recent = np.zeros(trailing, dtype=np.float64)
    rolling_sum = 0.0
    for t in range(1, config.T + 1):
        a0 = learner.act(state, t, rng0)
        a1 = opponent.act(state, t, None)
        next_state, record = env.step(state, a0, a1)
        learner.observe(state, a0, record.rewards[0], next_state)
        state = next_state
        slot = (t - 1) % trailing
        rolling_sum += record.prices[0] - recent[slot]
        recent[slot] = record.prices[0]
        if t >= trailing and abs(rolling_sum / trailing - target) <= tol:
            return t
    return None


def tune(config: ExperimentConfig, alphas: Sequence[float], gammas: Sequence[float],
         reps: int = 10, opponent_price: Optional[float] = None,
         workers: Optional[int] = None) -> list:
    """Grid tuning against a fixed-price opponent, ranked by convergence speed.

    Each (alpha, gamma) cell runs ``reps`` independently seeded repetitions;
    cells are ranked by mean convergence step with never-converged runs
    entering as T + 1.
    """
    if not alphas or not gammas:
        raise ValueError("need at least one alpha and one gamma")
    jobs = []
    for a in alphas:
        for g in gammas:
            cell_cfg = replace(config, alpha=a, gamma=g)
            for rep in range(reps):
                jobs.append((a, g, cell_cfg, rep))
    n_workers = resolve_workers(config, workers)
    if n_workers == 1:
        outcomes = [learner_vs_fixed(cfg, rep, opponent_price) for (_, _, cfg, rep) in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(partial(_tune_job, opponent_price=opponent_price),
                                     [(cfg, rep) for (_, _, cfg, rep) in jobs]))
    entries: dict = {}
    for (a, g, cfg, _), step in zip(jobs, outcomes):
        entry = entries.setdefault((a, g), TuneEntry(a, g, 0.0, 0, []))
        entry.steps.append(step)
    ranked = []
    for (a, g), entry in entries.items():
        sentinel = config.T + 1
        values = [s if s is not None else sentinel for s in entry.steps]
        entry.mean_step = float(np.mean(values))
        entry.n_converged = sum(s is not None for s in entry.steps)
        ranked.append(entry)
    ranked.sort(key=lambda e: (e.mean_step, e.alpha, e.gamma))
    return ranked


def _tune_job(job, opponent_price):
    cfg, rep = job
    return learner_vs_fixed(cfg, rep, opponent_price)
