# Copyright 2024 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""The PPO update loop and training driver."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json

from rlassign import baselines, instances
from rlassign.baselines.solution import Solution, relative_gap
from rlassign.config import RewardConfig, RunConfig, TrainConfig
from rlassign.envs import Observation, make_env
from rlassign.exceptions import InfeasibleError
from rlassign.instances import Instance
from rlassign.neuralnet import checkpoint
from rlassign.neuralnet.checkpoint import CheckpointHeader
from rlassign.neuralnet.gradients import backward
from rlassign.neuralnet.optimizer import Adam
from rlassign.neuralnet.policy import (PolicyParams, critic_values,
                                       stack_observations)
from rlassign.ppo.agent import GREEDY, collect_episode, decode
from rlassign.ppo.buffer import RolloutBuffer

logger = logging.getLogger(__name__)

InstanceSource = Callable[[int], Instance]

EXACT = 'exact'
GREEDY_REFERENCE = 'greedy'
MIXED = 'mixed'


@dataclass_json
@dataclass(frozen=True)
class UpdateStats(object):
  """Loss curves of one update, one entry per epoch."""
  actor_losses: List[float] = field(default_factory=list)
  critic_losses: List[float] = field(default_factory=list)
  clip_fraction: float = 0.0
  batches: int = 0

  @property
  def actor_loss(self) -> Optional[float]:
    return self.actor_losses[-1] if self.actor_losses else None

  @property
  def critic_loss(self) -> Optional[float]:
    return self.critic_losses[-1] if self.critic_losses else None


@dataclass_json
@dataclass(frozen=True)
class TrainLogRecord(object):
  """One line of the training log.

  `eval_gap` is the mean per-instance gap to `eval_reference`.
  """
  episode: int
  reward: float
  steps: int
  actor_loss: Optional[float] = None
  critic_loss: Optional[float] = None
  clip_fraction: Optional[float] = None
  eval_objective: Optional[float] = None
  eval_gap: Optional[float] = None
  eval_reference: Optional[str] = None


@dataclass
class TrainedPolicy(object):
  """The best network found, its checkpoint header and the training log."""
  params: PolicyParams
  header: CheckpointHeader
  history: List[TrainLogRecord] = field(default_factory=list)

  def to_bytes(self) -> bytes:
    return checkpoint.encode_checkpoint(self.params, self.header)

  @classmethod
  def from_bytes(cls, data: bytes) -> TrainedPolicy:
    params, header = checkpoint.decode_checkpoint(data)
    return cls(params=params, header=header)

  @property
  def reward_config(self) -> RewardConfig:
    return self.header.reward


def update_policy(params: PolicyParams, buffer: RolloutBuffer,
                  cfg: TrainConfig, optimizer: Adam,
                  rng: np.random.Generator,
                  step_index: Optional[int] = None
                  ) -> Tuple[PolicyParams, UpdateStats]:
  """Runs the PPO epochs over the buffer.

  Each epoch shuffles the buffer and takes one optimizer step per batch of
  at most `batch_size` transitions. Log-probabilities of the current
  network are compared against the stored ones.

  Args:
      params (PolicyParams): the network to improve.
      buffer (RolloutBuffer): transitions with advantages filled.
      cfg (TrainConfig): epochs, batch size, epsilon, normalization.
      optimizer (Adam): carries the moments and the decay schedule.
      rng (np.random.Generator): drives the shuffles.
      step_index (int): the learning-rate schedule position for every step
        of this update; the optimizer's own count by default.

  Returns:
      Tuple[PolicyParams, UpdateStats]: the new network and the losses.

  Raises:
      UsageError: the buffer is empty.
  """
  batch = buffer.to_batch(normalize=cfg.normalize_advantages)
  actor_losses, critic_losses, clipped = [], [], []
  for _ in range(cfg.epochs_per_episode):
    order = rng.permutation(len(batch))
    epoch_actor, epoch_critic = [], []
    for start in range(0, len(batch), cfg.batch_size):
      part = batch.take(order[start:start + cfg.batch_size])
      grads, stats = backward(params, part, cfg)
      params = optimizer.update(params, grads, step_index)
      epoch_actor.append(stats.actor_loss)
      epoch_critic.append(stats.critic_loss)
      clipped.append(stats.clip_fraction)
    actor_losses.append(float(np.mean(epoch_actor)))
    critic_losses.append(float(np.mean(epoch_critic)))
  return params, UpdateStats(
      actor_losses=actor_losses, critic_losses=critic_losses,
      clip_fraction=float(np.mean(clipped)) if clipped else 0.0,
      batches=len(clipped))


def evaluate(params: PolicyParams, insts: Sequence[Instance],
             reward_config: RewardConfig = RewardConfig()) -> List[Solution]:
  """Greedy solutions of every instance."""
  return [decode(params, inst, reward_config, mode=GREEDY) for inst in insts]


def reference_objectives(kind: str, insts: Sequence[Instance],
                         worker_penalty: Optional[float] = None
                         ) -> Tuple[List[float], Optional[str]]:
  """Exact objectives where the size allows, greedy ones above it.

  Returns:
      Tuple[List[float], str]: one objective per instance, and 'exact',
        'greedy' or 'mixed' for what produced them (None without
        instances).
  """
  limit = baselines.EXACT_LIMITS[kind]
  objectives, used = [], set()
  for inst in insts:
    name = EXACT if inst.n <= limit else GREEDY_REFERENCE
    solvers = baselines.EXACT_SOLVERS if name == EXACT else \
        baselines.GREEDY_SOLVERS
    objectives.append(solvers[kind](inst,
                                    worker_penalty=worker_penalty).objective)
    used.add(name)
  if not used:
    return objectives, None
  return objectives, used.pop() if len(used) == 1 else MIXED


def score_policy(params: PolicyParams, insts: Sequence[Instance],
                 reference: Sequence[float],
                 reward_config: RewardConfig = RewardConfig(),
                 maximize: bool = False) -> Tuple[Optional[float], float]:
  """Greedy-decodes every instance and measures it against `reference`.

  An instance the policy cannot complete counts as an infinite gap.

  Returns:
      Tuple[Optional[float], float]: the mean objective of the completed
        instances (None if none completed) and the mean gap.
  """
  objectives, gaps = [], []
  for inst, target in zip(insts, reference):
    try:
      solution = decode(params, inst, reward_config, mode=GREEDY)
    except InfeasibleError as e:
      logger.debug('Evaluation instance %s failed: %s', inst.seed, e)
      gaps.append(math.inf)
      continue
    objectives.append(solution.objective)
    gaps.append(relative_gap(solution.objective, target, maximize))
  mean = float(np.mean(objectives)) if objectives else None
  return mean, float(np.mean(gaps)) if gaps else 0.0


def generated_source(run: RunConfig) -> InstanceSource:
  """Instances of the run's family and size, one per seed."""
  return lambda seed: instances.generate_instance(run.kind, run.n, seed,
                                                  run.gen)


def critic_estimates(params: PolicyParams,
                     observations: Sequence[Observation]) -> np.ndarray:
  """V of many observations in one batched pass."""
  return critic_values(params, *stack_observations(observations)).value


def train(run: RunConfig, source: Optional[InstanceSource] = None,
          on_record: Optional[Callable[[TrainLogRecord], None]] = None
          ) -> TrainedPolicy:
  """Trains a policy on instances of one family and size.

  Every episode draws a fresh instance, plays it with sampled actions and
  appends the transitions to the buffer. Before the update every stored
  transition is re-valued with the current critic, so advantages of older
  episodes stay in step with it. The learning rate decays once per
  episode.

  Every `eval_every` episodes, and after the last, the greedy policy is
  scored on the evaluation seeds against the exact solver where the size
  is within its limit, and the greedy heuristic above it. The network with
  the lowest mean gap is returned. With no episodes the initial network is
  returned unchanged.

  Args:
      run (RunConfig): family, size, generator, reward, network, training.
      source (InstanceSource): instance per seed; the run's generator by
        default.
      on_record (Callable): receives each log record; they are logged at
        INFO otherwise.

  Returns:
      TrainedPolicy: the best network.
  """
  run = run.validate()
  cfg = run.train
  source = source or generated_source(run)
  reward_config = run.reward_config
  maximize = run.kind == 'bin'

  seeds = np.random.SeedSequence(cfg.seed).spawn(3)
  init_seed = int(seeds[0].generate_state(1)[0])
  instance_rng, action_rng, shuffle_rng = (
      np.random.Generator(np.random.PCG64(s)) for s in seeds)

  shape = source(0)
  params = PolicyParams.initialize(run.kind, shape.n, shape.m, run.net,
                                   seed=init_seed)
  optimizer = Adam.from_config(params.size, cfg, shape.n)
  buffer = RolloutBuffer(cfg.buffer_size)

  eval_insts = [source(s) for s in cfg.eval_seeds]
  reference, reference_name = reference_objectives(
      run.kind, eval_insts, reward_config.worker_penalty)
  if eval_insts:
    logger.info('Evaluating on %d instances against %s solutions.',
                len(eval_insts), reference_name)

  def score(candidate: PolicyParams) -> Tuple[Optional[float], float]:
    return score_policy(candidate, eval_insts, reference, reward_config,
                        maximize)

  best = params.copy()
  best_gap = score(params)[1] if eval_insts else None
  history = []
  for episode in range(cfg.episodes):
    inst = source(int(instance_rng.integers(2 ** 31)))
    env = make_env(inst, reward_config)
    records = collect_episode(params, env, action_rng)
    if cfg.clear_buffer:
      buffer.clear()
    buffer.extend(records)

    stats = UpdateStats()
    if len(buffer):
      current = params
      buffer.refresh(
          cfg.gamma, cfg.reward_scale,
          value_fn=None if cfg.clear_buffer else
          lambda obs: critic_estimates(current, obs))
      params, stats = update_policy(params, buffer, cfg, optimizer,
                                    shuffle_rng, step_index=episode)

    eval_objective = eval_gap = None
    last = episode == cfg.episodes - 1
    if eval_insts and ((episode + 1) % cfg.eval_every == 0 or last):
      eval_objective, eval_gap = score(params)
      if eval_gap < best_gap:
        best, best_gap = params.copy(), eval_gap
    elif not eval_insts:
      best = params

    record = TrainLogRecord(
        episode=episode, reward=float(sum(r.reward for r in records)),
        steps=len(records), actor_loss=stats.actor_loss,
        critic_loss=stats.critic_loss,
        clip_fraction=stats.clip_fraction if stats.batches else None,
        eval_objective=eval_objective, eval_gap=eval_gap,
        eval_reference=reference_name if eval_gap is not None else None)
    history.append(record)
    if on_record:
      on_record(record)
    else:
      logger.info('%s', record.to_json())

  header = CheckpointHeader.for_params(
      best, seed=cfg.seed, eval_seeds=list(cfg.eval_seeds),
      reward=reward_config, train=cfg, gen=run.gen,
      episodes_trained=cfg.episodes, best_eval=best_gap)
  return TrainedPolicy(params=best, header=header, history=history)
