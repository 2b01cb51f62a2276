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
"""Running a policy: action choice, training episodes and inference."""
from __future__ import annotations

import dataclasses
import logging
from typing import List, Optional

import numpy as np

from rlassign import instances
from rlassign.baselines.solution import (Solution, make_solution,
                                         validate_solution)
from rlassign.config import RewardConfig
from rlassign.envs import (AbstractEnvironment, EnvState, Observation,
                           make_env)
from rlassign.exceptions import ConfigurationError, ShapeError, UsageError
from rlassign.instances import ApInstance, Instance, default_worker_penalty
from rlassign.neuralnet.policy import (PolicyParams, actor_forward,
                                       critic_forward)
from rlassign.ppo.buffer import Experience

logger = logging.getLogger(__name__)

GREEDY = 'greedy'
SAMPLE = 'sample'
MODES = (GREEDY, SAMPLE)


def choose(probs: np.ndarray, mode: str,
           rng: Optional[np.random.Generator] = None) -> int:
  """Greedy takes the most probable action, the lowest index on ties."""
  if mode == GREEDY:
    return int(np.argmax(probs))
  if mode == SAMPLE:
    if rng is None:
      raise UsageError('Sampling needs a random generator.')
    return int(rng.choice(len(probs), p=probs))
  raise UsageError(f'Unknown action mode {mode!r}; expected one of {MODES}.')


def observe(params: PolicyParams, env: AbstractEnvironment,
            state: EnvState) -> Observation:
  """Encodes a state with the channels `params` was built for."""
  return env.encode_observation(state,
                                cost_channel=params.net.cost_channel)


def act(params: PolicyParams, env: AbstractEnvironment, state: EnvState,
        mode: str = GREEDY, rng: Optional[np.random.Generator] = None
        ) -> int:
  """Picks a worker for the current entity; always one the mask allows.

  Raises:
      DeadEndError: no worker is allowed.
  """
  mask = env.action_mask(state)
  probs, _ = actor_forward(params, observe(params, env, state), mask)
  return choose(probs, mode, rng)


def collect_episode(params: PolicyParams, env: AbstractEnvironment,
                    rng: np.random.Generator) -> List[Experience]:
  """Plays one sampled episode and records every policy decision.

  Pre-assigned tasks and skipped items are not decisions and leave no
  record. V of a terminal state is taken as 0; every other record keeps
  the next observation so its values can be re-estimated later.

  Args:
      params (PolicyParams): the acting network.
      env (AbstractEnvironment): the environment, shaped like the network.
      rng (np.random.Generator): drives the action sampling.

  Returns:
      List[Experience]: the transitions, advantages not yet computed.

  Raises:
      DeadEndError: the episode reached an unservable state.
  """
  state, _ = env.priority_preassign(env.reset())
  records = []
  while not state.done:
    mask = env.action_mask(state)
    if not mask.any():
      state, _ = env.step(state, None)
      continue
    obs = observe(params, env, state)
    probs, log_probs = actor_forward(params, obs, mask)
    action = choose(probs, SAMPLE, rng)
    value = critic_forward(params, obs)
    state, outcome = env.step(state, action)
    next_obs = None if state.done else observe(params, env, state)
    next_value = 0.0 if next_obs is None else \
        critic_forward(params, next_obs)
    records.append(Experience(
        obs=obs, mask=mask.allowed, action=action,
        log_prob_old=float(log_probs[action]), reward=outcome.reward,
        value=value, next_value=next_value, next_obs=next_obs))
  return records


def _play(params: PolicyParams, env: AbstractEnvironment, mode: str,
          rng: Optional[np.random.Generator]) -> EnvState:
  state, _ = env.priority_preassign(env.reset())
  while not state.done:
    if not env.action_mask(state).any():
      state, _ = env.step(state, None)
      continue
    state, _ = env.step(state, act(params, env, state, mode, rng))
  return state


def _padded(params: PolicyParams, inst: Instance) -> Instance:
  try:
    return instances.pad_instance(inst, params.n, params.m)
  except ConfigurationError as e:
    raise ShapeError(f'A {params.n} x {params.m} policy cannot solve a '
                     f'{inst.n} x {inst.m} instance.') from e


def decode(params: PolicyParams, inst: Instance,
           reward_config: RewardConfig = RewardConfig(),
           mode: str = GREEDY, rng: Optional[np.random.Generator] = None,
           scale: Optional[float] = None) -> Solution:
  """Solves an instance with a trained policy, without any training.

  Assignment instances are split into eligibility clusters and solved in
  order; a worker shared by several clusters keeps the capacity earlier
  clusters left it. Each cluster, and every bin or routing instance, is
  padded to the policy's shape.

  Args:
      params (PolicyParams): the trained network.
      inst (Instance): the instance, no larger than the network's shape.
      reward_config (RewardConfig): lambda and the depot return.
      mode (str): 'greedy' or 'sample'.
      rng (np.random.Generator): needed when sampling.
      scale (float): observation normalizer, the largest capacity by
        default. Step prices are normalized over the whole instance too,
        so every cluster sees them on one scale.

  Returns:
      Solution: the validated solution.

  Raises:
      ShapeError: the instance does not fit the network or its family.
      InfeasibleError: a cluster or episode cannot be completed.
  """
  if inst.kind != params.kind:
    raise ShapeError(f'A {params.kind} policy cannot solve a {inst.kind} '
                     'instance.')
  penalty = reward_config.worker_penalty
  if penalty is None:
    penalty = default_worker_penalty(inst)
  reward_config = dataclasses.replace(reward_config, worker_penalty=penalty)
  scale = scale or float(max(int(inst.capacities.max(initial=0)), 1))
  price_scale = make_env(inst, reward_config).price_scale

  if not isinstance(inst, ApInstance):
    env = make_env(_padded(params, inst), reward_config, scale,
                   price_scale)
    state = _play(params, env, mode, rng)
    assignment = list(state.assignment[:inst.n])
    return validate_solution(
        inst, make_solution(inst, assignment, worker_penalty=penalty),
        worker_penalty=penalty)

  assignment = [-1] * inst.n
  capacities = [int(c) for c in inst.capacities]
  for tasks, workers in instances.cluster_members(inst):
    cluster = instances.sub_instance(inst, tasks, workers)
    for local, worker in enumerate(workers):
      cluster.workers[local].capacity = capacities[worker]
    env = make_env(_padded(params, cluster), reward_config, scale,
                   price_scale)
    state = _play(params, env, mode, rng)
    for local, task in enumerate(tasks):
      assignment[task] = workers[state.assignment[local]]
    for local, worker in enumerate(workers):
      capacities[worker] = state.remaining_capacities[local]
    logger.debug('Cluster of %d tasks over %d workers solved.', len(tasks),
                 len(workers))
  return validate_solution(
      inst, make_solution(inst, assignment, worker_penalty=penalty),
      worker_penalty=penalty)
