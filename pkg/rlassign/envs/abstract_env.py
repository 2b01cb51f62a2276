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
"""Environment contract and the state records every environment shares."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Tuple

import numpy as np

from rlassign import decorators
from rlassign.baselines.solution import Solution
from rlassign.config import RewardConfig
from rlassign.exceptions import DeadEndError, InvalidActionError, UsageError
from rlassign.instances import Instance, default_worker_penalty


@dataclass(frozen=True)
class EnvState(object):
  """One point of an episode.

  Efforts (weights, demands) of finished or skipped entities are 0. The
  entity being served is always the lowest index with nonzero effort.
  """
  remaining_efforts: Tuple[int, ...]
  remaining_capacities: Tuple[int, ...]
  clock: int
  last_completed: Optional[int]
  current_task: Optional[int]
  used_workers: FrozenSet[int]
  cumulative_cost: float
  done: bool
  assignment: Tuple[int, ...]
  skipped: FrozenSet[int] = frozenset()
  positions: Tuple[int, ...] = ()


@dataclass(frozen=True)
class ActionMask(object):
  allowed: np.ndarray

  def __len__(self) -> int:
    return len(self.allowed)

  def any(self) -> bool:
    return bool(self.allowed.any())

  @property
  def indices(self) -> List[int]:
    return np.flatnonzero(self.allowed).tolist()


@dataclass(frozen=True)
class StepInfo(object):
  cost: float
  worker_activated: bool
  return_cost: float = 0.0
  skipped: bool = False


@dataclass(frozen=True)
class StepOutcome(object):
  reward: float
  done: bool
  info: StepInfo


@dataclass(frozen=True)
class Observation(object):
  """Network input: an (n + m, channels) sequence and (clock, last task)."""
  seq: np.ndarray
  scalars: np.ndarray


def next_task(efforts: Tuple[int, ...]) -> Optional[int]:
  return next((i for i, e in enumerate(efforts) if e > 0), None)


class AbstractEnvironment(object):
  """Abstract Environment.

  This is the contract fulfilled by every problem family. An environment is
  bound to one instance and one reward config; states are immutable values
  and `step` always returns a new one, so a single environment can run any
  number of episodes, and distinct environments can run in parallel.

  Every entity is served in index order and the action picks the worker
  (bin, vehicle) for it. A worker is allowed iff it has capacity left, can
  cover the smallest pending effort and the current effort, and (for
  assignment) is of an eligible class.

  Unimplemented functions raise a NotImplementedError() rather than simply
  'pass'.
  """
  kind: str = None

  def __init__(self, inst: Instance,
               reward_config: RewardConfig = RewardConfig(),
               scale: Optional[float] = None,
               price_scale: Optional[float] = None) -> None:
    if inst.kind != self.kind:
      raise UsageError(f'{type(self).__name__} cannot run a {inst.kind} '
                       'instance.')
    self._inst = inst
    self._reward_config = reward_config.validate()
    self._scale = scale
    self._price_scale = price_scale

  @property
  def inst(self) -> Instance:
    return self._inst

  @property
  def reward_config(self) -> RewardConfig:
    return self._reward_config

  @decorators.lazy_property
  def worker_penalty(self) -> float:
    if self._reward_config.worker_penalty is not None:
      return float(self._reward_config.worker_penalty)
    return default_worker_penalty(self._inst)

  @decorators.lazy_property
  def scale(self) -> float:
    """Normalizer for efforts and capacities (the default capacity)."""
    if self._scale:
      return float(self._scale)
    return float(max(int(self._inst.capacities.max(initial=0)), 1))

  @decorators.lazy_property
  def price_scale(self) -> float:
    """Normalizer for step prices: the dearest step plus lambda."""
    if self._price_scale:
      return float(self._price_scale)
    return max(self._max_step_cost() + self.worker_penalty, 1.0)

  def _max_step_cost(self) -> float:
    return 0.0

  def step_prices(self, state: EnvState) -> np.ndarray:
    """What giving the current entity to each worker would cost now.

    Lambda for every worker not used yet, plus the family's step cost.
    """
    fresh = np.ones(self._inst.m, dtype=bool)
    fresh[np.array(sorted(state.used_workers), dtype=np.int64)] = False
    return self.worker_penalty * fresh

  def reset(self) -> EnvState:
    """Starts an episode.

    Returns:
        EnvState: clock 0, nothing assigned, done iff nothing to serve.
    """
    efforts = tuple(int(e) for e in self._inst.demands)
    current = next_task(efforts)
    return EnvState(
        remaining_efforts=efforts,
        remaining_capacities=tuple(int(c) for c in self._inst.capacities),
        clock=0,
        last_completed=None,
        current_task=current,
        used_workers=frozenset(),
        cumulative_cost=0.0,
        done=current is None,
        assignment=tuple([-1] * self._inst.n),
        positions=self._initial_positions())

  def _initial_positions(self) -> Tuple[int, ...]:
    return ()

  def priority_preassign(self, state: EnvState
                         ) -> Tuple[EnvState, List[Tuple[int, int]]]:
    """Commits forced assignments before the policy takes over.

    The default is to commit nothing.

    Returns:
        Tuple[EnvState, List[Tuple[int, int]]]: the new state and the
          (task, worker) pairs committed.
    """
    return state, []

  def _eligible(self, task: int) -> np.ndarray:
    return np.ones(self._inst.m, dtype=bool)

  def allowed(self, state: EnvState) -> np.ndarray:
    """The boolean mask without any dead-end handling."""
    if state.done:
      raise InvalidActionError('The episode is already done.')
    caps = np.array(state.remaining_capacities, dtype=np.int64)
    efforts = np.array(state.remaining_efforts, dtype=np.int64)
    smallest = efforts[efforts > 0].min()
    current = efforts[state.current_task]
    return (caps > 0) & (caps >= smallest) & (caps >= current) & \
        self._eligible(state.current_task)

  def action_mask(self, state: EnvState) -> ActionMask:
    """The workers allowed to serve the current entity.

    Raises:
        DeadEndError: no worker can serve it.
        InvalidActionError: the episode is done.
    """
    allowed = self.allowed(state)
    if not allowed.any():
      raise DeadEndError(
          f'No worker can serve entity {state.current_task} with effort '
          f'{state.remaining_efforts[state.current_task]}.')
    return ActionMask(allowed=allowed)

  def _check_action(self, state: EnvState, action: Optional[int]) -> None:
    allowed = self.allowed(state)
    if action is None or not 0 <= action < len(allowed) or \
            not allowed[action]:
      raise InvalidActionError(
          f'Action {action} is masked for entity {state.current_task}.')

  def _advance(self, state: EnvState, action: int, cost: float,
               **changes) -> EnvState:
    """Serves the current entity with `action` and moves to the next."""
    task = state.current_task
    efforts = list(state.remaining_efforts)
    caps = list(state.remaining_capacities)
    caps[action] -= efforts[task]
    efforts[task] = 0
    assignment = list(state.assignment)
    assignment[task] = action
    current = next_task(efforts)
    return dataclasses.replace(
        state,
        remaining_efforts=tuple(efforts),
        remaining_capacities=tuple(caps),
        clock=state.clock + 1,
        last_completed=task,
        current_task=current,
        used_workers=state.used_workers | {action},
        cumulative_cost=state.cumulative_cost + cost,
        done=current is None,
        assignment=tuple(assignment),
        **changes)

  def step(self, state: EnvState, action: Optional[int]
           ) -> Tuple[EnvState, StepOutcome]:
    """Serves the current entity with worker `action`.

    Args:
        state (EnvState): a state that is not done.
        action (int): a worker allowed by `action_mask`.

    Returns:
        Tuple[EnvState, StepOutcome]: the next state and the reward.

    Raises:
        InvalidActionError: the action is masked or the episode is done.
    """
    raise NotImplementedError('Must be implemented by child class.')

  def encode_observation(self, state: EnvState,
                         cost_channel: bool = False) -> Observation:
    """Encodes a state as network input.

    The sequence is efforts then capacities, both divided by the default
    capacity. The scalars are clock / n and (last completed + 1) / (n + 1),
    with nothing completed encoded as 0.

    Args:
        state (EnvState): any state.
        cost_channel (bool): add a second channel with the step prices of
          the current entity, divided by `price_scale`, at the worker
          positions; 0 at the task positions and once the episode is done.

    Returns:
        Observation: an (n + m, channels) sequence and two scalars.
    """
    n = self._inst.n
    seq = np.array(state.remaining_efforts + state.remaining_capacities,
                   dtype=np.float64) / self.scale
    last = 0 if state.last_completed is None else state.last_completed + 1
    scalars = np.array([state.clock / n if n else 0.0, last / (n + 1)],
                       dtype=np.float64)
    if not cost_channel:
      return Observation(seq=seq.reshape(-1, 1), scalars=scalars)
    prices = np.zeros_like(seq)
    if not state.done:
      prices[n:] = self.step_prices(state) / self.price_scale
    return Observation(seq=np.stack([seq, prices], axis=1), scalars=scalars)

  def solution(self, state: EnvState) -> Solution:
    """Converts a finished episode into a `Solution`."""
    raise NotImplementedError('Must be implemented by child class.')
