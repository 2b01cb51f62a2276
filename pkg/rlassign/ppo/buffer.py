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
"""Transitions, the one-step advantage, and the bounded experience buffer."""
from __future__ import annotations

import collections
import dataclasses
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, List, Optional, Sequence

import numpy as np

from rlassign.envs.abstract_env import Observation
from rlassign.exceptions import UsageError
from rlassign.neuralnet.gradients import Batch

NORMALIZE_EPS = 1e-8

ValueFn = Callable[[Sequence[Observation]], np.ndarray]


def one_step_advantage(reward: float, value: float, next_value: float,
                       gamma: float) -> float:
  """r + gamma * V(next) - V(now); pass next_value 0 for a terminal step."""
  return reward + gamma * next_value - value


def one_step_return(reward: float, next_value: float, gamma: float) -> float:
  """The critic's regression target, r + gamma * V(next)."""
  return reward + gamma * next_value


@dataclass(frozen=True)
class Experience(object):
  """One step of an episode, with what the update needs to replay it.

  `advantage` and `return_target` stay None until `with_advantage`.
  `next_obs` is None after the last step of an episode.
  """
  obs: Observation
  mask: np.ndarray
  action: int
  log_prob_old: float
  reward: float
  value: float
  next_value: float
  next_obs: Optional[Observation] = None
  advantage: Optional[float] = None
  return_target: Optional[float] = None

  def with_advantage(self, gamma: float,
                     reward_scale: float = 1.0) -> Experience:
    """Fills the advantage and target with the reward divided by
    `reward_scale`; values are read in those units too.
    """
    reward = self.reward / reward_scale
    return dataclasses.replace(
        self,
        advantage=one_step_advantage(reward, self.value, self.next_value,
                                     gamma),
        return_target=one_step_return(reward, self.next_value, gamma))


class RolloutBuffer(object):
  """The most recent `capacity` transitions, oldest evicted first."""

  def __init__(self, capacity: int = 1000) -> None:
    if capacity < 1:
      raise UsageError('The buffer capacity must be >= 1.')
    self._records = collections.deque(maxlen=capacity)

  @property
  def capacity(self) -> int:
    return self._records.maxlen

  def __len__(self) -> int:
    return len(self._records)

  def __iter__(self) -> Iterator[Experience]:
    return iter(self._records)

  @property
  def records(self) -> List[Experience]:
    return list(self._records)

  def extend(self, records: Iterable[Experience]) -> None:
    self._records.extend(records)

  def clear(self) -> None:
    self._records.clear()

  def refresh(self, gamma: float, reward_scale: float = 1.0,
              value_fn: Optional[ValueFn] = None) -> None:
    """Recomputes every advantage and return target.

    Args:
        gamma (float): the discount.
        reward_scale (float): rewards are divided by it.
        value_fn (ValueFn): when given, V(now) and V(next) of every record
          are first re-estimated with it, in two batched calls. A record
          without a next observation keeps V(next) = 0.
    """
    records = list(self._records)
    if value_fn is not None and records:
      values = np.asarray(value_fn([r.obs for r in records]), dtype=float)
      pending = [i for i, r in enumerate(records) if r.next_obs is not None]
      next_values = np.zeros(len(records))
      if pending:
        next_values[pending] = value_fn([records[i].next_obs
                                         for i in pending])
      records = [dataclasses.replace(r, value=float(v), next_value=float(nv))
                 for r, v, nv in zip(records, values, next_values)]
    self._records.clear()
    self._records.extend(r.with_advantage(gamma, reward_scale)
                         for r in records)

  def to_batch(self, normalize: bool = True) -> Batch:
    """Every stored transition as one batch.

    Args:
        normalize (bool): rescale advantages to zero mean and unit variance.

    Returns:
        Batch: the transitions in insertion order.

    Raises:
        UsageError: the buffer is empty or holds unfilled advantages.
    """
    if not self._records:
      raise UsageError('Cannot update from an empty buffer.')
    if any(r.advantage is None for r in self._records):
      raise UsageError('Advantages must be computed before an update.')
    advantages = np.array([r.advantage for r in self._records])
    if normalize:
      advantages = (advantages - advantages.mean()) / \
          (advantages.std() + NORMALIZE_EPS)
    return Batch(
        seq=np.stack([r.obs.seq for r in self._records]),
        scalars=np.stack([r.obs.scalars for r in self._records]),
        masks=np.stack([r.mask for r in self._records]),
        actions=np.array([r.action for r in self._records], dtype=np.int64),
        log_prob_old=np.array([r.log_prob_old for r in self._records]),
        advantages=advantages,
        returns=np.array([r.return_target for r in self._records]))
