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
"""Configuration records.

Every record is a `dataclass_json` dataclass so that the run-config file is
simply `RunConfig.to_json()`; unknown keys are rejected when loading.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any, List, Mapping, Optional

from dataclasses_json import Undefined, dataclass_json
from dataclasses_json.undefined import UndefinedParameterError

from rlassign.exceptions import ConfigurationError

KINDS = ('ap', 'bin', 'vrp')


@dataclass_json(undefined=Undefined.RAISE)
@dataclass(frozen=True)
class GenConfig(object):
  """Instance generator settings.

  The defaults give `n` tasks and `n + 2` workers of capacity 15, with task
  efforts drawn from [1, 15].
  """
  worker_surplus: int = 2
  capacity_default: int = 15
  effort_cap: int = 15
  cost_range: List[int] = field(default_factory=lambda: [10, 200])
  coord_range: List[float] = field(default_factory=lambda: [0.0, 100.0])
  class_count: int = 1

  def validate(self) -> GenConfig:
    if self.worker_surplus < 0:
      raise ConfigurationError('worker_surplus must be >= 0.')
    if self.effort_cap < 1:
      raise ConfigurationError('effort_cap must be >= 1.')
    if self.effort_cap > self.capacity_default:
      raise ConfigurationError('effort_cap must not exceed capacity_default.')
    for name in ('cost_range', 'coord_range'):
      bounds = getattr(self, name)
      if len(bounds) != 2 or bounds[0] > bounds[1]:
        raise ConfigurationError(f'{name} must be [lo, hi] with lo <= hi.')
    if self.cost_range[0] < 0:
      raise ConfigurationError('cost_range must be non-negative.')
    if not 1 <= self.class_count <= 26:
      raise ConfigurationError('class_count must be in [1, 26].')
    return self


@dataclass_json(undefined=Undefined.RAISE)
@dataclass(frozen=True)
class RewardConfig(object):
  """Reward shaping.

  `worker_penalty` is the lambda charged whenever a fresh worker (bin,
  vehicle) is activated. Left as None it resolves per instance, see
  `rlassign.instances.default_worker_penalty`.
  """
  worker_penalty: Optional[float] = None
  depot_return: bool = True

  def validate(self) -> RewardConfig:
    if self.worker_penalty is not None and self.worker_penalty < 0:
      raise ConfigurationError('worker_penalty must be >= 0.')
    return self


@dataclass_json(undefined=Undefined.RAISE)
@dataclass(frozen=True)
class NetConfig(object):
  """Layer widths and the observation channels the network reads.

  With `cost_channel` the sequence carries a second channel holding, at
  each worker's position, the price of giving it the current entity. Off,
  the network sees efforts and capacities only and learns prices from the
  reward alone.
  """
  filters: int = 128
  units: int = 128
  kernel_size: int = 3
  cost_channel: bool = True

  @property
  def in_channels(self) -> int:
    return 2 if self.cost_channel else 1

  def validate(self) -> NetConfig:
    if min(self.filters, self.units) < 1:
      raise ConfigurationError('filters and units must be >= 1.')
    if self.kernel_size < 1 or self.kernel_size % 2 == 0:
      raise ConfigurationError('kernel_size must be a positive odd number.')
    return self


@dataclass_json(undefined=Undefined.RAISE)
@dataclass(frozen=True)
class TrainConfig(object):
  """PPO hyperparameters.

  The learning-rate decay advances once per episode, so every update of an
  episode runs at the same step size. Rewards are divided by
  `reward_scale` before they reach the critic and the advantages.
  """
  gamma: float = 0.99
  epsilon: float = 0.2
  lr: float = 1e-4
  lr_decay: float = 0.001
  epochs_per_episode: int = 20
  batch_size: int = 256
  buffer_size: int = 1000
  episodes: int = 300
  eval_seeds: List[int] = field(
      default_factory=lambda: list(range(100_000, 100_020)))
  eval_every: int = 10
  worker_penalty: Optional[float] = None
  entropy_coef: float = 0.0
  normalize_advantages: bool = True
  clear_buffer: bool = False
  scale_lr_by_size: bool = False
  reward_scale: float = 100.0
  seed: int = 0

  def validate(self) -> TrainConfig:
    if not 0.0 < self.gamma <= 1.0:
      raise ConfigurationError('gamma must be in (0, 1].')
    if not 0.0 < self.epsilon < 1.0:
      raise ConfigurationError('epsilon must be in (0, 1).')
    if self.batch_size < 1 or self.buffer_size < 1:
      raise ConfigurationError('batch_size and buffer_size must be >= 1.')
    if self.episodes < 0 or self.epochs_per_episode < 0:
      raise ConfigurationError('episodes and epochs must be >= 0.')
    if self.lr <= 0 or self.lr_decay < 0:
      raise ConfigurationError('lr must be > 0 and lr_decay >= 0.')
    if self.reward_scale <= 0:
      raise ConfigurationError('reward_scale must be > 0.')
    if self.eval_every < 1:
      raise ConfigurationError('eval_every must be >= 1.')
    if self.worker_penalty is not None and self.worker_penalty < 0:
      raise ConfigurationError('worker_penalty must be >= 0.')
    return self

  def step_size(self, n: int) -> float:
    """The base learning rate, lowered for larger problems when enabled."""
    if self.scale_lr_by_size and n > 10:
      return self.lr * 10 / n
    return self.lr


@dataclass_json(undefined=Undefined.RAISE)
@dataclass(frozen=True)
class RunConfig(object):
  """The run-config file: everything a `train` or `bench` run needs."""
  kind: str = 'ap'
  n: int = 10
  gen: GenConfig = field(default_factory=GenConfig)
  reward: RewardConfig = field(default_factory=RewardConfig)
  net: NetConfig = field(default_factory=NetConfig)
  train: TrainConfig = field(default_factory=TrainConfig)

  def validate(self) -> RunConfig:
    if self.kind not in KINDS:
      raise ConfigurationError(f'kind must be one of {KINDS}.')
    if self.n < 0:
      raise ConfigurationError('n must be >= 0.')
    self.gen.validate()
    self.reward.validate()
    self.net.validate()
    self.train.validate()
    return self

  @property
  def reward_config(self) -> RewardConfig:
    """The reward config with the trainer's lambda forwarded into it."""
    if self.train.worker_penalty is not None:
      return dataclasses.replace(self.reward,
                                 worker_penalty=self.train.worker_penalty)
    return self.reward

  @classmethod
  def load(cls, text: str) -> RunConfig:
    """Parses and validates a run-config file.

    Raises:
        ConfigurationError: malformed JSON, unknown keys or invalid values.
    """
    try:
      return cls.from_dict(json.loads(text)).validate()
    except (ValueError, KeyError, TypeError, UndefinedParameterError) as e:
      raise ConfigurationError(f'Invalid run config: {e}') from e

  def override(self, **sections: Mapping[str, Any]) -> RunConfig:
    """Returns a copy with the non-None values given per section replaced.

    `override(n=20, train={'episodes': 5})` replaces top-level `n` and
    `train.episodes`; None values are ignored so unset flags fall through.
    """
    changes = {}
    for name, value in sections.items():
      if isinstance(value, Mapping):
        values = {k: v for k, v in value.items() if v is not None}
        if values:
          changes[name] = dataclasses.replace(getattr(self, name), **values)
      elif value is not None:
        changes[name] = value
    return dataclasses.replace(self, **changes).validate()
