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
"""Batch losses, their gradients, and a finite-difference checker."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from rlassign.config import TrainConfig
from rlassign.exceptions import ShapeError
from rlassign.neuralnet import losses, policy, tensor
from rlassign.neuralnet.policy import GradientSet, ParamSpec, PolicyParams
from rlassign.neuralnet.tensor import Tensor

logger = logging.getLogger(__name__)

RELATIVE_FLOOR = 1e-2


@dataclass(frozen=True)
class Batch(object):
  """A minibatch of transitions in network layout."""
  seq: np.ndarray
  scalars: np.ndarray
  masks: np.ndarray
  actions: np.ndarray
  log_prob_old: np.ndarray
  advantages: np.ndarray
  returns: np.ndarray

  def __post_init__(self) -> None:
    size = self.seq.shape[0]
    for name in ('scalars', 'masks', 'actions', 'log_prob_old', 'advantages',
                 'returns'):
      if getattr(self, name).shape[0] != size:
        raise ShapeError(f'Batch field {name} has '
                         f'{getattr(self, name).shape[0]} rows, expected '
                         f'{size}.')

  def __len__(self) -> int:
    return self.seq.shape[0]

  def take(self, indices: Sequence[int]) -> Batch:
    indices = np.asarray(indices, dtype=np.int64)
    return Batch(**{f.name: getattr(self, f.name)[indices]
                    for f in dataclasses.fields(self)})


@dataclass(frozen=True)
class LossStats(object):
  actor_loss: float
  critic_loss: float
  entropy: float
  clip_fraction: float
  mean_ratio: float


def batch_loss(params: PolicyParams, batch: Batch, epsilon: float,
               entropy_coef: float = 0.0,
               leaves: Optional[Dict[str, Tensor]] = None
               ) -> Tuple[Tensor, LossStats]:
  """Mean clipped actor loss plus mean critic MSE, minus the entropy bonus.

  The two stacks share no parameter, so the sum differentiates each stack
  by its own loss only.
  """
  leaves = leaves if leaves is not None else params.leaves(False)
  log_probs = policy.actor_log_probs(params, batch.seq, batch.scalars,
                                     batch.masks, leaves)
  chosen = tensor.gather(log_probs, batch.actions)
  actor = losses.ppo_clip_loss(chosen, batch.log_prob_old, batch.advantages,
                               epsilon).mean()
  values = policy.critic_values(params, batch.seq, batch.scalars, leaves)
  critic = losses.mse_loss(values, batch.returns)
  entropy = losses.masked_entropy(log_probs, batch.masks).mean()
  total = actor + critic
  if entropy_coef:
    total = total - entropy * entropy_coef

  ratio = np.exp(chosen.value - batch.log_prob_old)
  return total, LossStats(
      actor_loss=actor.item(), critic_loss=critic.item(),
      entropy=entropy.item(),
      clip_fraction=losses.clip_fraction(ratio, epsilon),
      mean_ratio=float(ratio.mean()))


def backward(params: PolicyParams, batch: Batch,
             cfg: TrainConfig = TrainConfig()
             ) -> Tuple[GradientSet, LossStats]:
  """Exact gradients of the batch loss with respect to every parameter.

  Args:
      params (PolicyParams): the current network.
      batch (Batch): the transitions; `log_prob_old` are constants.
      cfg (TrainConfig): supplies epsilon and the entropy coefficient.

  Returns:
      Tuple[GradientSet, LossStats]: the gradients and the loss values.
  """
  leaves = params.leaves()
  total, stats = batch_loss(params, batch, cfg.epsilon, cfg.entropy_coef,
                            leaves)
  total.backward()
  return params.gradients(leaves), stats


def relative_error(analytic: float, numeric: float) -> float:
  return abs(analytic - numeric) / max(abs(analytic), abs(numeric),
                                       RELATIVE_FLOOR)


@dataclass(frozen=True)
class GradCheckReport(object):
  """Outcome of a finite-difference comparison.

  Coordinates whose shift changed a relu, clip or minimum branch are
  `skipped` rather than compared, as the loss is not smooth across them.
  """
  tolerance: float
  max_relative_error: float = 0.0
  checked: int = 0
  skipped: int = 0
  worst: Optional[str] = None
  per_parameter: Dict[str, float] = field(default_factory=dict)

  @property
  def passed(self) -> bool:
    return self.max_relative_error < self.tolerance


def _owner(layout: Sequence[ParamSpec], index: int) -> str:
  for spec in layout:
    if spec.offset <= index < spec.end:
      return spec.name
  return f'[{index}]'


def check_gradients(loss: Callable[[np.ndarray],
                                   Tuple[float, List[np.ndarray]]],
                    values: np.ndarray, analytic: np.ndarray,
                    tolerance: float = 1e-4, h: float = 1e-4,
                    indices: Optional[Sequence[int]] = None,
                    layout: Sequence[ParamSpec] = ()) -> GradCheckReport:
  """Compares gradients with central differences, coordinate by coordinate.

  Args:
      loss: maps a parameter vector to the loss and its branch record.
      values (np.ndarray): the point to check at.
      analytic (np.ndarray): the gradient claimed at that point.
      tolerance (float): the largest acceptable relative error.
      h (float): the difference step.
      indices (Sequence[int]): coordinates to check, all by default.
      layout (Sequence[ParamSpec]): names coordinates in the report.

  Returns:
      GradCheckReport: the comparison.
  """
  if analytic.shape != values.shape:
    raise ShapeError(f'Gradient {analytic.shape} does not match parameters '
                     f'{values.shape}.')
  _, base = loss(values)
  indices = range(values.size) if indices is None else indices
  worst_error, worst, checked, skipped = 0.0, None, 0, 0
  per_parameter: Dict[str, float] = {}
  for i in indices:
    shifted = values.copy()
    shifted[i] = values[i] + h
    up, up_branches = loss(shifted)
    shifted[i] = values[i] - h
    down, down_branches = loss(shifted)
    if not (tensor.same_branches(base, up_branches) and
            tensor.same_branches(base, down_branches)):
      skipped += 1
      continue
    error = relative_error(float(analytic[i]), (up - down) / (2 * h))
    name = _owner(layout, i)
    per_parameter[name] = max(per_parameter.get(name, 0.0), error)
    checked += 1
    if error > worst_error:
      worst_error, worst = error, name
  return GradCheckReport(tolerance=tolerance, max_relative_error=worst_error,
                         checked=checked, skipped=skipped, worst=worst,
                         per_parameter=per_parameter)


def finite_difference_check(params: PolicyParams, batch: Batch,
                            cfg: TrainConfig = TrainConfig(),
                            tolerance: float = 1e-4, h: float = 1e-4,
                            gradients: Optional[GradientSet] = None,
                            sample: Optional[int] = None,
                            seed: int = 0) -> GradCheckReport:
  """Checks `backward` (or the given gradients) against the loss itself.

  Args:
      params (PolicyParams): the network.
      batch (Batch): the transitions.
      cfg (TrainConfig): epsilon and the entropy coefficient.
      tolerance (float): the largest acceptable relative error.
      h (float): the difference step.
      gradients (GradientSet): gradients to check instead of `backward`'s.
      sample (int): shifted this many random coordinates instead of all.
      seed (int): seeds the coordinate sample.

  Returns:
      GradCheckReport: the comparison.
  """
  if gradients is None:
    gradients, _ = backward(params, batch, cfg)

  def loss(values: np.ndarray) -> Tuple[float, List[np.ndarray]]:
    with tensor.record_branches() as branches:
      total, _ = batch_loss(params.with_values(values), batch, cfg.epsilon,
                            cfg.entropy_coef)
    return total.item(), branches

  indices = None
  if sample is not None and sample < params.size:
    rng = np.random.Generator(np.random.PCG64(seed))
    indices = np.sort(rng.choice(params.size, size=sample, replace=False))
  report = check_gradients(loss, params.values, gradients.values,
                           tolerance=tolerance, h=h, indices=indices,
                           layout=params.layout)
  logger.debug('Gradient check: %d checked, %d skipped, max error %.3g '
               'at %s', report.checked, report.skipped,
               report.max_relative_error, report.worst)
  return report


def random_batch(params: PolicyParams, size: int, seed: int,
                 advantages: bool = True) -> Batch:
  """Random transitions whose old log-probs sit near the current ones.

  Every mask allows at least one worker and the recorded action is always
  an allowed one.
  """
  rng = np.random.default_rng(seed)
  seq = rng.random((size, params.seq_length, params.net.in_channels))
  scalars = rng.random((size, 2))
  masks = rng.random((size, params.m)) < 0.6
  masks[np.arange(size), rng.integers(params.m, size=size)] = True
  actions = np.array([rng.choice(np.flatnonzero(row)) for row in masks],
                     dtype=np.int64)
  current = policy.actor_log_probs(params, seq, scalars, masks).value
  return Batch(
      seq=seq, scalars=scalars, masks=masks, actions=actions,
      log_prob_old=current[np.arange(size), actions] +
      rng.normal(scale=0.3, size=size),
      advantages=rng.normal(size=size) if advantages else np.zeros(size),
      returns=rng.normal(size=size))
