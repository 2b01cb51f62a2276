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
"""PPO losses.

Each loss takes plain numbers or arrays (and returns numbers or arrays) or
engine tensors (and returns a tensor to differentiate).
"""
from __future__ import annotations

from typing import Union

import numpy as np

from rlassign.neuralnet import tensor
from rlassign.neuralnet.tensor import Tensor

Value = Union[Tensor, np.ndarray, float]


def _any_tensor(*values: Value) -> bool:
  return any(isinstance(v, Tensor) for v in values)


def _plain(x: np.ndarray) -> Union[float, np.ndarray]:
  return float(x) if np.ndim(x) == 0 else x


def ppo_clip_loss(log_prob_new: Value, log_prob_old: Value,
                  advantage: Value, epsilon: float) -> Value:
  """The negated clipped surrogate, -min(r A, clip(r, 1-eps, 1+eps) A).

  r = exp(log_prob_new - log_prob_old). Minimizing it maximizes the
  clipped objective.
  """
  if _any_tensor(log_prob_new, log_prob_old, advantage):
    ratio = (Tensor.lift(log_prob_new) - log_prob_old).exp()
    return -tensor.minimum(ratio * advantage,
                           ratio.clip(1 - epsilon, 1 + epsilon) * advantage)
  ratio = np.exp(np.asarray(log_prob_new, dtype=np.float64) - log_prob_old)
  surrogate = np.minimum(ratio * advantage,
                         np.clip(ratio, 1 - epsilon, 1 + epsilon) * advantage)
  return _plain(-surrogate)


def mse_loss(pred: Value, target: Value) -> Value:
  """Mean squared error over every element."""
  if _any_tensor(pred, target):
    return (Tensor.lift(pred) - target).square().mean()
  diff = np.asarray(pred, dtype=np.float64) - np.asarray(target)
  return float(np.mean(np.square(diff)))


def masked_entropy(log_probs: Value, mask: np.ndarray) -> Value:
  """Entropy of each masked distribution along the last axis."""
  mask = np.asarray(mask, dtype=bool)
  if _any_tensor(log_probs):
    return -(log_probs.exp() * log_probs * mask).sum(axis=-1)
  log_probs = np.asarray(log_probs, dtype=np.float64)
  return _plain(-np.sum(np.where(mask, np.exp(log_probs) * log_probs, 0.0),
                        axis=-1))


def clip_fraction(ratio: np.ndarray, epsilon: float) -> float:
  """Share of ratios outside [1 - eps, 1 + eps]."""
  ratio = np.asarray(ratio, dtype=np.float64)
  if ratio.size == 0:
    return 0.0
  return float(np.mean(np.abs(ratio - 1.0) > epsilon))
