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
from __future__ import annotations

from typing import Optional

import numpy as np

from rlassign.config import TrainConfig
from rlassign.exceptions import ShapeError
from rlassign.neuralnet.policy import GradientSet, ParameterStore


class Adam(object):
  """Adam over a flat parameter vector with inverse-time step decay.

  The step size at update t (counting from 0) is lr / (1 + decay * t).
  """

  def __init__(self, size: int, lr: float = 1e-4, decay: float = 1e-3,
               beta1: float = 0.9, beta2: float = 0.999,
               eps: float = 1e-8) -> None:
    self.lr = lr
    self.decay = decay
    self.beta1 = beta1
    self.beta2 = beta2
    self.eps = eps
    self.step_index = 0
    self._m = np.zeros(size)
    self._v = np.zeros(size)

  @classmethod
  def from_config(cls, size: int, cfg: TrainConfig, n: int) -> Adam:
    return cls(size, lr=cfg.step_size(n), decay=cfg.lr_decay)

  def rate(self, step_index: Optional[int] = None) -> float:
    t = self.step_index if step_index is None else step_index
    return self.lr / (1.0 + self.decay * t)

  def update(self, params: ParameterStore, grads: GradientSet,
             step_index: Optional[int] = None) -> ParameterStore:
    """Returns the updated parameters; `params` itself is left alone.

    Args:
        params (ParameterStore): the current parameters.
        grads (GradientSet): the loss gradients, same layout.
        step_index (int): the step-size schedule position; defaults to the
          number of updates applied so far. Bias correction always uses
          that count.

    Raises:
        ShapeError: the gradients do not match the parameters.
    """
    if grads.size != params.size or grads.size != self._m.size:
      raise ShapeError(f'Cannot apply {grads.size} gradients to '
                       f'{params.size} parameters.')
    t = self.step_index
    rate = self.rate(t if step_index is None else step_index)
    g = grads.values
    self._m = self.beta1 * self._m + (1 - self.beta1) * g
    self._v = self.beta2 * self._v + (1 - self.beta2) * g * g
    m_hat = self._m / (1 - self.beta1 ** (t + 1))
    v_hat = self._v / (1 - self.beta2 ** (t + 1))
    self.step_index = t + 1
    return params.with_values(
        params.values - rate * m_hat / (np.sqrt(v_hat) + self.eps))
