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
"""Network layers on top of the tensor engine."""
from __future__ import annotations

from typing import Dict, Union

import numpy as np

from rlassign.envs.abstract_env import ActionMask
from rlassign.exceptions import ConfigurationError, ShapeError
from rlassign.neuralnet import tensor
from rlassign.neuralnet.tensor import Operand, Tensor

# Activation name to whether the fused op applies relu.
ACTIVATIONS: Dict[str, bool] = {
    'relu': True,
    'identity': False,
}


def _activation(name: str) -> bool:
  if name not in ACTIVATIONS:
    raise ConfigurationError(f'Unknown activation {name!r}.',
                             field='activation')
  return ACTIVATIONS[name]


def dense_forward(weight: Operand, bias: Operand, x: Operand,
                  activation: str = 'relu') -> Tensor:
  """x @ W + b over the last axis, then the activation.

  Args:
      weight: (in, out) weights.
      bias: (out,) bias.
      x: (..., in) input.
      activation (str): 'relu' or 'identity'.

  Returns:
      Tensor: (..., out).

  Raises:
      ShapeError: the input width or the bias does not match the weights.
  """
  weight, bias, x = Tensor.lift(weight), Tensor.lift(bias), Tensor.lift(x)
  if weight.ndim != 2 or x.ndim < 1 or x.shape[-1] != weight.shape[0] or \
          bias.shape != (weight.shape[1],):
    raise ShapeError(f'Dense layer {weight.shape} + {bias.shape} cannot '
                     f'take input {x.shape}.')
  return tensor.affine(x, weight, bias, relu=_activation(activation))


def conv1d_forward(weight: Operand, bias: Operand, seq: Operand,
                   activation: str = 'relu') -> Tensor:
  """Same-length convolution of a (length, channels) sequence.

  A 2-D input is treated as a batch of one and returned as such.
  """
  seq = Tensor.lift(seq)
  single = seq.ndim == 2
  if single:
    seq = seq.reshape(1, *seq.shape)
  if seq.ndim != 3 or seq.shape[1] < 1:
    raise ShapeError(f'Cannot convolve a sequence of shape {seq.shape}.')
  out = tensor.conv1d(seq, weight, bias, relu=_activation(activation))
  return out.reshape(*out.shape[1:]) if single else out


def masked_softmax(logits: Union[Operand, np.ndarray],
                   mask: Union[ActionMask, np.ndarray]) -> np.ndarray:
  """Probabilities over the allowed entries; masked entries are exactly 0.

  Raises:
      DeadEndError: every entry is masked.
      ShapeError: mask and logits differ in shape.
  """
  allowed = mask.allowed if isinstance(mask, ActionMask) else \
      np.asarray(mask, dtype=bool)
  log_probs = tensor.masked_log_softmax(Tensor.lift(logits).value, allowed)
  return np.where(allowed, np.exp(log_probs.value), 0.0)
