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
"""Actor and critic networks over one flat parameter vector.

Both stacks share one architecture. The (n + m, channels) sequence of
efforts and capacities (plus step prices when the cost channel is on) goes
through a kernel-3 convolution and a pointwise dense layer and is
flattened; the (clock, last task) pair goes through two dense layers; the
two are concatenated and fed to a linear head, m logits for the actor and
one value for the critic. The actor's logits are masked before the
softmax.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from rlassign.config import NetConfig
from rlassign.envs.abstract_env import ActionMask, Observation
from rlassign.exceptions import ShapeError
from rlassign.neuralnet import layers, tensor
from rlassign.neuralnet.tensor import Tensor

STACKS = ('actor', 'critic')
SCALAR_INPUTS = 2


@dataclass(frozen=True)
class ParamSpec(object):
  """One named parameter array inside the flat vector."""
  name: str
  shape: Tuple[int, ...]
  offset: int

  @property
  def size(self) -> int:
    return int(np.prod(self.shape, dtype=np.int64))

  @property
  def end(self) -> int:
    return self.offset + self.size


def build_layout(length: int, m: int, net: NetConfig = NetConfig()
                 ) -> Tuple[ParamSpec, ...]:
  """The parameter arrays of both stacks, actor first, in storage order.

  Args:
      length (int): the observation sequence length, n + m.
      m (int): the worker count, the actor's head width.
      net (NetConfig): layer widths.

  Returns:
      Tuple[ParamSpec, ...]: the layout.
  """
  shapes = []
  for stack, width in (('actor', m), ('critic', 1)):
    shapes += [
        (f'{stack}.seq_conv.weight', (net.kernel_size, net.in_channels,
                                        net.filters)),
        (f'{stack}.seq_conv.bias', (net.filters,)),
        (f'{stack}.seq_dense.weight', (net.filters, net.units)),
        (f'{stack}.seq_dense.bias', (net.units,)),
        (f'{stack}.scalar_dense1.weight', (SCALAR_INPUTS, net.units)),
        (f'{stack}.scalar_dense1.bias', (net.units,)),
        (f'{stack}.scalar_dense2.weight', (net.units, net.units)),
        (f'{stack}.scalar_dense2.bias', (net.units,)),
        (f'{stack}.head.weight', ((length + 1) * net.units, width)),
        (f'{stack}.head.bias', (width,)),
    ]
  layout, offset = [], 0
  for name, shape in shapes:
    spec = ParamSpec(name=name, shape=tuple(shape), offset=offset)
    layout.append(spec)
    offset = spec.end
  return tuple(layout)


class ParameterStore(object):
  """A flat float64 vector with named, shaped views into it."""

  def __init__(self, layout: Sequence[ParamSpec],
               values: Optional[np.ndarray] = None) -> None:
    self._layout = tuple(layout)
    self._index = {spec.name: spec for spec in self._layout}
    self.values = self._checked(values)

  def _checked(self, values: Optional[np.ndarray]) -> np.ndarray:
    size = self._layout[-1].end if self._layout else 0
    if values is None:
      return np.zeros(size)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (size,):
      raise ShapeError(f'Expected {size} parameter values, got '
                       f'{values.shape}.')
    return values

  @property
  def layout(self) -> Tuple[ParamSpec, ...]:
    return self._layout

  @property
  def names(self) -> List[str]:
    return [spec.name for spec in self._layout]

  @property
  def size(self) -> int:
    return self.values.size

  def spec(self, name: str) -> ParamSpec:
    return self._index[name]

  def __contains__(self, name: str) -> bool:
    return name in self._index

  def __getitem__(self, name: str) -> np.ndarray:
    """A view of one parameter array; writing to it writes the store."""
    spec = self._index[name]
    return self.values[spec.offset:spec.end].reshape(spec.shape)

  def with_values(self, values: np.ndarray) -> ParameterStore:
    """A copy of this store holding other values."""
    clone = copy.copy(self)
    clone.values = self._checked(values)
    return clone

  def copy(self) -> ParameterStore:
    return self.with_values(self.values.copy())

  def stack_slice(self, stack: str) -> slice:
    """The contiguous region of the flat vector owned by `stack`."""
    specs = [s for s in self._layout if s.name.startswith(f'{stack}.')]
    if not specs:
      return slice(0, 0)
    return slice(specs[0].offset, specs[-1].end)


class GradientSet(ParameterStore):
  """Loss gradients laid out like the parameters they belong to."""

  def norm(self, stack: Optional[str] = None) -> float:
    values = self.values if stack is None else \
        self.values[self.stack_slice(stack)]
    return float(np.linalg.norm(values))


class PolicyParams(ParameterStore):
  """Actor and critic parameters for one (kind, n, m) problem shape."""

  def __init__(self, kind: str, n: int, m: int,
               net: NetConfig = NetConfig(),
               values: Optional[np.ndarray] = None) -> None:
    self.kind = kind
    self.n = n
    self.m = m
    self.net = net.validate()
    super().__init__(build_layout(n + m, m, net), values)

  @classmethod
  def initialize(cls, kind: str, n: int, m: int,
                 net: NetConfig = NetConfig(), seed: int = 0
                 ) -> PolicyParams:
    """He-uniform weights scaled by fan-in, zero biases.

    Arrays are drawn in layout order from one PCG64 stream, so equal seeds
    give equal networks.
    """
    params = cls(kind, n, m, net)
    rng = np.random.Generator(np.random.PCG64(seed))
    for spec in params.layout:
      if spec.name.endswith('.weight'):
        fan_in = spec.size // spec.shape[-1]
        limit = np.sqrt(6.0 / fan_in)
        params[spec.name][...] = rng.uniform(-limit, limit, size=spec.shape)
    return params

  @property
  def seq_length(self) -> int:
    return self.n + self.m

  def leaves(self, requires_grad: bool = True) -> Dict[str, Tensor]:
    """One tensor per parameter array, for a differentiable forward pass."""
    make = Tensor.parameter if requires_grad else Tensor
    return {name: make(self[name]) for name in self.names}

  def gradients(self, leaves: Mapping[str, Tensor]) -> GradientSet:
    """Collects the `.grad` of each leaf after `backward()`."""
    grads = GradientSet(self.layout)
    for name, leaf in leaves.items():
      if leaf.grad is not None:
        grads[name][...] = leaf.grad
    return grads

  def check_batch(self, seq: np.ndarray, scalars: np.ndarray) -> None:
    channels = self.net.in_channels
    if seq.ndim != 3 or seq.shape[1:] != (self.seq_length, channels):
      raise ShapeError(f'Expected observation sequences of shape '
                       f'(*, {self.seq_length}, {channels}), got {seq.shape}.')
    if scalars.shape != (seq.shape[0], SCALAR_INPUTS):
      raise ShapeError(f'Expected scalars of shape ({seq.shape[0]}, '
                       f'{SCALAR_INPUTS}), got {scalars.shape}.')


def _stack_output(leaves: Mapping[str, Tensor], stack: str, seq: Tensor,
                  scalars: Tensor) -> Tensor:
  def p(name: str) -> Tensor:
    return leaves[f'{stack}.{name}']

  hidden = layers.conv1d_forward(p('seq_conv.weight'), p('seq_conv.bias'),
                                 seq)
  hidden = layers.dense_forward(p('seq_dense.weight'), p('seq_dense.bias'),
                                hidden)
  flat = hidden.reshape(seq.shape[0], -1)
  context = layers.dense_forward(p('scalar_dense1.weight'),
                                 p('scalar_dense1.bias'), scalars)
  context = layers.dense_forward(p('scalar_dense2.weight'),
                                 p('scalar_dense2.bias'), context)
  return layers.dense_forward(p('head.weight'), p('head.bias'),
                              tensor.concat([flat, context], axis=-1),
                              activation='identity')


def actor_log_probs(params: PolicyParams, seq: np.ndarray,
                    scalars: np.ndarray, masks: np.ndarray,
                    leaves: Optional[Mapping[str, Tensor]] = None
                    ) -> Tensor:
  """Batched masked log-probabilities, (B, m); masked entries hold 0."""
  params.check_batch(seq, scalars)
  masks = np.asarray(masks, dtype=bool)
  if masks.shape != (seq.shape[0], params.m):
    raise ShapeError(f'Expected masks of shape ({seq.shape[0]}, '
                     f'{params.m}), got {masks.shape}.')
  leaves = leaves if leaves is not None else params.leaves(False)
  logits = _stack_output(leaves, 'actor', Tensor(seq), Tensor(scalars))
  return tensor.masked_log_softmax(logits, masks)


def critic_values(params: PolicyParams, seq: np.ndarray,
                  scalars: np.ndarray,
                  leaves: Optional[Mapping[str, Tensor]] = None) -> Tensor:
  """Batched state values, (B,)."""
  params.check_batch(seq, scalars)
  leaves = leaves if leaves is not None else params.leaves(False)
  values = _stack_output(leaves, 'critic', Tensor(seq), Tensor(scalars))
  return values.reshape(seq.shape[0])


def stack_observations(observations: Sequence[Observation]
                       ) -> Tuple[np.ndarray, np.ndarray]:
  """(B, L, channels) sequences and (B, 2) scalars from single observations."""
  return (np.stack([o.seq for o in observations]),
          np.stack([o.scalars for o in observations]))


def _mask_array(mask: Union[ActionMask, np.ndarray]) -> np.ndarray:
  return mask.allowed if isinstance(mask, ActionMask) else \
      np.asarray(mask, dtype=bool)


def actor_forward(params: PolicyParams, obs: Observation,
                  mask: Union[ActionMask, np.ndarray]
                  ) -> Tuple[np.ndarray, np.ndarray]:
  """Action probabilities for one observation.

  Args:
      params (PolicyParams): the network.
      obs (Observation): the encoded state.
      mask (ActionMask): the allowed workers.

  Returns:
      Tuple[np.ndarray, np.ndarray]: probabilities, exactly 0 where masked,
        and log-probabilities, meaningful only where allowed (0 elsewhere).

  Raises:
      ShapeError: the observation or mask does not fit the network.
      DeadEndError: every worker is masked.
  """
  seq, scalars = stack_observations([obs])
  allowed = _mask_array(mask)
  log_probs = actor_log_probs(params, seq, scalars, allowed[None, :]).value[0]
  return np.where(allowed, np.exp(log_probs), 0.0), log_probs


def critic_forward(params: PolicyParams, obs: Observation) -> float:
  seq, scalars = stack_observations([obs])
  return float(critic_values(params, seq, scalars).value[0])
