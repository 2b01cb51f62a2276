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
"""A small reverse-mode differentiation engine over numpy arrays.

A `Tensor` holds a float64 array and, when it depends on a parameter, the
closure that maps its output gradient to the gradients of its parents.
`backward()` walks the graph in reverse topological order and leaves the
accumulated gradient in `.grad` on every parameter (leaf) tensor.

relu, clip and minimum are not differentiable at their kinks. While a
`record_branches()` block is active each of them logs the branch it took,
so a finite-difference check can tell whether it crossed a kink.
"""
from __future__ import annotations

import contextlib
from typing import (Callable, Iterator, List, Optional, Sequence, Tuple,
                    Union)

import numpy as np

from rlassign.exceptions import DeadEndError, ShapeError

Backward = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]
Operand = Union['Tensor', np.ndarray, float, int]

_recorders: List[List[np.ndarray]] = []


@contextlib.contextmanager
def record_branches() -> Iterator[List[np.ndarray]]:
  """Collects the branch decisions of every kinked op run in the block."""
  branches: List[np.ndarray] = []
  _recorders.append(branches)
  try:
    yield branches
  finally:
    _recorders.pop()


def same_branches(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> bool:
  return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def _record(decision: np.ndarray) -> None:
  if _recorders:
    _recorders[-1].append(np.asarray(decision, dtype=np.int8))


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
  """Sums a broadcast gradient back down to `shape`."""
  while grad.ndim > len(shape):
    grad = grad.sum(axis=0)
  for axis, size in enumerate(shape):
    if size == 1 and grad.shape[axis] != 1:
      grad = grad.sum(axis=axis, keepdims=True)
  return grad


class Tensor(object):
  """An array in a differentiable computation.

  Tensors that neither are parameters nor depend on one keep no graph, so
  wrapping constants costs nothing but the array.
  """
  __array_ufunc__ = None

  def __init__(self, value: Union[np.ndarray, float, Sequence],
               parents: Tuple[Tensor, ...] = (),
               backward: Optional[Backward] = None,
               requires_grad: bool = False) -> None:
    self.value = np.asarray(value, dtype=np.float64)
    self.grad: Optional[np.ndarray] = None
    self.requires_grad = requires_grad or \
        any(p.requires_grad for p in parents)
    self._parents = parents if self.requires_grad else ()
    self._backward = backward if self.requires_grad else None

  @classmethod
  def lift(cls, x: Operand) -> Tensor:
    return x if isinstance(x, Tensor) else cls(x)

  @classmethod
  def parameter(cls, value: np.ndarray) -> Tensor:
    return cls(value, requires_grad=True)

  @property
  def shape(self) -> Tuple[int, ...]:
    return self.value.shape

  @property
  def ndim(self) -> int:
    return self.value.ndim

  def item(self) -> float:
    return float(self.value)

  def __repr__(self) -> str:
    return f'Tensor(shape={self.shape}, requires_grad={self.requires_grad})'

  def __add__(self, other: Operand) -> Tensor:
    other = Tensor.lift(other)
    a, b = self.shape, other.shape
    return Tensor(self.value + other.value, (self, other),
                  lambda g: (_unbroadcast(g, a), _unbroadcast(g, b)))

  def __radd__(self, other: Operand) -> Tensor:
    return Tensor.lift(other) + self

  def __neg__(self) -> Tensor:
    return Tensor(-self.value, (self,), lambda g: (-g,))

  def __sub__(self, other: Operand) -> Tensor:
    return self + (-Tensor.lift(other))

  def __rsub__(self, other: Operand) -> Tensor:
    return Tensor.lift(other) + (-self)

  def __mul__(self, other: Operand) -> Tensor:
    other = Tensor.lift(other)
    x, y = self.value, other.value
    return Tensor(x * y, (self, other),
                  lambda g: (_unbroadcast(g * y, x.shape),
                             _unbroadcast(g * x, y.shape)))

  def __rmul__(self, other: Operand) -> Tensor:
    return Tensor.lift(other) * self

  def __truediv__(self, other: Union[float, int]) -> Tensor:
    return self * (1.0 / other)

  def __matmul__(self, other: Operand) -> Tensor:
    """(..., k) @ (k, n) -> (..., n)."""
    other = Tensor.lift(other)
    x, y = self.value, other.value
    if x.ndim < 1 or y.ndim != 2 or x.shape[-1] != y.shape[0]:
      raise ShapeError(f'Cannot multiply {x.shape} by {y.shape}.')

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
      gx = g @ y.T
      gy = x.reshape(-1, x.shape[-1]).T @ g.reshape(-1, g.shape[-1])
      return gx, gy
    return Tensor(x @ y, (self, other), backward)

  def exp(self) -> Tensor:
    out = np.exp(self.value)
    return Tensor(out, (self,), lambda g: (g * out,))

  def square(self) -> Tensor:
    x = self.value
    return Tensor(x * x, (self,), lambda g: (2.0 * x * g,))

  def relu(self) -> Tensor:
    on = self.value > 0
    _record(on)
    return Tensor(np.where(on, self.value, 0.0), (self,),
                  lambda g: (g * on,))

  def clip(self, lo: float, hi: float) -> Tensor:
    side = np.where(self.value < lo, -1, np.where(self.value > hi, 1, 0))
    _record(side)
    inside = side == 0
    return Tensor(np.clip(self.value, lo, hi), (self,),
                  lambda g: (g * inside,))

  def sum(self, axis: Optional[int] = None, keepdims: bool = False
          ) -> Tensor:
    shape = self.shape

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
      if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
      return (np.array(np.broadcast_to(g, shape)),)
    return Tensor(self.value.sum(axis=axis, keepdims=keepdims), (self,),
                  backward)

  def mean(self, axis: Optional[int] = None) -> Tensor:
    count = self.value.size if axis is None else self.shape[axis]
    return self.sum(axis=axis) * (1.0 / max(count, 1))

  def reshape(self, *shape: int) -> Tensor:
    original = self.shape
    return Tensor(self.value.reshape(*shape), (self,),
                  lambda g: (g.reshape(original),))

  def backward(self, grad: Optional[np.ndarray] = None) -> None:
    """Accumulates d(self)/d(leaf) into every parameter's `.grad`.

    Args:
        grad (np.ndarray): the seed gradient; defaults to 1 for a scalar.

    Raises:
        ShapeError: no seed is given and the tensor is not a scalar.
    """
    if grad is None:
      if self.value.size != 1:
        raise ShapeError('backward() needs a seed for a non-scalar tensor.')
      grad = np.ones_like(self.value)
    pending = {id(self): np.asarray(grad, dtype=np.float64)}
    for node in self._topological_order():
      g = pending.pop(id(node), None)
      if g is None:
        continue
      if node._backward is None:
        node.grad = g if node.grad is None else node.grad + g
        continue
      for parent, parent_grad in zip(node._parents, node._backward(g)):
        if parent_grad is None or not parent.requires_grad:
          continue
        key = id(parent)
        pending[key] = parent_grad if key not in pending \
            else pending[key] + parent_grad

  def _topological_order(self) -> List[Tensor]:
    """Nodes reachable from self, every node before its parents."""
    order, seen = [], set()
    stack = [(self, False)]
    while stack:
      node, expanded = stack.pop()
      if expanded:
        order.append(node)
        continue
      if id(node) in seen:
        continue
      seen.add(id(node))
      stack.append((node, True))
      stack.extend((p, False) for p in node._parents if id(p) not in seen)
    return order[::-1]


def minimum(a: Operand, b: Operand) -> Tensor:
  """Elementwise minimum; ties take the first operand's branch."""
  a, b = Tensor.lift(a), Tensor.lift(b)
  first = a.value <= b.value
  _record(first)
  return Tensor(np.where(first, a.value, b.value), (a, b),
                lambda g: (_unbroadcast(g * first, a.shape),
                           _unbroadcast(g * ~first, b.shape)))


def concat(tensors: Sequence[Operand], axis: int = -1) -> Tensor:
  tensors = [Tensor.lift(t) for t in tensors]
  sizes = [t.shape[axis] for t in tensors]
  cuts = np.cumsum(sizes)[:-1]
  return Tensor(np.concatenate([t.value for t in tensors], axis=axis),
                tuple(tensors),
                lambda g: tuple(np.split(g, cuts, axis=axis)))


def gather(t: Tensor, indices: Sequence[int]) -> Tensor:
  """Row-wise pick: out[b] = t[b, indices[b]] for a (B, m) tensor."""
  indices = np.asarray(indices, dtype=np.int64)
  if t.ndim != 2 or indices.shape != (t.shape[0],):
    raise ShapeError(f'Cannot gather {indices.shape} from {t.shape}.')
  rows = np.arange(t.shape[0])

  def backward(g: np.ndarray) -> Tuple[np.ndarray]:
    grad = np.zeros(t.shape)
    grad[rows, indices] = g
    return (grad,)
  return Tensor(t.value[rows, indices], (t,), backward)


def affine(x: Operand, weight: Operand, bias: Operand,
           relu: bool = False) -> Tensor:
  """x @ weight + bias over the last axis, then optionally relu, as one node.

  The relu records its branch like `Tensor.relu`. No input gradient is
  formed when `x` does not need one.

  Raises:
      ShapeError: the shapes do not line up.
  """
  x, weight, bias = Tensor.lift(x), Tensor.lift(weight), Tensor.lift(bias)
  xv, w = x.value, weight.value
  if xv.ndim < 1 or w.ndim != 2 or xv.shape[-1] != w.shape[0] or \
          bias.shape != (w.shape[1],):
    raise ShapeError(f'Cannot apply weights {w.shape} and bias '
                     f'{bias.shape} to {xv.shape}.')
  out = xv @ w
  out += bias.value
  on = None
  if relu:
    on = out > 0
    _record(on)
    np.maximum(out, 0.0, out=out)

  def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
    if on is not None:
      g = g * on
    flat = g.reshape(-1, g.shape[-1])
    gx = g @ w.T if x.requires_grad else None
    gw = xv.reshape(-1, xv.shape[-1]).T @ flat if weight.requires_grad \
        else None
    return gx, gw, flat.sum(axis=0)
  return Tensor(out, (x, weight, bias), backward)


def conv1d(x: Operand, weight: Operand, bias: Operand,
           relu: bool = False) -> Tensor:
  """Same-length 1-D convolution, stride 1, zero padding.

  Args:
      x: (batch, length, channels) input.
      weight: (kernel, channels, filters) kernel, kernel size odd.
      bias: (filters,) bias.
      relu (bool): apply relu to the output within the same node.

  Returns:
      Tensor: (batch, length, filters).

  Raises:
      ShapeError: the shapes do not line up.
  """
  x, weight, bias = Tensor.lift(x), Tensor.lift(weight), Tensor.lift(bias)
  if x.ndim != 3 or weight.ndim != 3 or x.shape[2] != weight.shape[1] or \
          bias.shape != (weight.shape[2],) or weight.shape[0] % 2 == 0:
    raise ShapeError(f'Cannot convolve {x.shape} with kernel '
                     f'{weight.shape} and bias {bias.shape}.')
  batch, length, channels = x.shape
  kernel, _, filters = weight.shape
  pad = kernel // 2
  padded = np.pad(x.value, ((0, 0), (pad, pad), (0, 0)))
  cols = np.stack([padded[:, i:i + length] for i in range(kernel)],
                  axis=2).reshape(batch, length, kernel * channels)
  w = weight.value.reshape(kernel * channels, filters)
  out = cols @ w
  out += bias.value
  on = None
  if relu:
    on = out > 0
    _record(on)
    np.maximum(out, 0.0, out=out)

  def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
    if on is not None:
      g = g * on
    gw = cols.reshape(-1, kernel * channels).T @ g.reshape(-1, filters)
    gx = None
    if x.requires_grad:
      gcols = (g @ w.T).reshape(batch, length, kernel, channels)
      gpadded = np.zeros_like(padded)
      for i in range(kernel):
        gpadded[:, i:i + length] += gcols[:, :, i]
      gx = gpadded[:, pad:pad + length]
    return gx, gw.reshape(weight.shape), g.sum(axis=(0, 1))
  return Tensor(out, (x, weight, bias), backward)


def masked_log_softmax(logits: Operand, mask: np.ndarray) -> Tensor:
  """Log-softmax over the allowed entries of the last axis.

  Masked entries hold 0 and get no gradient; -inf never appears.

  Raises:
      ShapeError: mask and logits differ in shape.
      DeadEndError: a row has no allowed entry.
  """
  logits = Tensor.lift(logits)
  mask = np.asarray(mask, dtype=bool)
  if mask.shape != logits.shape:
    raise ShapeError(f'Mask {mask.shape} does not match logits '
                     f'{logits.shape}.')
  if not np.all(mask.any(axis=-1)):
    raise DeadEndError('Every action is masked.')
  top = np.where(mask, logits.value, -np.inf).max(axis=-1, keepdims=True)
  shifted = np.where(mask, logits.value - top, 0.0)
  exps = np.where(mask, np.exp(shifted), 0.0)
  total = exps.sum(axis=-1, keepdims=True)
  probs = exps / total

  def backward(g: np.ndarray) -> Tuple[np.ndarray]:
    g = np.where(mask, g, 0.0)
    return (np.where(mask, g - probs * g.sum(axis=-1, keepdims=True), 0.0),)
  return Tensor(np.where(mask, shifted - np.log(total), 0.0), (logits,),
                backward)
