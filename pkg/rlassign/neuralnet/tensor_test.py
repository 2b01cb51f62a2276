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
import unittest

import numpy as np

from rlassign.exceptions import DeadEndError, ShapeError
from rlassign.neuralnet import tensor
from rlassign.neuralnet.gradients import check_gradients
from rlassign.neuralnet.tensor import Tensor


def numeric_check(build, values):
  """Checks the engine's gradient of `build(Tensor) -> scalar` at values."""
  leaf = Tensor.parameter(values)
  build(leaf).backward()

  def loss(v):
    with tensor.record_branches() as branches:
      out = build(Tensor(v.reshape(values.shape))).item()
    return out, branches

  return check_gradients(loss, values.reshape(-1), leaf.grad.reshape(-1),
                         tolerance=1e-6)


class TensorArithmeticTest(unittest.TestCase):
  def test_broadcast_add(self):
    a = Tensor.parameter(np.ones((2, 3)))
    b = Tensor.parameter(np.arange(3.0))
    (a + b).sum().backward()
    np.testing.assert_array_equal(np.ones((2, 3)), a.grad)
    np.testing.assert_array_equal([2.0, 2.0, 2.0], b.grad)

  def test_reused_node(self):
    x = Tensor.parameter(np.array([3.0, -2.0]))
    (x * x).sum().backward()
    np.testing.assert_array_equal([6.0, -4.0], x.grad)

  def test_constants_reflected(self):
    x = Tensor.parameter(np.array([1.0, 2.0]))
    y = (2.0 - x) * 3.0 + np.array([1.0, 1.0])
    y.sum().backward()
    np.testing.assert_array_equal([4.0, 1.0], y.value)
    np.testing.assert_array_equal([-3.0, -3.0], x.grad)

  def test_matmul(self):
    rng = np.random.default_rng(0)
    x = Tensor.parameter(rng.normal(size=(2, 4, 3)))
    w = Tensor.parameter(rng.normal(size=(3, 5)))
    g = rng.normal(size=(2, 4, 5))
    (x @ w).backward(g)
    np.testing.assert_allclose(g @ w.value.T, x.grad)
    np.testing.assert_allclose(
        np.einsum('bli,blj->ij', x.value, g), w.grad)

  def test_matmul_shape(self):
    with self.assertRaises(ShapeError):
      Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))

  def test_non_scalar_needs_seed(self):
    with self.assertRaises(ShapeError):
      Tensor.parameter(np.ones(2)).backward()

  def test_constants_keep_no_graph(self):
    y = Tensor(np.ones(2)) * 2.0
    self.assertFalse(y.requires_grad)
    self.assertEqual((), y._parents)


class TensorKinkTest(unittest.TestCase):
  def test_relu(self):
    x = Tensor.parameter(np.array([-1.0, 0.0, 2.0]))
    with tensor.record_branches() as branches:
      y = x.relu()
    y.sum().backward()
    np.testing.assert_array_equal([0.0, 0.0, 2.0], y.value)
    np.testing.assert_array_equal([0.0, 0.0, 1.0], x.grad)
    np.testing.assert_array_equal([0, 0, 1], branches[0])

  def test_clip(self):
    x = Tensor.parameter(np.array([0.5, 1.0, 1.5]))
    y = x.clip(0.8, 1.2)
    y.sum().backward()
    np.testing.assert_array_equal([0.8, 1.0, 1.2], y.value)
    np.testing.assert_array_equal([0.0, 1.0, 0.0], x.grad)

  def test_minimum_tie_goes_first(self):
    a = Tensor.parameter(np.array([1.0, 2.0, 3.0]))
    b = Tensor.parameter(np.array([1.0, 1.0, 4.0]))
    tensor.minimum(a, b).sum().backward()
    np.testing.assert_array_equal([1.0, 0.0, 1.0], a.grad)
    np.testing.assert_array_equal([0.0, 1.0, 0.0], b.grad)

  def test_no_recording_outside_block(self):
    with tensor.record_branches() as branches:
      pass
    Tensor(np.ones(2)).relu()
    self.assertEqual([], branches)

  def test_same_branches(self):
    self.assertTrue(tensor.same_branches([np.array([1, 0])],
                                         [np.array([1, 0])]))
    self.assertFalse(tensor.same_branches([np.array([1, 0])],
                                          [np.array([0, 0])]))
    self.assertFalse(tensor.same_branches([], [np.array([0])]))


class TensorOpsTest(unittest.TestCase):
  def test_sum_mean_reshape_exp(self):
    rng = np.random.default_rng(1)
    values = rng.normal(size=(3, 4))
    report = numeric_check(
        lambda t: (t.exp().sum(axis=0) * np.arange(4.0)).mean()
        + t.reshape(4, 3).square().sum(axis=1, keepdims=True).mean(),
        values)
    self.assertTrue(report.passed, report)
    self.assertEqual(12, report.checked)

  def test_concat(self):
    a = Tensor.parameter(np.ones((2, 2)))
    b = Tensor.parameter(np.ones((2, 3)))
    out = tensor.concat([a, b], axis=-1)
    self.assertEqual((2, 5), out.shape)
    out.backward(np.arange(10.0).reshape(2, 5))
    np.testing.assert_array_equal([[0, 1], [5, 6]], a.grad)
    np.testing.assert_array_equal([[2, 3, 4], [7, 8, 9]], b.grad)

  def test_gather(self):
    t = Tensor.parameter(np.arange(6.0).reshape(2, 3))
    out = tensor.gather(t, [2, 0])
    np.testing.assert_array_equal([2.0, 3.0], out.value)
    out.sum().backward()
    np.testing.assert_array_equal([[0, 0, 1], [1, 0, 0]], t.grad)
    with self.assertRaises(ShapeError):
      tensor.gather(t, [0])

  def test_conv1d_gradients(self):
    rng = np.random.default_rng(2)
    x = rng.normal(size=(2, 5, 2))
    w = rng.normal(size=(3, 2, 4))
    b = rng.normal(size=4)
    target = rng.normal(size=(2, 5, 4))
    for which in range(3):
      args = [x, w, b]

      def build(t, which=which, args=args):
        inputs = list(args)
        inputs[which] = t
        return (tensor.conv1d(*inputs) * target).sum()
      report = numeric_check(build, args[which])
      self.assertTrue(report.passed, report)

  def test_conv1d_shapes(self):
    with self.assertRaises(ShapeError):
      tensor.conv1d(np.ones((1, 4, 2)), np.ones((3, 1, 2)), np.ones(2))
    with self.assertRaises(ShapeError):
      tensor.conv1d(np.ones((1, 4, 1)), np.ones((2, 1, 2)), np.ones(2))

  def test_conv1d_fused_relu(self):
    rng = np.random.default_rng(3)
    x, w, b = (rng.normal(size=(2, 5, 2)), rng.normal(size=(3, 2, 4)),
               rng.normal(size=4))
    np.testing.assert_allclose(np.maximum(tensor.conv1d(x, w, b).value, 0),
                               tensor.conv1d(x, w, b, relu=True).value)


class AffineTest(unittest.TestCase):
  def test_matches_unfused(self):
    rng = np.random.default_rng(4)
    x = rng.normal(size=(3, 5, 4))
    w, b = rng.normal(size=(4, 6)), rng.normal(size=6)
    fused = tensor.affine(x, w, b, relu=True).value
    np.testing.assert_allclose(np.maximum(x @ w + b, 0.0), fused)
    np.testing.assert_allclose(x @ w + b, tensor.affine(x, w, b).value)

  def test_gradients(self):
    rng = np.random.default_rng(5)
    x = rng.normal(size=(2, 3, 4))
    w, b = rng.normal(size=(4, 5)), rng.normal(size=5)
    target = rng.normal(size=(2, 3, 5))
    for which in range(3):
      args = [x, w, b]

      def build(t, which=which, args=args):
        inputs = list(args)
        inputs[which] = t
        return (tensor.affine(*inputs, relu=True) * target).sum()
      report = numeric_check(build, args[which])
      self.assertTrue(report.passed, report)

  def test_records_relu_branches(self):
    with tensor.record_branches() as branches:
      tensor.affine(np.array([[1.0, -1.0]]), np.eye(2), np.zeros(2),
                    relu=True)
    np.testing.assert_array_equal([[1, 0]], branches[0])

  def test_constant_input_gets_no_gradient(self):
    w = Tensor.parameter(np.ones((2, 3)))
    x = Tensor(np.ones((4, 2)))
    tensor.affine(x, w, np.zeros(3)).sum().backward()
    self.assertIsNone(x.grad)
    np.testing.assert_array_equal(np.full((2, 3), 4.0), w.grad)

  def test_shapes(self):
    with self.assertRaises(ShapeError):
      tensor.affine(np.ones((2, 3)), np.ones((4, 2)), np.ones(2))
    with self.assertRaises(ShapeError):
      tensor.affine(np.ones((2, 4)), np.ones((4, 2)), np.ones(3))


class MaskedLogSoftmaxTest(unittest.TestCase):
  def test_values(self):
    out = tensor.masked_log_softmax(np.array([[0.0, 5.0, 0.0]]),
                                    np.array([[True, False, True]]))
    np.testing.assert_allclose([[np.log(0.5), 0.0, np.log(0.5)]], out.value)

  def test_masked_entries_get_no_gradient(self):
    rng = np.random.default_rng(3)
    mask = np.array([[True, False, True, True], [False, True, True, False]])
    values = rng.normal(size=(2, 4))
    weights = rng.normal(size=(2, 4))
    logits = Tensor.parameter(values)
    (tensor.masked_log_softmax(logits, mask) * weights).sum().backward()
    np.testing.assert_array_equal(np.zeros(3), logits.grad[~mask])
    report = numeric_check(
        lambda t: (tensor.masked_log_softmax(t, mask) * weights).sum(),
        values)
    self.assertTrue(report.passed, report)

  def test_dead_end(self):
    with self.assertRaises(DeadEndError):
      tensor.masked_log_softmax(np.zeros((1, 2)), np.zeros((1, 2), bool))

  def test_shape(self):
    with self.assertRaises(ShapeError):
      tensor.masked_log_softmax(np.zeros((1, 2)), np.ones((1, 3), bool))


if __name__ == '__main__':
  unittest.main()
