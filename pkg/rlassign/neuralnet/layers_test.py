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

from rlassign.envs.abstract_env import ActionMask
from rlassign.exceptions import ConfigurationError, DeadEndError, ShapeError
from rlassign.neuralnet import layers


class DenseForwardTest(unittest.TestCase):
  def test_identity_relu(self):
    out = layers.dense_forward(np.eye(2), np.zeros(2), np.array([1.0, -2.0]))
    np.testing.assert_array_equal([1.0, 0.0], out.value)

  def test_constant_map(self):
    out = layers.dense_forward(np.zeros((3, 1)), np.array([3.0]),
                               np.array([5.0, -1.0, 7.0]))
    np.testing.assert_array_equal([3.0], out.value)

  def test_matches_matrix_product(self):
    rng = np.random.default_rng(0)
    w, b, x = rng.normal(size=(4, 3)), rng.normal(size=3), rng.normal(size=4)
    expected = [sum(x[i] * w[i, j] for i in range(4)) + b[j]
                for j in range(3)]
    out = layers.dense_forward(w, b, x, activation='identity')
    np.testing.assert_allclose(expected, out.value, rtol=0, atol=1e-12)

  def test_shape_mismatch(self):
    with self.assertRaises(ShapeError):
      layers.dense_forward(np.eye(2), np.zeros(2), np.ones(3))
    with self.assertRaises(ShapeError):
      layers.dense_forward(np.eye(2), np.zeros(3), np.ones(2))

  def test_unknown_activation(self):
    with self.assertRaises(ConfigurationError):
      layers.dense_forward(np.eye(2), np.zeros(2), np.ones(2), 'tanh')


class Conv1dForwardTest(unittest.TestCase):
  def test_identity_kernel(self):
    seq = np.array([[0.2], [0.0], [1.0], [0.4]])
    weight = np.array([0.0, 1.0, 0.0]).reshape(3, 1, 1)
    out = layers.conv1d_forward(weight, np.zeros(1), seq)
    np.testing.assert_array_equal(seq, out.value)

  def test_zero_input(self):
    out = layers.conv1d_forward(np.ones((3, 1, 2)), np.array([-1.0, 2.0]),
                                np.zeros((5, 1)))
    np.testing.assert_array_equal(np.tile([0.0, 2.0], (5, 1)), out.value)

  def test_matches_sliding_window(self):
    rng = np.random.default_rng(1)
    seq = rng.normal(size=(6, 2))
    weight = rng.normal(size=(3, 2, 4))
    bias = rng.normal(size=4)
    padded = np.vstack([np.zeros((1, 2)), seq, np.zeros((1, 2))])
    expected = np.zeros((6, 4))
    for pos in range(6):
      for f in range(4):
        expected[pos, f] = bias[f] + sum(
            padded[pos + k, c] * weight[k, c, f]
            for k in range(3) for c in range(2))
    out = layers.conv1d_forward(weight, bias, seq, activation='identity')
    np.testing.assert_allclose(expected, out.value, rtol=0, atol=1e-12)

  def test_batched(self):
    rng = np.random.default_rng(2)
    seqs = rng.normal(size=(3, 5, 1))
    weight, bias = rng.normal(size=(3, 1, 2)), rng.normal(size=2)
    batched = layers.conv1d_forward(weight, bias, seqs).value
    for b in range(3):
      np.testing.assert_allclose(
          layers.conv1d_forward(weight, bias, seqs[b]).value, batched[b])

  def test_channel_mismatch(self):
    with self.assertRaises(ShapeError):
      layers.conv1d_forward(np.ones((3, 2, 1)), np.zeros(1), np.ones((4, 1)))


class MaskedSoftmaxTest(unittest.TestCase):
  def test_symmetric(self):
    probs = layers.masked_softmax(np.zeros(3),
                                  np.array([True, False, True]))
    np.testing.assert_allclose([0.5, 0.0, 0.5], probs, rtol=0, atol=1e-15)
    self.assertEqual(0.0, probs[1])

  def test_all_allowed(self):
    probs = layers.masked_softmax(np.zeros(2), ActionMask(np.ones(2, bool)))
    np.testing.assert_allclose([0.5, 0.5], probs, rtol=0, atol=1e-15)

  def test_large_logits(self):
    probs = layers.masked_softmax(np.array([1000.0, 999.0]),
                                  np.ones(2, bool))
    self.assertTrue(np.all(np.isfinite(probs)))
    np.testing.assert_allclose([0.7310585786300049, 0.2689414213699951],
                               probs, rtol=1e-12)

  def test_dead_end(self):
    with self.assertRaises(DeadEndError):
      layers.masked_softmax(np.zeros(2), np.zeros(2, bool))

  def test_properties(self):
    rng = np.random.default_rng(4)
    for _ in range(200):
      m = int(rng.integers(1, 12))
      logits = rng.normal(scale=5.0, size=m)
      mask = rng.random(m) < 0.6
      mask[rng.integers(m)] = True
      probs = layers.masked_softmax(logits, mask)
      self.assertTrue(np.all(probs[~mask] == 0.0))
      self.assertAlmostEqual(1.0, probs.sum(), delta=1e-9)
      np.testing.assert_allclose(
          probs, layers.masked_softmax(logits + 17.5, mask), atol=1e-12)
      shuffled = logits.copy()
      shuffled[~mask] = rng.permutation(shuffled[~mask]) + 100.0
      np.testing.assert_array_equal(
          probs, layers.masked_softmax(shuffled, mask))


if __name__ == '__main__':
  unittest.main()
