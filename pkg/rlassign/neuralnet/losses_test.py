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
import math
import unittest

import numpy as np

from rlassign.neuralnet import losses
from rlassign.neuralnet.tensor import Tensor


class PpoClipLossTest(unittest.TestCase):
  def test_clipped_above(self):
    self.assertAlmostEqual(-2.4, losses.ppo_clip_loss(math.log(1.5), 0.0,
                                                      2.0, 0.2))

  def test_unit_ratio(self):
    for advantage in (-3.0, 0.0, 2.5):
      self.assertEqual(-advantage,
                       losses.ppo_clip_loss(-0.7, -0.7, advantage, 0.2))

  def test_clipped_below_negative_advantage(self):
    self.assertAlmostEqual(0.8, losses.ppo_clip_loss(math.log(0.5), 0.0,
                                                     -1.0, 0.2))

  def test_tensor_matches_numbers(self):
    rng = np.random.default_rng(0)
    new, old = rng.normal(size=8), rng.normal(size=8)
    advantages = rng.normal(size=8)
    as_numbers = losses.ppo_clip_loss(new, old, advantages, 0.2)
    as_tensor = losses.ppo_clip_loss(Tensor.parameter(new), old, advantages,
                                     0.2)
    self.assertIsInstance(as_tensor, Tensor)
    np.testing.assert_allclose(as_numbers, as_tensor.value, rtol=1e-14)


class MseLossTest(unittest.TestCase):
  def test_values(self):
    self.assertEqual(0.0, losses.mse_loss(3.0, 3.0))
    self.assertEqual(4.0, losses.mse_loss(0.0, 2.0))
    self.assertEqual(5.0, losses.mse_loss([0.0, 0.0], [1.0, 3.0]))

  def test_tensor(self):
    pred = Tensor.parameter(np.array([0.0, 0.0]))
    loss = losses.mse_loss(pred, np.array([1.0, 3.0]))
    self.assertEqual(5.0, loss.item())
    loss.backward()
    np.testing.assert_array_equal([-1.0, -3.0], pred.grad)


class EntropyTest(unittest.TestCase):
  def test_uniform(self):
    log_probs = np.array([np.log(0.5), 0.0, np.log(0.5)])
    mask = np.array([True, False, True])
    self.assertAlmostEqual(np.log(2.0), losses.masked_entropy(log_probs,
                                                              mask))
    self.assertAlmostEqual(
        np.log(2.0),
        losses.masked_entropy(Tensor(log_probs), mask).item())

  def test_clip_fraction(self):
    self.assertEqual(0.5, losses.clip_fraction([1.0, 1.3, 0.7, 1.1], 0.2))
    self.assertEqual(0.0, losses.clip_fraction([], 0.2))


if __name__ == '__main__':
  unittest.main()
