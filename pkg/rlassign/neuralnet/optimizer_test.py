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

from rlassign.config import NetConfig, TrainConfig
from rlassign.exceptions import ShapeError
from rlassign.neuralnet.optimizer import Adam
from rlassign.neuralnet.policy import GradientSet, PolicyParams

TINY = NetConfig(filters=2, units=3)


class AdamTest(unittest.TestCase):
  def setUp(self):
    self.params = PolicyParams.initialize('ap', 2, 3, TINY, seed=0)

  def test_rate_decay(self):
    adam = Adam(self.params.size)
    self.assertEqual(1e-4, adam.rate(0))
    self.assertAlmostEqual(5e-5, adam.rate(1000), places=15)

  def test_zero_gradients(self):
    adam = Adam(self.params.size)
    updated = adam.update(self.params, GradientSet(self.params.layout))
    np.testing.assert_array_equal(self.params.values, updated.values)
    self.assertEqual(1, adam.step_index)

  def test_first_step_moves_by_rate(self):
    rng = np.random.default_rng(0)
    grads = GradientSet(self.params.layout,
                        rng.normal(size=self.params.size))
    before = self.params.values.copy()
    updated = Adam(self.params.size).update(self.params, grads)
    g = grads.values
    np.testing.assert_allclose(before - 1e-4 * g / (np.abs(g) + 1e-8),
                               updated.values, rtol=1e-12)
    np.testing.assert_array_equal(before, self.params.values)
    self.assertIsInstance(updated, PolicyParams)

  def test_explicit_step_index(self):
    grads = GradientSet(self.params.layout, np.ones(self.params.size))
    updated = Adam(self.params.size).update(self.params, grads,
                                            step_index=1000)
    np.testing.assert_allclose(self.params.values - 5e-5, updated.values,
                               rtol=0, atol=1e-9)

  def test_from_config(self):
    cfg = TrainConfig(lr=1e-3, lr_decay=0.01, scale_lr_by_size=True)
    adam = Adam.from_config(10, cfg, n=20)
    self.assertAlmostEqual(5e-4, adam.rate(0))
    self.assertAlmostEqual(5e-4 / 2, adam.rate(100))

  def test_shape_mismatch(self):
    with self.assertRaises(ShapeError):
      Adam(3).update(self.params, GradientSet(self.params.layout))


if __name__ == '__main__':
  unittest.main()
