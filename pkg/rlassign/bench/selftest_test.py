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
import dataclasses
import unittest
from unittest import mock

import numpy as np

from rlassign import baselines, instances
from rlassign.bench import selftest
from rlassign.bench.selftest import SuiteResult
from rlassign.envs import make_env
from rlassign.exceptions import UsageError


class SuiteResultTest(unittest.TestCase):
  def test_check(self):
    result = SuiteResult(name='demo')
    self.assertTrue(result.check(True, 'fine'))
    self.assertTrue(result.passed)
    self.assertFalse(result.check(False, 'broken'))
    self.assertFalse(result.passed)
    self.assertEqual(['broken'], result.failures)

  def test_keeps_first_failures(self):
    result = SuiteResult(name='demo')
    for i in range(selftest.FAILURES_KEPT + 5):
      result.check(False, str(i))
    self.assertEqual(selftest.FAILURES_KEPT + 5, result.failed)
    self.assertEqual(selftest.FAILURES_KEPT, len(result.failures))
    self.assertEqual('0', result.failures[0])


class ExpectedMaskTest(unittest.TestCase):
  def test_capacity_and_class(self):
    inst = instances.ApInstance(
        tasks=[instances.TaskSpec(effort=6, eligibility=['B']),
               instances.TaskSpec(effort=4, eligibility=['A'])],
        workers=[instances.WorkerSpec(capacity=c, worker_class=k)
                 for c, k in ((8, 'B'), (5, 'B'), (9, 'A'), (0, 'B'))],
        cost=[[1] * 4] * 2, seed=0)
    env = make_env(inst)
    state = env.reset()
    self.assertEqual([True, False, False, False],
                     selftest._expected_mask(env, state).tolist())

  def test_smallest_pending_item(self):
    inst = instances.BinInstance(
        items=[instances.Item(weight=5, value=1),
               instances.Item(weight=3, value=1)],
        bins=[4, 6, 0], seed=0)
    env = make_env(inst)
    state = env.reset()
    expected = selftest._expected_mask(env, state)
    self.assertEqual([False, True, False], expected.tolist())
    np.testing.assert_array_equal(env.action_mask(state).allowed, expected)


class SuitesTest(unittest.TestCase):
  def assert_passes(self, name: str, scale: float, cases: int):
    result = selftest.run_suite(name, scale=scale, seed=1)
    self.assertTrue(result.passed, result.failures)
    self.assertEqual(cases, result.cases)
    self.assertGreaterEqual(result.seconds, 0.0)

  def test_gradient_check(self):
    self.assert_passes('gradient_check', 0.03, 3)

  def test_mask_soundness(self):
    self.assert_passes('mask_soundness', 0.005, 50)

  def test_sampled_action_legality(self):
    self.assert_passes('sampled_action_legality', 0.002, 200)

  def test_env_conservation(self):
    self.assert_passes('env_conservation', 0.02, 20)

  def test_oracle_agreement(self):
    # 4 instances of each family, then 10 dominance instances.
    self.assert_passes('oracle_agreement', 0.02, 3 * 4 + 10)

  def test_serialization_roundtrip(self):
    self.assert_passes('serialization_roundtrip', 0.05, 15)

  def test_oracle_disagreement_is_reported(self):
    def off_by_one(inst, worker_penalty=None):
      solution = baselines.exact_ap(inst, worker_penalty)
      return dataclasses.replace(solution, objective=solution.objective + 1)

    with mock.patch.dict(baselines.EXACT_SOLVERS, {'ap': off_by_one}):
      result = selftest.run_suite('oracle_agreement', scale=0.02)
    self.assertFalse(result.passed)
    self.assertTrue(all(f.startswith('ap') for f in result.failures))

  def test_reproducible(self):
    first = selftest.run_suite('env_conservation', scale=0.01, seed=4)
    second = selftest.run_suite('env_conservation', scale=0.01, seed=4)
    self.assertEqual((first.cases, first.failures),
                     (second.cases, second.failures))

  def test_run_suites(self):
    results = selftest.run_suites(['serialization_roundtrip',
                                   'env_conservation'], scale=0.01)
    self.assertEqual(['serialization_roundtrip', 'env_conservation'],
                     [r.name for r in results])

  def test_unknown_suite(self):
    with self.assertRaises(UsageError):
      selftest.run_suite('everything')

  def test_bad_scale(self):
    with self.assertRaises(UsageError):
      selftest.run_suite('gradient_check', scale=0)


if __name__ == '__main__':
  unittest.main()
