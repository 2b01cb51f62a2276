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
from unittest import mock

from rlassign import baselines, instances
from rlassign.baselines.solution import validate_solution
from rlassign.bench import harness
from rlassign.config import NetConfig, RunConfig, TrainConfig
from rlassign.exceptions import (ConfigurationError, InfeasibleError,
                                 UsageError)
from rlassign.neuralnet.checkpoint import checkpoint_digest
from rlassign.ppo import trainer

TINY = NetConfig(filters=3, units=4)


def untrained_policy(kind: str = 'ap', n: int = 10) -> trainer.TrainedPolicy:
  return trainer.train(RunConfig(
      kind=kind, n=n, net=TINY,
      train=TrainConfig(episodes=0, eval_seeds=[], seed=3)))


class RunBenchmarkTest(unittest.TestCase):
  @classmethod
  def setUpClass(cls):
    cls.policy = untrained_policy()

  def test_every_method(self):
    report = harness.run_benchmark([10], 5, ['rl', 'exact', 'greedy'],
                                   policies={10: self.policy})
    self.assertEqual(15, len(report.rows))
    self.assertEqual({f'ap10-s{s}' for s in range(5)},
                     {r.instance_id for r in report.rows})
    for row in report.rows:
      self.assertTrue(row.feasible, row)
      self.assertGreaterEqual(row.solve_time_seconds, 0.0)
      self.assertGreaterEqual(row.gap_vs_exact, -1e-9)
      if row.method == 'exact':
        self.assertEqual(0.0, row.gap_vs_exact)

  def test_same_penalty_everywhere(self):
    report = harness.run_benchmark([6], 1, ['exact', 'greedy'])
    inst = instances.generate_ap_instance(6, seed=0)
    penalty = instances.default_worker_penalty(inst)
    for row in report.rows:
      self.assertAlmostEqual(row.cost + penalty * row.workers_used,
                             row.objective)

  def test_deterministic(self):
    def outcome():
      report = harness.run_benchmark([8], 3, ['rl', 'exact', 'greedy'],
                                     policies={8: untrained_policy(n=8)})
      return [(r.instance_id, r.method, r.objective)
              for r in report.sorted_rows()]

    self.assertEqual(outcome(), outcome())

  def test_exact_skipped_over_limit(self):
    size = baselines.EXACT_LIMITS['ap'] + 1
    report = harness.run_benchmark([size], 1, ['exact', 'greedy'])
    exact, greedy = report.sorted_rows()
    self.assertFalse(exact.feasible)
    self.assertIn('skipped', exact.note)
    self.assertTrue(greedy.feasible)
    self.assertIsNone(greedy.gap_vs_exact)

  def test_infeasible_row(self):
    def stuck(inst, worker_penalty=None):
      raise InfeasibleError('no worker left')

    with mock.patch.dict(baselines.GREEDY_SOLVERS, {'ap': stuck}):
      report = harness.run_benchmark([4], 1, ['exact', 'greedy'])
    greedy = report.sorted_rows()[1]
    self.assertFalse(greedy.feasible)
    self.assertIsNone(greedy.cost)
    self.assertEqual('infeasible: no worker left', greedy.note)

  def test_bins_maximize(self):
    report = harness.run_benchmark([6], 3, ['exact', 'greedy'],
                                   RunConfig(kind='bin'))
    for seed in range(3):
      exact, greedy = [r for r in report.sorted_rows() if r.seed == seed]
      self.assertGreaterEqual(exact.objective, greedy.objective)
      self.assertGreaterEqual(greedy.gap_vs_exact, 0.0)

  def test_missing_policy(self):
    with self.assertRaises(UsageError):
      harness.run_benchmark([10, 20], 1, ['rl'],
                            policies={10: self.policy})

  def test_unknown_method(self):
    with self.assertRaises(UsageError):
      harness.run_benchmark([5], 1, ['ortools'])


class EvaluatePretrainedTest(unittest.TestCase):
  def test_unseen_instance(self):
    policy = untrained_policy()
    inst = instances.generate_ap_instance(10, seed=77)
    before = policy.params.values.copy()
    outcome = harness.evaluate_pretrained(policy, inst)
    validate_solution(inst, outcome.value)
    self.assertGreaterEqual(outcome.seconds, 0.0)
    self.assertTrue((before == policy.params.values).all())

  def test_smaller_instance(self):
    outcome = harness.evaluate_pretrained(
        untrained_policy(), instances.generate_ap_instance(7, seed=1))
    self.assertEqual(7, len(outcome.value.assignment))


class PerturbEvalTest(unittest.TestCase):
  @classmethod
  def setUpClass(cls):
    cls.checkpoint = untrained_policy().to_bytes()
    cls.inst = instances.generate_ap_instance(10, seed=5)

  def test_sweep_with_oracle(self):
    report = harness.perturb_eval(self.checkpoint, self.inst, [0, 1, 2],
                                  oracle=True)
    rows = report.sorted_rows()
    self.assertEqual([0, 0, 1, 1, 2, 2], [r.perturbed for r in rows])
    self.assertEqual(['rl', 'exact'] * 3, [r.method for r in rows])
    for row in rows:
      self.assertTrue(row.feasible, row)
      self.assertEqual('ap10-s5', row.instance_id)
    self.assertTrue(all(r.gap_vs_exact == 0.0 for r in rows[1::2]))

  def test_sweep_with_greedy(self):
    report = harness.perturb_eval(self.checkpoint, self.inst, [1, 2],
                                  greedy=True)
    self.assertEqual(['rl', 'greedy'] * 2,
                     [r.method for r in report.sorted_rows()])
    self.assertTrue(all(r.gap_vs_exact is None for r in report.rows))

  def test_logs_digest(self):
    digest = checkpoint_digest(self.checkpoint)
    with self.assertLogs('rlassign.bench.harness', 'INFO') as logs:
      harness.perturb_eval(self.checkpoint, self.inst, [1, 2, 3])
    self.assertEqual(2, sum(digest in line for line in logs.output))

  def test_policy_only(self):
    report = harness.perturb_eval(self.checkpoint, self.inst, [3],
                                  seed=2)
    row, = report.rows
    self.assertEqual('rl', row.method)
    self.assertIsNone(row.gap_vs_exact)

  def test_penalty_override(self):
    row, = harness.perturb_eval(self.checkpoint, self.inst, [1],
                                worker_penalty=7.0).rows
    self.assertAlmostEqual(row.cost + 7.0 * row.workers_used, row.objective)

  def test_k_too_large(self):
    with self.assertRaises(ConfigurationError):
      harness.perturb_eval(self.checkpoint, self.inst, [11])


if __name__ == '__main__':
  unittest.main()
