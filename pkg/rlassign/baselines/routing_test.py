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

from rlassign import instances
from rlassign.baselines import routing
from rlassign.baselines.enumeration import enumerate_vrp
from rlassign.envs.routing_test import vrp_instance
from rlassign.exceptions import InfeasibleError, SizeError


class ShortestToursTest(unittest.TestCase):
  def test_square(self):
    inst = vrp_instance([(0, 1), (1, 1), (1, 0)], [1, 1, 1], [15])
    tours = routing.shortest_tours(inst.distances)
    length, order = tours[0b111]
    self.assertAlmostEqual(4.0, length)
    self.assertIn(order, ([0, 1, 2], [2, 1, 0]))
    self.assertEqual((0.0, []), tours[0])
    self.assertAlmostEqual(2.0, tours[0b001][0])


class ExactVrpTest(unittest.TestCase):
  def test_one_customer(self):
    solution = routing.exact_vrp(vrp_instance([(3, 4)], [5], [15, 15]))
    self.assertAlmostEqual(10.0, solution.total_cost)
    self.assertEqual(1, solution.workers_used)
    self.assertTrue(solution.optimal)

  def test_no_customers(self):
    solution = routing.exact_vrp(vrp_instance([], [], [15]))
    self.assertEqual(0.0, solution.total_cost)
    self.assertEqual([[]], solution.routes)

  def test_collinear_sweep(self):
    inst = vrp_instance([(2, 0), (1, 0), (3, 0)], [1, 1, 1], [15, 15])
    solution = routing.exact_vrp(inst)
    # Several visiting orders tie at 6, [1, 0, 2] and [1, 2, 0] among them.
    self.assertAlmostEqual(6.0, solution.total_cost)
    self.assertEqual(1, solution.workers_used)
    self.assertEqual([0, 1, 2], sorted(c for r in solution.routes for c in r))
    self.assertEqual(1, sum(1 for r in solution.routes if r))

  def test_capacity_splits(self):
    inst = vrp_instance([(3, 4), (-3, -4)], [10, 10], [15, 15])
    solution = routing.exact_vrp(inst)
    self.assertAlmostEqual(20.0, solution.total_cost)
    self.assertEqual(2, solution.workers_used)

  def test_penalty_in_objective(self):
    inst = vrp_instance([(3, 4), (-3, 4)], [1, 1], [15, 15])
    solution = routing.exact_vrp(inst, worker_penalty=5.0)
    self.assertEqual(1, solution.workers_used)
    self.assertAlmostEqual(16.0, solution.total_cost)
    self.assertAlmostEqual(21.0, solution.objective)

  def test_largest_group_rides_largest_vehicle(self):
    inst = vrp_instance([(3, 4), (-3, -4)], [12, 4], [5, 15])
    solution = routing.exact_vrp(inst)
    self.assertEqual([1, 0], solution.assignment)

  def test_oversized_demand(self):
    with self.assertRaises(InfeasibleError):
      routing.exact_vrp(vrp_instance([(3, 4)], [20], [15]))

  def test_fleet_too_small(self):
    with self.assertRaises(InfeasibleError):
      routing.exact_vrp(vrp_instance([(3, 4), (1, 1)], [10, 10], [15]))

  def test_size_bound(self):
    with self.assertRaises(SizeError):
      routing.exact_vrp(instances.generate_vrp_instance(10, seed=1))

  def test_agrees_with_enumeration(self):
    for seed in range(15):
      inst = instances.generate_vrp_instance(1 + seed % 4, seed=seed)
      penalty = (0.0, 30.0)[seed % 2]
      oracle = enumerate_vrp(inst, penalty)
      solution = routing.exact_vrp(inst, penalty)
      self.assertAlmostEqual(oracle.objective, solution.objective, places=6,
                             msg=f'seed {seed}')


class GreedyVrpTest(unittest.TestCase):
  def test_nearest_first(self):
    inst = vrp_instance([(5, 0), (1, 0), (2, 0)], [1, 1, 1], [15])
    solution = routing.greedy_vrp(inst, worker_penalty=0)
    self.assertEqual([[1, 2, 0]], solution.routes)
    self.assertAlmostEqual(10.0, solution.total_cost)

  def test_opens_next_vehicle(self):
    inst = vrp_instance([(1, 0), (2, 0)], [10, 10], [15, 15, 15])
    solution = routing.greedy_vrp(inst, worker_penalty=0)
    self.assertEqual([[0], [1], []], solution.routes)
    self.assertEqual(2, solution.workers_used)

  def test_skips_small_load(self):
    # After customer 0 the vehicle carries 3, so it heads for customer 2.
    inst = vrp_instance([(1, 0), (2, 0), (9, 0)], [12, 5, 3], [15, 15])
    solution = routing.greedy_vrp(inst, worker_penalty=0)
    self.assertEqual([[0, 2], [1]], solution.routes)

  def test_objective_counts_vehicles(self):
    inst = vrp_instance([(3, 4)], [1], [15])
    solution = routing.greedy_vrp(inst, worker_penalty=2.5)
    self.assertAlmostEqual(12.5, solution.objective)

  def test_infeasible(self):
    with self.assertRaises(InfeasibleError):
      routing.greedy_vrp(vrp_instance([(3, 4), (1, 1)], [10, 10], [15]))

  def test_never_beats_exact(self):
    for seed in range(15):
      inst = instances.generate_vrp_instance(2 + seed % 6, seed=seed)
      greedy = routing.greedy_vrp(inst, worker_penalty=0)
      exact = routing.exact_vrp(inst, worker_penalty=0)
      self.assertLessEqual(exact.total_cost, greedy.total_cost + 1e-9)
      np.testing.assert_array_equal(
          sorted(sum(greedy.routes, [])), np.arange(inst.n))


if __name__ == '__main__':
  unittest.main()
