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

from rlassign import instances
from rlassign.baselines.bin_packing_test import bin_instance
from rlassign.baselines.solution_test import ap_instance
from rlassign.bench.perturb import PerturbSpec, perturb
from rlassign.envs.routing_test import vrp_instance
from rlassign.exceptions import ConfigurationError


def three_tasks() -> instances.ApInstance:
  return ap_instance([[1, 2], [3, 4], [5, 6]], [12, 3, 7], [15, 15])


class PerturbSpecTest(unittest.TestCase):
  def test_first_k(self):
    self.assertEqual([0, 1, 2], PerturbSpec(k=3).chosen(10))
    self.assertEqual([], PerturbSpec(k=0).chosen(10))

  def test_seeded(self):
    chosen = PerturbSpec(k=5, seed=4).chosen(10)
    self.assertEqual(5, len(set(chosen)))
    self.assertEqual(sorted(chosen), chosen)
    self.assertTrue(all(0 <= i < 10 for i in chosen))
    self.assertEqual(chosen, PerturbSpec(k=5, seed=4).chosen(10))

  def test_k_out_of_range(self):
    with self.assertRaises(ConfigurationError) as error:
      PerturbSpec(k=4).validate(3)
    self.assertEqual('k', error.exception.field)

  def test_negative_delta(self):
    with self.assertRaises(ConfigurationError) as error:
      PerturbSpec(k=1, delta=-1).validate(3)
    self.assertEqual('delta', error.exception.field)


class PerturbTest(unittest.TestCase):
  def test_nothing_chosen(self):
    inst = three_tasks()
    self.assertEqual(inst, perturb(inst, PerturbSpec(k=0)))

  def test_clamps_at_capacity(self):
    changed = perturb(three_tasks(), PerturbSpec(k=2))
    self.assertEqual([15, 8, 7], list(changed.demands))

  def test_all_entities(self):
    changed = perturb(three_tasks(), PerturbSpec(k=3, delta=1))
    self.assertEqual([13, 4, 8], list(changed.demands))

  def test_original_untouched(self):
    inst = three_tasks()
    perturb(inst, PerturbSpec(k=3))
    self.assertEqual([12, 3, 7], list(inst.demands))

  def test_cumulative(self):
    inst = instances.generate_ap_instance(10, seed=3)
    previous = perturb(inst, PerturbSpec(k=1))
    for k in range(2, 11):
      changed = perturb(inst, PerturbSpec(k=k))
      self.assertEqual(list(previous.demands[:k - 1]),
                       list(changed.demands[:k - 1]))
      self.assertEqual(list(inst.demands[k:]), list(changed.demands[k:]))
      previous = changed

  def test_seeded_changes_only_chosen(self):
    inst = instances.generate_ap_instance(10, seed=3)
    spec = PerturbSpec(k=5, seed=9)
    changed = perturb(inst, spec)
    for i in range(10):
      expected = min(inst.demands[i] + 5, 15) if i in spec.chosen(10) \
          else inst.demands[i]
      self.assertEqual(expected, changed.demands[i])

  def test_oversized_stays(self):
    inst = ap_instance([[1]], [12], [15])
    changed = perturb(inst, PerturbSpec(k=1), capacity=10)
    self.assertEqual([12], list(changed.demands))

  def test_bins_and_routing(self):
    items = perturb(bin_instance([(2, 10), (4, 20)], [15]),
                    PerturbSpec(k=1))
    self.assertEqual([7, 4], list(items.demands))
    self.assertEqual([10.0, 20.0], list(items.values))
    routing = perturb(vrp_instance([(1, 0), (2, 0)], [3, 14], [15]),
                      PerturbSpec(k=2))
    self.assertEqual([8, 15], list(routing.demands))
    self.assertEqual([2.0, 0.0], routing.customers[1].location)


if __name__ == '__main__':
  unittest.main()
