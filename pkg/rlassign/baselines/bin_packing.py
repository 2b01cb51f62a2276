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
"""Exact and greedy solvers for multiple-bin packing.

Both maximize the packed value first and then use as few bins as they can.
Items that fit nowhere stay unplaced.
"""
from __future__ import annotations

import logging
from typing import List, Optional, Tuple

import numpy as np

from rlassign.baselines.solution import (UNASSIGNED, Solution, make_solution,
                                         validate_solution)
from rlassign.exceptions import SizeError
from rlassign.instances import BinInstance

logger = logging.getLogger(__name__)

EXACT_ITEM_LIMIT = 14


def greedy_bin(inst: BinInstance,
               worker_penalty: Optional[float] = None) -> Solution:
  """Best fit decreasing, by value per unit of weight.

  Each item goes to the open bin it fills tightest; a new bin is opened
  (again the tightest fit) only when no open bin has room.

  Args:
      inst (BinInstance): the instance.
      worker_penalty (float): unused, bins are scored on value alone.

  Returns:
      Solution: a feasible packing.
  """
  del worker_penalty
  order = sorted(range(inst.n),
                 key=lambda i: (-inst.items[i].value / inst.items[i].weight,
                                i))
  remaining = inst.capacities.copy()
  opened = np.zeros(inst.m, dtype=bool)
  assignment = [UNASSIGNED] * inst.n
  for i in order:
    weight = inst.items[i].weight
    fits = remaining >= weight
    for candidates in (fits & opened, fits & ~opened):
      if candidates.any():
        bins = np.flatnonzero(candidates)
        target = int(bins[np.argmin(remaining[bins])])
        remaining[target] -= weight
        opened[target] = True
        assignment[i] = target
        break
  return validate_solution(inst, make_solution(inst, assignment))


class _BinSearch(object):

  def __init__(self, inst: BinInstance) -> None:
    self.inst = inst
    self.weights = [item.weight for item in inst.items]
    self.values = [item.value for item in inst.items]
    self.remaining = list(inst.bins)
    self.opened = [False] * inst.m
    self.assignment = [UNASSIGNED] * inst.n
    self.best: Tuple[int, int] = (-1, 0)
    self.best_assignment: Optional[List[int]] = None
    self.nodes = 0

  def improves(self, value: int, bins: int) -> bool:
    best_value, best_bins = self.best
    return value > best_value or (value == best_value and bins < best_bins)

  def search(self, depth: int, value: int, bins: int) -> None:
    self.nodes += 1
    if depth == self.inst.n:
      if self.improves(value, bins):
        self.best = (value, bins)
        self.best_assignment = list(self.assignment)
      return
    room = max(self.remaining, default=0)
    reachable = value + sum(v for v, w in zip(self.values[depth:],
                                              self.weights[depth:])
                            if w <= room)
    if not self.improves(reachable, bins):
      return

    weight = self.weights[depth]
    tried_fresh = set()
    for j in range(self.inst.m):
      if self.remaining[j] < weight:
        continue
      fresh = not self.opened[j]
      if fresh:
        # Unopened bins of equal capacity are interchangeable.
        if self.remaining[j] in tried_fresh:
          continue
        tried_fresh.add(self.remaining[j])
      self.remaining[j] -= weight
      self.opened[j] = True
      self.assignment[depth] = j
      self.search(depth + 1, value + self.values[depth], bins + fresh)
      self.remaining[j] += weight
      self.opened[j] = not fresh
    self.assignment[depth] = UNASSIGNED
    self.search(depth + 1, value, bins)


def exact_bin(inst: BinInstance,
              worker_penalty: Optional[float] = None) -> Solution:
  """Packs the most value into the fewest bins.

  Args:
      inst (BinInstance): at most EXACT_ITEM_LIMIT items.
      worker_penalty (float): unused, bins are scored on value alone.

  Returns:
      Solution: an optimal packing, flagged as such.

  Raises:
      SizeError: too many items for exhaustive search.
  """
  del worker_penalty
  if inst.n > EXACT_ITEM_LIMIT:
    raise SizeError(f'Exact bin packing is limited to {EXACT_ITEM_LIMIT} '
                    f'items, got {inst.n}.')
  search = _BinSearch(inst)
  incumbent = greedy_bin(inst)
  search.best = (int(incumbent.total_cost), incumbent.workers_used)
  search.best_assignment = list(incumbent.assignment)
  search.search(0, 0, 0)
  logger.debug('exact_bin: %d items, %d nodes, best %s', inst.n,
               search.nodes, search.best)
  solution = make_solution(inst, search.best_assignment, optimal=True)
  return validate_solution(inst, solution)
