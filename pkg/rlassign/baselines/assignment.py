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
"""Exact and greedy solvers for the time-constrained assignment problem."""
from __future__ import annotations

import functools
import logging
from typing import Optional, Tuple

import numpy as np

from rlassign.baselines.solution import (UNASSIGNED, Solution, make_solution,
                                         resolve_penalty, validate_solution)
from rlassign.exceptions import InfeasibleError, SizeError
from rlassign.instances import ApInstance

logger = logging.getLogger(__name__)

EXACT_TASK_LIMIT = 14


def greedy_ap(inst: ApInstance,
              worker_penalty: Optional[float] = None) -> Solution:
  """Assigns tasks in index order, each to its cheapest feasible worker.

  A worker's price is its cost entry, plus lambda when it has not been used
  yet. Ties go to the lowest worker index.

  Args:
      inst (ApInstance): the instance.
      worker_penalty (float): lambda; None means the instance default.

  Returns:
      Solution: a feasible, not necessarily optimal, solution.

  Raises:
      InfeasibleError: a task finds no eligible worker with time left.
  """
  penalty = resolve_penalty(inst, worker_penalty)
  remaining = inst.capacities.copy()
  used = np.zeros(inst.m, dtype=bool)
  assignment = []
  for i, task in enumerate(inst.tasks):
    feasible = np.flatnonzero(inst.eligibility_matrix[i]
                              & (remaining >= task.effort))
    if not feasible.size:
      raise InfeasibleError(
          f'Task {i} (effort {task.effort}) fits no eligible worker.')
    price = inst.cost_matrix[i, feasible] + penalty * ~used[feasible]
    worker = int(feasible[np.argmin(price)])
    remaining[worker] -= task.effort
    used[worker] = True
    assignment.append(worker)
  return validate_solution(inst, make_solution(inst, assignment, penalty),
                           penalty)


@functools.lru_cache(maxsize=4)
def _submask_pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
  """Every (T, S) over n bits with S a subset of T, sorted by T.

  There are 3**n pairs; callers must not write to the arrays.
  """
  supersets = np.zeros(1, dtype=np.int64)
  subsets = np.zeros(1, dtype=np.int64)
  for b in range(n):
    bit = 1 << b
    supersets = np.concatenate([supersets, supersets | bit, supersets | bit])
    subsets = np.concatenate([subsets, subsets, subsets | bit])
  order = np.argsort(supersets, kind='stable')
  return supersets[order], subsets[order]


def exact_ap(inst: ApInstance,
             worker_penalty: Optional[float] = None) -> Solution:
  """Solves an assignment instance to optimality.

  Minimizes total cost plus lambda per worker used. Workers are added one
  at a time: after worker j, `best[T]` is the cheapest way to serve task
  set T with workers 0..j, where giving worker j the set S costs its
  entries for S plus lambda, and is allowed when every task in S is
  eligible for j and their efforts fit its capacity. Work is 3**n per
  worker whatever the costs.

  Args:
      inst (ApInstance): at most EXACT_TASK_LIMIT tasks.
      worker_penalty (float): lambda; None means the instance default.

  Returns:
      Solution: an optimal solution, flagged as such.

  Raises:
      SizeError: too many tasks for the exact solver.
      InfeasibleError: no assignment satisfies every capacity.
  """
  if inst.n > EXACT_TASK_LIMIT:
    raise SizeError(f'Exact assignment is limited to {EXACT_TASK_LIMIT} '
                    f'tasks, got {inst.n}.')
  penalty = resolve_penalty(inst, worker_penalty)
  n, m = inst.n, inst.m
  capacities = inst.capacities
  for i, task in enumerate(inst.tasks):
    if not np.any(inst.eligibility_matrix[i] & (capacities >= task.effort)):
      raise InfeasibleError(f'Task {i} (effort {task.effort}) fits no '
                            'eligible worker.')
  if n == 0:
    return validate_solution(
        inst, make_solution(inst, [], penalty, optimal=True), penalty)

  task_bits = np.int64(1) << np.arange(n, dtype=np.int64)
  masks = np.arange(1 << n, dtype=np.int64)
  members = ((masks[:, None] & task_bits) != 0).astype(np.float64)
  load = members @ inst.demands.astype(np.float64)
  cost_sums = members @ inst.cost_matrix
  ineligible = (~inst.eligibility_matrix).astype(np.int64).T @ task_bits

  supersets, subsets = _submask_pairs(n)
  keep = load[subsets] <= capacities.max(initial=0)
  supersets, subsets = supersets[keep], subsets[keep]
  rests = supersets ^ subsets
  # The empty subset keeps every T present, so segment k belongs to T = k.
  starts = np.flatnonzero(np.r_[True, supersets[1:] != supersets[:-1]])
  ends = np.r_[starts[1:], len(subsets)]

  best = np.full(1 << n, np.inf)
  best[0] = 0.0
  stages, prices = [best], []
  for j in range(m):
    fits = (load <= capacities[j]) & ((masks & ineligible[j]) == 0)
    price = np.where(fits, cost_sums[:, j] + penalty, np.inf)
    price[0] = 0.0
    best = np.minimum.reduceat(best[rests] + price[subsets], starts)
    stages.append(best)
    prices.append(price)

  full = (1 << n) - 1
  logger.debug('exact_ap: %d tasks, %d workers, %d subset pairs, '
               'objective %s', n, m, len(subsets), best[full])
  if not np.isfinite(best[full]):
    raise InfeasibleError('No assignment satisfies every capacity.')

  assignment = [UNASSIGNED] * n
  remaining = full
  for j in reversed(range(m)):
    options = subsets[starts[remaining]:ends[remaining]]
    totals = stages[j][remaining ^ options] + prices[j][options]
    chosen = int(options[np.argmin(totals)])
    for i in range(n):
      if chosen & (1 << i):
        assignment[i] = j
    remaining ^= chosen
  solution = make_solution(inst, assignment, penalty, optimal=True)
  return validate_solution(inst, solution, penalty)
