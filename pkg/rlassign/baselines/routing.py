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
"""Exact and greedy solvers for capacitated vehicle routing."""
from __future__ import annotations

import logging
import math
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from rlassign.baselines.solution import (UNASSIGNED, Solution, make_solution,
                                         resolve_penalty, validate_solution)
from rlassign.exceptions import InfeasibleError, SizeError
from rlassign.instances import VrpInstance

logger = logging.getLogger(__name__)

EXACT_CUSTOMER_LIMIT = 9


def _assignment_of(routes: List[List[int]], n: int) -> List[int]:
  assignment = [UNASSIGNED] * n
  for vehicle, route in enumerate(routes):
    for customer in route:
      assignment[customer] = vehicle
  return assignment


def greedy_vrp(inst: VrpInstance,
               worker_penalty: Optional[float] = None) -> Solution:
  """Nearest neighbour construction.

  Vehicles leave the depot one at a time, in index order. The active
  vehicle always drives to the nearest unserved customer whose demand it
  can still carry and goes home when there is none.

  Args:
      inst (VrpInstance): the instance.
      worker_penalty (float): lambda for the objective; None means the
          instance default. It does not change the routes.

  Returns:
      Solution: a feasible solution with explicit visit orders.

  Raises:
      InfeasibleError: customers remain once every vehicle has been used.
  """
  penalty = resolve_penalty(inst, worker_penalty)
  pending = set(range(inst.n))
  routes: List[List[int]] = [[] for _ in range(inst.m)]
  for vehicle, capacity in enumerate(inst.vehicles):
    if not pending:
      break
    load, here = capacity, 0
    while True:
      reachable = [c for c in pending if inst.customers[c].demand <= load]
      if not reachable:
        break
      customer = min(reachable,
                     key=lambda c: (inst.distances[here, c + 1], c))
      routes[vehicle].append(customer)
      pending.remove(customer)
      load -= inst.customers[customer].demand
      here = customer + 1
  if pending:
    raise InfeasibleError(f'Customers {sorted(pending)} left unserved.')
  solution = make_solution(inst, _assignment_of(routes, inst.n), penalty,
                           routes=routes)
  return validate_solution(inst, solution, penalty)


def _bits(mask: int) -> Iterator[int]:
  i = 0
  while mask:
    if mask & 1:
      yield i
    mask >>= 1
    i += 1


def shortest_tours(distances: np.ndarray
                   ) -> Dict[int, Tuple[float, List[int]]]:
  """Optimal closed tour from the depot for every subset of customers.

  Dynamic programming over (visited set, last customer).

  Args:
      distances (np.ndarray): (n + 1, n + 1), node 0 is the depot.

  Returns:
      Dict[int, Tuple[float, List[int]]]: subset bitmask to (length, visit
          order); the empty subset maps to (0.0, []).
  """
  n = distances.shape[0] - 1
  size = 1 << n
  cost = np.full((size, max(n, 1)), math.inf)
  parent = np.full((size, max(n, 1)), -1, dtype=np.int64)
  for c in range(n):
    cost[1 << c, c] = distances[0, c + 1]
  for mask in range(1, size):
    for last in _bits(mask):
      here = cost[mask, last]
      if here == math.inf:
        continue
      for nxt in range(n):
        if mask & (1 << nxt):
          continue
        extended = mask | (1 << nxt)
        candidate = here + distances[last + 1, nxt + 1]
        if candidate < cost[extended, nxt]:
          cost[extended, nxt] = candidate
          parent[extended, nxt] = last

  tours = {0: (0.0, [])}
  for mask in range(1, size):
    members = list(_bits(mask))
    closing = [cost[mask, last] + distances[last + 1, 0] for last in members]
    last = members[int(np.argmin(closing))]
    length = float(min(closing))
    order, state = [], mask
    while last != -1:
      order.append(last)
      previous = int(parent[state, last])
      state &= ~(1 << last)
      last = previous
    tours[mask] = (length, order[::-1])
  return tours


def _partitions(n: int, limit: int) -> Iterator[List[int]]:
  """Set partitions of range(n) into at most `limit` blocks, as bitmasks."""
  blocks: List[int] = []

  def grow(i: int) -> Iterator[List[int]]:
    if i == n:
      yield list(blocks)
      return
    for b in range(len(blocks)):
      blocks[b] |= 1 << i
      yield from grow(i + 1)
      blocks[b] &= ~(1 << i)
    if len(blocks) < limit:
      blocks.append(1 << i)
      yield from grow(i + 1)
      blocks.pop()

  yield from grow(0)


def _match_vehicles(demands: List[int], capacities: List[int]
                    ) -> Optional[List[int]]:
  """Vehicle per block: largest block to largest vehicle, None if any fails."""
  vehicles = sorted(range(len(capacities)), key=lambda j: (-capacities[j], j))
  blocks = sorted(range(len(demands)), key=lambda b: (-demands[b], b))
  matched = [UNASSIGNED] * len(demands)
  for block, vehicle in zip(blocks, vehicles):
    if demands[block] > capacities[vehicle]:
      return None
    matched[block] = vehicle
  return matched


def exact_vrp(inst: VrpInstance,
              worker_penalty: Optional[float] = 0.0) -> Solution:
  """Solves a routing instance to optimality by exhaustive partitioning.

  Every split of the customers into at most m groups is tried; each group
  rides its optimal closed tour. Minimizes distance plus lambda per vehicle
  used.

  Args:
      inst (VrpInstance): at most EXACT_CUSTOMER_LIMIT customers.
      worker_penalty (float): lambda, 0 by default; None means the instance
          default.

  Returns:
      Solution: an optimal solution, flagged as such.

  Raises:
      SizeError: too many customers for exhaustive search.
      InfeasibleError: no split fits the fleet.
  """
  if inst.n > EXACT_CUSTOMER_LIMIT:
    raise SizeError(f'Exact routing is limited to {EXACT_CUSTOMER_LIMIT} '
                    f'customers, got {inst.n}.')
  penalty = resolve_penalty(inst, worker_penalty)
  capacities = [int(c) for c in inst.vehicles]
  top = max(capacities, default=0)
  demands = [c.demand for c in inst.customers]
  if any(d > top for d in demands):
    raise InfeasibleError(f'A customer demands more than the largest '
                          f'vehicle carries ({top}).')

  tours = shortest_tours(inst.distances)
  best, best_plan = math.inf, None
  for blocks in _partitions(inst.n, len(capacities)):
    block_demands = [sum(demands[c] for c in _bits(b)) for b in blocks]
    if max(block_demands, default=0) > top:
      continue
    objective = sum(tours[b][0] for b in blocks) + penalty * len(blocks)
    if objective >= best:
      continue
    matched = _match_vehicles(block_demands, capacities)
    if matched is not None:
      best, best_plan = objective, (blocks, matched)
  if best_plan is None:
    raise InfeasibleError('No split of the customers fits the fleet.')

  routes: List[List[int]] = [[] for _ in range(inst.m)]
  for block, vehicle in zip(*best_plan):
    routes[vehicle] = tours[block][1]
  solution = make_solution(inst, _assignment_of(routes, inst.n), penalty,
                           optimal=True, routes=routes)
  logger.debug('exact_vrp: %d customers, objective %.3f', inst.n,
               solution.objective)
  return validate_solution(inst, solution, penalty)
