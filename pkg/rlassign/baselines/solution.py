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
"""The solution record shared by every solver, and its validator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from dataclasses_json import dataclass_json

from rlassign.exceptions import InvariantViolation
from rlassign.instances import (ApInstance, BinInstance, Instance,
                                VrpInstance, default_worker_penalty)

UNASSIGNED = -1
TOLERANCE = 1e-6


@dataclass_json
@dataclass
class Solution(object):
  """A solved instance.

  `assignment[i]` is the worker (bin, vehicle) serving entity `i`, or -1.
  `total_cost` is the assignment cost for AP, the packed value for bins and
  the travelled distance for VRP. `objective` is what the solver optimized:
  cost or distance plus lambda per used worker (minimized) for AP and VRP,
  the packed value (maximized) for bins.
  """
  kind: str
  assignment: List[int]
  total_cost: float
  workers_used: int
  objective: float
  optimal: bool = False
  routes: List[List[int]] = field(default_factory=list)
  unplaced: List[int] = field(default_factory=list)

  @property
  def maximize(self) -> bool:
    return self.kind == 'bin'


def relative_gap(value: float, reference: float, maximize: bool = False
                 ) -> float:
  """How much worse `value` is than `reference`, as a fraction of it."""
  worse = reference - value if maximize else value - reference
  if reference == 0:
    return 0.0 if worse == 0 else math.inf
  return worse / abs(reference)


def routes_from_assignment(assignment: List[int], m: int) -> List[List[int]]:
  """Visit order per vehicle when customers are served in index order."""
  routes = [[] for _ in range(m)]
  for customer, vehicle in enumerate(assignment):
    if vehicle != UNASSIGNED:
      routes[vehicle].append(customer)
  return routes


def route_length(inst: VrpInstance, route: List[int]) -> float:
  """Depot, the customers in order, back to the depot."""
  if not route:
    return 0.0
  nodes = [0] + [c + 1 for c in route] + [0]
  return float(sum(inst.distances[a, b] for a, b in zip(nodes, nodes[1:])))


def _fail(message: str) -> InvariantViolation:
  return InvariantViolation(f'Invalid solution: {message}')


def validate_solution(inst: Instance, solution: Solution,
                      worker_penalty: Optional[float] = None) -> Solution:
  """Re-checks a solution against its instance.

  Capacities, eligibility, completeness and the reported totals are all
  recomputed from scratch.

  Args:
      inst (Instance): the instance.
      solution (Solution): the solution to check.
      worker_penalty (float): when given, the objective is checked too.

  Returns:
      Solution: the solution, unchanged.

  Raises:
      InvariantViolation: any check fails.
  """
  if solution.kind != inst.kind:
    raise _fail(f'kind {solution.kind} for a {inst.kind} instance')
  if len(solution.assignment) != inst.n:
    raise _fail('assignment length differs from the entity count')

  assignment = np.array(solution.assignment, dtype=np.int64)
  placed = assignment != UNASSIGNED
  if np.any(assignment[placed] >= inst.m) or np.any(assignment < UNASSIGNED):
    raise _fail('worker index out of range')

  load = np.zeros(inst.m, dtype=np.int64)
  np.add.at(load, assignment[placed], inst.demands[placed])
  if np.any(load > inst.capacities):
    raise _fail(f'capacities exceeded: load {load.tolist()}')
  workers_used = len(set(assignment[placed].tolist()))
  if workers_used != solution.workers_used:
    raise _fail(f'{solution.workers_used} workers reported, '
                f'{workers_used} used')

  if isinstance(inst, ApInstance):
    if not np.all(placed):
      raise _fail('unassigned tasks')
    if inst.n and not np.all(
            inst.eligibility_matrix[np.arange(inst.n), assignment]):
      raise _fail('ineligible worker assigned')
    total = float(inst.cost_matrix[np.arange(inst.n), assignment].sum())
  elif isinstance(inst, BinInstance):
    if sorted(solution.unplaced) != np.flatnonzero(~placed).tolist():
      raise _fail('unplaced list disagrees with the assignment')
    total = float(inst.values[placed].sum())
  else:
    if not np.all(placed):
      raise _fail('unserved customers')
    routes = solution.routes or routes_from_assignment(solution.assignment,
                                                       inst.m)
    if len(routes) != inst.m:
      raise _fail('one route per vehicle expected')
    for vehicle, route in enumerate(routes):
      if sorted(route) != np.flatnonzero(assignment == vehicle).tolist():
        raise _fail(f'route of vehicle {vehicle} disagrees with assignment')
    total = sum(route_length(inst, route) for route in routes)

  if abs(total - solution.total_cost) > TOLERANCE * max(1.0, abs(total)):
    raise _fail(f'total {solution.total_cost} reported, {total} recomputed')

  if worker_penalty is not None:
    expected = total if solution.maximize else \
        total + worker_penalty * workers_used
    if abs(expected - solution.objective) > TOLERANCE * max(1.0,
                                                            abs(expected)):
      raise _fail(f'objective {solution.objective} reported, {expected} '
                  'recomputed')
  return solution


def make_solution(inst: Instance, assignment: List[int],
                  worker_penalty: float = 0.0, optimal: bool = False,
                  routes: Optional[List[List[int]]] = None) -> Solution:
  """Builds a solution from an assignment, computing every total."""
  assignment = [int(a) for a in assignment]
  used = {a for a in assignment if a != UNASSIGNED}
  unplaced = [i for i, a in enumerate(assignment) if a == UNASSIGNED]
  if isinstance(inst, ApInstance):
    total = float(sum(inst.cost[i][a] for i, a in enumerate(assignment)))
  elif isinstance(inst, BinInstance):
    total = float(sum(inst.items[i].value
                      for i, a in enumerate(assignment) if a != UNASSIGNED))
  else:
    if routes is None:
      routes = routes_from_assignment(assignment, inst.m)
    total = sum(route_length(inst, route) for route in routes)
  objective = total if inst.kind == 'bin' else \
      total + worker_penalty * len(used)
  return Solution(kind=inst.kind, assignment=assignment, total_cost=total,
                  workers_used=len(used), objective=objective,
                  optimal=optimal, routes=[list(r) for r in routes or []],
                  unplaced=unplaced if inst.kind == 'bin' else [])


def resolve_penalty(inst: Instance, worker_penalty: Optional[float]) -> float:
  """The configured lambda, or the per-instance default when None."""
  if worker_penalty is None:
    return default_worker_penalty(inst)
  return float(worker_penalty)
