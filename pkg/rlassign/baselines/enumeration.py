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
"""Brute-force oracles: every assignment is tried.

Only meant for tiny instances (six or so entities); they exist to check the
exact solvers.
"""
from __future__ import annotations

import itertools
import math
from typing import Optional

import numpy as np

from rlassign.baselines.solution import (UNASSIGNED, Solution, make_solution,
                                         route_length)
from rlassign.instances import ApInstance, BinInstance, VrpInstance


def _every_assignment(n: int, choices: int) -> np.ndarray:
  """(choices ** n, n) array of all choice vectors."""
  if n == 0:
    return np.zeros((1, 0), dtype=np.int64)
  return np.indices((choices,) * n).reshape(n, -1).T


def _loads(options: np.ndarray, demands: np.ndarray, m: int) -> np.ndarray:
  loads = np.zeros((len(options), m + 1), dtype=np.int64)
  rows = np.arange(len(options))
  for i, demand in enumerate(demands):
    loads[rows, options[:, i]] += demand
  return loads[:, :m]


def enumerate_ap(inst: ApInstance,
                 worker_penalty: float = 0.0) -> Optional[Solution]:
  """Cheapest feasible assignment, or None when there is none."""
  options = _every_assignment(inst.n, inst.m)
  rows = np.arange(len(options))
  total = np.zeros(len(options))
  feasible = np.ones(len(options), dtype=bool)
  for i in range(inst.n):
    total += inst.cost_matrix[i, options[:, i]]
    feasible &= inst.eligibility_matrix[i, options[:, i]]
  loads = _loads(options, inst.demands, inst.m)
  feasible &= (loads <= inst.capacities).all(axis=1)
  if not feasible.any():
    return None
  objective = total + worker_penalty * (loads > 0).sum(axis=1)
  best = rows[feasible][np.argmin(objective[feasible])]
  return make_solution(inst, options[best].tolist(), worker_penalty,
                       optimal=True)


def enumerate_bin(inst: BinInstance) -> Solution:
  """Most valuable packing, fewest bins among equals.

  Choice m stands for leaving the item out.
  """
  options = _every_assignment(inst.n, inst.m + 1)
  loads = _loads(options, inst.demands, inst.m)
  feasible = (loads <= inst.capacities).all(axis=1)
  placed = options < inst.m
  value = (placed * inst.values).sum(axis=1)
  bins = (loads > 0).sum(axis=1)
  # Sort by value descending then bins ascending, feasible rows only.
  candidates = np.flatnonzero(feasible)
  order = np.lexsort((bins[candidates], -value[candidates]))
  best = options[candidates[order[0]]]
  assignment = [int(a) if a < inst.m else UNASSIGNED for a in best]
  return make_solution(inst, assignment, optimal=True)


def enumerate_vrp(inst: VrpInstance,
                  worker_penalty: float = 0.0) -> Optional[Solution]:
  """Shortest feasible routing; each vehicle's order is tried exhaustively."""
  n, m = inst.n, inst.m
  tours = {}
  for mask in range(1 << n):
    members = [c for c in range(n) if mask >> c & 1]
    tours[mask] = min(
        (route_length(inst, list(p)), list(p))
        for p in itertools.permutations(members)) if members else (0.0, [])
  lengths = np.array([tours[mask][0] for mask in range(1 << n)])

  options = _every_assignment(n, m)
  loads = _loads(options, inst.demands, m)
  feasible = (loads <= inst.capacities).all(axis=1)
  if not feasible.any():
    return None
  masks = np.zeros((len(options), m), dtype=np.int64)
  rows = np.arange(len(options))
  for c in range(n):
    masks[rows, options[:, c]] |= 1 << c
  objective = lengths[masks].sum(axis=1) + \
      worker_penalty * (masks > 0).sum(axis=1)
  objective[~feasible] = math.inf
  best = int(np.argmin(objective))
  routes = [tours[int(mask)][1] for mask in masks[best]]
  return make_solution(inst, options[best].tolist(), worker_penalty,
                       optimal=True, routes=routes)
