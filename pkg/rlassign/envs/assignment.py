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
from __future__ import annotations

import dataclasses
import logging
from typing import List, Optional, Tuple

import numpy as np

from rlassign.baselines.solution import Solution, make_solution
from rlassign.envs.abstract_env import (AbstractEnvironment, EnvState,
                                        StepInfo, StepOutcome, next_task)
from rlassign.exceptions import InfeasibleError, UsageError

logger = logging.getLogger(__name__)


class AssignmentEnv(AbstractEnvironment):
  """Assignment of tasks to capacitated, class-restricted workers.

  Serving task i with worker j costs `cost[i][j]`, takes the task's effort
  off the worker's capacity and sets the effort to 0. The reward is the
  negated cost, minus lambda the first time a worker is used.
  """
  kind = 'ap'

  def _eligible(self, task: int) -> np.ndarray:
    return self.inst.eligibility_matrix[task]

  def _max_step_cost(self) -> float:
    return float(self.inst.cost_matrix.max(initial=0.0))

  def step_prices(self, state: EnvState) -> np.ndarray:
    return self.inst.cost_matrix[state.current_task] + \
        super().step_prices(state)

  def priority_preassign(self, state: EnvState
                         ) -> Tuple[EnvState, List[Tuple[int, int]]]:
    """Commits every task whose effort fills a whole worker.

    Each task with effort equal to the default capacity (`scale`, which a
    cluster inherits from its whole instance) goes, in task order, to the
    cheapest eligible worker that is still untouched (ties to the lowest
    index). Clock and last-completed are left alone, so the policy
    sees the remainder as a fresh problem.

    Raises:
        UsageError: the state is not fresh.
        InfeasibleError: no untouched eligible worker is left for such a task.
    """
    if state.clock != 0:
      raise UsageError('Pre-assignment only applies to a fresh state.')
    if self.inst.capacities.max(initial=0) == 0:
      return state, []
    full = int(round(self.scale))

    efforts = list(state.remaining_efforts)
    caps = list(state.remaining_capacities)
    assignment = list(state.assignment)
    used = set(state.used_workers)
    cost = state.cumulative_cost
    committed = []
    for task, effort in enumerate(state.remaining_efforts):
      if effort != full:
        continue
      fresh = [j for j in range(self.inst.m)
               if j not in used and caps[j] == self.inst.capacities[j] and
               caps[j] >= effort and self._eligible(task)[j]]
      if not fresh:
        raise InfeasibleError(
            f'No untouched eligible worker is left for task {task}.')
      worker = min(fresh, key=lambda j: (self.inst.cost[task][j], j))
      caps[worker] -= effort
      efforts[task] = 0
      assignment[task] = worker
      used.add(worker)
      cost += self.inst.cost[task][worker]
      committed.append((task, worker))

    if committed:
      logger.debug('Pre-assigned %d full-capacity tasks: %s', len(committed),
                   committed)
    current = next_task(efforts)
    return dataclasses.replace(
        state,
        remaining_efforts=tuple(efforts),
        remaining_capacities=tuple(caps),
        current_task=current,
        used_workers=frozenset(used),
        cumulative_cost=cost,
        done=current is None,
        assignment=tuple(assignment)), committed

  def step(self, state: EnvState, action: Optional[int]
           ) -> Tuple[EnvState, StepOutcome]:
    self._check_action(state, action)
    cost = float(self.inst.cost[state.current_task][action])
    fresh = action not in state.used_workers
    new_state = self._advance(state, action, cost)
    reward = -cost - (self.worker_penalty if fresh else 0.0)
    return new_state, StepOutcome(
        reward=reward, done=new_state.done,
        info=StepInfo(cost=cost, worker_activated=fresh))

  def solution(self, state: EnvState) -> Solution:
    return make_solution(self.inst, list(state.assignment),
                         worker_penalty=self.worker_penalty)
