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
from typing import Optional, Tuple

import numpy as np

from rlassign.baselines.solution import Solution, make_solution
from rlassign.envs.abstract_env import (AbstractEnvironment, EnvState,
                                        StepInfo, StepOutcome)

DEPOT = 0


class RoutingEnv(AbstractEnvironment):
  """Capacitated vehicle routing, customers served in index order.

  Every vehicle starts at the depot. Serving a customer costs the Euclidean
  distance from the vehicle's position; the step that completes the episode
  also charges every used vehicle's drive back to the depot, unless
  `depot_return` is off.
  """
  kind = 'vrp'

  def _initial_positions(self) -> Tuple[int, ...]:
    return tuple([DEPOT] * self.inst.m)

  def _max_step_cost(self) -> float:
    return float(self.inst.distances.max(initial=0.0))

  def step_prices(self, state: EnvState) -> np.ndarray:
    node = state.current_task + 1
    return self.inst.distances[np.array(state.positions, dtype=np.int64),
                               node] + \
        super().step_prices(state)

  def step(self, state: EnvState, action: Optional[int]
           ) -> Tuple[EnvState, StepOutcome]:
    self._check_action(state, action)
    node = state.current_task + 1
    distance = float(self.inst.distances[state.positions[action], node])
    fresh = action not in state.used_workers
    positions = list(state.positions)
    positions[action] = node
    new_state = self._advance(state, action, distance,
                              positions=tuple(positions))

    reward = -distance - (self.worker_penalty if fresh else 0.0)
    return_cost = 0.0
    if new_state.done and self.reward_config.depot_return:
      return_cost = float(sum(self.inst.distances[positions[v], DEPOT]
                              for v in sorted(new_state.used_workers)))
      reward -= return_cost
      new_state = dataclasses.replace(
          new_state,
          cumulative_cost=new_state.cumulative_cost + return_cost)
    return new_state, StepOutcome(
        reward=reward, done=new_state.done,
        info=StepInfo(cost=distance, worker_activated=fresh,
                      return_cost=return_cost))

  def solution(self, state: EnvState) -> Solution:
    return make_solution(self.inst, list(state.assignment),
                         worker_penalty=self.worker_penalty)
