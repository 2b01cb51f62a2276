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

from rlassign.baselines.solution import Solution, make_solution
from rlassign.envs.abstract_env import (AbstractEnvironment, ActionMask,
                                        EnvState, StepInfo, StepOutcome,
                                        next_task)


class BinPackingEnv(AbstractEnvironment):
  """Packs items, in index order, into capacitated bins.

  The reward is the item's value, minus lambda when the bin is new. An item
  no bin can hold is skipped with reward 0 and stays unplaced, so the mask
  may come back empty without the episode being a dead end.
  """
  kind = 'bin'

  def action_mask(self, state: EnvState) -> ActionMask:
    return ActionMask(allowed=self.allowed(state))

  def step(self, state: EnvState, action: Optional[int]
           ) -> Tuple[EnvState, StepOutcome]:
    """Places the current item in bin `action`, or skips it.

    When no bin fits the item it is skipped whatever the action (pass None).
    """
    if not self.allowed(state).any():
      item = state.current_task
      efforts = list(state.remaining_efforts)
      efforts[item] = 0
      current = next_task(efforts)
      new_state = dataclasses.replace(
          state,
          remaining_efforts=tuple(efforts),
          clock=state.clock + 1,
          current_task=current,
          done=current is None,
          skipped=state.skipped | {item})
      return new_state, StepOutcome(
          reward=0.0, done=new_state.done,
          info=StepInfo(cost=0.0, worker_activated=False, skipped=True))

    self._check_action(state, action)
    value = float(self.inst.items[state.current_task].value)
    fresh = action not in state.used_workers
    new_state = self._advance(state, action, value)
    reward = value - (self.worker_penalty if fresh else 0.0)
    return new_state, StepOutcome(
        reward=reward, done=new_state.done,
        info=StepInfo(cost=value, worker_activated=fresh))

  def solution(self, state: EnvState) -> Solution:
    return make_solution(self.inst, list(state.assignment))
