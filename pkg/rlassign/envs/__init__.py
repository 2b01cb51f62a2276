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

from typing import Optional

from rlassign.config import RewardConfig
from rlassign.envs.abstract_env import (AbstractEnvironment, ActionMask,
                                        EnvState, Observation, StepInfo,
                                        StepOutcome, default_worker_penalty)
from rlassign.envs.assignment import AssignmentEnv
from rlassign.envs.bin_packing import BinPackingEnv
from rlassign.envs.routing import RoutingEnv
from rlassign.instances import Instance

ENVIRONMENTS = {
    'ap': AssignmentEnv,
    'bin': BinPackingEnv,
    'vrp': RoutingEnv,
}


def make_env(inst: Instance, reward_config: RewardConfig = RewardConfig(),
             scale: Optional[float] = None,
             price_scale: Optional[float] = None) -> AbstractEnvironment:
  """The environment for an instance's family."""
  return ENVIRONMENTS[inst.kind](inst, reward_config, scale, price_scale)
