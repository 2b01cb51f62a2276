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
from rlassign.ppo.agent import (GREEDY, SAMPLE, act, choose, collect_episode,
                                decode)
from rlassign.ppo.buffer import (Experience, RolloutBuffer,
                                 one_step_advantage, one_step_return)
from rlassign.ppo.trainer import (TrainedPolicy, TrainLogRecord, UpdateStats,
                                  evaluate, train, update_policy)
