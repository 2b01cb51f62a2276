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

from rlassign.baselines.assignment import EXACT_TASK_LIMIT, exact_ap, greedy_ap
from rlassign.baselines.bin_packing import (EXACT_ITEM_LIMIT, exact_bin,
                                            greedy_bin)
from rlassign.baselines.routing import (EXACT_CUSTOMER_LIMIT, exact_vrp,
                                        greedy_vrp)
from rlassign.baselines.solution import (Solution, make_solution,
                                         relative_gap, resolve_penalty,
                                         validate_solution)

# Every solver is called as solver(inst, worker_penalty=...).
EXACT_SOLVERS = {
    'ap': exact_ap,
    'bin': exact_bin,
    'vrp': exact_vrp,
}

GREEDY_SOLVERS = {
    'ap': greedy_ap,
    'bin': greedy_bin,
    'vrp': greedy_vrp,
}

EXACT_LIMITS = {
    'ap': EXACT_TASK_LIMIT,
    'bin': EXACT_ITEM_LIMIT,
    'vrp': EXACT_CUSTOMER_LIMIT,
}
