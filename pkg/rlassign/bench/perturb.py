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
"""Dynamic changes to an instance: heavier tasks, items or demands."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from dataclasses_json import Undefined, dataclass_json

from rlassign.config import GenConfig
from rlassign.exceptions import ConfigurationError
from rlassign.instances import Instance, with_demands


@dataclass_json(undefined=Undefined.RAISE)
@dataclass(frozen=True)
class PerturbSpec(object):
  """Which entities grow and by how much.

  Without a seed the first `k` entities are chosen, so k = 1, 2, ...
  perturbs cumulatively; with a seed `k` entities are drawn at random.
  """
  k: int
  delta: int = 5
  seed: Optional[int] = None

  def validate(self, n: int) -> PerturbSpec:
    if not 0 <= self.k <= n:
      raise ConfigurationError(f'k must be in [0, {n}], got {self.k}.',
                               field='k')
    if self.delta < 0:
      raise ConfigurationError('delta must be >= 0.', field='delta')
    return self

  def chosen(self, n: int) -> List[int]:
    """The perturbed entity indices, ascending."""
    if self.seed is None:
      return list(range(self.k))
    rng = np.random.Generator(np.random.PCG64(self.seed))
    return sorted(int(i) for i in rng.choice(n, size=self.k, replace=False))


def perturb(inst: Instance, spec: PerturbSpec,
            capacity: int = GenConfig().capacity_default) -> Instance:
  """Adds `delta` to the effort, weight or demand of the chosen entities.

  Grown values are clamped at `capacity`, the generator's default worker
  capacity, so every entity still fits some fresh worker. Nothing else
  changes.

  Args:
      inst (Instance): the original, left untouched.
      spec (PerturbSpec): what to change.
      capacity (int): the clamp.

  Returns:
      Instance: the perturbed copy.

  Raises:
      ConfigurationError: k out of range or a negative delta.
  """
  spec.validate(inst.n)
  demands = [int(d) for d in inst.demands]
  for i in spec.chosen(inst.n):
    demands[i] = min(demands[i] + spec.delta, max(capacity, demands[i]))
  return with_demands(inst, demands)
