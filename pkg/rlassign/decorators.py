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

import time
from dataclasses import dataclass
from typing import Any, Callable

from decorator import decorator


@dataclass(frozen=True)
class Timed(object):
  """The result of a timed call and its wall-clock duration in seconds."""
  value: Any
  seconds: float


def lazy_property(f: Callable):
  """Decorator that makes a property lazy-evaluated.

  The value is computed once per object and then cached on it under
  `_lazy_<name>`.

  Args:
    f: the function to convert to a lazy property.
  """
  attr_name = '_lazy_' + f.__name__

  @property
  def _lazy_property(self) -> Any:
    if not hasattr(self, attr_name):
      setattr(self, attr_name, f(self))
    return getattr(self, attr_name)
  return _lazy_property


@decorator
def timed(f: Callable, *args, **kwargs) -> Timed:
  """Decorator that times a call with a monotonic clock.

  The wrapped function keeps its signature but returns a `Timed` holding the
  original return value and the elapsed seconds. Solvers are wrapped at the
  call site, `timed(greedy_ap)(inst)`, so only the solve itself is measured.

  Args:
      f (Callable): the function to time

  Returns:
      Timed: the return value of `f` and its duration
  """
  start = time.perf_counter()
  value = f(*args, **kwargs)
  return Timed(value=value, seconds=time.perf_counter() - start)
