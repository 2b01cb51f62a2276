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
"""Index bookkeeping shared by the concrete datastores."""
from __future__ import annotations

import hashlib
from typing import Any, Callable, Dict, List, Mapping, Optional

from rlassign import timestamps


def index_entry(document: bytes) -> Dict[str, Any]:
  return {
      'sha256': hashlib.sha256(document).hexdigest(),
      'size': len(document),
      'stored_at': timestamps.utc_now(),
  }


def matching(index: Mapping[str, Any], prefix: Optional[str]) -> List[str]:
  return sorted(k for k in index if not prefix or k.startswith(prefix))


def persist(write_index: Callable[[Any], None]) -> Callable:
  """Builds a decorator that writes the index after the wrapped call.

  Whatever happens inside the call, the in-memory index is written back to
  the store, so the two cannot drift apart.

  Args:
      write_index (Callable): writes `datastore.datastore` for a datastore.

  Returns:
      Callable: the decorator
  """
  def wrap(f: Callable) -> Callable:
    def f_persist(*args: Mapping[str, Any], **kw: Mapping[str, Any]) -> Any:
      datastore = args[0]                 # 'self' in the original caller
      try:
        return f(*args, **kw)
      finally:
        write_index(datastore)
    return f_persist
  return wrap
