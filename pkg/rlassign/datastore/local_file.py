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

import json
import logging
import os
from typing import Any, Dict, List, Optional

from rlassign import decorators
from rlassign.datastore.abstract_datastore import AbstractDatastore
from rlassign.datastore.index import index_entry, matching, persist

logger = logging.getLogger(__name__)


def _write_index(datastore: LocalFile) -> None:
  os.makedirs(datastore.root, exist_ok=True)
  with open(datastore.datastore_file, 'w') as storage:
    storage.write(json.dumps(datastore.datastore, indent=2, sort_keys=True))


class LocalFile(AbstractDatastore):
  """Documents as files under one directory, plus a JSON index file."""

  @decorators.lazy_property
  def datastore(self) -> Dict[str, Any]:
    try:
      with open(self.datastore_file, 'r') as store:
        if data := store.read():
          return json.loads(data)
        else:
          return {}
    except FileNotFoundError:
      return {}

  @decorators.lazy_property
  def datastore_file(self) -> str:
    return os.path.join(self.root, self._index_file)

  def __init__(self, root: str = '.',
               index_file: str = 'datastore.json') -> None:
    self.root = root
    self._index_file = index_file

  def _path(self, id: str) -> str:
    return os.path.join(self.root, id)

  def get_document(self, id: str) -> Optional[bytes]:
    try:
      with open(self._path(id), 'rb') as document:
        return document.read()
    except FileNotFoundError:
      return None

  @persist(_write_index)
  def store_document(self, id: str, document: bytes) -> None:
    path = self._path(id)
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    with open(path, 'wb') as target:
      target.write(document)
    self.datastore[id] = index_entry(document)
    logger.debug('Stored %s (%d bytes).', path, len(document))

  @persist(_write_index)
  def delete_document(self, id: str) -> None:
    try:
      os.remove(self._path(id))
    except FileNotFoundError:
      pass
    self.datastore.pop(id, None)

  def list_documents(self, prefix: Optional[str] = None) -> List[str]:
    return matching(self.datastore, prefix)

  def describe_document(self, id: str) -> Optional[Dict[str, Any]]:
    return self.datastore.get(id)
