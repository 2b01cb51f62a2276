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
from typing import Any, Dict, List, Optional

import gcsfs

from rlassign import decorators
from rlassign.datastore.abstract_datastore import AbstractDatastore
from rlassign.datastore.index import index_entry, matching, persist

logger = logging.getLogger(__name__)


def _write_index(datastore: CloudStorage) -> None:
  with datastore.filesystem.open(datastore.datastore_file, 'w') as storage:
    storage.write(json.dumps(datastore.datastore, indent=2, sort_keys=True))


class CloudStorage(AbstractDatastore):
  """A datastore keeping artifacts in a GCS bucket.

  Documents live at `<bucket>/<prefix>/<id>`, the index next to them.
  """
  @decorators.lazy_property
  def filesystem(self) -> gcsfs.GCSFileSystem:
    return gcsfs.GCSFileSystem(project=self.project)

  @decorators.lazy_property
  def datastore(self) -> Dict[str, Any]:
    try:
      with self.filesystem.open(self.datastore_file, 'r') as store:
        if data := store.read():
          return json.loads(data)
        else:
          return {}

    except FileNotFoundError:
      return {}

  def __init__(self,
               bucket: str,
               project: Optional[str] = None,
               prefix: str = '',
               index_file: str = 'datastore.json') -> None:
    self._project = project
    self._bucket = bucket
    self._prefix = prefix.strip('/')
    self._index_file = index_file

  @property
  def project(self) -> Optional[str]:
    return self._project

  @property
  def bucket(self) -> str:
    return self._bucket

  @decorators.lazy_property
  def datastore_file(self) -> str:
    return self._path(self._index_file)

  def _path(self, id: str) -> str:
    return '/'.join(p for p in (self._bucket, self._prefix, id) if p)

  def get_document(self, id: str) -> Optional[bytes]:
    try:
      with self.filesystem.open(self._path(id), 'rb') as document:
        return document.read()
    except FileNotFoundError:
      return None

  @persist(_write_index)
  def store_document(self, id: str, document: bytes) -> None:
    with self.filesystem.open(self._path(id), 'wb') as target:
      target.write(document)
    self.datastore[id] = index_entry(document)
    logger.debug('Stored gs://%s (%d bytes).', self._path(id), len(document))

  @persist(_write_index)
  def delete_document(self, id: str) -> None:
    try:
      self.filesystem.rm(self._path(id))
    except FileNotFoundError:
      pass
    self.datastore.pop(id, None)

  def list_documents(self, prefix: Optional[str] = None) -> List[str]:
    return matching(self.datastore, prefix)

  def describe_document(self, id: str) -> Optional[Dict[str, Any]]:
    return self.datastore.get(id)
