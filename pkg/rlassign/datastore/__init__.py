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

import os
from typing import Tuple

from rlassign.datastore.abstract_datastore import AbstractDatastore
from rlassign.datastore.cloud_storage import CloudStorage
from rlassign.datastore.local_file import LocalFile

GCS_SCHEME = 'gs://'


def open_datastore(uri: str) -> Tuple[AbstractDatastore, str]:
  """Resolves a location into a datastore and a document id.

  `gs://bucket/some/dir/name` is document `name` of a `CloudStorage` on
  `bucket` with prefix `some/dir`; the project comes from
  GOOGLE_CLOUD_PROJECT. Anything else is a local path, split into the
  directory (a `LocalFile` root) and the file name.

  Args:
      uri (str): the location

  Returns:
      Tuple[AbstractDatastore, str]: the datastore and the id within it
  """
  if uri.startswith(GCS_SCHEME):
    bucket, _, path = uri[len(GCS_SCHEME):].partition('/')
    prefix, _, name = path.rpartition('/')
    return CloudStorage(bucket=bucket,
                        project=os.environ.get('GOOGLE_CLOUD_PROJECT'),
                        prefix=prefix), name
  root, name = os.path.split(uri)
  return LocalFile(root=root or '.'), name
