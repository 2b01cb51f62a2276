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
import unittest
from unittest import mock

from rlassign import datastore
from rlassign.datastore.cloud_storage import CloudStorage
from rlassign.datastore.local_file import LocalFile


class OpenDatastoreTest(unittest.TestCase):
  def test_local_path(self):
    store, name = datastore.open_datastore('out/ap10/policy.ckpt')
    self.assertIsInstance(store, LocalFile)
    self.assertEqual('out/ap10', store.root)
    self.assertEqual('policy.ckpt', name)

  def test_bare_file_name(self):
    store, name = datastore.open_datastore('inst.json')
    self.assertEqual('.', store.root)
    self.assertEqual('inst.json', name)

  @mock.patch.dict('os.environ', {'GOOGLE_CLOUD_PROJECT': 'westley'})
  def test_gcs(self):
    store, name = datastore.open_datastore('gs://buttercup/runs/ap10/p.ckpt')
    self.assertIsInstance(store, CloudStorage)
    self.assertEqual('buttercup', store.bucket)
    self.assertEqual('westley', store.project)
    self.assertEqual('buttercup/runs/ap10/datastore.json',
                     store.datastore_file)
    self.assertEqual('p.ckpt', name)

  def test_gcs_bucket_root(self):
    store, name = datastore.open_datastore('gs://buttercup/report.csv')
    self.assertEqual('buttercup/datastore.json', store.datastore_file)
    self.assertEqual('report.csv', name)


if __name__ == '__main__':
  unittest.main()
