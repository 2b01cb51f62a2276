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

from typing import Any, Dict, List, Optional


class AbstractDatastore(object):
  """Abstract Datastore.

  This is the contract fulfilled by every place artifacts are kept:
  instances, checkpoints and reports, all stored as raw bytes under a
  document id. Alongside the documents each store keeps an index of what it
  holds (digest, size, time stored).

  All unimplemented functions raise a NotImplementedError() rather than
  simply 'pass'.
  """
  def get_document(self, id: str) -> Optional[bytes]:
    """Fetches a document.

    Arguments:
        id (str): document id

    Returns:
        bytes: the stored bytes, or None if not present
    """
    raise NotImplementedError('Must be implemented by child class.')

  def store_document(self, id: str, document: bytes) -> None:
    """Stores a document, replacing any previous one with the same id.

    Args:
        id (str): document id
        document (bytes): the content
    """
    raise NotImplementedError('Must be implemented by child class.')

  def delete_document(self, id: str) -> None:
    """Deletes a document. A missing document is not an error.

    Args:
        id (str): document id
    """
    raise NotImplementedError('Must be implemented by child class.')

  def list_documents(self, prefix: Optional[str] = None) -> List[str]:
    """Lists the stored document ids, sorted.

    Args:
        prefix (str, optional): only ids starting with it. Defaults to None.

    Returns:
        List[str]: the ids
    """
    raise NotImplementedError('Must be implemented by child class.')

  def describe_document(self, id: str) -> Optional[Dict[str, Any]]:
    """The index entry of a document: sha256, size and stored_at.

    Args:
        id (str): document id

    Returns:
        Dict[str, Any]: the entry, or None if not present
    """
    raise NotImplementedError('Must be implemented by child class.')
