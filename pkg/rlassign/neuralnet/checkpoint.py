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
"""Policy checkpoint files.

Layout, all integers little-endian:

    b"RLAPCKPT"             magic
    uint32                  format version
    uint32                  header length in bytes
    header                  UTF-8 JSON `CheckpointHeader`
    float64 * size          parameter values in layout order
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from dataclasses_json import Undefined, dataclass_json
from dataclasses_json.undefined import UndefinedParameterError

from rlassign import timestamps
from rlassign.config import GenConfig, NetConfig, RewardConfig, TrainConfig
from rlassign.exceptions import ParseError
from rlassign.neuralnet.policy import PolicyParams

MAGIC = b'RLAPCKPT'
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct('<II')


@dataclass_json(undefined=Undefined.RAISE)
@dataclass(frozen=True)
class LayoutEntry(object):
  name: str
  shape: List[int]


@dataclass_json(undefined=Undefined.RAISE)
@dataclass(frozen=True)
class CheckpointHeader(object):
  """Everything needed to rebuild and describe a trained policy."""
  kind: str
  n: int
  m: int
  net: NetConfig
  layout: List[LayoutEntry]
  seed: int = 0
  eval_seeds: List[int] = field(default_factory=list)
  reward: RewardConfig = field(default_factory=RewardConfig)
  train: TrainConfig = field(default_factory=TrainConfig)
  gen: GenConfig = field(default_factory=GenConfig)
  episodes_trained: int = 0
  best_eval: Optional[float] = None  # mean evaluation gap of these params
  format_version: int = FORMAT_VERSION
  created_at: str = ''

  @classmethod
  def for_params(cls, params: PolicyParams, **details) -> CheckpointHeader:
    """A header describing `params`, stamped with the current UTC time."""
    details.setdefault('created_at', timestamps.utc_now())
    return cls(kind=params.kind, n=params.n, m=params.m, net=params.net,
               layout=[LayoutEntry(name=s.name, shape=list(s.shape))
                       for s in params.layout],
               **details)


def encode_checkpoint(params: PolicyParams,
                      header: Optional[CheckpointHeader] = None) -> bytes:
  """Serializes a policy; the values roundtrip bit for bit."""
  header = header or CheckpointHeader.for_params(params)
  text = header.to_json(sort_keys=True).encode('utf-8')
  return (MAGIC + _PREAMBLE.pack(header.format_version, len(text)) + text +
          params.values.astype('<f8').tobytes())


def decode_checkpoint(data: bytes) -> Tuple[PolicyParams, CheckpointHeader]:
  """Rebuilds a policy from checkpoint bytes.

  Args:
      data (bytes): the file contents.

  Returns:
      Tuple[PolicyParams, CheckpointHeader]: the network and its header.

  Raises:
      ParseError: the bytes are not a checkpoint this version can read.
  """
  start = len(MAGIC) + _PREAMBLE.size
  if len(data) < start or not data.startswith(MAGIC):
    raise ParseError('not a policy checkpoint', field='magic')
  version, length = _PREAMBLE.unpack_from(data, len(MAGIC))
  if version != FORMAT_VERSION:
    raise ParseError(f'unsupported format version {version}',
                     field='format_version')
  try:
    header = CheckpointHeader.from_dict(
        json.loads(data[start:start + length].decode('utf-8')))
  except (ValueError, KeyError, TypeError, UndefinedParameterError) as e:
    raise ParseError(f'unreadable header: {e}', field='header') from e

  params = PolicyParams(header.kind, header.n, header.m, header.net)
  expected = [LayoutEntry(name=s.name, shape=list(s.shape))
              for s in params.layout]
  if header.layout != expected:
    raise ParseError('parameter layout does not match the network',
                     field='layout')
  body = data[start + length:]
  if len(body) != 8 * params.size:
    raise ParseError(f'{len(body)} value bytes for {params.size} '
                     'parameters', field='values')
  values = np.frombuffer(body, dtype='<f8').astype(np.float64)
  return params.with_values(values), header


def checkpoint_digest(data: bytes) -> str:
  """SHA-256 of the checkpoint bytes, hex encoded."""
  return hashlib.sha256(data).hexdigest()
