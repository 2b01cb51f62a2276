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

from datetime import datetime
from typing import Optional

import pytz


def to_utc(moment: datetime) -> datetime:
  """Treats a naive datetime as UTC; aware ones are converted."""
  if moment.tzinfo is None or moment.tzinfo.utcoffset(moment) is None:
    return pytz.UTC.localize(moment)
  return moment.astimezone(pytz.UTC)


def utc_now(moment: Optional[datetime] = None) -> str:
  """An ISO-8601 Zulu time stamp, of now unless a moment is given."""
  moment = to_utc(moment) if moment else datetime.now().astimezone(pytz.utc)
  return moment.strftime('%Y-%m-%dT%H:%M:%S.%fZ')
