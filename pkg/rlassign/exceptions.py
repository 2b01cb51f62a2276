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

from typing import Optional


class RLAssignException(Exception):
  """Root of every error raised by the package.

  Each subclass carries an `exit_code`, which is what the command line
  returns when the error escapes a command.
  """
  exit_code: int = 3

  def __init__(self, message: Optional[str] = None) -> None:
    super().__init__(message)
    self.message = message


class ConfigurationError(RLAssignException):
  """Invalid settings or instance data; `field` names the offender."""
  exit_code = 1

  def __init__(self, message: Optional[str] = None, *,
               field: Optional[str] = None) -> None:
    super().__init__(message)
    self.field = field


class UsageError(RLAssignException):
  exit_code = 1


class SizeError(RLAssignException):
  """The instance is over the tractability bound of an exact solver."""
  exit_code = 1


class ParseError(RLAssignException):
  exit_code = 1

  def __init__(self, message: Optional[str] = None, *,
               line: int = 1, field: Optional[str] = None) -> None:
    super().__init__(f'line {line}, field {field!r}: {message}')
    self.line = line
    self.field = field


class InfeasibleError(RLAssignException):
  exit_code = 2


class DeadEndError(InfeasibleError):
  """A reachable state has no servable action left."""


class InvalidActionError(RLAssignException):
  exit_code = 3


class ShapeError(RLAssignException):
  exit_code = 3


class InvariantViolation(RLAssignException):
  exit_code = 3
