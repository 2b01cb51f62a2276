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
"""Benchmark report records and their text formats."""
from __future__ import annotations

import csv
import dataclasses
import io
import typing
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from dataclasses_json import dataclass_json

from rlassign import timestamps
from rlassign.exceptions import ParseError, UsageError

FORMATS = ('csv', 'markdown', 'jsonl')
METHODS = ('rl', 'exact', 'greedy')


@dataclass_json
@dataclass(frozen=True)
class BenchRow(object):
  """One method on one instance.

  `cost` is the plain total (cost, packed value or distance) and
  `objective` adds lambda per worker used. Rows of methods that did not run
  have no numbers and say why in `note`. `gap_vs_exact` is set exactly
  when the exact solver ran on the instance.
  """
  instance_id: str
  kind: str
  size: int
  seed: int
  method: str
  cost: Optional[float] = None
  objective: Optional[float] = None
  workers_used: Optional[int] = None
  solve_time_seconds: Optional[float] = None
  feasible: bool = False
  gap_vs_exact: Optional[float] = None
  perturbed: int = 0
  note: str = ''


COLUMNS = [f.name for f in dataclasses.fields(BenchRow)]


@dataclass_json
@dataclass
class BenchReport(object):
  rows: List[BenchRow] = field(default_factory=list)
  generated_at: str = field(default_factory=timestamps.utc_now)
  time_unit: str = 'seconds'

  def sorted_rows(self) -> List[BenchRow]:
    """Rows by (size, seed, perturbation, method)."""
    order = {m: i for i, m in enumerate(METHODS)}
    return sorted(self.rows, key=lambda r: (r.size, r.seed, r.perturbed,
                                            order.get(r.method, len(order))))


def _cell(value: Any) -> str:
  if value is None:
    return ''
  if isinstance(value, float):
    return repr(value)
  return str(value)


def _csv(report: BenchReport) -> str:
  out = io.StringIO()
  writer = csv.writer(out, lineterminator='\n')
  writer.writerow(COLUMNS)
  for row in report.sorted_rows():
    writer.writerow([_cell(getattr(row, name)) for name in COLUMNS])
  return out.getvalue()


def _number(value: Optional[float], digits: int) -> str:
  return '' if value is None else f'{value:.{digits}f}'


def _methods(rows: List[BenchRow]) -> List[str]:
  present = {r.method for r in rows}
  known = [m for m in METHODS if m in present]
  return known + sorted(present - set(known))


def _markdown(report: BenchReport) -> str:
  rows = report.sorted_rows()
  methods = _methods(rows)
  header = ['Instance', 'Size', 'k']
  align = ['---', '---:', '---:']
  for method in methods:
    header += [f'{method} workers', f'{method} time (s)', f'{method} cost',
               f'{method} gap']
    align += ['---:'] * 4
  header.append('Notes')
  align.append('---')
  lines = [
      f'Generated {report.generated_at}; times in {report.time_unit}.',
      '',
      '| ' + ' | '.join(header) + ' |',
      '|' + '|'.join(align) + '|',
  ]

  groups: Dict[Tuple[int, int, int, str], Dict[str, BenchRow]] = {}
  for row in rows:
    key = (row.size, row.seed, row.perturbed, row.instance_id)
    groups.setdefault(key, {})[row.method] = row
  for (size, _, perturbed, instance_id), by_method in groups.items():
    cells = [instance_id, str(size), str(perturbed)]
    notes = []
    for method in methods:
      row = by_method.get(method)
      if row is None:
        cells += [''] * 4
        continue
      gap = '' if row.gap_vs_exact is None else \
          f'{100 * row.gap_vs_exact:.2f}%'
      cells += [_cell(row.workers_used), _number(row.solve_time_seconds, 5),
                _number(row.cost, 2), gap]
      if row.note:
        notes.append(f'{method}: {row.note}')
      elif not row.feasible:
        notes.append(f'{method}: infeasible')
    cells.append('; '.join(notes).replace('|', '\\|'))
    lines.append('| ' + ' | '.join(cells) + ' |')
  return '\n'.join(lines) + '\n'


def _jsonl(report: BenchReport) -> str:
  return ''.join(row.to_json(sort_keys=True) + '\n'
                 for row in report.sorted_rows())


def emit_report(report: BenchReport, fmt: str = 'csv') -> str:
  """Renders a report.

  The column order is fixed. Markdown puts the generation time above the
  table and writes one table row per instance (and perturbation), with
  the methods side by side.

  Args:
      report (BenchReport): the report.
      fmt (str): 'csv', 'markdown' or 'jsonl'.

  Returns:
      str: the text.

  Raises:
      UsageError: unknown format.
  """
  emitters = {'csv': _csv, 'markdown': _markdown, 'jsonl': _jsonl}
  if fmt not in emitters:
    raise UsageError(f'Unknown report format {fmt!r}; expected one of '
                     f'{FORMATS}.')
  return emitters[fmt](report)


def _convert(hint: Any, text: str) -> Any:
  if typing.get_origin(hint) is typing.Union:
    if text == '':
      return None
    hint = next(a for a in typing.get_args(hint) if a is not type(None))
  if hint is bool:
    if text not in ('True', 'False'):
      raise ValueError(f'not a boolean: {text!r}')
    return text == 'True'
  return hint(text)


def parse_csv_report(text: str) -> List[BenchRow]:
  """Reads rows written by `emit_report(..., 'csv')`.

  Raises:
      ParseError: wrong header or an unreadable cell.
  """
  reader = csv.reader(io.StringIO(text))
  header = next(reader, None)
  if header != COLUMNS:
    raise ParseError(f'expected columns {COLUMNS}', field='header')
  hints = typing.get_type_hints(BenchRow)
  rows = []
  for line, cells in enumerate(reader, start=2):
    if len(cells) != len(COLUMNS):
      raise ParseError(f'{len(cells)} cells', line=line, field=None)
    values: Dict[str, Any] = {}
    for name, cell in zip(COLUMNS, cells):
      try:
        values[name] = _convert(hints[name], cell)
      except ValueError as e:
        raise ParseError(str(e), line=line, field=name) from e
    rows.append(BenchRow(**values))
  return rows
