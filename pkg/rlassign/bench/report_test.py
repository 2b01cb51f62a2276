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
import json
import unittest

from rlassign.bench import report
from rlassign.bench.report import BenchReport, BenchRow
from rlassign.exceptions import ParseError, UsageError


def sample_report() -> BenchReport:
  return BenchReport(
      rows=[
          BenchRow(instance_id='ap10-s1', kind='ap', size=10, seed=1,
                   method='greedy', cost=120.5, objective=140.5,
                   workers_used=2, solve_time_seconds=0.001, feasible=True,
                   gap_vs_exact=0.125),
          BenchRow(instance_id='ap10-s1', kind='ap', size=10, seed=1,
                   method='exact', cost=110.0, objective=125.0,
                   workers_used=2, solve_time_seconds=0.25, feasible=True,
                   gap_vs_exact=0.0),
          BenchRow(instance_id='ap10-s0', kind='ap', size=10, seed=0,
                   method='rl', note='infeasible: no worker, left'),
      ],
      generated_at='2024-01-01T00:00:00+00:00')


class SortedRowsTest(unittest.TestCase):
  def test_order(self):
    self.assertEqual(
        [(0, 'rl'), (1, 'exact'), (1, 'greedy')],
        [(r.seed, r.method) for r in sample_report().sorted_rows()])


class EmitReportTest(unittest.TestCase):
  def test_empty_csv_is_header_only(self):
    text = report.emit_report(BenchReport(), 'csv')
    self.assertEqual(','.join(report.COLUMNS) + '\n', text)

  def test_csv_roundtrip(self):
    original = sample_report()
    rows = report.parse_csv_report(report.emit_report(original, 'csv'))
    self.assertEqual(original.sorted_rows(), rows)

  def test_markdown(self):
    lines = report.emit_report(sample_report(), 'markdown').splitlines()
    self.assertEqual(
        'Generated 2024-01-01T00:00:00+00:00; times in seconds.', lines[0])
    table = [line for line in lines if line.startswith('|')]
    # Header, alignment, then one row per instance.
    self.assertEqual(2 + 2, len(table))
    header = [c.strip() for c in table[0].strip('|').split('|')]
    self.assertEqual(['Instance', 'Size', 'k', 'rl workers'], header[:4])
    self.assertEqual('exact workers', header[7])
    self.assertEqual('greedy gap', header[14])
    self.assertEqual('Notes', header[-1])
    first = [c.strip() for c in table[2].strip('|').split('|')]
    self.assertEqual('ap10-s0', first[0])
    self.assertEqual('rl: infeasible: no worker, left', first[-1])
    second = [c.strip() for c in table[3].strip('|').split('|')]
    self.assertEqual(['ap10-s1', '10', '0', '', '', '', '',
                      '2', '0.25000', '110.00', '0.00%',
                      '2', '0.00100', '120.50', '12.50%', ''], second)

  def test_markdown_flags_infeasible_rows(self):
    rows = [BenchRow(instance_id='bin5-s0', kind='bin', size=5, seed=0,
                     method='rl', cost=3.0, workers_used=2,
                     solve_time_seconds=0.01, feasible=False, perturbed=2)]
    text = report.emit_report(BenchReport(rows=rows), 'markdown')
    last = text.splitlines()[-1]
    self.assertTrue(last.startswith('| bin5-s0 | 5 | 2 | 2 |'), last)
    self.assertTrue(last.endswith('| rl: infeasible |'), last)

  def test_jsonl(self):
    lines = report.emit_report(sample_report(), 'jsonl').splitlines()
    self.assertEqual(3, len(lines))
    self.assertEqual('rl', json.loads(lines[0])['method'])
    self.assertIsNone(json.loads(lines[0])['cost'])

  def test_unknown_format(self):
    with self.assertRaises(UsageError):
      report.emit_report(sample_report(), 'html')


class ParseCsvReportTest(unittest.TestCase):
  def test_bad_header(self):
    with self.assertRaises(ParseError) as error:
      report.parse_csv_report('a,b,c\n')
    self.assertEqual('header', error.exception.field)

  def test_bad_cell(self):
    text = report.emit_report(sample_report(), 'csv')
    text = text.replace('120.5', 'lots')
    with self.assertRaises(ParseError) as error:
      report.parse_csv_report(text)
    self.assertEqual('cost', error.exception.field)
    self.assertEqual(4, error.exception.line)


if __name__ == '__main__':
  unittest.main()
