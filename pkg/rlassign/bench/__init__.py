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
"""Benchmarks, perturbation sweeps, reports, self-tests, acceptance checks
and the CLI.
"""
from __future__ import annotations

from rlassign.bench.acceptance import AcceptanceRun, run_checks
from rlassign.bench.harness import (evaluate_pretrained, perturb_eval,
                                    run_benchmark)
from rlassign.bench.perturb import PerturbSpec, perturb
from rlassign.bench.report import (BenchReport, BenchRow, emit_report,
                                   parse_csv_report)
from rlassign.bench.selftest import SuiteResult, run_suites
