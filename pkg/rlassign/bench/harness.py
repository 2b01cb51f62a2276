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
"""Benchmark runs: size sweeps and perturbation sweeps."""
from __future__ import annotations

import dataclasses
import logging
from typing import List, Mapping, Optional, Sequence

from rlassign import baselines, decorators, instances
from rlassign.baselines.solution import (Solution, relative_gap,
                                         resolve_penalty, validate_solution)
from rlassign.bench.perturb import PerturbSpec, perturb
from rlassign.bench.report import METHODS, BenchReport, BenchRow
from rlassign.config import RewardConfig, RunConfig
from rlassign.decorators import Timed
from rlassign.exceptions import InfeasibleError, InvariantViolation, UsageError
from rlassign.instances import Instance
from rlassign.neuralnet.checkpoint import checkpoint_digest
from rlassign.ppo import agent
from rlassign.ppo.trainer import TrainedPolicy

logger = logging.getLogger(__name__)


def instance_id(inst: Instance) -> str:
  return f'{inst.kind}{inst.n}-s{inst.seed}'


def bench_row(inst: Instance, method: str, outcome: Optional[Timed] = None,
              note: str = '', perturbed: int = 0) -> BenchRow:
  """A report row; without an outcome the row records a failure."""
  row = BenchRow(instance_id=instance_id(inst), kind=inst.kind, size=inst.n,
                 seed=inst.seed, method=method, perturbed=perturbed,
                 note=note)
  if outcome is None:
    return row
  solution: Solution = outcome.value
  return dataclasses.replace(
      row, cost=solution.total_cost, objective=solution.objective,
      workers_used=solution.workers_used,
      solve_time_seconds=outcome.seconds, feasible=True)


def _solve(inst: Instance, method: str, penalty: float,
           policy: Optional[TrainedPolicy], perturbed: int = 0) -> BenchRow:
  """Runs one method and turns the outcome, or its failure, into a row."""
  try:
    if method == 'exact':
      limit = baselines.EXACT_LIMITS[inst.kind]
      if inst.n > limit:
        return bench_row(inst, method, perturbed=perturbed,
                         note=f'skipped: exact solver limited to {limit} '
                         'entities')
      outcome = decorators.timed(baselines.EXACT_SOLVERS[inst.kind])(
          inst, worker_penalty=penalty)
    elif method == 'greedy':
      outcome = decorators.timed(baselines.GREEDY_SOLVERS[inst.kind])(
          inst, worker_penalty=penalty)
    else:
      reward_config = RewardConfig(
          worker_penalty=penalty,
          depot_return=policy.reward_config.depot_return)
      outcome = decorators.timed(agent.decode)(policy.params, inst,
                                               reward_config)
  except InfeasibleError as e:
    return bench_row(inst, method, note=f'infeasible: {e.message}',
                     perturbed=perturbed)
  validate_solution(inst, outcome.value, penalty)
  return bench_row(inst, method, outcome, perturbed=perturbed)


def _with_gaps(rows: List[BenchRow], maximize: bool) -> List[BenchRow]:
  exact = next((r for r in rows if r.method == 'exact' and r.feasible), None)
  if exact is None:
    return rows
  return [dataclasses.replace(
      r, gap_vs_exact=relative_gap(r.objective, exact.objective, maximize))
      if r.feasible else r for r in rows]


def _check_methods(methods: Sequence[str]) -> None:
  unknown = set(methods) - set(METHODS)
  if unknown:
    raise UsageError(f'Unknown methods {sorted(unknown)}; expected some of '
                     f'{METHODS}.')


def run_benchmark(sizes: Sequence[int], seeds_per_size: int,
                  methods: Sequence[str] = METHODS,
                  run: RunConfig = RunConfig(),
                  policies: Optional[Mapping[int, TrainedPolicy]] = None,
                  first_seed: int = 0) -> BenchReport:
  """Solves generated instances of each size with each method.

  Instance seeds are first_seed, first_seed + 1, ... for every size. All
  methods use the same lambda, the run's or else the instance default, and
  every solution is re-validated. Only the solve itself is timed; for the
  policy that is the decode, after the checkpoint is loaded.

  Args:
      sizes (Sequence[int]): entity counts.
      seeds_per_size (int): instances per size.
      methods (Sequence[str]): some of 'rl', 'exact', 'greedy'.
      run (RunConfig): family, generator and reward settings.
      policies (Mapping[int, TrainedPolicy]): a policy per size, needed
        for 'rl'.
      first_seed (int): the first instance seed.

  Returns:
      BenchReport: one row per (size, seed, method).

  Raises:
      UsageError: unknown method, or 'rl' without a policy for some size.
  """
  _check_methods(methods)
  policies = policies or {}
  if 'rl' in methods:
    missing = [n for n in sizes if n not in policies]
    if missing:
      raise UsageError(f'No policy checkpoint for sizes {missing}.')

  report = BenchReport()
  for size in sizes:
    for seed in range(first_seed, first_seed + seeds_per_size):
      inst = instances.generate_instance(run.kind, size, seed, run.gen)
      penalty = resolve_penalty(inst, run.reward_config.worker_penalty)
      rows = [_solve(inst, method, penalty, policies.get(size))
              for method in methods]
      report.rows.extend(_with_gaps(rows, inst.kind == 'bin'))
      logger.info('Benchmarked %s with %s.', instance_id(inst),
                  ', '.join(methods))
  return report


def evaluate_pretrained(policy: TrainedPolicy, inst: Instance,
                        reward_config: Optional[RewardConfig] = None
                        ) -> Timed:
  """Greedy decode of an instance the policy never trained on.

  The parameters are not touched.

  Args:
      policy (TrainedPolicy): the trained network.
      inst (Instance): same shape as the training instances, or smaller.
      reward_config (RewardConfig): the policy's own by default.

  Returns:
      Timed: the validated Solution and the decode time in seconds.

  Raises:
      DeadEndError: the instance cannot be completed.
  """
  reward_config = reward_config or policy.reward_config
  return decorators.timed(agent.decode)(policy.params, inst, reward_config)


def perturb_eval(checkpoint: bytes, inst: Instance, ks: Sequence[int],
                 delta: int = 5, seed: Optional[int] = None,
                 oracle: bool = False,
                 worker_penalty: Optional[float] = None,
                 greedy: bool = False) -> BenchReport:
  """Re-solves growing perturbations of one instance with one checkpoint.

  For each k the first k entities (or k seeded random ones) grow by
  `delta`. The policy is never updated; the checkpoint digest is logged
  before and after the sweep to show it.

  Args:
      checkpoint (bytes): the checkpoint file contents.
      inst (Instance): the unperturbed instance.
      ks (Sequence[int]): perturbation counts.
      delta (int): growth per chosen entity.
      seed (int): selection seed; None picks the first k.
      oracle (bool): also solve every perturbed instance exactly.
      worker_penalty (float): replaces the checkpoint's lambda.
      greedy (bool): also solve every perturbed instance greedily.

  Returns:
      BenchReport: rows per k, 'rl' and, when asked for, 'exact' and
        'greedy'.
  """
  digest = checkpoint_digest(checkpoint)
  logger.info('Perturbation sweep with checkpoint sha256 %s.', digest)
  policy = TrainedPolicy.from_bytes(checkpoint)
  before = policy.params.values.copy()
  reward_config = policy.reward_config
  if worker_penalty is not None:
    reward_config = dataclasses.replace(reward_config,
                                        worker_penalty=worker_penalty)
  capacity = policy.header.gen.capacity_default
  methods = ['rl'] + (['exact'] if oracle else []) + \
      (['greedy'] if greedy else [])

  report = BenchReport()
  for k in ks:
    changed = perturb(inst, PerturbSpec(k=k, delta=delta, seed=seed),
                      capacity)
    penalty = resolve_penalty(changed, reward_config.worker_penalty)
    rows = [_solve(changed, method, penalty, policy, perturbed=k)
            for method in methods]
    report.rows.extend(_with_gaps(rows, inst.kind == 'bin'))

  if not (policy.params.values == before).all():
    raise InvariantViolation('The policy changed during a perturbation run.')
  logger.info('Perturbation sweep done, checkpoint sha256 %s.', digest)
  return report
