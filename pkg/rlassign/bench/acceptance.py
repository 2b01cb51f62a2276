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
"""Acceptance checks for trained policies, run by the `acceptance` command.

Four checks, each recorded in a `SuiteResult` like the selftest suites:

  training_quality    an AP10 policy against the exact and greedy solvers
                      on held-out seeds, and its training time
  dynamic_adaptation  the same checkpoints on growing perturbations, with
                      no retraining
  inference_speed     greedy decode time on AP50
  determinism         checkpoint bytes survive a roundtrip and equal seeds
                      train equal networks

`scale` multiplies episode and instance counts. The thresholds are only
enforced at scale 1 or above; smaller runs exercise the same code and log
the measurements, which is what the unit tests do.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json

from rlassign import baselines, decorators, instances
from rlassign.baselines.solution import Solution, relative_gap, \
    resolve_penalty
from rlassign.bench import harness
from rlassign.bench.report import BenchReport
from rlassign.bench.selftest import SuiteResult
from rlassign.config import KINDS, NetConfig, RunConfig, TrainConfig
from rlassign.exceptions import InfeasibleError, UsageError
from rlassign.instances import Instance
from rlassign.neuralnet.policy import PolicyParams
from rlassign.ppo import agent, trainer
from rlassign.ppo.trainer import TrainedPolicy

logger = logging.getLogger(__name__)

TRAIN_SIZE = 10
SPEED_SIZE = 50
HELD_OUT_FIRST_SEED = 200_000
PERTURBED_SEED = 300_000
HELD_OUT_INSTANCES = 20
PERTURBATIONS = 10
PERTURB_DELTA = 5
SPEED_INSTANCES = 5
REPEAT_EPISODES = 10
TIE_TOLERANCE = 1e-9


@dataclass_json
@dataclass(frozen=True)
class Thresholds(object):
  max_mean_gap: float = 0.10
  min_beats_greedy: float = 0.70
  max_train_seconds: float = 1800.0
  max_perturbed_gap: float = 0.15
  min_greedy_dominance: float = 0.50
  max_decode_seconds: float = 1.0


@dataclass(frozen=True)
class GapSummary(object):
  """Per-instance gaps of the policy to a reference, and greedy wins.

  An instance the policy failed to solve has an infinite gap and does not
  count as beating greedy.
  """
  gaps: List[float] = field(default_factory=list)
  beats_greedy: List[bool] = field(default_factory=list)

  @property
  def mean_gap(self) -> float:
    return float(np.mean(self.gaps)) if self.gaps else 0.0

  @property
  def beats_share(self) -> float:
    return float(np.mean(self.beats_greedy)) if self.beats_greedy else 0.0


def at_least_as_good(value: float, other: float, maximize: bool) -> bool:
  if maximize:
    return value >= other - TIE_TOLERANCE
  return value <= other + TIE_TOLERANCE


def summarize(policy: Sequence[Optional[float]],
              reference: Sequence[Optional[float]],
              greedy: Sequence[Optional[float]],
              maximize: bool = False) -> GapSummary:
  """Gaps and greedy wins from objectives, None where a method failed.

  Instances without a reference objective have no gap; without a greedy
  objective any policy solution beats greedy.
  """
  gaps, beats = [], []
  for ours, target, baseline in zip(policy, reference, greedy):
    if target is not None:
      gaps.append(math.inf if ours is None else
                  relative_gap(ours, target, maximize))
    beats.append(ours is not None and (
        baseline is None or at_least_as_good(ours, baseline, maximize)))
  return GapSummary(gaps=gaps, beats_greedy=beats)


def _objective(solve: Callable[[], Solution]) -> Optional[float]:
  try:
    return solve().objective
  except InfeasibleError as e:
    logger.info('No solution: %s', e.message)
    return None


def _scaled(count: int, scale: float) -> int:
  return max(1, round(count * scale))


class AcceptanceRun(object):
  """What the checks share: settings and the policies, trained on demand.

  Policies given up front (by family) are used as they are; any other is
  trained once with the default hyperparameters, its episode count scaled.
  """

  def __init__(self, scale: float = 1.0, seed: int = 0,
               policies: Optional[Mapping[str, TrainedPolicy]] = None,
               thresholds: Thresholds = Thresholds()) -> None:
    if not scale > 0:
      raise UsageError('The acceptance scale must be positive.')
    self.scale = scale
    self.seed = seed
    self.thresholds = thresholds
    self.policies: Dict[str, TrainedPolicy] = dict(policies or {})
    self.train_seconds: Dict[str, float] = {}

  @property
  def strict(self) -> bool:
    return self.scale >= 1.0

  def count(self, full: int) -> int:
    return _scaled(full, self.scale)

  def require(self, result: SuiteResult, condition: bool,
              message: str) -> None:
    """A threshold check; below scale 1 it is logged instead."""
    if self.strict:
      result.check(condition, message)
    elif not condition:
      logger.info('%s: %s (not enforced below scale 1)', result.name,
                  message)

  def run_config(self, kind: str) -> RunConfig:
    base = TrainConfig()
    eval_seeds = base.eval_seeds if self.strict else \
        base.eval_seeds[:self.count(len(base.eval_seeds))]
    return RunConfig(
        kind=kind, n=TRAIN_SIZE,
        train=TrainConfig(episodes=self.count(base.episodes),
                          eval_seeds=eval_seeds, seed=self.seed))

  def policy(self, kind: str) -> TrainedPolicy:
    if kind not in self.policies:
      run = self.run_config(kind)
      logger.info('Training a %s%d policy for %d episodes.', kind, run.n,
                  run.train.episodes)
      timed = decorators.timed(trainer.train)(run, on_record=lambda _: None)
      self.policies[kind] = timed.value
      self.train_seconds[kind] = timed.seconds
      logger.info('Trained %s%d in %.1f s.', kind, run.n, timed.seconds)
    return self.policies[kind]


def training_quality(run: AcceptanceRun, result: SuiteResult) -> None:
  """AP10 greedy decodes against exact_ap and greedy_ap on held-out seeds."""
  policy = run.policy('ap')
  reward_config = policy.reward_config
  ours, exact, greedy = [], [], []
  for seed in range(HELD_OUT_FIRST_SEED,
                    HELD_OUT_FIRST_SEED + run.count(HELD_OUT_INSTANCES)):
    inst = instances.generate_ap_instance(TRAIN_SIZE, seed=seed)
    penalty = resolve_penalty(inst, reward_config.worker_penalty)
    config = dataclasses.replace(reward_config, worker_penalty=penalty)
    result.cases += 1
    ours.append(_objective(
        lambda: agent.decode(policy.params, inst, config)))
    exact.append(_objective(
        lambda: baselines.exact_ap(inst, worker_penalty=penalty)))
    greedy.append(_objective(
        lambda: baselines.greedy_ap(inst, worker_penalty=penalty)))
    result.check(ours[-1] is not None or exact[-1] is None,
                 f'ap{TRAIN_SIZE} seed {seed}: the policy found no solution')

  summary = summarize(ours, exact, greedy)
  limits = run.thresholds
  logger.info('Held-out mean gap %.4f, beats or ties greedy on %.0f%%.',
              summary.mean_gap, 100 * summary.beats_share)
  run.require(result, summary.mean_gap <= limits.max_mean_gap,
              f'mean gap {summary.mean_gap:.4f} vs exact exceeds '
              f'{limits.max_mean_gap}')
  run.require(result, summary.beats_share >= limits.min_beats_greedy,
              f'beats or ties greedy on {summary.beats_share:.2f} of '
              f'instances, below {limits.min_beats_greedy}')
  seconds = run.train_seconds.get('ap')
  if seconds is not None:
    run.require(result, seconds <= limits.max_train_seconds,
                f'training took {seconds:.0f} s, over '
                f'{limits.max_train_seconds:.0f} s')


def _sweep(run: AcceptanceRun, kind: str) -> BenchReport:
  inst = instances.generate_instance(kind, TRAIN_SIZE, PERTURBED_SEED)
  ks = list(range(1, run.count(PERTURBATIONS) + 1))
  oracle = TRAIN_SIZE <= baselines.EXACT_LIMITS[kind]
  return harness.perturb_eval(run.policy(kind).to_bytes(), inst, ks,
                              delta=PERTURB_DELTA, oracle=oracle,
                              greedy=True)


def dynamic_adaptation(run: AcceptanceRun, result: SuiteResult) -> None:
  """Growing perturbations of one instance per family, no retraining.

  The policy must solve every perturbation a baseline solved. Assignment
  also needs a small mean gap to the recomputed exact solution; bins and
  routing need the policy to match or beat greedy on enough rows.
  """
  limits = run.thresholds
  for kind in KINDS:
    report = _sweep(run, kind)
    maximize = kind == 'bin'
    by_k: Dict[int, Dict[str, Optional[float]]] = {}
    for row in report.rows:
      by_k.setdefault(row.perturbed, {})[row.method] = \
          row.objective if row.feasible else None
    ks = sorted(by_k)
    ours = [by_k[k].get('rl') for k in ks]
    for k, objective in zip(ks, ours):
      solvable = any(by_k[k].get(m) is not None for m in ('exact', 'greedy'))
      result.cases += 1
      result.check(objective is not None or not solvable,
                   f'{kind}{TRAIN_SIZE} k={k}: the policy found no solution')
    summary = summarize(ours, [by_k[k].get('exact') for k in ks],
                        [by_k[k].get('greedy') for k in ks], maximize)
    logger.info('%s perturbations: mean gap %.4f over %d exact rows, '
                'greedy matched or beaten on %.0f%%.', kind,
                summary.mean_gap, len(summary.gaps),
                100 * summary.beats_share)
    if kind == 'ap':
      run.require(result, summary.mean_gap <= limits.max_perturbed_gap,
                  f'ap mean gap {summary.mean_gap:.4f} over perturbations '
                  f'exceeds {limits.max_perturbed_gap}')
    else:
      run.require(result,
                  summary.beats_share >= limits.min_greedy_dominance,
                  f'{kind} matches or beats greedy on '
                  f'{summary.beats_share:.2f} of rows, below '
                  f'{limits.min_greedy_dominance}')


def _speed_params(run: AcceptanceRun, inst: Instance) -> PolicyParams:
  given = run.policies.get('ap')
  if given is not None and given.params.n >= inst.n and \
          given.params.m >= inst.m:
    return given.params
  return PolicyParams.initialize('ap', inst.n, inst.m, NetConfig(),
                                 seed=run.seed)


def _decode_or_none(params: PolicyParams, inst: Instance
                    ) -> Optional[Solution]:
  try:
    return agent.decode(params, inst)
  except InfeasibleError as e:
    logger.info('Decode of %s stopped: %s', harness.instance_id(inst),
                e.message)
    return None


def inference_speed(run: AcceptanceRun, result: SuiteResult) -> None:
  """Greedy decode of AP50 instances, masking and stepping included.

  A network of the default size stands in when no AP50-capable policy is
  given; the time does not depend on the weights.
  """
  limit = run.thresholds.max_decode_seconds
  for seed in range(run.count(SPEED_INSTANCES)):
    inst = instances.generate_ap_instance(SPEED_SIZE, seed=seed)
    params = _speed_params(run, inst)
    timed = decorators.timed(_decode_or_none)(params, inst)
    result.cases += 1
    result.check(timed.seconds < limit,
                 f'ap{SPEED_SIZE} seed {seed}: decode took '
                 f'{timed.seconds:.3f} s, limit {limit} s')


def determinism(run: AcceptanceRun, result: SuiteResult) -> None:
  """Checkpoint bytes roundtrip; two equal-seed trainings agree."""
  for kind, policy in sorted(run.policies.items()):
    data = policy.to_bytes()
    result.cases += 1
    result.check(TrainedPolicy.from_bytes(data).to_bytes() == data,
                 f'{kind} checkpoint bytes changed on a roundtrip')

  repeat = RunConfig(
      kind='ap', n=5,
      train=TrainConfig(episodes=run.count(REPEAT_EPISODES),
                        eval_seeds=[100_000, 100_001], eval_every=2,
                        seed=run.seed))
  first, second = (trainer.train(repeat, on_record=lambda _: None)
                   for _ in range(2))
  result.cases += 1
  result.check(np.array_equal(first.params.values, second.params.values),
               'equal seeds trained different networks')
  result.check([r.eval_objective for r in first.history] ==
               [r.eval_objective for r in second.history],
               'equal seeds gave different evaluation costs')


Check = Callable[[AcceptanceRun, SuiteResult], None]

CHECKS: Dict[str, Check] = {
    'training_quality': training_quality,
    'dynamic_adaptation': dynamic_adaptation,
    'inference_speed': inference_speed,
    'determinism': determinism,
}


def run_check(name: str, run: AcceptanceRun) -> SuiteResult:
  """Runs one check against a shared `AcceptanceRun`.

  Raises:
      UsageError: unknown check.
  """
  if name not in CHECKS:
    raise UsageError(f'Unknown acceptance check {name!r}; expected one of '
                     f'{sorted(CHECKS)}.')
  result = SuiteResult(name=name)
  start = time.monotonic()
  CHECKS[name](run, result)
  result.seconds = time.monotonic() - start
  logger.info('Acceptance %s: %d cases, %d failed, %.1f s.', name,
              result.cases, result.failed, result.seconds)
  return result


def run_checks(names: Optional[Sequence[str]] = None,
               run: Optional[AcceptanceRun] = None
               ) -> Tuple[List[SuiteResult], AcceptanceRun]:
  """Runs the named checks, all by default, in order.

  Returns:
      Tuple[List[SuiteResult], AcceptanceRun]: the results, and the run
        holding every policy used, so trained ones can be saved.
  """
  run = run or AcceptanceRun()
  return [run_check(name, run) for name in (names or list(CHECKS))], run
