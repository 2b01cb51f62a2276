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
"""Invariant suites run by the `selftest` and `gradcheck` commands.

Each suite draws its own random cases from a seeded generator and returns a
`SuiteResult`; a suite never raises on a failed check, it records it. The
default counts are the full acceptance counts, tests run them scaled down.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json

from rlassign import baselines, instances
from rlassign.baselines import enumeration
from rlassign.baselines.solution import Solution, validate_solution
from rlassign.config import KINDS, GenConfig, NetConfig, RewardConfig, \
    TrainConfig
from rlassign.envs import AbstractEnvironment, EnvState, make_env
from rlassign.exceptions import InfeasibleError, RLAssignException, \
    UsageError
from rlassign.neuralnet import checkpoint, gradients
from rlassign.neuralnet.policy import PolicyParams, actor_forward
from rlassign.ppo import agent

logger = logging.getLogger(__name__)

NO_PENALTY = RewardConfig(worker_penalty=0.0)
TINY = NetConfig(filters=3, units=4)
SUM_TOLERANCE = 1e-9
DRAWS_PER_STATE = 10
FAILURES_KEPT = 20


@dataclass_json
@dataclass
class SuiteResult(object):
  name: str
  cases: int = 0
  failures: List[str] = field(default_factory=list)
  failed: int = 0
  seconds: float = 0.0

  @property
  def passed(self) -> bool:
    return self.failed == 0

  def check(self, condition: bool, message: str) -> bool:
    if not condition:
      self.failed += 1
      if len(self.failures) < FAILURES_KEPT:
        self.failures.append(message)
    return condition


def _seed(rng: np.random.Generator) -> int:
  return int(rng.integers(2**31))


def _expected_mask(env: AbstractEnvironment, state: EnvState) -> np.ndarray:
  """The capacity rule written out worker by worker, plus eligibility."""
  inst = env.inst
  task = state.current_task
  effort = state.remaining_efforts[task]
  smallest = min(e for e in state.remaining_efforts if e > 0)
  classes = None
  if inst.kind == 'ap':
    classes = set(inst.tasks[task].eligibility)
  allowed = []
  for j, capacity in enumerate(state.remaining_capacities):
    ok = capacity > 0 and capacity >= smallest and capacity >= effort
    if classes is not None:
      ok = ok and inst.workers[j].worker_class in classes
    allowed.append(ok)
  return np.array(allowed, dtype=bool)


def _reachable_states(count: int, rng: np.random.Generator
                      ) -> Iterator[Tuple[AbstractEnvironment, EnvState,
                                          PolicyParams]]:
  """States visited by randomly initialized policies, with their policy.

  Families rotate; sizes are drawn from [1, 12]. Only states where some
  worker is allowed are yielded, which are the states the policy acts in.
  """
  seen = 0
  episode = 0
  while seen < count:
    kind = KINDS[episode % len(KINDS)]
    episode += 1
    inst = instances.generate_instance(kind, int(rng.integers(1, 13)),
                                       _seed(rng))
    env = make_env(inst, NO_PENALTY)
    params = PolicyParams.initialize(kind, inst.n, inst.m, TINY,
                                     seed=_seed(rng))
    state, _ = env.priority_preassign(env.reset())
    while not state.done and seen < count:
      if not env.allowed(state).any():
        state, _ = env.step(state, None)
        continue
      yield env, state, params
      seen += 1
      state, _ = env.step(state, agent.act(params, env, state, agent.SAMPLE,
                                           rng))


def mask_soundness(result: SuiteResult, count: int,
                   rng: np.random.Generator) -> None:
  """Masks follow the capacity rule and the policy respects them."""
  for env, state, params in _reachable_states(count, rng):
    result.cases += 1
    where = f'{env.inst.kind}{env.inst.n} entity {state.current_task}'
    mask = env.action_mask(state)
    result.check(np.array_equal(mask.allowed, _expected_mask(env, state)),
                 f'{where}: mask {mask.allowed.tolist()} breaks the rule')
    probs, _ = actor_forward(params, agent.observe(params, env, state), mask)
    result.check(np.all(probs[~mask.allowed] == 0.0),
                 f'{where}: masked worker has probability')
    result.check(abs(probs.sum() - 1.0) <= SUM_TOLERANCE,
                 f'{where}: probabilities sum to {probs.sum()!r}')


def sampled_action_legality(result: SuiteResult, count: int,
                            rng: np.random.Generator) -> None:
  """Every sampled action is one the mask allows; `count` is the draws."""
  states = max(1, math.ceil(count / DRAWS_PER_STATE))
  for env, state, params in _reachable_states(states, rng):
    mask = env.action_mask(state)
    probs, _ = actor_forward(params, agent.observe(params, env, state), mask)
    for _ in range(DRAWS_PER_STATE):
      action = agent.choose(probs, agent.SAMPLE, rng)
      result.cases += 1
      result.check(bool(mask.allowed[action]),
                   f'{env.inst.kind}{env.inst.n}: sampled masked worker '
                   f'{action}')


def env_conservation(result: SuiteResult, count: int,
                     rng: np.random.Generator) -> None:
  """Random assignment episodes (n <= 50) with uniform allowed actions."""
  for _ in range(count):
    inst = instances.generate_ap_instance(int(rng.integers(0, 51)),
                                          _seed(rng))
    where = f'ap{inst.n} seed {inst.seed}'
    result.cases += 1
    env = make_env(inst, NO_PENALTY)
    state, committed = env.priority_preassign(env.reset())
    steps, rewards = 0, 0.0
    while not state.done:
      mask = env.action_mask(state)
      state, outcome = env.step(state, int(rng.choice(mask.indices)))
      rewards += outcome.reward
      steps += 1
      if not result.check(min(state.remaining_capacities, default=0) >= 0,
                          f'{where}: negative capacity at step {steps}'):
        break
    result.check(steps == inst.n - len(committed),
                 f'{where}: {steps} steps, expected '
                 f'{inst.n - len(committed)}')
    used = int(inst.capacities.sum() - sum(state.remaining_capacities))
    result.check(used == int(inst.demands.sum()),
                 f'{where}: {used} units consumed, {inst.demands.sum()} '
                 'demanded')
    forced = sum(inst.cost[t][w] for t, w in committed)
    result.check(math.isclose(-rewards + forced, state.cumulative_cost,
                              rel_tol=1e-9, abs_tol=1e-9),
                 f'{where}: rewards {-rewards} + forced {forced} != '
                 f'cumulative cost {state.cumulative_cost}')
    try:
      validate_solution(inst, env.solution(state), worker_penalty=0.0)
    except RLAssignException as e:
      result.check(False, f'{where}: {e.message}')


def _same(a: Optional[Solution], b: Optional[Solution]) -> bool:
  if a is None or b is None:
    return a is b
  if a.kind == 'bin':
    return math.isclose(a.total_cost, b.total_cost) and \
        a.workers_used == b.workers_used
  return math.isclose(a.objective, b.objective, rel_tol=1e-9, abs_tol=1e-9)


def _exact_or_none(inst: instances.Instance, penalty: float
                   ) -> Optional[Solution]:
  try:
    return baselines.EXACT_SOLVERS[inst.kind](inst, worker_penalty=penalty)
  except InfeasibleError:
    return None


def oracle_agreement(result: SuiteResult, count: int,
                     rng: np.random.Generator) -> None:
  """Exact solvers against enumeration, then exact against greedy.

  `count` instances of each family with n <= 6 are enumerated; AP ones mix
  one and two worker classes and every other instance is charged the
  default lambda. Then 2.5 * count AP instances with n <= 10 check that the
  exact cost never exceeds the greedy cost.
  """
  enumerators: Dict[str, Callable] = {
      'ap': enumeration.enumerate_ap,
      'bin': lambda inst, worker_penalty: enumeration.enumerate_bin(inst),
      'vrp': enumeration.enumerate_vrp,
  }
  for case in range(count * len(KINDS)):
    kind = KINDS[case % len(KINDS)]
    cfg = GenConfig(class_count=int(rng.integers(1, 3)) if kind == 'ap'
                    else 1, worker_surplus=int(rng.integers(0, 3)))
    inst = instances.generate_instance(kind, int(rng.integers(0, 7)),
                                       _seed(rng), cfg)
    penalty = instances.default_worker_penalty(inst) if case % 2 else 0.0
    result.cases += 1
    exact = _exact_or_none(inst, penalty)
    brute = enumerators[kind](inst, worker_penalty=penalty)
    result.check(_same(exact, brute),
                 f'{kind}{inst.n} seed {inst.seed} lambda {penalty}: exact '
                 f'{exact and exact.objective} vs enumerated '
                 f'{brute and brute.objective}')

  for _ in range(math.ceil(count * 2.5)):
    inst = instances.generate_ap_instance(int(rng.integers(0, 11)),
                                          _seed(rng))
    result.cases += 1
    exact = baselines.exact_ap(inst, worker_penalty=0.0)
    greedy = baselines.greedy_ap(inst, worker_penalty=0.0)
    result.check(exact.total_cost <= greedy.total_cost + 1e-9,
                 f'ap{inst.n} seed {inst.seed}: exact {exact.total_cost} > '
                 f'greedy {greedy.total_cost}')


def serialization_roundtrip(result: SuiteResult, count: int,
                            rng: np.random.Generator) -> None:
  """Instances, solutions and checkpoints survive their formats."""
  for case in range(count):
    kind = KINDS[case % len(KINDS)]
    inst = instances.generate_instance(
        kind, int(rng.integers(0, 21)), _seed(rng),
        GenConfig(class_count=int(rng.integers(1, 4))))
    where = f'{kind}{inst.n} seed {inst.seed}'
    result.cases += 1
    parsed = instances.parse_instance(instances.serialize_instance(inst))
    result.check(parsed == inst, f'{where}: instance changed')
    try:
      solution = baselines.GREEDY_SOLVERS[kind](inst, worker_penalty=None)
    except InfeasibleError:
      solution = None
    if solution is not None:
      result.check(Solution.from_json(solution.to_json()) == solution,
                   f'{where}: solution changed')
    if case % 10 == 0:
      params = PolicyParams.initialize(kind, max(inst.n, 1), inst.m, TINY,
                                       seed=_seed(rng))
      data = checkpoint.encode_checkpoint(params)
      restored, header = checkpoint.decode_checkpoint(data)
      result.check(checkpoint.encode_checkpoint(restored, header) == data,
                   f'{where}: checkpoint bytes changed')


def gradient_check(result: SuiteResult, count: int,
                   rng: np.random.Generator) -> None:
  """Backward against central differences on small random networks."""
  for case in range(count):
    kind = KINDS[case % len(KINDS)]
    n = int(rng.integers(1, 4))
    m = n + int(rng.integers(1, 3))
    net = NetConfig(filters=int(rng.integers(2, 5)),
                    units=int(rng.integers(2, 5)))
    params = PolicyParams.initialize(kind, n, m, net, seed=_seed(rng))
    batch = gradients.random_batch(params, int(rng.integers(2, 7)),
                                   _seed(rng))
    cfg = TrainConfig(entropy_coef=0.01 if case % 2 else 0.0)
    report = gradients.finite_difference_check(params, batch, cfg)
    result.cases += 1
    result.check(report.passed,
                 f'{kind} {n}x{m} with {params.size} parameters: relative '
                 f'error {report.max_relative_error:.3g} at {report.worst}')


Suite = Callable[[SuiteResult, int, np.random.Generator], None]

# Full counts, per suite.
SUITES: Dict[str, Tuple[Suite, int]] = {
    'gradient_check': (gradient_check, 100),
    'mask_soundness': (mask_soundness, 10_000),
    'sampled_action_legality': (sampled_action_legality, 100_000),
    'env_conservation': (env_conservation, 1_000),
    'oracle_agreement': (oracle_agreement, 200),
    'serialization_roundtrip': (serialization_roundtrip, 300),
}


def run_suite(name: str, scale: float = 1.0, seed: int = 0) -> SuiteResult:
  """Runs one suite with its count multiplied by `scale` (at least 1).

  Raises:
      UsageError: unknown suite, or a scale that is not positive.
  """
  if name not in SUITES:
    raise UsageError(f'Unknown suite {name!r}; expected one of '
                     f'{sorted(SUITES)}.')
  if not scale > 0:
    raise UsageError('The suite scale must be positive.')
  suite, full = SUITES[name]
  result = SuiteResult(name=name)
  start = time.monotonic()
  suite(result, max(1, round(full * scale)),
        np.random.Generator(np.random.PCG64(seed)))
  result.seconds = time.monotonic() - start
  logger.info('Suite %s: %d cases, %d failed, %.1f s.', name, result.cases,
              result.failed, result.seconds)
  return result


def run_suites(names: Optional[Sequence[str]] = None, scale: float = 1.0,
               seed: int = 0) -> List[SuiteResult]:
  """Runs the named suites, every suite by default, in the given order."""
  return [run_suite(name, scale, seed) for name in (names or list(SUITES))]
