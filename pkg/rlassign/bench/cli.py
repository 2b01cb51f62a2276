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
"""The `rlassign` command line.

Every file argument may be a local path or a `gs://bucket/path` location;
both are read and written through `rlassign.datastore`. Errors are logged
and turned into the exit code of their exception class: 1 for usage,
configuration, parse and size errors, 2 for infeasible instances and 3 for
internal invariant violations.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from rlassign import baselines, decorators, instances
from rlassign.baselines.solution import resolve_penalty, validate_solution
from rlassign.bench import acceptance, harness, selftest
from rlassign.bench.acceptance import AcceptanceRun
from rlassign.bench.report import FORMATS, METHODS, BenchReport, emit_report
from rlassign.bench.selftest import SuiteResult
from rlassign.config import KINDS, RewardConfig, RunConfig
from rlassign.datastore import open_datastore
from rlassign.exceptions import RLAssignException, UsageError
from rlassign.ppo import agent, trainer

logger = logging.getLogger(__name__)

VERBOSITY = ('DEBUG', 'INFO', 'WARNING', 'ERROR')
INDEX_FIELDS = ('sha256', 'size', 'stored_at')
STORE_ACTIONS = ('list', 'describe', 'delete')


class _Parser(argparse.ArgumentParser):
  """Reports bad arguments as a UsageError instead of exiting with 2."""

  def error(self, message: str) -> None:
    raise UsageError(message)


def read_document(uri: str) -> bytes:
  store, name = open_datastore(uri)
  data = store.get_document(name)
  if data is None:
    raise UsageError(f'Nothing found at {uri}.')
  return data


def write_document(uri: str, data: bytes) -> None:
  store, name = open_datastore(uri)
  store.store_document(name, data)
  logger.info('Wrote %d bytes to %s.', len(data), uri)


def _emit(text: str, uri: Optional[str]) -> None:
  if uri:
    write_document(uri, text.encode('utf-8'))
  else:
    sys.stdout.write(text if text.endswith('\n') else text + '\n')


def int_list(text: str) -> List[int]:
  """Parses '10,20,30' or an inclusive range '1..10'."""
  try:
    if '..' in text:
      first, _, last = text.partition('..')
      return list(range(int(first), int(last) + 1))
    return [int(part) for part in text.split(',') if part.strip()]
  except ValueError as e:
    raise UsageError(f'Expected integers like 1,2,3 or 1..10, got '
                     f'{text!r}.') from e


def _run_config(args: argparse.Namespace) -> RunConfig:
  """The run config file, if any, with explicit flags layered on top."""
  run = RunConfig()
  if args.config:
    run = RunConfig.load(read_document(args.config).decode('utf-8'))
  depot_return = False if getattr(args, 'no_depot_return', False) else None
  clear_buffer = True if getattr(args, 'clear_buffer', False) else None
  return run.override(
      kind=getattr(args, 'kind', None),
      n=getattr(args, 'n', None),
      reward={'worker_penalty': getattr(args, 'worker_penalty', None),
              'depot_return': depot_return},
      train={'episodes': getattr(args, 'episodes', None),
             'seed': getattr(args, 'train_seed', None),
             'lr': getattr(args, 'lr', None),
             'clear_buffer': clear_buffer}).validate()


def gen(args: argparse.Namespace) -> int:
  run = _run_config(args)
  inst = instances.generate_instance(run.kind, run.n, args.seed, run.gen)
  _emit(instances.serialize_instance(inst), args.out)
  return 0


def train(args: argparse.Namespace) -> int:
  run = _run_config(args)
  lines = []
  policy = trainer.train(
      run, on_record=(lambda r: lines.append(r.to_json())) if args.log
      else None)
  write_document(args.out, policy.to_bytes())
  if args.log:
    write_document(args.log, ''.join(f'{line}\n' for line in lines)
                   .encode('utf-8'))
  logger.info('Trained %s%d for %d episodes, best mean gap %s.', run.kind,
              run.n, run.train.episodes, policy.header.best_eval)
  return 0


def solve(args: argparse.Namespace) -> int:
  inst = instances.parse_instance(
      read_document(args.instance).decode('utf-8'))
  if args.method == 'rl':
    if not args.policy:
      raise UsageError('--policy is needed to solve with the policy.')
    policy = trainer.TrainedPolicy.from_bytes(read_document(args.policy))
    worker_penalty = args.worker_penalty
    if worker_penalty is None:
      worker_penalty = policy.reward_config.worker_penalty
    penalty = resolve_penalty(inst, worker_penalty)
    reward_config = RewardConfig(
        worker_penalty=penalty,
        depot_return=policy.reward_config.depot_return)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    outcome = decorators.timed(agent.decode)(policy.params, inst,
                                             reward_config, args.mode, rng)
  else:
    penalty = resolve_penalty(inst, args.worker_penalty)
    solvers = baselines.EXACT_SOLVERS if args.method == 'exact' else \
        baselines.GREEDY_SOLVERS
    outcome = decorators.timed(solvers[inst.kind])(inst,
                                                   worker_penalty=penalty)
  validate_solution(inst, outcome.value, penalty)
  if args.solution:
    write_document(args.solution, outcome.value.to_json().encode('utf-8'))
  report = BenchReport(rows=[harness.bench_row(inst, args.method, outcome)])
  _emit(emit_report(report, args.format), args.report)
  return 0


def _policy_location(directory: str, kind: str, n: int) -> str:
  return f'{directory.rstrip("/")}/{kind}{n}.ckpt'


def bench(args: argparse.Namespace) -> int:
  run = _run_config(args)
  sizes = int_list(args.sizes)
  methods = [m.strip() for m in args.methods.split(',') if m.strip()]
  policies: Dict[int, trainer.TrainedPolicy] = {}
  if 'rl' in methods:
    if not args.policies:
      raise UsageError('--policies is needed to benchmark the policy.')
    for n in sizes:
      data = read_document(_policy_location(args.policies, run.kind, n))
      policies[n] = trainer.TrainedPolicy.from_bytes(data)
  report = harness.run_benchmark(sizes, args.seeds, methods, run, policies,
                                 first_seed=args.first_seed)
  _emit(emit_report(report, args.format), args.report)
  return 0


def perturb_eval(args: argparse.Namespace) -> int:
  inst = instances.parse_instance(
      read_document(args.instance).decode('utf-8'))
  report = harness.perturb_eval(
      read_document(args.policy), inst, int_list(args.k), delta=args.delta,
      seed=args.select_seed, oracle=args.oracle,
      worker_penalty=args.worker_penalty, greedy=args.with_greedy)
  _emit(emit_report(report, args.format), args.report)
  return 0


def store(args: argparse.Namespace) -> int:
  """Lists, describes or deletes documents kept in a datastore."""
  if args.action == 'list':
    datastore, _ = open_datastore(args.location.rstrip('/') + '/')
    for id in datastore.list_documents(args.prefix):
      entry = datastore.describe_document(id) or {}
      sys.stdout.write('\t'.join(
          [id] + [str(entry.get(key, '')) for key in INDEX_FIELDS]) + '\n')
    return 0

  datastore, name = open_datastore(args.location)
  if not name:
    raise UsageError(f'{args.location} names a directory, not a document.')
  if args.action == 'describe':
    entry = datastore.describe_document(name)
    if entry is None:
      raise UsageError(f'{args.location} is not in the datastore index.')
    sys.stdout.write(json.dumps(dict(entry, id=name), sort_keys=True) + '\n')
    return 0
  datastore.delete_document(name)
  logger.info('Deleted %s.', args.location)
  return 0


def _print_results(results: Sequence[SuiteResult]) -> int:
  for result in results:
    sys.stdout.write(f'{"PASS" if result.passed else "FAIL"} {result.name}: '
                     f'{result.cases} cases, {result.failed} failed, '
                     f'{result.seconds:.1f} s\n')
    for failure in result.failures:
      sys.stdout.write(f'  {failure}\n')
  return 0 if all(r.passed for r in results) else 3


def _suites(names: Sequence[str], args: argparse.Namespace) -> int:
  return _print_results(selftest.run_suites(names, args.scale, args.seed))


def gradcheck(args: argparse.Namespace) -> int:
  return _suites(['gradient_check'], args)


def selftest_command(args: argparse.Namespace) -> int:
  names = [s.strip() for s in args.suites.split(',')] if args.suites \
      else None
  return _suites(names, args)


def acceptance_command(args: argparse.Namespace) -> int:
  """Runs the acceptance checks.

  Policies missing from --policies are trained, and saved under --out.
  """
  policies: Dict[str, trainer.TrainedPolicy] = {}
  if args.policies:
    datastore, _ = open_datastore(args.policies.rstrip('/') + '/')
    for kind in KINDS:
      data = datastore.get_document(f'{kind}{acceptance.TRAIN_SIZE}.ckpt')
      if data is not None:
        policies[kind] = trainer.TrainedPolicy.from_bytes(data)
  names = [c.strip() for c in args.checks.split(',')] if args.checks \
      else None
  results, run = acceptance.run_checks(
      names, AcceptanceRun(args.scale, args.seed, policies))
  if args.out:
    for kind in sorted(run.train_seconds):
      write_document(
          _policy_location(args.out, kind, acceptance.TRAIN_SIZE),
          run.policies[kind].to_bytes())
  return _print_results(results)


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
  parser.add_argument('--config', help='run-config file (JSON); flags win')
  parser.add_argument('--kind', choices=KINDS,
                      help='problem family; the run config or ap otherwise')
  parser.add_argument('--n', type=int, help='entities per instance')
  parser.add_argument('--worker-penalty', type=float,
                      help='lambda per used worker; the per-instance '
                      'default otherwise')
  parser.add_argument('--no-depot-return', action='store_true',
                      help='do not charge the return to the depot')


def build_parser() -> argparse.ArgumentParser:
  parser = _Parser(prog='rlassign', description=__doc__.splitlines()[0])
  parser.add_argument('--verbosity', choices=VERBOSITY, default='WARNING')
  commands = parser.add_subparsers(dest='command', required=True,
                                   parser_class=_Parser)

  command = commands.add_parser('gen', help='generate an instance')
  _add_run_flags(command)
  command.add_argument('--seed', type=int, required=True)
  command.add_argument('--out', help='instance file; stdout otherwise')
  command.set_defaults(handler=gen)

  command = commands.add_parser('train', help='train a policy')
  _add_run_flags(command)
  command.add_argument('--episodes', type=int)
  command.add_argument('--seed', dest='train_seed', type=int,
                       help='master seed')
  command.add_argument('--lr', type=float)
  command.add_argument('--clear-buffer', action='store_true',
                       help='empty the rollout buffer before each episode')
  command.add_argument('--out', required=True, help='checkpoint file')
  command.add_argument('--log', help='JSON lines training log')
  command.set_defaults(handler=train)

  command = commands.add_parser('solve', help='solve one instance')
  command.add_argument('--instance', required=True)
  command.add_argument('--policy', help='checkpoint file')
  command.add_argument('--method', choices=METHODS, default='rl')
  mode = command.add_mutually_exclusive_group()
  mode.add_argument('--greedy', dest='mode', action='store_const',
                    const=agent.GREEDY)
  mode.add_argument('--sample', dest='mode', action='store_const',
                    const=agent.SAMPLE)
  command.set_defaults(mode=agent.GREEDY)
  command.add_argument('--seed', type=int, default=0,
                       help='sampling seed')
  command.add_argument('--worker-penalty', type=float)
  command.add_argument('--solution', help='solution file (JSON)')
  command.add_argument('--report', help='report file; stdout otherwise')
  command.add_argument('--format', choices=FORMATS, default='csv')
  command.set_defaults(handler=solve)

  command = commands.add_parser('bench', help='benchmark a size sweep')
  _add_run_flags(command)
  command.add_argument('--sizes', default='10,20,30,40,50')
  command.add_argument('--seeds', type=int, default=5,
                       help='instances per size')
  command.add_argument('--first-seed', type=int, default=0)
  command.add_argument('--methods', default=','.join(METHODS))
  command.add_argument('--policies',
                       help='directory holding <kind><n>.ckpt checkpoints')
  command.add_argument('--report', help='report file; stdout otherwise')
  command.add_argument('--format', choices=FORMATS, default='markdown')
  command.set_defaults(handler=bench)

  command = commands.add_parser(
      'perturb-eval', help='re-solve perturbed copies of an instance')
  command.add_argument('--policy', required=True)
  command.add_argument('--instance', required=True)
  command.add_argument('--k', default='1..10',
                       help='perturbation counts, 1..10 or 1,2,5')
  command.add_argument('--delta', type=int, default=5)
  command.add_argument('--select-seed', type=int,
                       help='choose entities at random; the first k '
                       'otherwise')
  command.add_argument('--oracle', action='store_true',
                       help='also solve every perturbation exactly')
  command.add_argument('--with-greedy', action='store_true',
                       help='also solve every perturbation greedily')
  command.add_argument('--worker-penalty', type=float)
  command.add_argument('--report', help='report file; stdout otherwise')
  command.add_argument('--format', choices=FORMATS, default='markdown')
  command.set_defaults(handler=perturb_eval)

  command = commands.add_parser(
      'store', help='list, describe or delete stored artifacts')
  command.add_argument('action', choices=STORE_ACTIONS)
  command.add_argument('location',
                       help='a directory for list, a document otherwise')
  command.add_argument('--prefix', help='only ids starting with it')
  command.set_defaults(handler=store)

  for name, handler, help_text in (
      ('gradcheck', gradcheck, 'finite-difference gradient suite'),
      ('selftest', selftest_command, 'invariant suites')):
    command = commands.add_parser(name, help=help_text)
    command.add_argument('--scale', type=float, default=1.0,
                         help='multiplies every suite count')
    command.add_argument('--seed', type=int, default=0)
    if name == 'selftest':
      command.add_argument('--suites', help='comma separated suite names: ' +
                           ', '.join(selftest.SUITES))
    command.set_defaults(handler=handler)

  command = commands.add_parser(
      'acceptance', help='check trained policies against the baselines')
  command.add_argument('--scale', type=float, default=1.0,
                       help='multiplies episodes and instance counts; '
                       'thresholds apply from 1')
  command.add_argument('--seed', type=int, default=0)
  command.add_argument('--checks', help='comma separated check names: ' +
                       ', '.join(acceptance.CHECKS))
  command.add_argument('--policies',
                       help='directory of <kind>10.ckpt to check instead '
                       'of training')
  command.add_argument('--out', help='directory for the policies trained')
  command.set_defaults(handler=acceptance_command)
  return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
  """Runs one command and returns its exit code."""
  try:
    args = build_parser().parse_args(argv)
  except UsageError as e:
    sys.stderr.write(f'rlassign: {e.message}\n')
    return e.exit_code
  logging.basicConfig(level=args.verbosity,
                      format='%(asctime)s %(levelname)s %(name)s: '
                      '%(message)s')
  handler: Callable[[argparse.Namespace], int] = args.handler
  try:
    return handler(args)
  except RLAssignException as e:
    logger.error('%s: %s', type(e).__name__, e.message)
    return e.exit_code
