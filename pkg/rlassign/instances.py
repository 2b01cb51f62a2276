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
"""Problem instances: data models, seeded generators and the file format.

Three families share one shape: entities that consume capacity (tasks,
items, customers) and resources that provide it (workers, bins, vehicles).
Generators draw from `numpy.random.Generator(PCG64(seed))`, so equal
`(n, seed, cfg)` gives bit-identical instances on every platform.
"""
from __future__ import annotations

import dataclasses
import json
import math
import string
import typing
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Type, Union

import numpy as np
from dataclasses_json import Undefined, config, dataclass_json

from rlassign import decorators
from rlassign.config import GenConfig
from rlassign.exceptions import ConfigurationError, InfeasibleError, ParseError

COORD_DIGITS = 6


def _invalid(field_name: str, message: str) -> ConfigurationError:
  return ConfigurationError(f'{field_name}: {message}', field=field_name)


def _is_int(value: Any) -> bool:
  return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


def _is_real(value: Any) -> bool:
  return (_is_int(value) or isinstance(value, (float, np.floating))) and \
      math.isfinite(value)


@dataclass_json(undefined=Undefined.RAISE)
@dataclass
class TaskSpec(object):
  effort: int
  eligibility: List[str]


@dataclass_json(undefined=Undefined.RAISE)
@dataclass
class WorkerSpec(object):
  capacity: int
  worker_class: str = field(metadata=config(field_name='class'))


@dataclass_json(undefined=Undefined.RAISE)
@dataclass
class ApInstance(object):
  """An assignment instance.

  `cost[i][j]` is the cost of worker `j` performing task `i`. Treat instances
  as values: derived arrays are cached on first use.
  """
  tasks: List[TaskSpec]
  workers: List[WorkerSpec]
  cost: List[List[int]]
  seed: int
  kind: str = 'ap'

  @property
  def n(self) -> int:
    return len(self.tasks)

  @property
  def m(self) -> int:
    return len(self.workers)

  @decorators.lazy_property
  def demands(self) -> np.ndarray:
    return np.array([t.effort for t in self.tasks], dtype=np.int64)

  @decorators.lazy_property
  def capacities(self) -> np.ndarray:
    return np.array([w.capacity for w in self.workers], dtype=np.int64)

  @decorators.lazy_property
  def cost_matrix(self) -> np.ndarray:
    return np.array(self.cost, dtype=np.float64).reshape(self.n, self.m)

  @decorators.lazy_property
  def eligibility_matrix(self) -> np.ndarray:
    """Boolean (n, m): worker j's class is in task i's eligibility set."""
    classes = [w.worker_class for w in self.workers]
    return np.array([[c in set(t.eligibility) for c in classes]
                     for t in self.tasks], dtype=bool).reshape(self.n, self.m)

  def validate(self) -> ApInstance:
    if self.kind != 'ap':
      raise _invalid('kind', f'expected "ap", got {self.kind!r}')
    if not _is_int(self.seed):
      raise _invalid('seed', 'must be an integer')
    for w in self.workers:
      if not _is_int(w.capacity) or w.capacity < 0:
        raise _invalid('capacity', 'must be a non-negative integer')
      if not isinstance(w.worker_class, str):
        raise _invalid('class', 'must be a string')
    top = max((w.capacity for w in self.workers), default=0)
    classes = {w.worker_class for w in self.workers}
    for t in self.tasks:
      if not _is_int(t.effort) or not 1 <= t.effort <= top:
        raise _invalid('effort', f'must be an integer in [1, {top}]')
      if not isinstance(t.eligibility, list) or not t.eligibility:
        raise _invalid('eligibility', 'must be a non-empty list')
      if not set(t.eligibility) <= classes:
        raise _invalid('eligibility',
                       f'unknown worker classes {set(t.eligibility) - classes}')
    if len(self.cost) != self.n or any(
            not isinstance(row, list) or len(row) != self.m
            for row in self.cost):
      raise _invalid('cost', f'must be a {self.n} x {self.m} matrix')
    if any(not _is_real(c) or c < 0 for row in self.cost for c in row):
      raise _invalid('cost', 'entries must be non-negative numbers')
    return self


@dataclass_json(undefined=Undefined.RAISE)
@dataclass
class Item(object):
  weight: int
  value: int


@dataclass_json(undefined=Undefined.RAISE)
@dataclass
class BinInstance(object):
  items: List[Item]
  bins: List[int]
  seed: int
  kind: str = 'bin'

  @property
  def n(self) -> int:
    return len(self.items)

  @property
  def m(self) -> int:
    return len(self.bins)

  @decorators.lazy_property
  def demands(self) -> np.ndarray:
    return np.array([i.weight for i in self.items], dtype=np.int64)

  @decorators.lazy_property
  def values(self) -> np.ndarray:
    return np.array([i.value for i in self.items], dtype=np.float64)

  @decorators.lazy_property
  def capacities(self) -> np.ndarray:
    return np.array(self.bins, dtype=np.int64)

  def validate(self) -> BinInstance:
    if self.kind != 'bin':
      raise _invalid('kind', f'expected "bin", got {self.kind!r}')
    if not _is_int(self.seed):
      raise _invalid('seed', 'must be an integer')
    for item in self.items:
      if not _is_int(item.weight) or item.weight < 1:
        raise _invalid('weight', 'must be an integer >= 1')
      if not _is_int(item.value) or item.value < 0:
        raise _invalid('value', 'must be a non-negative integer')
    if any(not _is_int(c) or c < 0 for c in self.bins):
      raise _invalid('bins', 'capacities must be non-negative integers')
    return self


@dataclass_json(undefined=Undefined.RAISE)
@dataclass
class Customer(object):
  location: List[float]
  demand: int


@dataclass_json(undefined=Undefined.RAISE)
@dataclass
class VrpInstance(object):
  depot: List[float]
  customers: List[Customer]
  vehicles: List[int]
  seed: int
  kind: str = 'vrp'

  @property
  def n(self) -> int:
    return len(self.customers)

  @property
  def m(self) -> int:
    return len(self.vehicles)

  @decorators.lazy_property
  def demands(self) -> np.ndarray:
    return np.array([c.demand for c in self.customers], dtype=np.int64)

  @decorators.lazy_property
  def capacities(self) -> np.ndarray:
    return np.array(self.vehicles, dtype=np.int64)

  @decorators.lazy_property
  def locations(self) -> np.ndarray:
    """(n + 1, 2) coordinates, the depot first."""
    return np.array([self.depot] + [c.location for c in self.customers],
                    dtype=np.float64).reshape(self.n + 1, 2)

  @decorators.lazy_property
  def distances(self) -> np.ndarray:
    """(n + 1, n + 1) Euclidean distances, node 0 is the depot."""
    delta = self.locations[:, None, :] - self.locations[None, :, :]
    return np.sqrt((delta ** 2).sum(axis=-1))

  def validate(self) -> VrpInstance:
    if self.kind != 'vrp':
      raise _invalid('kind', f'expected "vrp", got {self.kind!r}')
    if not _is_int(self.seed):
      raise _invalid('seed', 'must be an integer')
    for name, point in [('depot', self.depot)] + \
            [('location', c.location) for c in self.customers]:
      if not isinstance(point, list) or len(point) != 2 or \
              not all(_is_real(x) for x in point):
        raise _invalid(name, 'must be two finite numbers')
    if any(not _is_int(c.demand) or c.demand < 1 for c in self.customers):
      raise _invalid('demand', 'must be an integer >= 1')
    if any(not _is_int(c) or c < 0 for c in self.vehicles):
      raise _invalid('vehicles', 'capacities must be non-negative integers')
    return self


Instance = Union[ApInstance, BinInstance, VrpInstance]

INSTANCE_TYPES: Dict[str, Type] = {
    'ap': ApInstance,
    'bin': BinInstance,
    'vrp': VrpInstance,
}


def _rng(seed: int) -> np.random.Generator:
  return np.random.Generator(np.random.PCG64(seed))


def _class_names(count: int) -> List[str]:
  return list(string.ascii_uppercase[:count])


def generate_ap_instance(n: int, seed: int,
                         cfg: GenConfig = GenConfig()) -> ApInstance:
  """Generates a random assignment instance.

  Draw order: n efforts in [1, effort_cap], then the row-major n x m cost
  matrix in cost_range, then (only when class_count > 1) one eligible class
  per task. Worker j gets class j mod class_count.

  Args:
      n (int): the task count.
      seed (int): the generator seed.
      cfg (GenConfig): the generator settings.

  Returns:
      ApInstance: n tasks and n + worker_surplus workers.

  Raises:
      ConfigurationError: invalid cfg or n.
  """
  cfg.validate()
  if n < 0:
    raise ConfigurationError('n must be >= 0.', field='n')
  m = n + cfg.worker_surplus
  rng = _rng(seed)
  efforts = rng.integers(1, cfg.effort_cap + 1, size=n)
  lo, hi = cfg.cost_range
  cost = rng.integers(lo, hi + 1, size=(n, m))
  classes = _class_names(cfg.class_count)
  if cfg.class_count > 1:
    task_classes = [classes[k] for k in rng.integers(0, cfg.class_count,
                                                     size=n)]
  else:
    task_classes = classes * n

  return ApInstance(
      tasks=[TaskSpec(effort=int(e), eligibility=[c])
             for e, c in zip(efforts, task_classes)],
      workers=[WorkerSpec(capacity=cfg.capacity_default,
                          worker_class=classes[j % cfg.class_count])
               for j in range(m)],
      cost=cost.astype(int).tolist(),
      seed=seed)


def generate_bin_instance(n: int, seed: int,
                          cfg: GenConfig = GenConfig()) -> BinInstance:
  """Generates a random bin packing instance.

  Draw order: n weights in [1, effort_cap], then n values in cost_range.
  """
  cfg.validate()
  if n < 0:
    raise ConfigurationError('n must be >= 0.', field='n')
  rng = _rng(seed)
  weights = rng.integers(1, cfg.effort_cap + 1, size=n)
  values = rng.integers(cfg.cost_range[0], cfg.cost_range[1] + 1, size=n)
  return BinInstance(
      items=[Item(weight=int(w), value=int(v))
             for w, v in zip(weights, values)],
      bins=[cfg.capacity_default] * (n + cfg.worker_surplus),
      seed=seed)


def generate_vrp_instance(n: int, seed: int,
                          cfg: GenConfig = GenConfig()) -> VrpInstance:
  """Generates a random capacitated routing instance.

  Draw order: n x 2 coordinates in coord_range, then n demands in
  [1, effort_cap]. The depot sits at the middle of the range.
  """
  cfg.validate()
  if n < 0:
    raise ConfigurationError('n must be >= 0.', field='n')
  rng = _rng(seed)
  lo, hi = cfg.coord_range
  coords = np.round(rng.uniform(lo, hi, size=(n, 2)), COORD_DIGITS)
  demands = rng.integers(1, cfg.effort_cap + 1, size=n)
  middle = round((lo + hi) / 2, COORD_DIGITS)
  return VrpInstance(
      depot=[middle, middle],
      customers=[Customer(location=[float(x), float(y)], demand=int(d))
                 for (x, y), d in zip(coords, demands)],
      vehicles=[cfg.capacity_default] * (n + cfg.worker_surplus),
      seed=seed)


GENERATORS = {
    'ap': generate_ap_instance,
    'bin': generate_bin_instance,
    'vrp': generate_vrp_instance,
}


def generate_instance(kind: str, n: int, seed: int,
                      cfg: GenConfig = GenConfig()) -> Instance:
  if kind not in GENERATORS:
    raise ConfigurationError(f'Unknown instance kind {kind!r}.', field='kind')
  return GENERATORS[kind](n, seed, cfg)


def cluster_members(inst: ApInstance) -> List[Tuple[List[int], List[int]]]:
  """Groups task and worker indices by task eligibility set.

  Groups come in order of first appearance among the tasks. A worker joins
  every group whose eligibility set contains its class.

  Raises:
      InfeasibleError: a task's eligibility matches no worker.
  """
  groups: Dict[frozenset, List[int]] = {}
  for i, task in enumerate(inst.tasks):
    groups.setdefault(frozenset(task.eligibility), []).append(i)

  members = []
  for eligibility, tasks in groups.items():
    workers = [j for j, w in enumerate(inst.workers)
               if w.worker_class in eligibility]
    if not workers:
      raise InfeasibleError(
          f'Tasks {tasks} are eligible for {sorted(eligibility)}, '
          'which no worker provides.')
    members.append((tasks, workers))
  return members


def sub_instance(inst: ApInstance, tasks: Sequence[int],
                 workers: Sequence[int]) -> ApInstance:
  return ApInstance(
      tasks=[dataclasses.replace(inst.tasks[i],
                                 eligibility=list(inst.tasks[i].eligibility))
             for i in tasks],
      workers=[dataclasses.replace(inst.workers[j]) for j in workers],
      cost=[[inst.cost[i][j] for j in workers] for i in tasks],
      seed=inst.seed)


def eligibility_clusters(inst: ApInstance) -> List[ApInstance]:
  """Splits an assignment instance into independently solvable clusters.

  Args:
      inst (ApInstance): the instance.

  Returns:
      List[ApInstance]: one sub-instance per distinct eligibility set, with
        the eligible workers and the matching cost sub-matrix.

  Raises:
      InfeasibleError: a task's eligibility matches no worker.
  """
  return [sub_instance(inst, tasks, workers)
          for tasks, workers in cluster_members(inst)]


def default_worker_penalty(inst: Instance) -> float:
  """Lambda when none is configured: one typical assignment's worth.

  That is the rounded mean cost entry for AP, the rounded mean item value
  for bins and the rounded mean depot-to-customer distance for VRP.
  """
  if inst.n == 0 or inst.m == 0:
    return 0.0
  if inst.kind == 'ap':
    return float(round(inst.cost_matrix.mean()))
  if inst.kind == 'bin':
    return float(round(inst.values.mean()))
  return float(round(inst.distances[0, 1:].mean()))


def pad_instance(inst: Instance, n: int, m: int) -> Instance:
  """Embeds an instance into a larger (n, m) shape.

  Padding tasks (items, customers) have effort 0 and so count as already
  complete; padding workers (bins, vehicles) have capacity 0 and so are
  always masked. Padding customers sit on the depot. Used to run a policy
  trained on (n, m) over a smaller instance or cluster.

  Raises:
      ConfigurationError: the instance is larger than (n, m).
  """
  if inst.n > n or inst.m > m:
    raise ConfigurationError(
        f'Cannot pad a {inst.n} x {inst.m} instance to {n} x {m}.')
  if isinstance(inst, BinInstance):
    return BinInstance(
        items=[dataclasses.replace(i) for i in inst.items] +
        [Item(weight=0, value=0) for _ in range(n - inst.n)],
        bins=list(inst.bins) + [0] * (m - inst.m), seed=inst.seed)
  if isinstance(inst, VrpInstance):
    return VrpInstance(
        depot=list(inst.depot),
        customers=[Customer(location=list(c.location), demand=c.demand)
                   for c in inst.customers] +
        [Customer(location=list(inst.depot), demand=0)
         for _ in range(n - inst.n)],
        vehicles=list(inst.vehicles) + [0] * (m - inst.m), seed=inst.seed)

  filler_class = inst.workers[0].worker_class if inst.workers else 'A'
  filler_eligibility = list(inst.tasks[0].eligibility) if inst.tasks \
      else [filler_class]
  tasks = [dataclasses.replace(t, eligibility=list(t.eligibility))
           for t in inst.tasks] + \
      [TaskSpec(effort=0, eligibility=list(filler_eligibility))
       for _ in range(n - inst.n)]
  workers = [dataclasses.replace(w) for w in inst.workers] + \
      [WorkerSpec(capacity=0, worker_class=filler_class)
       for _ in range(m - inst.m)]
  cost = [list(row) + [0] * (m - inst.m) for row in inst.cost] + \
      [[0] * m for _ in range(n - inst.n)]
  return ApInstance(tasks=tasks, workers=workers, cost=cost, seed=inst.seed)


def with_demands(inst: Instance, demands: Sequence[int]) -> Instance:
  """Returns a copy with new efforts, weights or demands, in entity order."""
  demands = [int(d) for d in demands]
  if isinstance(inst, ApInstance):
    return ApInstance(
        tasks=[TaskSpec(effort=d, eligibility=list(t.eligibility))
               for t, d in zip(inst.tasks, demands)],
        workers=[dataclasses.replace(w) for w in inst.workers],
        cost=[list(row) for row in inst.cost], seed=inst.seed)
  if isinstance(inst, BinInstance):
    return BinInstance(
        items=[Item(weight=d, value=i.value)
               for i, d in zip(inst.items, demands)],
        bins=list(inst.bins), seed=inst.seed)
  return VrpInstance(
      depot=list(inst.depot),
      customers=[Customer(location=list(c.location), demand=d)
                 for c, d in zip(inst.customers, demands)],
      vehicles=list(inst.vehicles), seed=inst.seed)


def serialize_instance(inst: Instance) -> str:
  """Renders an instance in the JSON instance file format."""
  document = inst.to_dict(encode_json=False)
  document = {'kind': document.pop('kind'), **document}
  return json.dumps(document, indent=2)


def _json_name(f: dataclasses.Field) -> str:
  override = f.metadata.get('dataclasses_json', {}).get('letter_case')
  return override(f.name) if override else f.name


def _line_of(text: str, key: str) -> int:
  needle = f'"{key}"'
  for number, line in enumerate(text.splitlines(), start=1):
    if needle in line:
      return number
  return 1


def _check_fields(cls: Type, data: Any, text: str) -> None:
  """Rejects unknown and missing keys, recursing into nested records."""
  if not isinstance(data, Mapping):
    raise ParseError(f'expected an object for {cls.__name__}',
                     field=cls.__name__)
  hints = typing.get_type_hints(cls)
  known = {}
  for f in dataclasses.fields(cls):
    known[_json_name(f)] = (f, hints[f.name])

  for key in data:
    if key not in known:
      raise ParseError('unknown field', line=_line_of(text, key), field=key)

  for key, (f, hint) in known.items():
    if key not in data:
      if f.default is dataclasses.MISSING:
        raise ParseError('missing field', field=key)
      continue
    args = typing.get_args(hint)
    if typing.get_origin(hint) in (list, List) and args and \
            dataclasses.is_dataclass(args[0]):
      if not isinstance(data[key], list):
        raise ParseError('expected an array', line=_line_of(text, key),
                         field=key)
      for element in data[key]:
        _check_fields(args[0], element, text)


def parse_instance(text: str) -> Instance:
  """Parses the JSON instance file format.

  Args:
      text (str): the file contents.

  Returns:
      Instance: the validated instance.

  Raises:
      ParseError: malformed JSON, unknown or missing fields or invalid
        values. The error names the line and the field.
  """
  try:
    data = json.loads(text)
  except json.JSONDecodeError as e:
    raise ParseError(e.msg, line=e.lineno, field=None) from e

  if not isinstance(data, dict):
    raise ParseError('expected a top-level object', field=None)
  if (kind := data.get('kind')) not in INSTANCE_TYPES:
    raise ParseError(f'unknown kind {kind!r}', line=_line_of(text, 'kind'),
                     field='kind')

  cls = INSTANCE_TYPES[kind]
  _check_fields(cls, data, text)
  try:
    inst = cls.from_dict(data)
    return inst.validate()
  except ConfigurationError as e:
    raise ParseError(e.message, line=_line_of(text, e.field or ''),
                     field=e.field) from e
  except (TypeError, ValueError, AttributeError) as e:
    raise ParseError(str(e), field=None) from e
