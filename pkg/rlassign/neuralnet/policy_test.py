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
import unittest

import numpy as np

from rlassign import instances
from rlassign.config import NetConfig
from rlassign.envs import make_env
from rlassign.envs.abstract_env import ActionMask, Observation
from rlassign.exceptions import DeadEndError, ShapeError
from rlassign.neuralnet import policy
from rlassign.neuralnet.policy import PolicyParams

SMALL = NetConfig(filters=4, units=5)


def reference_forward(params, stack, obs):
  """Plain-loop forward pass, independent of the tensor engine."""
  def p(name):
    return params[f'{stack}.{name}']

  relu = lambda v: np.maximum(v, 0.0)
  length, channels = obs.seq.shape
  padded = np.concatenate([np.zeros((1, channels)), obs.seq,
                           np.zeros((1, channels))])
  conv = np.array([[p('seq_conv.bias')[f] + sum(
      padded[pos + k, c] * p('seq_conv.weight')[k, c, f]
      for k in range(3) for c in range(channels))
      for f in range(p('seq_conv.bias').size)] for pos in range(length)])
  hidden = relu(relu(conv) @ p('seq_dense.weight') + p('seq_dense.bias'))
  context = relu(obs.scalars @ p('scalar_dense1.weight') +
                 p('scalar_dense1.bias'))
  context = relu(context @ p('scalar_dense2.weight') +
                 p('scalar_dense2.bias'))
  joined = np.concatenate([hidden.reshape(-1), context])
  return joined @ p('head.weight') + p('head.bias')


class LayoutTest(unittest.TestCase):
  def test_layout_is_contiguous(self):
    layout = policy.build_layout(22, 12)
    self.assertEqual(0, layout[0].offset)
    for before, after in zip(layout, layout[1:]):
      self.assertEqual(before.end, after.offset)
    self.assertEqual('actor.seq_conv.weight', layout[0].name)
    self.assertEqual((3, 2, 128), layout[0].shape)
    self.assertEqual('critic.head.bias', layout[-1].name)

  def test_without_cost_channel(self):
    layout = policy.build_layout(22, 12, NetConfig(cost_channel=False))
    self.assertEqual((3, 1, 128), layout[0].shape)

  def test_head_widths(self):
    params = PolicyParams('ap', 10, 12)
    self.assertEqual((23 * 128, 12), params['actor.head.weight'].shape)
    self.assertEqual((23 * 128, 1), params['critic.head.weight'].shape)
    self.assertEqual(22, params.seq_length)

  def test_stack_slices(self):
    params = PolicyParams('ap', 3, 5, SMALL)
    actor, critic = params.stack_slice('actor'), params.stack_slice('critic')
    self.assertEqual(0, actor.start)
    self.assertEqual(actor.stop, critic.start)
    self.assertEqual(params.size, critic.stop)


class ParameterStoreTest(unittest.TestCase):
  def test_views_write_through(self):
    params = PolicyParams('ap', 2, 4, SMALL)
    params['critic.head.bias'][...] = 7.0
    self.assertEqual(7.0, params.values[-1])

  def test_with_values_copies_metadata(self):
    params = PolicyParams.initialize('bin', 2, 4, SMALL, seed=1)
    other = params.with_values(np.zeros(params.size))
    self.assertEqual(('bin', 2, 4, SMALL),
                     (other.kind, other.n, other.m, other.net))
    self.assertFalse(np.all(params.values == 0))
    copied = params.copy()
    copied.values[0] += 1.0
    self.assertNotEqual(copied.values[0], params.values[0])

  def test_wrong_size(self):
    with self.assertRaises(ShapeError):
      PolicyParams('ap', 2, 4, SMALL, values=np.zeros(3))


class InitializeTest(unittest.TestCase):
  def test_deterministic(self):
    a = PolicyParams.initialize('ap', 3, 5, SMALL, seed=9)
    b = PolicyParams.initialize('ap', 3, 5, SMALL, seed=9)
    c = PolicyParams.initialize('ap', 3, 5, SMALL, seed=10)
    np.testing.assert_array_equal(a.values, b.values)
    self.assertFalse(np.array_equal(a.values, c.values))

  def test_he_uniform(self):
    params = PolicyParams.initialize('ap', 3, 5, SMALL, seed=2)
    for spec in params.layout:
      values = params[spec.name]
      if spec.name.endswith('.bias'):
        self.assertTrue(np.all(values == 0.0), spec.name)
      else:
        limit = np.sqrt(6.0 / (spec.size // spec.shape[-1]))
        self.assertTrue(np.all(np.abs(values) <= limit), spec.name)


class ForwardTest(unittest.TestCase):
  def setUp(self):
    inst = instances.generate_ap_instance(3, seed=4)
    self.env = make_env(inst)
    self.state = self.env.reset()
    self.obs = self.env.encode_observation(self.state, cost_channel=True)
    self.params = PolicyParams.initialize('ap', 3, 5, SMALL, seed=3)

  def test_matches_reference(self):
    mask = np.array([True, False, True, True, True])
    probs, log_probs = policy.actor_forward(self.params, self.obs, mask)
    logits = reference_forward(self.params, 'actor', self.obs)
    allowed = np.exp(logits[mask] - logits[mask].max())
    np.testing.assert_allclose(allowed / allowed.sum(), probs[mask],
                               rtol=1e-10)
    np.testing.assert_allclose(np.log(probs[mask]), log_probs[mask],
                               rtol=1e-10)
    self.assertEqual(0.0, probs[1])
    self.assertAlmostEqual(
        reference_forward(self.params, 'critic', self.obs)[0],
        policy.critic_forward(self.params, self.obs), places=10)

  def test_single_allowed_worker(self):
    mask = ActionMask(np.array([False, False, True, False, False]))
    probs, _ = policy.actor_forward(self.params, self.obs, mask)
    np.testing.assert_array_equal([0, 0, 1, 0, 0], probs)

  def test_zero_heads(self):
    params = self.params.copy()
    params['actor.head.weight'][...] = 0.0
    params['critic.head.weight'][...] = 0.0
    mask = np.array([True, True, False, True, False])
    probs, _ = policy.actor_forward(params, self.obs, mask)
    np.testing.assert_allclose([1 / 3, 1 / 3, 0, 1 / 3, 0], probs,
                               rtol=1e-12)
    self.assertEqual(0.0, policy.critic_forward(params, self.obs))

  def test_batch_matches_single(self):
    states = [self.state]
    state = self.state
    while not state.done:
      state, _ = self.env.step(state,
                               self.env.action_mask(state).indices[0])
      if not state.done:
        states.append(state)
    observations = [self.env.encode_observation(s, cost_channel=True)
                    for s in states]
    masks = np.stack([self.env.action_mask(s).allowed for s in states])
    seq, scalars = policy.stack_observations(observations)
    batched = policy.actor_log_probs(self.params, seq, scalars, masks).value
    values = policy.critic_values(self.params, seq, scalars).value
    for i, obs in enumerate(observations):
      _, single = policy.actor_forward(self.params, obs, masks[i])
      np.testing.assert_allclose(single, batched[i], rtol=1e-12)
      self.assertAlmostEqual(policy.critic_forward(self.params, obs),
                             values[i], places=12)

  def test_shape_errors(self):
    wrong = Observation(seq=np.zeros((7, 2)), scalars=np.zeros(2))
    with self.assertRaises(ShapeError):
      policy.actor_forward(self.params, wrong, np.ones(5, bool))
    one_channel = self.env.encode_observation(self.state)
    with self.assertRaises(ShapeError):
      policy.critic_forward(self.params, one_channel)
    with self.assertRaises(ShapeError):
      policy.critic_forward(self.params, wrong)
    with self.assertRaises(ShapeError):
      policy.actor_forward(self.params, self.obs, np.ones(4, bool))

  def test_all_masked(self):
    with self.assertRaises(DeadEndError):
      policy.actor_forward(self.params, self.obs, np.zeros(5, bool))


if __name__ == '__main__':
  unittest.main()
