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
from rlassign.neuralnet.checkpoint import (CheckpointHeader, checkpoint_digest,
                                           decode_checkpoint,
                                           encode_checkpoint)
from rlassign.neuralnet.gradients import (Batch, GradCheckReport, LossStats,
                                          backward, batch_loss,
                                          finite_difference_check)
from rlassign.neuralnet.layers import (conv1d_forward, dense_forward,
                                       masked_softmax)
from rlassign.neuralnet.losses import mse_loss, ppo_clip_loss
from rlassign.neuralnet.optimizer import Adam
from rlassign.neuralnet.policy import (GradientSet, ParameterStore,
                                       ParamSpec, PolicyParams,
                                       actor_forward, critic_forward)
from rlassign.neuralnet.tensor import Tensor
