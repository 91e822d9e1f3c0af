# Copyright (c) 2026, The camoe-head Authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python bindings for the camoe retrieval head."""

from ._camoe import (
    CamoeError,
    aggregate_mean,
    compute_metrics,
    cosine_sim,
    dsl_loss,
    dsl_priors,
    dsl_rerank,
    gradcheck,
    run_cli,
    softmax,
    symmetric_ce,
    version,
)

__version__ = version()

__all__ = [
    "CamoeError",
    "aggregate_mean",
    "compute_metrics",
    "cosine_sim",
    "dsl_loss",
    "dsl_priors",
    "dsl_rerank",
    "gradcheck",
    "run_cli",
    "softmax",
    "symmetric_ce",
    "version",
]
