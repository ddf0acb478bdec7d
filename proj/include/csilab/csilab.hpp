// SPDX-License-Identifier: Apache-2.0
//
// csilab: learned CSI compression and feedback laboratory
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef CSILAB_CSILAB_HPP
#define CSILAB_CSILAB_HPP

#include "csilab/channel_gen.hpp"
#include "csilab/codec.hpp"
#include "csilab/common.hpp"
#include "csilab/dataset.hpp"
#include "csilab/dct_baseline.hpp"
#include "csilab/entropy_model.hpp"
#include "csilab/feedback_link.hpp"
#include "csilab/latent.hpp"
#include "csilab/metrics.hpp"
#include "csilab/nn.hpp"
#include "csilab/pilot_sim.hpp"
#include "csilab/range_coder.hpp"
#include "csilab/sweep.hpp"

#endif  // CSILAB_CSILAB_HPP
