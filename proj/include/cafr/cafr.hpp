/*
 * Copyright 2026 The cafr-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "cafr/autoencoder.hpp"
#include "cafr/baselines.hpp"
#include "cafr/cache_state.hpp"
#include "cafr/channel.hpp"
#include "cafr/config.hpp"
#include "cafr/dataset.hpp"
#include "cafr/drl_cache.hpp"
#include "cafr/dueling_net.hpp"
#include "cafr/errors.hpp"
#include "cafr/experiment.hpp"
#include "cafr/federation.hpp"
#include "cafr/log.hpp"
#include "cafr/metrics.hpp"
#include "cafr/mobility.hpp"
#include "cafr/popularity.hpp"
#include "cafr/random.hpp"
#include "cafr/synthetic_corpus.hpp"
