/*******************************************************************************
* Copyright 2026 The medperturb authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

/// Umbrella header: the whole toolkit.

#pragma once

#include "medperturb/aggregate.hpp"
#include "medperturb/calibrate.hpp"
#include "medperturb/caption_metrics.hpp"
#include "medperturb/common.hpp"
#include "medperturb/filters.hpp"
#include "medperturb/image.hpp"
#include "medperturb/io.hpp"
#include "medperturb/manifest.hpp"
#include "medperturb/metrics.hpp"
#include "medperturb/perturb_base.hpp"
#include "medperturb/perturb_medical.hpp"
#include "medperturb/pipeline.hpp"
#include "medperturb/records.hpp"
#include "medperturb/registry.hpp"
#include "medperturb/rng.hpp"
#include "medperturb/ssim.hpp"
