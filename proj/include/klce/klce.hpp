// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Umbrella header.

#include "klce/adam.hpp"
#include "klce/checkpoint.hpp"
#include "klce/dataset.hpp"
#include "klce/decomposition.hpp"
#include "klce/errors.hpp"
#include "klce/grad_check.hpp"
#include "klce/image.hpp"
#include "klce/layers.hpp"
#include "klce/light_curve.hpp"
#include "klce/losses.hpp"
#include "klce/metrics.hpp"
#include "klce/ops.hpp"
#include "klce/pipeline.hpp"
#include "klce/restoration.hpp"
#include "klce/retinex_fusion.hpp"
#include "klce/rng.hpp"
#include "klce/tensor.hpp"
#include "klce/trainer.hpp"
