// Copyright (c) 2026 The oats authors
// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header: sparse + low-rank weight compression with outlier-aware
// scaling, plus the tensor archive IO and CPU apply kernels around it.

#pragma once

#include "oats/archive_io.hpp"
#include "oats/bench.hpp"
#include "oats/decompose.hpp"
#include "oats/dtypes.hpp"
#include "oats/kernels.hpp"
#include "oats/matrix.hpp"
#include "oats/model_graph.hpp"
#include "oats/pipeline.hpp"
#include "oats/plan.hpp"
#include "oats/report.hpp"
#include "oats/rng.hpp"
#include "oats/scaling.hpp"
#include "oats/sparse_layer.hpp"
#include "oats/svd.hpp"
#include "oats/tensor.hpp"
#include "oats/threshold.hpp"
