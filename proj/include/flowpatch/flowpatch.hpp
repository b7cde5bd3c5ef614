#pragma once

#include "flowpatch/compensation.hpp"
#include "flowpatch/flow_completion.hpp"
#include "flowpatch/geometry.hpp"
#include "flowpatch/io.hpp"
#include "flowpatch/laplace.hpp"
#include "flowpatch/masks.hpp"
#include "flowpatch/metrics.hpp"
#include "flowpatch/parallel.hpp"
#include "flowpatch/pipeline.hpp"
#include "flowpatch/propagation.hpp"
#include "flowpatch/raster.hpp"
#include "flowpatch/state.hpp"
#include "flowpatch/synthesis.hpp"
