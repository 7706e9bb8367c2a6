#pragma once

#include "analyzer.hpp"
#include "byteio.hpp"
#include "graph.hpp"
#include "hyperparams.hpp"
#include "kernels.hpp"
#include "metrics.hpp"
#include "quantize.hpp"
#include "render.hpp"
#include "runtime.hpp"
#include "tensor.hpp"
#include "trials.hpp"
#include "weights.hpp"
