#pragma once

// Umbrella header for the dglseg library.

#include "dglseg/error.hpp"
#include "dglseg/image.hpp"
#include "dglseg/color_quantize.hpp"
#include "dglseg/histograms.hpp"
#include "dglseg/dgl.hpp"
#include "dglseg/bounds.hpp"
#include "dglseg/superpixels.hpp"
#include "dglseg/input_sim.hpp"
#include "dglseg/pipeline.hpp"
#include "dglseg/metrics.hpp"
#include "dglseg/io.hpp"
#include "dglseg/synth.hpp"
#include "dglseg/benchmark.hpp"
