#pragma once

// Umbrella header for the EV-detection library.

#include "evdetect/adam.hpp"
#include "evdetect/common.hpp"
#include "evdetect/conv.hpp"
#include "evdetect/detect.hpp"
#include "evdetect/eval.hpp"
#include "evdetect/experiment.hpp"
#include "evdetect/gradcheck.hpp"
#include "evdetect/layers.hpp"
#include "evdetect/losses.hpp"
#include "evdetect/model.hpp"
#include "evdetect/pipeline.hpp"
#include "evdetect/residual.hpp"
#include "evdetect/rng.hpp"
#include "evdetect/serialize.hpp"
#include "evdetect/soft_dtw.hpp"
#include "evdetect/synth.hpp"
#include "evdetect/tensor.hpp"
