// SPDX-License-Identifier: Apache-2.0
#pragma once

// Umbrella header: the full pipeline from IQ synthesis to evaluation
// reports. Individual headers stay independently includable.

#include "hinova/baselines.hpp"
#include "hinova/checkpoint.hpp"
#include "hinova/common.hpp"
#include "hinova/dataio.hpp"
#include "hinova/detector.hpp"
#include "hinova/eval.hpp"
#include "hinova/fft.hpp"
#include "hinova/fingerprint.hpp"
#include "hinova/kendall.hpp"
#include "hinova/nn/model.hpp"
#include "hinova/nn/train.hpp"
#include "hinova/parallel.hpp"
#include "hinova/preprocess.hpp"
#include "hinova/reference.hpp"
#include "hinova/rng.hpp"
#include "hinova/selftest.hpp"
#include "hinova/synth.hpp"
#include "hinova/weibull.hpp"
