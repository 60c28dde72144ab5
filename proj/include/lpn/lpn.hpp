#pragma once

// Umbrella header: anchor generation and matching, the rotated-Gaussian
// spatial pattern score, the reweighted multi-task loss with a trainable
// per-anchor scorer, NMS-based counting, and evaluation metrics.

#include "lpn/anchors.hpp"
#include "lpn/config.hpp"
#include "lpn/data_io.hpp"
#include "lpn/detection.hpp"
#include "lpn/errors.hpp"
#include "lpn/evaluate.hpp"
#include "lpn/geometry.hpp"
#include "lpn/loss.hpp"
#include "lpn/metrics.hpp"
#include "lpn/parallel.hpp"
#include "lpn/random.hpp"
#include "lpn/reports.hpp"
#include "lpn/scorer.hpp"
#include "lpn/spatial_kernel.hpp"
#include "lpn/trainer.hpp"
#include "lpn/version.hpp"
