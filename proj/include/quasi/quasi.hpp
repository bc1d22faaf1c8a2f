#pragma once

// Umbrella header: speckle denoising with a Huber data term, anisotropic TV and the
// quantile sparse image prior, plus metrics, registration and file I/O.

#include "quasi/admm.hpp"
#include "quasi/cg.hpp"
#include "quasi/diff_ops.hpp"
#include "quasi/error.hpp"
#include "quasi/huber.hpp"
#include "quasi/image.hpp"
#include "quasi/io.hpp"
#include "quasi/metrics.hpp"
#include "quasi/phantom.hpp"
#include "quasi/pipeline.hpp"
#include "quasi/quantile.hpp"
#include "quasi/registration.hpp"
