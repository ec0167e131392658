#pragma once

// Region-wise loss toolkit: umbrella header.

#include "rw/core.hpp"
#include "rw/rng.hpp"
#include "rw/io.hpp"
#include "rw/edt.hpp"
#include "rw/rwmaps.hpp"
#include "rw/loss.hpp"
#include "rw/analysis.hpp"
#include "rw/metrics.hpp"
#include "rw/tinynet.hpp"
#include "rw/trainer.hpp"
#include "rw/gradcheck.hpp"
