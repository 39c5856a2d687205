#pragma once

// Core library. config.hpp (Boost.PropertyTree) is not included here so that
// users of the algorithms do not need Boost.

#include "capbandit/batch.hpp"
#include "capbandit/capacity.hpp"
#include "capbandit/domain.hpp"
#include "capbandit/error.hpp"
#include "capbandit/flow.hpp"
#include "capbandit/harness.hpp"
#include "capbandit/plot.hpp"
#include "capbandit/policy.hpp"
#include "capbandit/reward_models.hpp"
#include "capbandit/synth.hpp"
