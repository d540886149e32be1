#pragma once

#include "mwswitch/bounds.hpp"
#include "mwswitch/core_model.hpp"
#include "mwswitch/errors.hpp"
#include "mwswitch/geometry.hpp"
#include "mwswitch/gg1.hpp"
#include "mwswitch/lyapunov.hpp"
#include "mwswitch/matching.hpp"
#include "mwswitch/sim_harness.hpp"
