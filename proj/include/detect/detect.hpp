#pragma once

// Umbrella header.

#include "detect/dqmm.hpp"
#include "detect/errors.hpp"
#include "detect/gateway.hpp"
#include "detect/pmm.hpp"
#include "detect/runner.hpp"
#include "detect/scenario.hpp"
#include "detect/simulation.hpp"
#include "detect/tmm.hpp"
#include "detect/trust_core.hpp"
#include "detect/virtual_clock.hpp"
#include "detect/wall_runner.hpp"
