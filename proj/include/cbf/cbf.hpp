#pragma once

// umbrella header; the CLI layer (cbf/cli.hpp) is separate to keep its
// argument-parsing dependency out of library consumers

#include "cbf/checks.hpp"
#include "cbf/classk.hpp"
#include "cbf/config.hpp"
#include "cbf/constraint.hpp"
#include "cbf/dynamics.hpp"
#include "cbf/filter_sim.hpp"
#include "cbf/grid.hpp"
#include "cbf/levelset.hpp"
#include "cbf/serialize.hpp"
#include "cbf/shift.hpp"
#include "cbf/synthesis.hpp"
#include "cbf/types.hpp"
