#pragma once

#include "canonicalize.hpp"
#include "core.hpp"
#include "datastore.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "metrics.hpp"
#include "random.hpp"
#include "simulator.hpp"
#include "solvers.hpp"
#include "sqrt_demo.hpp"

namespace ffpr {
inline constexpr const char* kVersionString = "1.0.0";
}
