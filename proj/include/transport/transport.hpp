#pragma once

// Umbrella header for the transport-bounds library.

#include "transport/basis.hpp"
#include "transport/bootstrap.hpp"
#include "transport/bounds.hpp"
#include "transport/csv.hpp"
#include "transport/dataset.hpp"
#include "transport/density_ratio.hpp"
#include "transport/errors.hpp"
#include "transport/linalg.hpp"
#include "transport/rng.hpp"
#include "transport/simplex.hpp"
#include "transport/simulation.hpp"

namespace transport {
inline constexpr const char* version = "0.2.0";
}
