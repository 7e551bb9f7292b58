#pragma once

#include "datasets.hpp"
#include "error.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "localgeom.hpp"
#include "multiscale.hpp"
#include "nnk.hpp"
#include "point_cloud.hpp"
#include "stats.hpp"

namespace mfscope {

inline constexpr const char* version = "0.1.0";

} // namespace mfscope
