#pragma once

#include "fnls/analysis.hpp"
#include "fnls/barycenter.hpp"
#include "fnls/config.hpp"
#include "fnls/dictionary.hpp"
#include "fnls/errors.hpp"
#include "fnls/fft.hpp"
#include "fnls/functionals.hpp"
#include "fnls/grid.hpp"
#include "fnls/io.hpp"
#include "fnls/model.hpp"
#include "fnls/reports.hpp"
#include "fnls/solvers.hpp"
#include "fnls/spectral.hpp"
#include "fnls/verify.hpp"

namespace fnls {

inline constexpr const char* version = "0.1.0";

} // namespace fnls
