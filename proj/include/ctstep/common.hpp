#pragma once

#include <complex>
#include <string_view>

namespace ctstep {

using Cplx = std::complex<double>;

inline constexpr std::string_view kVersion = "0.1.0";

/// Format a double with 17 significant digits (round-trip safe).
std::string fmt17(double x);

} // namespace ctstep
