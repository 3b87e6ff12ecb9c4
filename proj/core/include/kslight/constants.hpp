#pragma once

#include <complex>

namespace kslight {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace kslight
