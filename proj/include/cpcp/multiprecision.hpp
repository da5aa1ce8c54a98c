// Extended-precision scalar for checks that double rounding would swamp.
#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

namespace cpcp {

using RealHP = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<400>, boost::multiprecision::et_off>;

}  // namespace cpcp

// Complete traits; Boost 1.74's lack infinity() and quiet_NaN().
namespace Eigen {
template <>
struct NumTraits<cpcp::RealHP> : GenericNumTraits<cpcp::RealHP> {
  using Real = cpcp::RealHP;
  using NonInteger = cpcp::RealHP;
  using Nested = cpcp::RealHP;
  using Literal = cpcp::RealHP;
  enum { IsComplex = 0, IsInteger = 0, IsSigned = 1, RequireInitialization = 1, ReadCost = 1, AddCost = 4, MulCost = 8 };
  static Real dummy_precision() { return Real(1000) * epsilon(); }
};
}  // namespace Eigen
