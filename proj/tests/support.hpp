#pragma once

#include <vector>

#include "oracles.hpp"
#include "sphere_cbo/sphere.hpp"

namespace test {

inline oracle::Vec to_std(const Eigen::Ref<const sphere_cbo::Vector>& v) { return {v.data(), v.data() + v.size()}; }

inline sphere_cbo::Vector to_eigen(const oracle::Vec& v) {
  return Eigen::Map<const sphere_cbo::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline double max_abs_diff(const oracle::Vec& a, const oracle::Vec& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace test
