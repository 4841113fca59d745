#include "cel/log.hpp"

#include <cstring>

namespace cel {

JointVector ExperimentLog::row(const std::vector<double>& column, std::size_t r) const {
  JointVector v(dof);
  for (int j = 0; j < dof; ++j) v(j) = at(column, r, j);
  return v;
}

std::optional<double> ExperimentLog::freeze_time() const {
  for (std::size_t r = 0; r < ie_frozen.size(); ++r) {
    if (ie_frozen[r] != 0) return t[r];
  }
  return std::nullopt;
}

std::uint64_t hash_desired_trajectory(const ExperimentLog& log) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : log.q_d) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace cel
