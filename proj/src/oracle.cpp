#include "reformguard/oracle.hpp"

namespace reformguard {

double class_probability(const Classification& c, ClassId label) {
  if (c.scores.empty()) return c.label == label ? 1.0 : 0.0;
  if (label < 0 || static_cast<std::size_t>(label) >= c.scores.size()) return 0.0;
  return c.scores[static_cast<std::size_t>(label)];
}

}  // namespace reformguard
