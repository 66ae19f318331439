#pragma once

#include <span>
#include <string>
#include <vector>

#include "reformguard/types.hpp"

namespace reformguard {

struct Classification {
  ClassId label = 0;
  /// Class probabilities; empty when the classifier only reports labels.
  std::vector<double> scores;
};

/// Downstream text classifier. Implementations must be safe for concurrent
/// calls and return exactly one result per input, in order.
class ClassifierOracle {
 public:
  virtual ~ClassifierOracle() = default;
  virtual std::vector<Classification> classify(std::span<const std::string> texts) = 0;
};

class ClassifierError : public Error {
 public:
  using Error::Error;
};

/// Probability the classifier assigns to `label`; falls back to a 0/1
/// indicator when no scores are reported.
double class_probability(const Classification& c, ClassId label);

}  // namespace reformguard
