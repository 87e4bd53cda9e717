#pragma once

#include <stdexcept>
#include <string>

namespace cvqkd {

// Bad inputs (out-of-range parameters, invalid mode indices, ...) are reported
// with std::invalid_argument. The types below cover the remaining failure kinds.

/// An eigen-decomposition, conditioning step or iteration did not behave.
class NumericalFailure : public std::runtime_error {
  public:
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

/// The entangling cloner cannot reproduce the requested channel (T = 1, eps > 0).
class InfeasibleCloner : public std::invalid_argument {
  public:
    explicit InfeasibleCloner(const std::string& what) : std::invalid_argument(what) {}
};

/// The objective has no sign change on the search interval.
class BracketFailure : public NumericalFailure {
  public:
    explicit BracketFailure(const std::string& what) : NumericalFailure(what) {}
};

/// The key rate is not positive anywhere a critical point search could start from.
class NoPositiveRegion : public NumericalFailure {
  public:
    explicit NoPositiveRegion(const std::string& what) : NumericalFailure(what) {}
};

} // namespace cvqkd
