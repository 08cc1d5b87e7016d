// Error taxonomy shared by all modules. Scenario validation reports the
// parameter path of the offending key; numerical failures carry grid
// diagnostics collected at the point of failure.

#pragma once

#include <stdexcept>
#include <string>

namespace echomem {

// Precondition violations (bad widths, probabilities outside [0,1], ...).
class InvalidParameter : public std::invalid_argument {
public:
    explicit InvalidParameter(const std::string& what)
      : std::invalid_argument(what) {}
};

// A structural invariant was broken (asymmetric grid handed to a flip, ...).
class InvariantViolation : public std::logic_error {
public:
    explicit InvariantViolation(const std::string& what)
      : std::logic_error(what) {}
};

// Input spectrum does not fit the detuning grid.
class SpectralLeakage : public std::runtime_error {
public:
    explicit SpectralLeakage(const std::string& what)
      : std::runtime_error(what) {}
};

// Non-finite values encountered during integration.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what)
      : std::runtime_error(what) {}
};

// Protocol steps executed out of order (recall before flip, ...).
class ProtocolOrderError : public std::logic_error {
public:
    explicit ProtocolOrderError(const std::string& what)
      : std::logic_error(what) {}
};

// Post-processing could not extract the requested quantity
// (unresolvable time bins, fringe fit failure, below-threshold energy).
class AnalysisFailure : public std::runtime_error {
public:
    explicit AnalysisFailure(const std::string& what)
      : std::runtime_error(what) {}
};

// Scenario file problems; message names the offending key path.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what)
      : std::runtime_error(what) {}
};

} // namespace echomem
