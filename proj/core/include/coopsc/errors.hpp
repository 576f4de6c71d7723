#ifndef COOPSC_ERRORS_HPP
#define COOPSC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace coopsc {

// Dimension disagreement between an input and the configured layout.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A symbol block whose power constraint cannot be satisfied (zero norm).
struct DegenerateSymbolError : std::domain_error {
  using std::domain_error::domain_error;
};

// Noiseless detection requested for a rank-deficient channel matrix.
struct SingularChannelError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A pipeline stage was started without its prerequisite artifact.
struct DependencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyIndexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PlotError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss or another unrecoverable optimization fault.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace coopsc

#endif
