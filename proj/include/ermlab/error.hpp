#ifndef ERMLAB_ERROR_HPP
#define ERMLAB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ermlab {

/// A caller-supplied argument is outside the domain of an operation.
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A run configuration is malformed or pairs a bound with an incompatible problem.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw PreconditionError(message);
}

}  // namespace ermlab

#endif  // ERMLAB_ERROR_HPP
