#ifndef PARATTS_ERRORS_HPP_
#define PARATTS_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace paratts {

// Exit code 1 family: bad user input.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Exit code 2 family: broken invariants at runtime.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};
struct LoadError : std::runtime_error {
  explicit LoadError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace paratts

#endif  // PARATTS_ERRORS_HPP_
