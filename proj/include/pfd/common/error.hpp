#pragma once

#include <stdexcept>
#include <string>

namespace pfd {

// Base for every error the pipeline raises on purpose. Anything else escaping
// a stage is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace pfd
