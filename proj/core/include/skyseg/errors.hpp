#pragma once

#include <stdexcept>
#include <string>

namespace skyseg {

// Base for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Incompatible tensor shapes, bad axes, size overflow.
class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& what) : Error(what) {}
};

// Out-of-domain math, e.g. log of a non-positive value.
class DomainError : public Error {
public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

// Malformed files: bad netpbm headers, corrupt weight files.
class FormatError : public Error {
public:
  explicit FormatError(const std::string& what) : Error(what) {}
};

// Bad run configuration: unknown keys, inconsistent settings.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// Missing or inconsistent dataset contents.
class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(what) {}
};

// Training diverged (non-finite loss or parameters).
class NumericError : public Error {
public:
  explicit NumericError(const std::string& what) : Error(what) {}
};

}  // namespace skyseg
