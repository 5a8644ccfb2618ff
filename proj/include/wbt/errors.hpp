#pragma once

#include <stdexcept>
#include <string>

namespace wbt {

// Every error raised by the library derives from Error so callers can catch
// the family in one place and still discriminate by type when it matters.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateRobot : public Error {
 public:
  using Error::Error;
};

class Disconnected : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public Error {
 public:
  using Error::Error;
};

class EmptyEpisode : public Error {
 public:
  using Error::Error;
};

}  // namespace wbt
