#ifndef SPAD_BASE_ERROR_H_
#define SPAD_BASE_ERROR_H_

#include <stdexcept>
#include <string>

namespace spad {

// Every failure raised by the toolkit derives from Error. The category lets
// the command-line front end map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    kParse,
    kValidity,
    kConfig,
    kShape,
    kGraph,
    kNumeric,
    kDistribution,
    kIo,
    kFormat,
    kPrecondition,
  };

  Error(Kind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string &what)
      : Error(Kind::kParse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidityError : public Error {
 public:
  explicit ValidityError(const std::string &what)
      : Error(Kind::kValidity, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string &what) : Error(Kind::kConfig, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string &what) : Error(Kind::kShape, what) {}
};

class GraphError : public Error {
 public:
  explicit GraphError(const std::string &what) : Error(Kind::kGraph, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string &what)
      : Error(Kind::kNumeric, what) {}
};

class DistributionError : public Error {
 public:
  explicit DistributionError(const std::string &what)
      : Error(Kind::kDistribution, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string &what) : Error(Kind::kIo, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string &what) : Error(Kind::kFormat, what) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string &what)
      : Error(Kind::kPrecondition, what) {}
};

}  // namespace spad

#endif  // SPAD_BASE_ERROR_H_
