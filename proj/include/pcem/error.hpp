#ifndef PCEM_ERROR_HPP_
#define PCEM_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcem {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TaxonomyError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. line() is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcem

#endif  // PCEM_ERROR_HPP_
