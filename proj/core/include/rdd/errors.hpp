#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rdd {

/// Base class for every domain error raised by the library. Precondition
/// violations on numeric arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, or 0 when the format has no
/// meaningful line (XML documents).
class ParseError : public Error {
public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class UnknownClass : public ParseError {
public:
  explicit UnknownClass(std::string name, std::size_t line = 0)
      : ParseError("unknown class \"" + name + "\"", line), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

private:
  std::string name_;
};

class UnknownOrdinal : public ParseError {
public:
  explicit UnknownOrdinal(int code, std::size_t line = 0)
      : ParseError("unknown class code " + std::to_string(code), line), code_(code) {}

  int code() const noexcept { return code_; }

private:
  int code_;
};

/// Box coordinates violate xmin < xmax, ymin < ymax, finiteness or bounds.
class InvalidBox : public ParseError {
public:
  using ParseError::ParseError;
};

class DuplicateImage : public Error {
public:
  explicit DuplicateImage(const std::string& image_id)
      : Error("duplicate image id \"" + image_id + "\""), image_id_(image_id) {}

  const std::string& image_id() const noexcept { return image_id_; }

private:
  std::string image_id_;
};

/// A detection refers to an image that the ground-truth split does not hold.
class UnknownImage : public Error {
public:
  explicit UnknownImage(const std::string& image_id)
      : Error("detections reference unknown image \"" + image_id + "\""), image_id_(image_id) {}

  const std::string& image_id() const noexcept { return image_id_; }

private:
  std::string image_id_;
};

class InvalidPolicy : public Error {
public:
  using Error::Error;
};

}  // namespace rdd
