#pragma once

#include <stdexcept>
#include <string>

namespace chfkit {

// Input outside the domain of a physical model (pressure out of range, etc.).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Malformed or inconsistent configuration, model, or data file.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t offset, std::string field)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) +
                           ", field '" + field + "')"),
        offset_(offset), field_(std::move(field)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& field() const noexcept { return field_; }

private:
  std::size_t offset_;
  std::string field_;
};

} // namespace chfkit
