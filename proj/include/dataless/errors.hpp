#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dataless {

// Bad user input: malformed files, unknown labels, invalid arguments.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An input record that failed to load. line() is 1-based, 0 when unknown.
class RecordError : public InputError {
 public:
  RecordError(const std::string& what, std::string source, std::size_t line)
      : InputError(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

class MalformedRecordError : public RecordError {
 public:
  using RecordError::RecordError;
};

class UnknownLabelError : public RecordError {
 public:
  UnknownLabelError(const std::string& label, std::string source,
                    std::size_t line)
      : RecordError("unknown label '" + label + "'", std::move(source), line),
        label_(label) {}

  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

class DuplicateIdError : public RecordError {
 public:
  using RecordError::RecordError;
};

// Cached data contradicts the provider or itself.
class CorruptionError : public InputError {
 public:
  using InputError::InputError;
};

// Every component of a combined representation was absent or gated off.
class DegradedInputError : public InputError {
 public:
  DegradedInputError(const std::string& what, std::string utterance_id)
      : InputError(what), utterance_id_(std::move(utterance_id)) {}

  const std::string& utterance_id() const noexcept { return utterance_id_; }

 private:
  std::string utterance_id_;
};

// Vector arithmetic precondition violated (dimension mismatch, zero norm).
class VectorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Embedding / completion service failed after bounded retries.
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal invariant violated.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dataless
