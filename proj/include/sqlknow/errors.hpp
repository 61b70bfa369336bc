#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqlknow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, std::string expected, const std::string& message)
      : Error(message), offset_(offset), expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

class DuplicateNameError : public Error {
 public:
  explicit DuplicateNameError(std::string name)
      : Error("duplicate subquery name: " + name), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class SpliceError : public Error {
 public:
  using Error::Error;
};

class UnresolvedDependencyError : public Error {
 public:
  explicit UnresolvedDependencyError(std::string name)
      : Error("unresolved dependency: " + name), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class CycleError : public Error {
 public:
  explicit CycleError(std::vector<std::string> cycle);
  const std::vector<std::string>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

class ExecutionError : public Error {
 public:
  ExecutionError(std::string unit_id, const std::string& message)
      : Error(unit_id.empty() ? message : unit_id + ": " + message), unit_id_(std::move(unit_id)) {}
  const std::string& unit_id() const noexcept { return unit_id_; }

 private:
  std::string unit_id_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class LlmError : public Error {
 public:
  explicit LlmError(const std::string& message, std::string transcript_id = {})
      : Error(message), transcript_id_(std::move(transcript_id)) {}
  const std::string& transcript_id() const noexcept { return transcript_id_; }

 private:
  std::string transcript_id_;
};

class MissingVariableError : public Error {
 public:
  MissingVariableError(std::string template_id, std::string variable)
      : Error("template " + template_id + " requires variable '" + variable + "'"),
        variable_(std::move(variable)) {}
  const std::string& variable() const noexcept { return variable_; }

 private:
  std::string variable_;
};

class EmbeddingError : public Error {
 public:
  using Error::Error;
};

class EmptyStoreError : public Error {
 public:
  EmptyStoreError() : Error("knowledge store is empty") {}
};

class GenerationParseError : public Error {
 public:
  GenerationParseError(const std::string& message, std::string raw_text)
      : Error(message), raw_text_(std::move(raw_text)) {}
  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  std::string raw_text_;
};

class RefusalError : public Error {
 public:
  using Error::Error;
};

class StaleGenerationError : public Error {
 public:
  StaleGenerationError(long long requested, long long current)
      : Error("generation " + std::to_string(requested) + " is stale; current is " + std::to_string(current)),
        requested_(requested), current_(current) {}
  long long requested() const noexcept { return requested_; }
  long long current() const noexcept { return current_; }

 private:
  long long requested_;
  long long current_;
};

class BudgetExhaustedError : public Error {
 public:
  BudgetExhaustedError(std::size_t produced, std::size_t wanted)
      : Error("only " + std::to_string(produced) + " of " + std::to_string(wanted) + " tasks survived"),
        produced_(produced) {}
  std::size_t produced() const noexcept { return produced_; }

 private:
  std::size_t produced_;
};

}  // namespace sqlknow
