#pragma once

#include <exception>
#include <stdexcept>
#include <string>

namespace privedm {

// A configuration invariant failed before any protocol message was sent.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A peer sent something the protocol does not allow, or a decrypted value
// left its admissible range.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure raised inside one party's state machine, tagged with that party.
// The original exception is kept so callers can still dispatch on its type.
class PartyFailure : public std::runtime_error {
 public:
  PartyFailure(char party, const std::string& what, std::exception_ptr cause)
      : std::runtime_error(std::string("party ") + party + ": " + what),
        party_(party),
        cause_(std::move(cause)) {}
  char party() const noexcept { return party_; }
  const std::exception_ptr& cause() const noexcept { return cause_; }
  [[noreturn]] void rethrow_cause() const { std::rethrow_exception(cause_); }

 private:
  char party_;
  std::exception_ptr cause_;
};

}  // namespace privedm
