#pragma once

#include <stdexcept>
#include <string>

namespace finer {

// Every failure the pipeline reports carries the stage it happened in so the
// CLI can print "[stage] message".
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Missing user-provided input (manifest, config, earlier stage output).
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace finer
