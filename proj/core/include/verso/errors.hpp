#pragma once

#include <stdexcept>
#include <string>

namespace verso {

// Problems in user-supplied data or configuration. The CLI maps these to
// exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorpusFormatError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateSplitError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyCorpusError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateSequenceError : public DataError {
 public:
  using DataError::DataError;
};

// Training produced a non-finite loss. The CLI maps this to exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string stage, int epoch, int batch)
      : std::runtime_error("non-finite loss in stage '" + stage + "', epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(batch)),
        stage_(std::move(stage)),
        epoch_(epoch),
        batch_(batch) {}

  const std::string& stage() const { return stage_; }
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  std::string stage_;
  int epoch_;
  int batch_;
};

}  // namespace verso
