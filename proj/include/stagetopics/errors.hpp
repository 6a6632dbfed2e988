#pragma once

#include <stdexcept>
#include <string>

namespace stagetopics {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input decoding
struct ParseError : Error { using Error::Error; };
struct DuplicateIdError : Error { using Error::Error; };
struct UnknownLabelError : Error { using Error::Error; };

// Preprocessing / vocabulary
struct EmptyVocabularyError : Error { using Error::Error; };

// Classifier
struct TooFewExamplesError : Error { using Error::Error; };
struct MissingClassError : Error { using Error::Error; };
struct LengthMismatchError : Error { using Error::Error; };
struct EmptyInputError : Error { using Error::Error; };

// Topic modeling
struct EmptyCorpusError : Error { using Error::Error; };
struct UnknownTokenError : Error { using Error::Error; };
struct NotNormalizedError : Error { using Error::Error; };

// Reporting / pipeline
struct TooFewWordsError : Error { using Error::Error; };
struct UnstagedRecordError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// Wraps any module error with the pipeline step it occurred in.
struct PipelineError : Error {
  PipelineError(const std::string& step, const std::string& what)
      : Error("[" + step + "] " + what), step(step) {}
  std::string step;
};

}  // namespace stagetopics
