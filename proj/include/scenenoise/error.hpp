#pragma once

#include <stdexcept>
#include <string>

namespace scenenoise {

// Base for every error raised by the library. Subclasses mirror the failure
// modes callers are expected to distinguish.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value violated a documented invariant (empty prompt field, bad config).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Chat-model text that does not follow the scene grammar.
class ParseError : public Error {
 public:
  explicit ParseError(std::string reason)
      : Error("scene parse error: " + reason), reason_(std::move(reason)) {}
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("corpus contains no responses") {}
};

// Network failure, timeout or non-2xx status from an HTTP backend.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Audio returned by a backend with the wrong length or sample rate.
class BadAudio : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class DegenerateRoom : public Error {
 public:
  using Error::Error;
};

class SourceOutsideRoom : public Error {
 public:
  using Error::Error;
};

class CoincidentMicSource : public Error {
 public:
  using Error::Error;
};

class SampleRateMismatch : public Error {
 public:
  using Error::Error;
};

class MissingNoiseClip : public Error {
 public:
  using Error::Error;
};

}  // namespace scenenoise
