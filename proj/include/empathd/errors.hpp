#pragma once

#include <stdexcept>
#include <string>

namespace empathd {

// Base for every error raised by the library. The CLI maps ConfigError to
// exit code 2 and everything else to 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed on-disk data (frame pairs, PNG, JSON records).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Missing or invalid configuration (intrinsics, scenario, profile, Nyquist).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Camera/scene geometry that cannot be projected.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Pose estimation could not produce a solution from the detections.
class EstimationError : public Error {
 public:
  using Error::Error;
};

// Wire-level framing violation. The connection must be reset.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Message payload exceeds the framing limit.
class SizeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace empathd
