#pragma once

#include <stdexcept>
#include <string>

namespace ov3d {

/// Base of every error thrown by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDepthError : public Error {
 public:
  using Error::Error;
};

/// A mask captured no 3D points.
class EmptySegmentError : public Error {
 public:
  using Error::Error;
};

/// DBSCAN labeled every point as noise.
class AllNoiseError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. The message carries the file and, where known, the byte offset.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace ov3d
