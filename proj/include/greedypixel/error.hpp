#pragma once

#include <stdexcept>
#include <string>

namespace greedypixel {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor/image shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Value outside its documented domain (e.g. image value not in [0,1]).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or unsupported file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A model lacks a capability the caller requires (e.g. input gradients).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Problem instance exceeds a hard size cap.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or out-of-range configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Model definition is unusable (e.g. fewer than two classes).
class ModelError : public Error {
 public:
  using Error::Error;
};

// Metric is undefined for the given input (e.g. empty sample set).
class MetricError : public Error {
 public:
  using Error::Error;
};

// Remote query failed after exhausting retries, or the reply was malformed.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace greedypixel
