#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace detect {

// Base class of everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// No observations exist for the requested computation.
struct NoDataError : Error {
  using Error::Error;
};

// An argument violates a documented precondition.
struct InvalidInputError : Error {
  using Error::Error;
};

// The SLA expected response time is unusable (<= 0).
struct InvalidSlaError : Error {
  using Error::Error;
};

struct NotFoundError : Error {
  using Error::Error;
};

struct InsufficientSamplesError : Error {
  using Error::Error;
};

struct DuplicateServiceIdError : Error {
  using Error::Error;
};

struct EmptyRankingError : Error {
  using Error::Error;
};

// A trust factor needed for evaluation is missing or stale.
struct MissingFactorError : Error {
  MissingFactorError(std::string service, std::string what)
      : Error(std::move(what)), service_id(std::move(service)) {}
  std::string service_id;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct BindError : Error {
  using Error::Error;
};

}  // namespace detect
