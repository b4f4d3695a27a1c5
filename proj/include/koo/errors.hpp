#pragma once

#include <stdexcept>
#include <string>

namespace koo {

/// Base class for every error raised by the library. The CLI maps the
/// subclasses onto exit codes (validation = 2, numerical = 3, io = 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Validation errors.
class DimensionError : public Error { public: using Error::Error; };
class DataError : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };

// Numerical failures.
class RankError : public Error { public: using Error::Error; };
class SingularError : public Error { public: using Error::Error; };

class IoError : public Error { public: using Error::Error; };

}  // namespace koo
