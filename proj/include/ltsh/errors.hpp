#pragma once

#include <stdexcept>
#include <string>

namespace ltsh {

/* Exception taxonomy mirrors the CLI exit codes:
     ConfigError        -> 2 (bad usage / bad input)
     PrecisionError     -> 3 (trusted digits or cutoff exhausted)
     MathFail           -> 1 (a verified mathematical failure, witness attached)
   InternalError means an invariant the library itself guarantees was violated
   (e.g. a constructed series failed its defining equation) and must abort the
   computation rather than return unverified data. */

class Error : public std::runtime_error {
public:
    Error(const std::string& where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(where) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class PrecisionError : public Error {
public:
    using Error::Error;
};

class MathFail : public Error {
public:
    using Error::Error;
};

class InternalError : public Error {
public:
    using Error::Error;
};

} // namespace ltsh
