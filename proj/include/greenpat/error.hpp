#pragma once

#include <stdexcept>
#include <string>

namespace greenpat {

enum class ErrorKind { Io, Validation, Runtime };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

class RuntimeError : public Error {
public:
    explicit RuntimeError(const std::string& what) : Error(ErrorKind::Runtime, what) {}
};

}  // namespace greenpat
