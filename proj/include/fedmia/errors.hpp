#pragma once

#include <stdexcept>
#include <string>

namespace fedmia {

// Every error raised by the library derives from Error so callers can catch
// the whole family; the subclasses map onto the failure categories used by
// the runner (config errors exit with 2, everything else is a runtime error).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error { public: using Error::Error; };
class InputError : public Error { public: using Error::Error; };
class LabelError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class DatasetError : public Error { public: using Error::Error; };
class FitError : public Error { public: using Error::Error; };
class MetricError : public Error { public: using Error::Error; };
class NumericError : public Error { public: using Error::Error; };
class UnsupportedSignalError : public Error { public: using Error::Error; };
class MeasurementError : public Error { public: using Error::Error; };

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row)
        : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

} // namespace fedmia
