#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qpj {

/// Base class for every error raised by the library. `kind()` is the stable
/// machine-readable tag the CLI puts into its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Numerical failures (exit code 3 at the CLI).
class NumericError : public Error {
public:
    using Error::Error;
};

struct QuadratureNotConverged : NumericError {
    explicit QuadratureNotConverged(const std::string& w) : NumericError("QuadratureNotConverged", w) {}
};
struct TemperatureMismatch : Error {
    explicit TemperatureMismatch(const std::string& w) : Error("TemperatureMismatch", w) {}
};
struct OutOfTableRange : NumericError {
    explicit OutOfTableRange(const std::string& w) : NumericError("OutOfTableRange", w) {}
};
struct ResonanceNotFound : NumericError {
    explicit ResonanceNotFound(const std::string& w) : NumericError("ResonanceNotFound", w) {}
};
struct NoSignChange : NumericError {
    NoSignChange(const std::string& w, double p_lo, double p_hi)
        : NumericError("NoSignChange", w), power_lo(p_lo), power_hi(p_hi) {}
    double power_lo;
    double power_hi;
};
struct NotPositiveSemidefinite : NumericError {
    explicit NotPositiveSemidefinite(const std::string& w) : NumericError("NotPositiveSemidefinite", w) {}
};
struct KernelNotCausal : NumericError {
    explicit KernelNotCausal(const std::string& w) : NumericError("KernelNotCausal", w) {}
};
struct UnstableStep : NumericError {
    explicit UnstableStep(const std::string& w) : NumericError("UnstableStep", w) {}
};
struct InsufficientStatistics : NumericError {
    explicit InsufficientStatistics(const std::string& w) : NumericError("InsufficientStatistics", w) {}
};

/// Input problems (exit code 2 at the CLI).
struct ParseError : Error {
    explicit ParseError(const std::string& w) : Error("ParseError", w) {}
};
struct ValidationError : Error {
    explicit ValidationError(std::vector<std::string> msgs)
        : Error("ValidationError", join(msgs)), messages(std::move(msgs)) {}
    std::vector<std::string> messages;

private:
    static std::string join(const std::vector<std::string>& m) {
        std::string out;
        for (const auto& s : m) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }
};

}  // namespace qpj
