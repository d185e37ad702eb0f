#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace geochain {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Location key missing from the binding table.
class UnboundLocation : public Error {
public:
    explicit UnboundLocation(const std::string& key) : Error("unbound location: " + key) {}
};

class InsufficientHistory : public Error {
public:
    using Error::Error;
};

// Caller broke an operation's precondition (e.g. scale_in on a buffered instance).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class InfeasiblePlacement : public Error {
public:
    using Error::Error;
};

class EncodingError : public Error {
public:
    using Error::Error;
};

class SkewError : public Error {
public:
    using Error::Error;
};

class NoWorkingInstance : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p)
    {
        std::string out = "invalid config";
        for (const auto& s : p) {
            out += "\n  " + s;
        }
        return out;
    }

    std::vector<std::string> problems_;
};

} // namespace geochain
