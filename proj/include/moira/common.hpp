#pragma once

#include <cstdarg>
#include <stdexcept>
#include <string>

namespace moira {

// Error kinds double as CLI exit codes (0 = success).
enum class ErrorKind : int {
    Config = 2,     // invalid configuration or malformed input file
    Integrity = 3,  // input hash mismatch, missing referenced file
    Runtime = 4,    // contract violation, numeric failure, failed run
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail_config(const char* fmt, ...);
[[noreturn]] void fail_integrity(const char* fmt, ...);
[[noreturn]] void fail_runtime(const char* fmt, ...);

std::string format_str(const char* fmt, ...);

namespace logging {

enum class Level : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Verbosity comes from MOIRA_LOG (error|warn|info|debug), default warn.
Level level();
void log(Level lvl, const char* fmt, ...);

} // namespace logging

#define MOIRA_LOG_ERROR(...) ::moira::logging::log(::moira::logging::Level::Error, __VA_ARGS__)
#define MOIRA_LOG_WARN(...) ::moira::logging::log(::moira::logging::Level::Warn, __VA_ARGS__)
#define MOIRA_LOG_INFO(...) ::moira::logging::log(::moira::logging::Level::Info, __VA_ARGS__)
#define MOIRA_LOG_DEBUG(...) ::moira::logging::log(::moira::logging::Level::Debug, __VA_ARGS__)

} // namespace moira
