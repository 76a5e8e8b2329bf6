#include "moira/common.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

namespace moira {

static std::string vformat(const char* fmt, va_list ap) {
    va_list ap2;
    va_copy(ap2, ap);
    int n = std::vsnprintf(nullptr, 0, fmt, ap);
    std::string out;
    if (n > 0) {
        out.resize(static_cast<size_t>(n));
        std::vsnprintf(out.data(), out.size() + 1, fmt, ap2);
    }
    va_end(ap2);
    return out;
}

std::string format_str(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::string s = vformat(fmt, ap);
    va_end(ap);
    return s;
}

[[noreturn]] void fail_config(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::string s = vformat(fmt, ap);
    va_end(ap);
    throw Error(ErrorKind::Config, s);
}

[[noreturn]] void fail_integrity(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::string s = vformat(fmt, ap);
    va_end(ap);
    throw Error(ErrorKind::Integrity, s);
}

[[noreturn]] void fail_runtime(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::string s = vformat(fmt, ap);
    va_end(ap);
    throw Error(ErrorKind::Runtime, s);
}

namespace logging {

static Level parse_level() {
    const char* env = std::getenv("MOIRA_LOG");
    if (!env) return Level::Warn;
    if (std::strcmp(env, "error") == 0) return Level::Error;
    if (std::strcmp(env, "warn") == 0) return Level::Warn;
    if (std::strcmp(env, "info") == 0) return Level::Info;
    if (std::strcmp(env, "debug") == 0) return Level::Debug;
    return Level::Warn;
}

Level level() {
    static Level lvl = parse_level();
    return lvl;
}

void log(Level lvl, const char* fmt, ...) {
    if (static_cast<int>(lvl) > static_cast<int>(level())) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    va_list ap;
    va_start(ap, fmt);
    std::string s = vformat(fmt, ap);
    va_end(ap);
    std::fprintf(stderr, "[moira:%s] %s\n", names[static_cast<int>(lvl)], s.c_str());
}

} // namespace logging

} // namespace moira
