#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace mddb {

// Every recoverable failure in the engine is reported as an Error; the CLI
// turns them into one-line diagnostics with a nonzero exit code.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Parse failures carry a source position (1-based line/column).
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column)
        : Error(msg + " at line " + std::to_string(line) + ", column " +
                std::to_string(column)),
          line(line),
          column(column) {}

    int line;
    int column;
};

// Object identifier: extent id (one extent per class) plus a slot that is
// never reused after deletion.
struct Oid {
    uint32_t extent = 0;
    uint64_t slot = 0;

    friend auto operator<=>(const Oid&, const Oid&) = default;
};

inline std::string to_string(const Oid& oid) {
    return std::to_string(oid.extent) + ":" + std::to_string(oid.slot);
}

}  // namespace mddb

template <>
struct std::hash<mddb::Oid> {
    size_t operator()(const mddb::Oid& o) const noexcept {
        return std::hash<uint64_t>{}(o.slot * 0x9e3779b97f4a7c15ull + o.extent);
    }
};
