#include "mddb/keycodec.hpp"

#include <bit>
#include <cmath>

namespace mddb::store {

namespace {

void append_be64(TypedKey& key, uint64_t u) {
    for (int shift = 56; shift >= 0; shift -= 8)
        key.push_back(static_cast<uint8_t>(u >> shift));
}

}  // namespace

void key_append_int(TypedKey& key, int64_t v) {
    append_be64(key, static_cast<uint64_t>(v) ^ (1ull << 63));
}

void key_append_real(TypedKey& key, double v) {
    if (std::isnan(v)) throw Error("NaN is not an orderable key");
    uint64_t bits = std::bit_cast<uint64_t>(v);
    if (bits >> 63)
        bits = ~bits;  // negatives: reverse order below zero
    else
        bits |= 1ull << 63;  // positives: above every negative
    append_be64(key, bits);
}

void key_append_string(TypedKey& key, std::string_view s) {
    if (s.find('\0') != std::string_view::npos)
        throw Error("string keys cannot contain NUL bytes");
    key.insert(key.end(), s.begin(), s.end());
    key.push_back(0);
}

TypedKey int_key(int64_t v) {
    TypedKey k;
    key_append_int(k, v);
    return k;
}

TypedKey real_key(double v) {
    TypedKey k;
    key_append_real(k, v);
    return k;
}

TypedKey string_key(std::string_view s) {
    TypedKey k;
    key_append_string(k, s);
    return k;
}

}  // namespace mddb::store
