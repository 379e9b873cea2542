#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "mddb/common.hpp"

namespace mddb::store {

// Order-preserving index key bytes: for any two values of one type, value
// order matches unsigned lexicographic order of the encodings. Components are
// self-delimiting (fixed width or terminated), so composite keys concatenate.
using TypedKey = std::vector<uint8_t>;

// Sign bias to unsigned, big-endian.
void key_append_int(TypedKey& key, int64_t v);

// Sign-aware monotone bit transform, big-endian. NaN is rejected.
void key_append_real(TypedKey& key, double v);

// Raw bytes with a NUL terminator; embedded NUL bytes are rejected.
void key_append_string(TypedKey& key, std::string_view s);

TypedKey int_key(int64_t v);
TypedKey real_key(double v);
TypedKey string_key(std::string_view s);

}  // namespace mddb::store
