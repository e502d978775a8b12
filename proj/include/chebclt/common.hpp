#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace chebclt {

// Thrown when an exact/enumerative routine is asked to exceed its size guard.
class guard_error : public std::runtime_error {
public:
    explicit guard_error(const std::string& what) : std::runtime_error(what) {}
};

inline void require_guard(bool ok, const std::string& msg) {
    if (!ok) throw guard_error(msg);
}

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("integer overflow in add");
    return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("integer overflow in mul");
    return r;
}

// Non-negative remainder, for cyclic position arithmetic.
inline int mod_pos(int a, int m) {
    int r = a % m;
    return r < 0 ? r + m : r;
}

}  // namespace chebclt
