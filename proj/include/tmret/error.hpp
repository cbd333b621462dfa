#pragma once

#include <stdexcept>
#include <string>

namespace tmret {

/// Base exception for every recoverable failure in the library (bad input
/// files, violated preconditions, dimension mismatches).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tmret
