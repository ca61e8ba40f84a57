#pragma once

#include <stdexcept>
#include <string>

namespace swindet {

// Single exception type for all library failures. Messages are prefixed
// with the subsystem that raised them ("mhd:", "ntar:", "tensor:", ...).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

}  // namespace swindet
