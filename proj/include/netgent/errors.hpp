#pragma once

#include <stdexcept>
#include <string>

namespace netgent {

// Base for every engine error so callers can catch the whole family.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace netgent
