#ifndef LPPL_ERRORS_HPP
#define LPPL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lppl {

// Malformed or unusable input data (empty files, short windows, duplicates).
struct input_error : std::runtime_error {
    explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// No start of a multi-start search converged. Carries per-start diagnostics.
struct optimization_error : std::runtime_error {
    explicit optimization_error(const std::string& what, std::string diag = {})
        : std::runtime_error(what), diagnostics(std::move(diag)) {}
    std::string diagnostics;
};

} // namespace lppl

#endif
