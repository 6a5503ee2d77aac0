#ifndef STFDE_ERRORS_HPP
#define STFDE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stfde {

// Invalid inputs (bad parameters, grid mismatches, regime mismatches).
struct domain_error : std::invalid_argument {
    explicit domain_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// A computation ran but could not certify its accuracy target.
struct accuracy_error : std::runtime_error {
    double achieved;
    accuracy_error(const std::string& msg, double est)
        : std::runtime_error(msg), achieved(est) {}
};

// Solver / eigensolver / marching failures.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace stfde

#endif
