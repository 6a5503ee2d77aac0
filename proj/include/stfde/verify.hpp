#ifndef STFDE_VERIFY_HPP
#define STFDE_VERIFY_HPP

#include <string>
#include <vector>

namespace stfde::verify {

struct CheckResult {
    std::string name;
    bool passed;
    double measured;  // the quantity compared against the tolerance
    double tolerance;
    double seconds;
};

/// Lemma/property suite: Mittag-Leffler identities and bounds, semigroup,
/// Ito isometry, weak-solution residual, Duhamel consistency, uniqueness.
/// quick = true restricts to the fast subset.
std::vector<CheckResult> run_suite(bool quick, int workers);

std::string to_json(const std::vector<CheckResult>& results);
bool all_passed(const std::vector<CheckResult>& results);

} // namespace stfde::verify

#endif
