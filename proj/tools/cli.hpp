#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ncmest/penalty.hpp"

namespace ncmest::cli {

// Exit codes: 0 success, 1 usage/config error, 2 non-convergence,
// 3 verification failure.
constexpr int kOk = 0;
constexpr int kUsageError = 1;
constexpr int kNotConverged = 2;
constexpr int kVerificationFailure = 3;

// Full CLI entry point (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Closed-form prox implementation under test; overridable so a deliberately
// wrong implementation can be injected to confirm the oracle catches it.
using ProxFn = std::function<double(const PenaltySpec&, double z, double nu)>;

int prox_check(const std::string& penalty_filter, std::uint64_t seed, std::ostream& out,
               const ProxFn& impl = {});

}  // namespace ncmest::cli
