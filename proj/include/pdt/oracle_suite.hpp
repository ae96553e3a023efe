#pragma once

// Randomized comparison of every coefficient law against the brute-force
// oracles. Shared by the `oracle-check` command and the acceptance tests.

#include <cstdint>
#include <string>
#include <vector>

namespace pdt::oracle {

struct SuiteConfig {
    std::uint64_t seed = 20240917;
    int cases = 200;
    std::size_t mc_samples = 200000;
};

struct LawCheck {
    std::string law;
    std::string oracle;
    int cases = 0;
    /// Largest deviation seen: L1 coefficient distance, or |z| for Monte-Carlo.
    double max_deviation = 0.0;
    double threshold = 0.0;
    /// Monte-Carlo only: fraction of cases within the threshold.
    double within = 1.0;
    bool passed = false;
};

std::vector<LawCheck> run_suite(const SuiteConfig& config);

}  // namespace pdt::oracle
