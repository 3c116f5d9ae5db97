// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ddrm/linops.hpp"

#include <string>
#include <vector>

namespace ddrm::verify {

struct CheckResult {
    std::string id;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
    double budget_seconds = 0.0;
};

struct Options {
    /// Skip the Monte Carlo checks (A2, A6).
    bool quick = false;
    /// Test hook: perturb the singular values of one operator in A1.
    bool corrupt_singulars = false;
    /// Thread counts compared by the determinism check.
    int threads = 3;
};

/// Wraps `op` and scales its largest singular value by `factor`; the factor
/// actions still come from `op`, so the factorization no longer matches apply().
OperatorPtr corrupt_singulars(OperatorPtr op, double factor = 1.01);

CheckResult check_svd_equivalence(const Options& options);   // A1
CheckResult check_marginals(const Options& options);         // A2
CheckResult check_eta_b_identity(const Options& options);    // A3
CheckResult check_data_consistency(const Options& options);  // A4
CheckResult check_ilvr(const Options& options);              // A5
CheckResult check_linear_gaussian(const Options& options);   // A6
CheckResult check_ve_vp(const Options& options);             // A7
CheckResult check_determinism(const Options& options);       // A8
CheckResult check_pseudo_inverse(const Options& options);    // A9
CheckResult check_smoke_restoration(const Options& options); // A10

/// Every check in order; quick mode omits A2 and A6.
std::vector<CheckResult> run_all(const Options& options);

/// One line per check: `A1 PASS <name> (<seconds> s) <detail>`.
std::string format_line(const CheckResult& result);
std::string format_report(const std::vector<CheckResult>& results);
std::string report_json(const std::vector<CheckResult>& results);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace ddrm::verify
