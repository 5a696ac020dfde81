// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "klce/rng.hpp"
#include "klce/tensor.hpp"

namespace klce {

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool pass = false;
    std::size_t checked = 0;
};

// Central-difference verification of reverse-mode gradients.
//
// f rebuilds the scalar loss from the current parameter values on every call;
// params are the tracked leaves to perturb. For each sampled element the
// numeric gradient (f(p+h) - f(p-h)) / 2h is compared to the accumulated
// analytic gradient with rel = |a - n| / (|a| + |n| + 1e-12). Run with
// S = double; float loses too many digits for h = 1e-4.
//
// max_samples_per_tensor == 0 checks every element, otherwise a seeded subset.
template <typename S>
GradCheckReport grad_check(const std::function<Tensor<S>()>& f, std::vector<Tensor<S>> params,
                           double h = 1e-4, double tol = 1e-3,
                           std::size_t max_samples_per_tensor = 0, std::uint64_t seed = 0) {
    for (auto& p : params) p.zero_grad();
    {
        Tensor<S> loss = f();
        backward(loss);
    }

    GradCheckReport report;
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    for (auto& p : params) {
        const std::size_t n = p.numel();
        std::vector<std::size_t> picks;
        if (max_samples_per_tensor == 0 || max_samples_per_tensor >= n) {
            picks.resize(n);
            for (std::size_t i = 0; i < n; ++i) picks[i] = i;
        } else {
            for (std::size_t k = 0; k < max_samples_per_tensor; ++k)
                picks.push_back(rng.index(n));
        }
        for (std::size_t i : picks) {
            const S saved = p.data()[i];
            p.data()[i] = saved + static_cast<S>(h);
            const double fp = static_cast<double>(f().item());
            p.data()[i] = saved - static_cast<S>(h);
            const double fm = static_cast<double>(f().item());
            p.data()[i] = saved;

            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic = static_cast<double>(p.grad()[i]);
            const double rel =
                std::fabs(analytic - numeric) / (std::fabs(analytic) + std::fabs(numeric) + 1e-12);
            report.max_rel_err = std::max(report.max_rel_err, rel);
            ++report.checked;
        }
    }
    report.pass = std::isfinite(report.max_rel_err) && report.max_rel_err <= tol;
    return report;
}

} // namespace klce
