// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "klce/tensor.hpp"

namespace klce {

// Adaptive-moment optimizer state, one slot per named parameter tensor.
template <typename S>
struct AdamState {
    struct Slot {
        std::vector<S> m, v;
    };
    std::map<std::string, Slot> slots;
    long long t = 0;
};

// Canonical update with bias correction:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
template <typename S>
void adam_step(const std::vector<std::pair<std::string, Tensor<S>>>& params, AdamState<S>& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (const auto& [name, tensor] : params) {
        auto& slot = state.slots[name];
        if (slot.m.size() != tensor.numel()) {
            slot.m.assign(tensor.numel(), S(0));
            slot.v.assign(tensor.numel(), S(0));
        }
        Tensor<S> p = tensor; // handle copy; storage is shared
        const S* g = p.grad();
        S* data = p.data();
        for (std::size_t i = 0; i < p.numel(); ++i) {
            slot.m[i] = static_cast<S>(beta1) * slot.m[i] + static_cast<S>(1.0 - beta1) * g[i];
            slot.v[i] = static_cast<S>(beta2) * slot.v[i] + static_cast<S>(1.0 - beta2) * g[i] * g[i];
            const double mhat = static_cast<double>(slot.m[i]) / bc1;
            const double vhat = static_cast<double>(slot.v[i]) / bc2;
            data[i] -= static_cast<S>(lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

} // namespace klce
