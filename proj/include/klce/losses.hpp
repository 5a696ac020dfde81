// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "klce/ops.hpp"
#include "klce/tensor.hpp"

// Scalar objectives. All losses are mean-reduced so the fixed weights stay
// meaningful across image sizes; square roots carry an eps^2 term inside for
// differentiability at zero gradients.

namespace klce {

inline constexpr double kLossEps = 1e-8;
inline constexpr double kDefaultBeta = 0.01;

namespace detail {

// Forward differences restricted to the (H-1) x (W-1) valid region.
template <typename S>
std::pair<Tensor<S>, Tensor<S>> forward_diffs(const Tensor<S>& x) {
    require_chw(x, "forward_diffs");
    const int h = x.shape()[1], w = x.shape()[2];
    if (h < 2 || w < 2) throw InvalidArgument("spatial loss needs H, W >= 2");
    const Tensor<S> base = crop_window_t(x, {0, 0, h - 1, w - 1});
    const Tensor<S> dx = sub(crop_window_t(x, {0, 1, h - 1, w - 1}), base);
    const Tensor<S> dy = sub(crop_window_t(x, {1, 0, h - 1, w - 1}), base);
    return {dx, dy};
}

// Per-pixel gradient magnitude sqrt(dx^2 + dy^2 + eps^2) on the valid region.
template <typename S>
Tensor<S> grad_magnitude(const Tensor<S>& x) {
    auto [dx, dy] = forward_diffs(x);
    const S e2 = static_cast<S>(kLossEps) * static_cast<S>(kLossEps);
    return sqrt(scalar_add(add(mul(dx, dx), mul(dy, dy)), e2));
}

} // namespace detail

// Total variation: sum over channels and the valid region of the per-pixel
// gradient magnitude.
template <typename S>
Tensor<S> tv_raw_t(const Tensor<S>& x) {
    return reduce_sum(detail::grad_magnitude(x));
}

// Size-normalized total variation (mean over channels x valid pixels).
template <typename S>
Tensor<S> tv_loss_t(const Tensor<S>& x) {
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    const double norm = static_cast<double>(c) * (h - 1) * (w - 1);
    return scalar_mul(tv_raw_t(x), static_cast<S>(1.0 / norm));
}

// Mean squared difference of the gradient magnitudes of pred and target.
template <typename S>
Tensor<S> grad_loss_t(const Tensor<S>& pred, const Tensor<S>& target) {
    detail::require_same_shape(pred, target, "grad_loss");
    const Tensor<S> d = sub(detail::grad_magnitude(pred), detail::grad_magnitude(target));
    return reduce_mean(mul(d, d));
}

// Mean squared error on the unit scale.
template <typename S>
Tensor<S> mse_loss_t(const Tensor<S>& a, const Tensor<S>& b) {
    detail::require_same_shape(a, b, "mse_loss");
    const Tensor<S> d = sub(a, b);
    return reduce_mean(mul(d, d));
}

// Weighted components of the illumination objective; `grad` already carries
// beta and `tv` carries tv_weight, so total == grad + mse + tv.
struct LossReport {
    double total = 0.0;
    double grad = 0.0;
    double mse = 0.0;
    double tv = 0.0;
    double beta = kDefaultBeta;
};

// Illumination-stage objective: beta * grad_loss + mse_loss + tv_loss(pred).
// tv_weight scales the TV term (1 = as defined, 0 = ablated).
template <typename S>
std::pair<Tensor<S>, LossReport> illum_total_loss_t(const Tensor<S>& pred,
                                                    const Tensor<S>& target,
                                                    double beta = kDefaultBeta,
                                                    double tv_weight = 1.0) {
    const Tensor<S> g = scalar_mul(grad_loss_t(pred, target), static_cast<S>(beta));
    const Tensor<S> m = mse_loss_t(pred, target);
    const Tensor<S> tv = scalar_mul(tv_loss_t(pred), static_cast<S>(tv_weight));
    const Tensor<S> total = add(add(g, m), tv);
    LossReport report;
    report.grad = static_cast<double>(g.item());
    report.mse = static_cast<double>(m.item());
    report.tv = static_cast<double>(tv.item());
    report.total = static_cast<double>(total.item());
    report.beta = beta;
    return {total, report};
}

// Convenience non-graph evaluations on images.
inline double tv_raw(const Image& img) {
    return static_cast<double>(tv_raw_t(tensor_from_image<double>(img)).item());
}

inline double tv_loss(const Image& img) {
    return static_cast<double>(tv_loss_t(tensor_from_image<double>(img)).item());
}

} // namespace klce
