// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "klce/errors.hpp"
#include "klce/image.hpp"

// Full-reference quality metrics, computed in double on the 8-bit scale
// (MAX = 255) except SSIM, which uses dynamic range 1.0 on unit-scale samples.

namespace klce {

namespace detail {

inline void require_same_dims(const Image& a, const Image& b, const char* op) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels)
        throw ShapeError(std::string(op) + ": image dimensions differ");
}

} // namespace detail

// Mean squared error on the 8-bit scale.
inline double mse_metric(const Image& a, const Image& b) {
    detail::require_same_dims(a, b, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = 255.0 * (static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]));
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

// Mean absolute error on the 8-bit scale.
inline double mae(const Image& a, const Image& b) {
    detail::require_same_dims(a, b, "mae");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        acc += std::fabs(255.0 * (static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
    return acc / static_cast<double>(a.data.size());
}

// 10 * log10(255^2 / mse); identical images return the +infinity sentinel.
inline double psnr(const Image& a, const Image& b) {
    const double m = mse_metric(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / m);
}

namespace detail {

inline std::vector<double> ssim_window() {
    // 11-tap Gaussian, sigma = 1.5, normalized to sum 1
    std::vector<double> w(11);
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5.0;
        w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
}

// Separable valid-region Gaussian filter of one channel plane.
inline std::vector<double> gauss_filter_valid(const std::vector<double>& plane, int h, int w,
                                              const std::vector<double>& win) {
    const int k = static_cast<int>(win.size());
    const int oh = h - k + 1, ow = w - k + 1;
    std::vector<double> horiz(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += win[t] * plane[static_cast<std::size_t>(y) * w + x + t];
            horiz[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += win[t] * horiz[static_cast<std::size_t>(y + t) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

} // namespace detail

// Single-scale SSIM: 11x11 Gaussian window sigma = 1.5, K1 = 0.01, K2 = 0.03,
// dynamic range 1.0, per channel over the valid region (no padding), averaged
// across channels. Summation order is fixed so results are deterministic.
inline double ssim(const Image& a, const Image& b) {
    detail::require_same_dims(a, b, "ssim");
    if (a.height < 11 || a.width < 11)
        throw InvalidArgument("ssim: image smaller than the 11x11 window");

    const auto win = detail::ssim_window();
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const int h = a.height, w = a.width;
    const std::size_t plane = static_cast<std::size_t>(h) * w;

    double channel_sum = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        std::vector<double> pa(plane), pb(plane), paa(plane), pbb(plane), pab(plane);
        for (std::size_t i = 0; i < plane; ++i) {
            const double va = a.data[c * plane + i];
            const double vb = b.data[c * plane + i];
            pa[i] = va;
            pb[i] = vb;
            paa[i] = va * va;
            pbb[i] = vb * vb;
            pab[i] = va * vb;
        }
        const auto mu_a = detail::gauss_filter_valid(pa, h, w, win);
        const auto mu_b = detail::gauss_filter_valid(pb, h, w, win);
        const auto e_aa = detail::gauss_filter_valid(paa, h, w, win);
        const auto e_bb = detail::gauss_filter_valid(pbb, h, w, win);
        const auto e_ab = detail::gauss_filter_valid(pab, h, w, win);

        double acc = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double ma = mu_a[i], mb = mu_b[i];
            const double va = e_aa[i] - ma * ma;
            const double vb = e_bb[i] - mb * mb;
            const double cov = e_ab[i] - ma * mb;
            acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                   ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
        channel_sum += acc / static_cast<double>(mu_a.size());
    }
    return channel_sum / a.channels;
}

struct MetricReport {
    double psnr = 0.0; // dB, +inf when images are identical
    double ssim = 0.0;
    double mae = 0.0;  // 8-bit scale
    double mse = 0.0;  // 8-bit scale
};

inline MetricReport compute_metrics(const Image& a, const Image& b) {
    MetricReport r;
    r.mse = mse_metric(a, b);
    r.psnr = r.mse == 0.0 ? std::numeric_limits<double>::infinity()
                          : 10.0 * std::log10(255.0 * 255.0 / r.mse);
    r.ssim = ssim(a, b);
    r.mae = mae(a, b);
    return r;
}

} // namespace klce
