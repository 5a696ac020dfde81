// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "klce/ops.hpp"
#include "klce/rng.hpp"
#include "klce/tensor.hpp"

namespace klce {

// One 3x3 convolution layer's parameters. Initialization draws weights and
// biases uniformly from [-s, s] with s = sqrt(1 / fan_in), fan_in = C * 9,
// in a fixed order (weights then bias) so a seed pins the whole net.
template <typename S>
struct ConvLayer {
    Tensor<S> w; // O x C x 3 x 3
    Tensor<S> b; // O

    static ConvLayer init(Rng& rng, int out_c, int in_c) {
        const double s = std::sqrt(1.0 / (in_c * 9.0));
        std::vector<S> wdata(static_cast<std::size_t>(out_c) * in_c * 9);
        for (auto& v : wdata) v = static_cast<S>(rng.uniform(-s, s));
        std::vector<S> bdata(out_c);
        for (auto& v : bdata) v = static_cast<S>(rng.uniform(-s, s));
        return {Tensor<S>::param({out_c, in_c, 3, 3}, std::move(wdata)),
                Tensor<S>::param({out_c}, std::move(bdata))};
    }

    ConvLayer detached() const { return {w.detach(), b.detach()}; }

    void collect(const std::string& name, std::vector<std::pair<std::string, Tensor<S>>>& out) const {
        out.emplace_back(name + ".w", w);
        out.emplace_back(name + ".b", b);
    }
};

template <typename S>
Tensor<S> conv(const Tensor<S>& x, const ConvLayer<S>& layer) {
    return conv2d_3x3(x, layer.w, layer.b);
}

template <typename S>
Tensor<S> conv_relu(const Tensor<S>& x, const ConvLayer<S>& layer) {
    return relu(conv2d_3x3(x, layer.w, layer.b));
}

namespace detail {

// Pad bottom/right by reflection to the next multiple of `align`; returns the
// padded tensor plus the original spatial size for the symmetric crop.
template <typename S>
Tensor<S> pad_to_multiple(const Tensor<S>& x, int align, int& orig_h, int& orig_w) {
    orig_h = x.shape()[1];
    orig_w = x.shape()[2];
    const int pad_b = (align - orig_h % align) % align;
    const int pad_r = (align - orig_w % align) % align;
    return pad_reflect_hw(x, pad_b, pad_r);
}

template <typename S>
Tensor<S> crop_to(const Tensor<S>& x, int h, int w) {
    if (x.shape()[1] == h && x.shape()[2] == w) return x;
    return crop_window_t(x, {0, 0, h, w});
}

} // namespace detail

} // namespace klce
