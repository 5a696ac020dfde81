// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>

#include "klce/layers.hpp"
#include "klce/retinex_fusion.hpp"

// Light-curve estimation: a seven-convolution backbone over the fused stack
// produces eight per-pixel coefficient maps alpha_1..alpha_8 in [-1, 1]
// (tanh head), which drive the quadratic adjustment
//
//   f(x) = x + alpha * x * (1 - x)
//
// f maps [0,1] into [0,1] for any alpha in [-1,1], fixes 0 and 1, is monotone
// in x, and brightens (alpha > 0) or darkens (alpha < 0) pointwise.

namespace klce {

// How the eight curve stages combine. Iterative composes them sequentially on
// the illumination channel. Literal applies each stage to the original
// channel independently and averages the sigmoids of the eight results; the
// terminal sigmoid compresses [0,1] into [0.5, 0.731], so it is kept only as
// an alternate mode.
enum class CurveMode { Iterative, Literal };

inline CurveMode parse_curve_mode(const std::string& s) {
    if (s == "iterative") return CurveMode::Iterative;
    if (s == "literal") return CurveMode::Literal;
    throw InvalidArgument("unknown curve mode '" + s + "' (want iterative|literal)");
}

template <typename S>
struct AlphaStack {
    std::array<Tensor<S>, 8> maps; // each 1 x H x W, values in [-1, 1]
};

template <typename S>
struct LceParams {
    // layer1: 6->32, layers2-4: 32->32, layer5: 64->32 on concat(x3, x4),
    // layer6: 64->32 on concat(x2, x5), layer7: 64->8 on concat(x1, x6)
    ConvLayer<S> l1, l2, l3, l4, l5, l6, l7;

    static LceParams init(std::uint64_t seed) {
        Rng rng(seed);
        LceParams p;
        p.l1 = ConvLayer<S>::init(rng, 32, 6);
        p.l2 = ConvLayer<S>::init(rng, 32, 32);
        p.l3 = ConvLayer<S>::init(rng, 32, 32);
        p.l4 = ConvLayer<S>::init(rng, 32, 32);
        p.l5 = ConvLayer<S>::init(rng, 32, 64);
        p.l6 = ConvLayer<S>::init(rng, 32, 64);
        p.l7 = ConvLayer<S>::init(rng, 8, 64);
        return p;
    }

    LceParams detached() const {
        return {l1.detached(), l2.detached(), l3.detached(), l4.detached(),
                l5.detached(), l6.detached(), l7.detached()};
    }

    std::vector<std::pair<std::string, Tensor<S>>> named() const {
        std::vector<std::pair<std::string, Tensor<S>>> out;
        l1.collect("l1", out);
        l2.collect("l2", out);
        l3.collect("l3", out);
        l4.collect("l4", out);
        l5.collect("l5", out);
        l6.collect("l6", out);
        l7.collect("l7", out);
        return out;
    }
};

// Backbone with skip concatenations and tanh head, split into 8 maps.
template <typename S>
AlphaStack<S> lce_backbone(const Tensor<S>& x_rf, const LceParams<S>& p) {
    if (x_rf.shape().size() != 3 || x_rf.shape()[0] != 6)
        throw ShapeError("lce_backbone: want 6 x H x W stack, got " + shape_str(x_rf.shape()));
    const Tensor<S> x1 = conv_relu(x_rf, p.l1);
    const Tensor<S> x2 = conv_relu(x1, p.l2);
    const Tensor<S> x3 = conv_relu(x2, p.l3);
    const Tensor<S> x4 = conv_relu(x3, p.l4);
    const Tensor<S> x5 = conv_relu(concat_channels(x3, x4), p.l5);
    const Tensor<S> x6 = conv_relu(concat_channels(x2, x5), p.l6);
    const Tensor<S> x7 = tanh(conv(concat_channels(x1, x6), p.l7));
    AlphaStack<S> out;
    for (int i = 0; i < 8; ++i) out.maps[i] = slice_channels(x7, i, i + 1);
    return out;
}

// Scalar quadratic curve step.
template <typename T>
constexpr T curve_step(T x, T alpha) {
    return x + alpha * x * (T(1) - x);
}

// Tensor curve step: out = x + alpha (*) x (*) (1 - x).
template <typename S>
Tensor<S> apply_curve_stage(const Tensor<S>& x, const Tensor<S>& alpha) {
    detail::require_same_shape(x, alpha, "apply_curve_stage");
    const Tensor<S> one_minus = scalar_add(scalar_mul(x, S(-1)), S(1));
    return add(x, mul(alpha, mul(x, one_minus)));
}

// Compose the eight curve stages over the fused stack's illumination channel
// (channel 5). Iterative: y_i = f(y_{i-1}, alpha_i), output y_8. Literal:
// I_i = f(y_0, alpha_i), output channel-mean of sigmoid(concat(I_1..I_8)).
template <typename S>
Tensor<S> enhance_illumination(const Tensor<S>& x_rf, const LceParams<S>& p, CurveMode mode) {
    const AlphaStack<S> alphas = lce_backbone(x_rf, p);
    const Tensor<S> y0 = slice_channels(x_rf, 5, 6);
    if (mode == CurveMode::Iterative) {
        Tensor<S> y = y0;
        for (int i = 0; i < 8; ++i) y = apply_curve_stage(y, alphas.maps[i]);
        return y;
    }
    std::vector<Tensor<S>> stages;
    stages.reserve(8);
    for (int i = 0; i < 8; ++i) stages.push_back(apply_curve_stage(y0, alphas.maps[i]));
    const Tensor<S> sig = sigmoid(concat_channels(stages));
    Tensor<S> acc = slice_channels(sig, 0, 1);
    for (int i = 1; i < 8; ++i) acc = add(acc, slice_channels(sig, i, i + 1));
    return scalar_mul(acc, S(1) / S(8));
}

} // namespace klce
