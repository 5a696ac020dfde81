// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>

#include "klce/layers.hpp"
#include "klce/losses.hpp"

// Retinex decomposition: split an image into a 1-channel illumination map and
// a 3-channel reflectance map, both sigmoid-bounded to [0,1]. The network is a
// small U-shape: three encoder convs (16 -> 32 -> 32) with 2x2 average pooling
// between them, a mirrored decoder with nearest-neighbor upsampling and skip
// concatenations, and separate sigmoid heads for R and I.

namespace klce {

inline constexpr double kRetinexEps = 1e-4; // guards divisions by dark pixels

struct DecomposedPair {
    Image illumination; // 1 x H x W
    Image reflectance;  // 3 x H x W
};

template <typename S>
struct DecomParams {
    ConvLayer<S> enc1, enc2, enc3, dec2, dec1, head_r, head_i;

    static DecomParams init(std::uint64_t seed) {
        Rng rng(seed);
        DecomParams p;
        p.enc1 = ConvLayer<S>::init(rng, 16, 3);
        p.enc2 = ConvLayer<S>::init(rng, 32, 16);
        p.enc3 = ConvLayer<S>::init(rng, 32, 32);
        p.dec2 = ConvLayer<S>::init(rng, 32, 64); // concat(up(enc3), enc2)
        p.dec1 = ConvLayer<S>::init(rng, 16, 48); // concat(up(dec2), enc1)
        p.head_r = ConvLayer<S>::init(rng, 3, 16);
        p.head_i = ConvLayer<S>::init(rng, 1, 16);
        return p;
    }

    DecomParams detached() const {
        return {enc1.detached(), enc2.detached(), enc3.detached(), dec2.detached(),
                dec1.detached(), head_r.detached(), head_i.detached()};
    }

    std::vector<std::pair<std::string, Tensor<S>>> named() const {
        std::vector<std::pair<std::string, Tensor<S>>> out;
        enc1.collect("enc1", out);
        enc2.collect("enc2", out);
        enc3.collect("enc3", out);
        dec2.collect("dec2", out);
        dec1.collect("dec1", out);
        head_r.collect("head_r", out);
        head_i.collect("head_i", out);
        return out;
    }
};

// Tensor-level forward: (illumination 1xHxW, reflectance 3xHxW). Inputs whose
// sides are not multiples of 4 are reflect-padded for the two pooling levels
// and cropped back afterwards.
template <typename S>
std::pair<Tensor<S>, Tensor<S>> decompose_t(const DecomParams<S>& p, const Tensor<S>& img) {
    if (img.shape().size() != 3 || img.shape()[0] != 3)
        throw ShapeError("decompose: want 3 x H x W input, got " + shape_str(img.shape()));
    int h = 0, w = 0;
    const Tensor<S> x = detail::pad_to_multiple(img, 4, h, w);

    const Tensor<S> e1 = conv_relu(x, p.enc1);
    const Tensor<S> e2 = conv_relu(avg_pool2x2(e1), p.enc2);
    const Tensor<S> e3 = conv_relu(avg_pool2x2(e2), p.enc3);
    const Tensor<S> d2 = conv_relu(concat_channels(upsample_nearest2x(e3), e2), p.dec2);
    const Tensor<S> d1 = conv_relu(concat_channels(upsample_nearest2x(d2), e1), p.dec1);
    const Tensor<S> refl = sigmoid(conv(d1, p.head_r));
    const Tensor<S> illum = sigmoid(conv(d1, p.head_i));
    return {detail::crop_to(illum, h, w), detail::crop_to(refl, h, w)};
}

// Image-level inference (graph-free).
template <typename S>
DecomposedPair decompose(const DecomParams<S>& p, const Image& img) {
    const auto frozen = p.detached();
    auto [illum, refl] = decompose_t(frozen, tensor_from_image<S>(img));
    return {image_from_tensor(illum), image_from_tensor(refl)};
}

// Closed-form classical decomposition, used as an oracle: I is the per-pixel
// channel maximum, R = clamp(img / (I + eps), 0, 1).
inline DecomposedPair classical_decompose(const Image& img, double eps = kRetinexEps) {
    if (img.channels != 3) throw ChannelMismatch("classical_decompose: need 3 channels");
    DecomposedPair out{Image(img.height, img.width, 1), Image(img.height, img.width, 3)};
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float m = 0.0f;
            for (int c = 0; c < 3; ++c) m = std::max(m, img.at(c, y, x));
            out.illumination.at(0, y, x) = m;
            for (int c = 0; c < 3; ++c)
                out.reflectance.at(c, y, x) = static_cast<float>(
                    std::clamp(static_cast<double>(img.at(c, y, x)) / (m + eps), 0.0, 1.0));
        }
    return out;
}

// I (x) R with the illumination map broadcast over the reflectance channels.
template <typename S>
Tensor<S> retinex_product(const Tensor<S>& illum, const Tensor<S>& refl) {
    return mul(broadcast_channels(illum, refl.shape()[0]), refl);
}

// Decomposition objective: reconstruction MSE for both images plus
// reflectance consistency (the two reflectance maps should agree) and an
// illumination smoothness TV term. The extra terms pin down the otherwise
// non-identifiable split.
template <typename S>
Tensor<S> decom_loss_t(const Tensor<S>& illum_low, const Tensor<S>& refl_low,
                       const Tensor<S>& illum_normal, const Tensor<S>& refl_normal,
                       const Tensor<S>& in_low, const Tensor<S>& in_normal,
                       double lambda_rc = 0.01, double lambda_is = 0.1) {
    const Tensor<S> rec_low = mse_loss_t(retinex_product(illum_low, refl_low), in_low);
    const Tensor<S> rec_normal = mse_loss_t(retinex_product(illum_normal, refl_normal), in_normal);
    const Tensor<S> consistency =
        scalar_mul(reduce_mean(abs(sub(refl_low, refl_normal))), static_cast<S>(lambda_rc));
    const Tensor<S> smooth = scalar_mul(add(tv_loss_t(illum_low), tv_loss_t(illum_normal)),
                                        static_cast<S>(lambda_is));
    return add(add(add(rec_low, rec_normal), consistency), smooth);
}

} // namespace klce
