// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "klce/decomposition.hpp"
#include "klce/layers.hpp"

// Reflectance restoration: recover/denoise the reflectance map from
// (I_low, R_low). Depth-2 encoder-decoder (16 -> 32) with skip
// concatenations; 4-channel input (R_low || I_low), 3-channel sigmoid output.

namespace klce {

template <typename S>
struct RestoreParams {
    ConvLayer<S> enc1, enc2, bottleneck, dec2, dec1, head;

    static RestoreParams init(std::uint64_t seed) {
        Rng rng(seed);
        RestoreParams p;
        p.enc1 = ConvLayer<S>::init(rng, 16, 4);
        p.enc2 = ConvLayer<S>::init(rng, 32, 16);
        p.bottleneck = ConvLayer<S>::init(rng, 32, 32);
        p.dec2 = ConvLayer<S>::init(rng, 32, 64); // concat(up(bottleneck), enc2)
        p.dec1 = ConvLayer<S>::init(rng, 16, 48); // concat(up(dec2), enc1)
        p.head = ConvLayer<S>::init(rng, 3, 16);
        return p;
    }

    RestoreParams detached() const {
        return {enc1.detached(), enc2.detached(), bottleneck.detached(),
                dec2.detached(), dec1.detached(), head.detached()};
    }

    std::vector<std::pair<std::string, Tensor<S>>> named() const {
        std::vector<std::pair<std::string, Tensor<S>>> out;
        enc1.collect("enc1", out);
        enc2.collect("enc2", out);
        bottleneck.collect("bottleneck", out);
        dec2.collect("dec2", out);
        dec1.collect("dec1", out);
        head.collect("head", out);
        return out;
    }
};

// R_out = F_restore(I_low, R_low); sides not divisible by 4 are reflect-padded
// for the two pooling levels and cropped back.
template <typename S>
Tensor<S> restore_t(const RestoreParams<S>& p, const Tensor<S>& illum_low,
                    const Tensor<S>& refl_low) {
    if (illum_low.shape().size() != 3 || illum_low.shape()[0] != 1)
        throw ShapeError("restore: illum_low must be 1 x H x W");
    if (refl_low.shape().size() != 3 || refl_low.shape()[0] != 3)
        throw ShapeError("restore: refl_low must be 3 x H x W");
    if (illum_low.shape()[1] != refl_low.shape()[1] || illum_low.shape()[2] != refl_low.shape()[2])
        throw ShapeError("restore: map sizes differ");

    int h = 0, w = 0;
    const Tensor<S> x = detail::pad_to_multiple(concat_channels(refl_low, illum_low), 4, h, w);
    const Tensor<S> e1 = conv_relu(x, p.enc1);
    const Tensor<S> e2 = conv_relu(avg_pool2x2(e1), p.enc2);
    const Tensor<S> b = conv_relu(avg_pool2x2(e2), p.bottleneck);
    const Tensor<S> d2 = conv_relu(concat_channels(upsample_nearest2x(b), e2), p.dec2);
    const Tensor<S> d1 = conv_relu(concat_channels(upsample_nearest2x(d2), e1), p.dec1);
    return detail::crop_to(sigmoid(conv(d1, p.head)), h, w);
}

template <typename S>
Image restore(const RestoreParams<S>& p, const Image& illum_low, const Image& refl_low) {
    const auto frozen = p.detached();
    return image_from_tensor(
        restore_t(frozen, tensor_from_image<S>(illum_low), tensor_from_image<S>(refl_low)));
}

// mse(R_out, R_normal) + lambda_tv * tv_loss(R_out)
template <typename S>
Tensor<S> restore_loss_t(const Tensor<S>& refl_out, const Tensor<S>& refl_normal,
                         double lambda_tv = 0.1) {
    return add(mse_loss_t(refl_out, refl_normal),
               scalar_mul(tv_loss_t(refl_out), static_cast<S>(lambda_tv)));
}

} // namespace klce
