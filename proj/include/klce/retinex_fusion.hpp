// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "klce/decomposition.hpp"
#include "klce/ops.hpp"

// Retinex Fusion: derive global/local illumination coefficients from the
// decomposed maps and assemble the 6-channel feature stack consumed by the
// light-curve estimator.
//
// x_rf channel layout:
//   0      S_local, the constant local-coefficient map (resized to H x W)
//   1      I_lowcrop, the cropped low illumination map (resized to H x W)
//   2..4   S_global = R_low * t_global
//   5      I_low, bit-for-bit
//
// With a normal-light illumination map present (training) the coefficients
// are mean low/normal ratios; without one (inference) they fall back to
// infer_coeff against a target mean brightness.

namespace klce {

template <typename S>
struct FusionInputs {
    Tensor<S> illum_low;                  // 1 x H x W
    std::optional<Tensor<S>> illum_normal; // 1 x H x W; absent at inference
    Tensor<S> refl_low;                   // 3 x H x W
    CropWindow window;                    // shared by both maps
    double eps = kRetinexEps;
    double target_mean = 0.5;             // inference fallback
};

template <typename S>
struct FusedStack {
    Tensor<S> x_rf;     // 6 x H x W
    Tensor<S> t_global; // scalar
    Tensor<S> t_local;  // scalar
};

// Mean ratio of the two illumination maps: (1/MN) * sum I_low / (I_normal + eps).
template <typename S>
Tensor<S> global_coeff(const Tensor<S>& illum_low, const Tensor<S>& illum_normal, double eps) {
    detail::require_same_shape(illum_low, illum_normal, "global_coeff");
    if (!(eps > 0.0)) throw InvalidArgument("global_coeff: eps must be > 0");
    return reduce_mean(div(illum_low, scalar_add(illum_normal, static_cast<S>(eps))));
}

// Same ratio over a shared crop window of both maps.
template <typename S>
Tensor<S> local_coeff(const Tensor<S>& illum_low, const Tensor<S>& illum_normal,
                      const CropWindow& window, double eps) {
    detail::require_same_shape(illum_low, illum_normal, "local_coeff");
    if (window.h < 1 || window.w < 1) throw InvalidArgument("local_coeff: degenerate crop");
    return global_coeff(crop_window_t(illum_low, window), crop_window_t(illum_normal, window), eps);
}

// Inference-time coefficient: clamp(mean(I_low) / (target_mean + eps), eps, 1).
template <typename S>
S infer_coeff(const Tensor<S>& illum_low, double target_mean, double eps) {
    if (!(target_mean > 0.0) || target_mean > 1.0)
        throw InvalidArgument("infer_coeff: target_mean must be in (0, 1]");
    double acc = 0.0;
    for (std::size_t i = 0; i < illum_low.numel(); ++i)
        acc += static_cast<double>(illum_low.data()[i]);
    const double mean = acc / static_cast<double>(illum_low.numel());
    return static_cast<S>(std::clamp(mean / (target_mean + eps), eps, 1.0));
}

// S_global = R_low * t_global (t is a scalar tensor so gradients reach it).
template <typename S>
Tensor<S> build_s_global(const Tensor<S>& refl_low, const Tensor<S>& t_global) {
    return scale_by(refl_low, t_global);
}

// S_local = E * t_local where E is the all-ones map of the crop size.
template <typename S>
Tensor<S> build_s_local(int crop_h, int crop_w, const Tensor<S>& t_local) {
    if (crop_h < 1 || crop_w < 1) throw InvalidArgument("build_s_local: dims must be >= 1");
    return scale_by(Tensor<S>::full({1, crop_h, crop_w}, S(1)), t_local);
}

template <typename S>
FusedStack<S> fuse(const FusionInputs<S>& in) {
    if (in.illum_low.shape().size() != 3 || in.illum_low.shape()[0] != 1)
        throw ShapeError("fuse: illum_low must be 1 x H x W");
    if (in.refl_low.shape().size() != 3 || in.refl_low.shape()[0] != 3)
        throw ShapeError("fuse: refl_low must be 3 x H x W");
    const int h = in.illum_low.shape()[1], w = in.illum_low.shape()[2];
    if (in.refl_low.shape()[1] != h || in.refl_low.shape()[2] != w)
        throw ShapeError("fuse: map sizes differ");

    FusedStack<S> out;
    const Tensor<S> low_crop = crop_window_t(in.illum_low, in.window);
    if (in.illum_normal) {
        detail::require_same_shape(in.illum_low, *in.illum_normal, "fuse");
        out.t_global = global_coeff(in.illum_low, *in.illum_normal, in.eps);
        out.t_local = local_coeff(in.illum_low, *in.illum_normal, in.window, in.eps);
    } else {
        out.t_global = Tensor<S>::scalar(infer_coeff(in.illum_low, in.target_mean, in.eps));
        out.t_local = Tensor<S>::scalar(infer_coeff(low_crop, in.target_mean, in.eps));
    }

    const Tensor<S> s_local = build_s_local(in.window.h, in.window.w, out.t_local);
    const Tensor<S> fused_local =
        concat_channels(resize_bilinear_t(s_local, h, w), resize_bilinear_t(low_crop, h, w));
    const Tensor<S> fused_global =
        concat_channels(build_s_global(in.refl_low, out.t_global), in.illum_low);
    out.x_rf = concat_channels(fused_local, fused_global);
    return out;
}

} // namespace klce
