// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "klce/errors.hpp"
#include "klce/image.hpp"
#include "klce/parallel.hpp"
#include "klce/tensor.hpp"

// Forward ops used by the networks, each with its reverse-mode rule. The op
// set is deliberately small: same-size 3x3 convolution, channel concat/slice,
// elementwise arithmetic and activations, reductions, 2x2 average pooling with
// nearest-neighbor upsampling, reflect padding, window crop, and bilinear
// resize. No general broadcasting.

namespace klce {

namespace detail {

template <typename S>
void require_chw(const Tensor<S>& t, const char* op) {
    if (t.shape().size() != 3)
        throw ShapeError(std::string(op) + ": want C x H x W, got " + shape_str(t.shape()));
}

template <typename S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
}

} // namespace detail

// ---------------------------------------------------------------------------
// elementwise binary

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
    detail::require_same_shape(a, b, "add");
    auto n = detail::make_op_node<S>(a.shape(), "add", {a.node(), b.node()});
    const std::size_t len = n->value.size();
    for (std::size_t i = 0; i < len; ++i) n->value[i] = a.data()[i] + b.data()[i];
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            for (int k = 0; k < 2; ++k) {
                auto& in = *self.inputs[k];
                if (!in.requires_grad) continue;
                for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i];
            }
        };
    return Tensor<S>(std::move(n));
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
    detail::require_same_shape(a, b, "sub");
    auto n = detail::make_op_node<S>(a.shape(), "sub", {a.node(), b.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = a.data()[i] - b.data()[i];
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            auto& B = *self.inputs[1];
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (A.requires_grad) A.grad[i] += self.grad[i];
                if (B.requires_grad) B.grad[i] -= self.grad[i];
            }
        };
    return Tensor<S>(std::move(n));
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
    detail::require_same_shape(a, b, "mul");
    auto n = detail::make_op_node<S>(a.shape(), "mul", {a.node(), b.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = a.data()[i] * b.data()[i];
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            auto& B = *self.inputs[1];
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (A.requires_grad) A.grad[i] += self.grad[i] * B.value[i];
                if (B.requires_grad) B.grad[i] += self.grad[i] * A.value[i];
            }
        };
    return Tensor<S>(std::move(n));
}

// Elementwise quotient; the caller keeps denominators away from zero
// (Retinex ratios are always eps-guarded).
template <typename S>
Tensor<S> div(const Tensor<S>& a, const Tensor<S>& b) {
    detail::require_same_shape(a, b, "div");
    auto n = detail::make_op_node<S>(a.shape(), "div", {a.node(), b.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = a.data()[i] / b.data()[i];
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            auto& B = *self.inputs[1];
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const S inv = S(1) / B.value[i];
                if (A.requires_grad) A.grad[i] += self.grad[i] * inv;
                if (B.requires_grad) B.grad[i] -= self.grad[i] * self.value[i] * inv;
            }
        };
    return Tensor<S>(std::move(n));
}

// ---------------------------------------------------------------------------
// elementwise scalar / unary

template <typename S>
Tensor<S> scalar_mul(const Tensor<S>& a, S k) {
    auto n = detail::make_op_node<S>(a.shape(), "scalar_mul", {a.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = a.data()[i] * k;
    if (n->requires_grad)
        n->backward = [k](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (std::size_t i = 0; i < self.grad.size(); ++i) A.grad[i] += self.grad[i] * k;
        };
    return Tensor<S>(std::move(n));
}

template <typename S>
Tensor<S> scalar_add(const Tensor<S>& a, S k) {
    auto n = detail::make_op_node<S>(a.shape(), "scalar_add", {a.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = a.data()[i] + k;
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (std::size_t i = 0; i < self.grad.size(); ++i) A.grad[i] += self.grad[i];
        };
    return Tensor<S>(std::move(n));
}

template <typename S>
Tensor<S> relu(const Tensor<S>& a) {
    auto n = detail::make_op_node<S>(a.shape(), "relu", {a.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = std::max(a.data()[i], S(0));
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                if (A.value[i] > S(0)) A.grad[i] += self.grad[i];
        };
    return Tensor<S>(std::move(n));
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& a) {
    auto n = detail::make_op_node<S>(a.shape(), "sigmoid", {a.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i)
        n->value[i] = S(1) / (S(1) + std::exp(-a.data()[i]));
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const S y = self.value[i];
                A.grad[i] += self.grad[i] * y * (S(1) - y);
            }
        };
    return Tensor<S>(std::move(n));
}

template <typename S>
Tensor<S> tanh(const Tensor<S>& a) {
    auto n = detail::make_op_node<S>(a.shape(), "tanh", {a.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = std::tanh(a.data()[i]);
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const S y = self.value[i];
                A.grad[i] += self.grad[i] * (S(1) - y * y);
            }
        };
    return Tensor<S>(std::move(n));
}

// Clamp to [0,1] with pass-through gradient strictly inside (0,1) and zero
// gradient outside.
template <typename S>
Tensor<S> clamp01(const Tensor<S>& a) {
    auto n = detail::make_op_node<S>(a.shape(), "clamp01", {a.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i)
        n->value[i] = std::clamp(a.data()[i], S(0), S(1));
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const S x = A.value[i];
                if (x > S(0) && x < S(1)) A.grad[i] += self.grad[i];
            }
        };
    return Tensor<S>(std::move(n));
}

template <typename S>
Tensor<S> sqrt(const Tensor<S>& a) {
    auto n = detail::make_op_node<S>(a.shape(), "sqrt", {a.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = std::sqrt(a.data()[i]);
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                A.grad[i] += self.grad[i] * S(0.5) / self.value[i];
        };
    return Tensor<S>(std::move(n));
}

template <typename S>
Tensor<S> abs(const Tensor<S>& a) {
    auto n = detail::make_op_node<S>(a.shape(), "abs", {a.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = std::fabs(a.data()[i]);
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const S x = A.value[i];
                if (x > S(0))
                    A.grad[i] += self.grad[i];
                else if (x < S(0))
                    A.grad[i] -= self.grad[i];
            }
        };
    return Tensor<S>(std::move(n));
}

// ---------------------------------------------------------------------------
// channel plumbing

template <typename S>
Tensor<S> concat_channels(const std::vector<Tensor<S>>& parts) {
    if (parts.empty()) throw InvalidArgument("concat_channels: no parts");
    if (parts.size() == 1) return parts[0];
    const int h = parts[0].shape()[1], w = parts[0].shape()[2];
    int total_c = 0;
    std::vector<std::shared_ptr<detail::Node<S>>> nodes;
    for (const auto& p : parts) {
        detail::require_chw(p, "concat_channels");
        if (p.shape()[1] != h || p.shape()[2] != w)
            throw ShapeError("concat_channels: spatial mismatch");
        total_c += p.shape()[0];
        nodes.push_back(p.node());
    }
    auto n = detail::make_op_node<S>({total_c, h, w}, "concat_channels", std::move(nodes));
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::memcpy(n->value.data() + off, p.data(), p.numel() * sizeof(S));
        off += p.numel();
    }
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            std::size_t off = 0;
            for (auto& in : self.inputs) {
                if (in->requires_grad)
                    for (std::size_t i = 0; i < in->value.size(); ++i)
                        in->grad[i] += self.grad[off + i];
                off += in->value.size();
            }
        };
    return Tensor<S>(std::move(n));
}

template <typename S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b) {
    return concat_channels(std::vector<Tensor<S>>{a, b});
}

template <typename S>
Tensor<S> slice_channels(const Tensor<S>& a, int c0, int c1) {
    detail::require_chw(a, "slice_channels");
    const int c = a.shape()[0], h = a.shape()[1], w = a.shape()[2];
    if (c0 < 0 || c1 > c || c0 >= c1) throw ShapeError("slice_channels: bad range");
    auto n = detail::make_op_node<S>({c1 - c0, h, w}, "slice_channels", {a.node()});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::memcpy(n->value.data(), a.data() + c0 * plane, (c1 - c0) * plane * sizeof(S));
    if (n->requires_grad)
        n->backward = [c0, plane](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                A.grad[c0 * plane + i] += self.grad[i];
        };
    return Tensor<S>(std::move(n));
}

// Replicate a single-channel map across `channels` copies (backward sums the
// per-copy gradients). This is the only broadcast the pipeline needs: the
// illumination map multiplying a 3-channel reflectance map.
template <typename S>
Tensor<S> broadcast_channels(const Tensor<S>& a, int channels) {
    detail::require_chw(a, "broadcast_channels");
    if (a.shape()[0] != 1) throw ShapeError("broadcast_channels: input must have 1 channel");
    const int h = a.shape()[1], w = a.shape()[2];
    auto n = detail::make_op_node<S>({channels, h, w}, "broadcast_channels", {a.node()});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int c = 0; c < channels; ++c)
        std::memcpy(n->value.data() + c * plane, a.data(), plane * sizeof(S));
    if (n->requires_grad)
        n->backward = [channels, plane](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (int c = 0; c < channels; ++c)
                for (std::size_t i = 0; i < plane; ++i)
                    A.grad[i] += self.grad[c * plane + i];
        };
    return Tensor<S>(std::move(n));
}

// out = a * s where s is a scalar tensor (shape [1]); gradients flow to both.
template <typename S>
Tensor<S> scale_by(const Tensor<S>& a, const Tensor<S>& s) {
    if (s.numel() != 1) throw ShapeError("scale_by: scale must be scalar");
    auto n = detail::make_op_node<S>(a.shape(), "scale_by", {a.node(), s.node()});
    const S k = s.item();
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = a.data()[i] * k;
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            auto& Sc = *self.inputs[1];
            const S k = Sc.value[0];
            if (A.requires_grad)
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    A.grad[i] += self.grad[i] * k;
            if (Sc.requires_grad) {
                S acc = 0;
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    acc += self.grad[i] * A.value[i];
                Sc.grad[0] += acc;
            }
        };
    return Tensor<S>(std::move(n));
}

// ---------------------------------------------------------------------------
// reductions

template <typename S>
Tensor<S> reduce_sum(const Tensor<S>& a) {
    if (a.numel() == 0) throw InvalidArgument("reduce_sum: empty tensor");
    auto n = detail::make_op_node<S>({1}, "reduce_sum", {a.node()});
    S acc = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += a.data()[i];
    n->value[0] = acc;
    if (n->requires_grad)
        n->backward = [](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            const S g = self.grad[0];
            for (std::size_t i = 0; i < A.grad.size(); ++i) A.grad[i] += g;
        };
    return Tensor<S>(std::move(n));
}

template <typename S>
Tensor<S> reduce_mean(const Tensor<S>& a) {
    if (a.numel() == 0) throw InvalidArgument("reduce_mean: empty tensor");
    auto n = detail::make_op_node<S>({1}, "reduce_mean", {a.node()});
    S acc = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += a.data()[i];
    const S inv = S(1) / static_cast<S>(a.numel());
    n->value[0] = acc * inv;
    if (n->requires_grad)
        n->backward = [inv](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            const S g = self.grad[0] * inv;
            for (std::size_t i = 0; i < A.grad.size(); ++i) A.grad[i] += g;
        };
    return Tensor<S>(std::move(n));
}

// ---------------------------------------------------------------------------
// 3x3 same-size convolution, zero padding 1, stride 1

namespace detail {

// out[o] += sum_c w[o][c] (*) in[c]; rows are contiguous so the inner loops
// vectorize. Valid for forward (in = input, out = output) and, with swapped
// roles, for the input-gradient pass.
template <typename S>
void conv3x3_accum_rows(const S* in_plane, S* out_plane, const S* w9, int h, int w) {
    for (int y = 0; y < h; ++y) {
        S* orow = out_plane + static_cast<std::size_t>(y) * w;
        for (int ky = 0; ky < 3; ++ky) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= h) continue;
            const S* irow = in_plane + static_cast<std::size_t>(iy) * w;
            const S w0 = w9[ky * 3 + 0], w1 = w9[ky * 3 + 1], w2 = w9[ky * 3 + 2];
            for (int x = 1; x < w; ++x) orow[x] += w0 * irow[x - 1];
            for (int x = 0; x < w; ++x) orow[x] += w1 * irow[x];
            for (int x = 0; x < w - 1; ++x) orow[x] += w2 * irow[x + 1];
        }
    }
}

// dot of gout row with shifted input row, accumulated per kernel tap
template <typename S>
void conv3x3_weight_grad(const S* in_plane, const S* gout_plane, S* gw9, int h, int w) {
    for (int ky = 0; ky < 3; ++ky) {
        S acc0 = 0, acc1 = 0, acc2 = 0;
        for (int y = 0; y < h; ++y) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= h) continue;
            const S* grow = gout_plane + static_cast<std::size_t>(y) * w;
            const S* irow = in_plane + static_cast<std::size_t>(iy) * w;
            for (int x = 1; x < w; ++x) acc0 += grow[x] * irow[x - 1];
            for (int x = 0; x < w; ++x) acc1 += grow[x] * irow[x];
            for (int x = 0; x < w - 1; ++x) acc2 += grow[x] * irow[x + 1];
        }
        gw9[ky * 3 + 0] += acc0;
        gw9[ky * 3 + 1] += acc1;
        gw9[ky * 3 + 2] += acc2;
    }
}

} // namespace detail

template <typename S>
Tensor<S> conv2d_3x3(const Tensor<S>& input, const Tensor<S>& weight, const Tensor<S>& bias) {
    detail::require_chw(input, "conv2d_3x3");
    if (weight.shape().size() != 4 || weight.shape()[2] != 3 || weight.shape()[3] != 3)
        throw ShapeError("conv2d_3x3: weight must be O x C x 3 x 3, got " + shape_str(weight.shape()));
    const int c = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
    const int o = weight.shape()[0];
    if (weight.shape()[1] != c)
        throw ShapeError("conv2d_3x3: weight expects " + std::to_string(weight.shape()[1]) +
                         " input channels, got " + std::to_string(c));
    if (bias.shape() != Shape{o})
        throw ShapeError("conv2d_3x3: bias must be [O]");

    auto n = detail::make_op_node<S>({o, h, w}, "conv2d_3x3",
                                     {input.node(), weight.node(), bias.node()});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const S* in = input.data();
    const S* wt = weight.data();
    const S* bs = bias.data();
    S* out = n->value.data();
    parallel_for(o, [&](int oc) {
        S* out_plane = out + oc * plane;
        std::fill(out_plane, out_plane + plane, bs[oc]);
        for (int ic = 0; ic < c; ++ic)
            detail::conv3x3_accum_rows(in + ic * plane, out_plane,
                                       wt + (static_cast<std::size_t>(oc) * c + ic) * 9, h, w);
    });

    if (n->requires_grad)
        n->backward = [c, o, h, w, plane](detail::Node<S>& self) {
            auto& in = *self.inputs[0];
            auto& wt = *self.inputs[1];
            auto& bs = *self.inputs[2];
            const S* gout = self.grad.data();

            if (in.requires_grad) {
                // gin[c] += sum_o flip(w[o][c]) (*) gout[o]; flipping swaps tap
                // order, handled by indexing the kernel transposed.
                S* gin = in.grad.data();
                parallel_for(c, [&](int ic) {
                    S* gin_plane = gin + ic * plane;
                    for (int oc = 0; oc < o; ++oc) {
                        const S* w9 = wt.value.data() + (static_cast<std::size_t>(oc) * c + ic) * 9;
                        S flipped[9];
                        for (int k = 0; k < 9; ++k) flipped[k] = w9[8 - k];
                        detail::conv3x3_accum_rows(gout + oc * plane, gin_plane, flipped, h, w);
                    }
                });
            }
            if (wt.requires_grad) {
                S* gw = wt.grad.data();
                parallel_for(o, [&](int oc) {
                    for (int ic = 0; ic < c; ++ic)
                        detail::conv3x3_weight_grad(in.value.data() + ic * plane,
                                                    gout + oc * plane,
                                                    gw + (static_cast<std::size_t>(oc) * c + ic) * 9,
                                                    h, w);
                });
            }
            if (bs.requires_grad) {
                for (int oc = 0; oc < o; ++oc) {
                    S acc = 0;
                    const S* gp = gout + oc * plane;
                    for (std::size_t i = 0; i < plane; ++i) acc += gp[i];
                    bs.grad[oc] += acc;
                }
            }
        };
    return Tensor<S>(std::move(n));
}

// ---------------------------------------------------------------------------
// pooling / upsampling / padding / cropping / resize

template <typename S>
Tensor<S> avg_pool2x2(const Tensor<S>& a) {
    detail::require_chw(a, "avg_pool2x2");
    const int c = a.shape()[0], h = a.shape()[1], w = a.shape()[2];
    if (h % 2 || w % 2) throw ShapeError("avg_pool2x2: H and W must be even");
    const int oh = h / 2, ow = w / 2;
    auto n = detail::make_op_node<S>({c, oh, ow}, "avg_pool2x2", {a.node()});
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
    for (int ic = 0; ic < c; ++ic) {
        const S* ip = a.data() + ic * in_plane;
        S* op = n->value.data() + ic * out_plane;
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                const S* r0 = ip + static_cast<std::size_t>(2 * y) * w + 2 * x;
                const S* r1 = r0 + w;
                op[static_cast<std::size_t>(y) * ow + x] =
                    (r0[0] + r0[1] + r1[0] + r1[1]) * S(0.25);
            }
    }
    if (n->requires_grad)
        n->backward = [c, h, w, oh, ow, in_plane, out_plane](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (int ic = 0; ic < c; ++ic) {
                S* gp = A.grad.data() + ic * in_plane;
                const S* go = self.grad.data() + ic * out_plane;
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x) {
                        const S g = go[static_cast<std::size_t>(y) * ow + x] * S(0.25);
                        S* r0 = gp + static_cast<std::size_t>(2 * y) * w + 2 * x;
                        S* r1 = r0 + w;
                        r0[0] += g;
                        r0[1] += g;
                        r1[0] += g;
                        r1[1] += g;
                    }
            }
        };
    return Tensor<S>(std::move(n));
}

template <typename S>
Tensor<S> upsample_nearest2x(const Tensor<S>& a) {
    detail::require_chw(a, "upsample_nearest2x");
    const int c = a.shape()[0], h = a.shape()[1], w = a.shape()[2];
    const int oh = h * 2, ow = w * 2;
    auto n = detail::make_op_node<S>({c, oh, ow}, "upsample_nearest2x", {a.node()});
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
    for (int ic = 0; ic < c; ++ic) {
        const S* ip = a.data() + ic * in_plane;
        S* op = n->value.data() + ic * out_plane;
        for (int y = 0; y < oh; ++y) {
            const S* irow = ip + static_cast<std::size_t>(y / 2) * w;
            S* orow = op + static_cast<std::size_t>(y) * ow;
            for (int x = 0; x < ow; ++x) orow[x] = irow[x / 2];
        }
    }
    if (n->requires_grad)
        n->backward = [c, h, w, oh, ow, in_plane, out_plane](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (int ic = 0; ic < c; ++ic) {
                S* gp = A.grad.data() + ic * in_plane;
                const S* go = self.grad.data() + ic * out_plane;
                for (int y = 0; y < oh; ++y) {
                    S* grow = gp + static_cast<std::size_t>(y / 2) * w;
                    const S* orow = go + static_cast<std::size_t>(y) * ow;
                    for (int x = 0; x < ow; ++x) grow[x / 2] += orow[x];
                }
            }
        };
    return Tensor<S>(std::move(n));
}

namespace detail {

// Fold an out-of-range index back into [0, n) by symmetric reflection
// (... c b a | a b c | c b a ...). Handles pads larger than the extent.
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    int j = i % period;
    if (j < 0) j += period;
    return j < n ? j : period - 1 - j;
}

} // namespace detail

// Reflect-pad on the bottom/right only; used to reach pooling-compatible
// sizes, with the symmetric crop afterwards.
template <typename S>
Tensor<S> pad_reflect_hw(const Tensor<S>& a, int pad_bottom, int pad_right) {
    detail::require_chw(a, "pad_reflect_hw");
    if (pad_bottom < 0 || pad_right < 0) throw InvalidArgument("pad_reflect_hw: negative pad");
    if (pad_bottom == 0 && pad_right == 0) return a;
    const int c = a.shape()[0], h = a.shape()[1], w = a.shape()[2];
    const int oh = h + pad_bottom, ow = w + pad_right;
    auto n = detail::make_op_node<S>({c, oh, ow}, "pad_reflect_hw", {a.node()});
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
    for (int ic = 0; ic < c; ++ic)
        for (int y = 0; y < oh; ++y) {
            const int sy = detail::reflect_index(y, h);
            for (int x = 0; x < ow; ++x) {
                const int sx = detail::reflect_index(x, w);
                n->value[ic * out_plane + static_cast<std::size_t>(y) * ow + x] =
                    a.data()[ic * in_plane + static_cast<std::size_t>(sy) * w + sx];
            }
        }
    if (n->requires_grad)
        n->backward = [c, h, w, oh, ow, in_plane, out_plane](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (int ic = 0; ic < c; ++ic)
                for (int y = 0; y < oh; ++y) {
                    const int sy = detail::reflect_index(y, h);
                    for (int x = 0; x < ow; ++x) {
                        const int sx = detail::reflect_index(x, w);
                        A.grad[ic * in_plane + static_cast<std::size_t>(sy) * w + sx] +=
                            self.grad[ic * out_plane + static_cast<std::size_t>(y) * ow + x];
                    }
                }
        };
    return Tensor<S>(std::move(n));
}

template <typename S>
Tensor<S> crop_window_t(const Tensor<S>& a, const CropWindow& win) {
    detail::require_chw(a, "crop_window");
    const int c = a.shape()[0], h = a.shape()[1], w = a.shape()[2];
    if (win.y0 < 0 || win.x0 < 0 || win.h < 1 || win.w < 1 || win.y0 + win.h > h ||
        win.x0 + win.w > w)
        throw InvalidArgument("crop_window: window out of bounds");
    auto n = detail::make_op_node<S>({c, win.h, win.w}, "crop_window", {a.node()});
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(win.h) * win.w;
    for (int ic = 0; ic < c; ++ic)
        for (int y = 0; y < win.h; ++y)
            std::memcpy(n->value.data() + ic * out_plane + static_cast<std::size_t>(y) * win.w,
                        a.data() + ic * in_plane +
                            static_cast<std::size_t>(win.y0 + y) * w + win.x0,
                        static_cast<std::size_t>(win.w) * sizeof(S));
    if (n->requires_grad)
        n->backward = [c, w, win, in_plane, out_plane](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (int ic = 0; ic < c; ++ic)
                for (int y = 0; y < win.h; ++y)
                    for (int x = 0; x < win.w; ++x)
                        A.grad[ic * in_plane + static_cast<std::size_t>(win.y0 + y) * w +
                               win.x0 + x] +=
                            self.grad[ic * out_plane + static_cast<std::size_t>(y) * win.w + x];
        };
    return Tensor<S>(std::move(n));
}

// Differentiable bilinear resize, half-pixel centers (same convention as the
// Image-level resize; backward scatters the four tap weights).
template <typename S>
Tensor<S> resize_bilinear_t(const Tensor<S>& a, int out_h, int out_w) {
    detail::require_chw(a, "resize_bilinear");
    if (out_h < 1 || out_w < 1) throw InvalidArgument("resize_bilinear: output dims must be >= 1");
    const int c = a.shape()[0], h = a.shape()[1], w = a.shape()[2];
    auto n = detail::make_op_node<S>({c, out_h, out_w}, "resize_bilinear", {a.node()});
    std::vector<detail::BilinearTap> ys(out_h), xs(out_w);
    for (int y = 0; y < out_h; ++y) ys[y] = detail::bilinear_tap(y, out_h, h);
    for (int x = 0; x < out_w; ++x) xs[x] = detail::bilinear_tap(x, out_w, w);
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
    for (int ic = 0; ic < c; ++ic) {
        const S* ip = a.data() + ic * in_plane;
        S* op = n->value.data() + ic * out_plane;
        for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x) {
                const auto& ty = ys[y];
                const auto& tx = xs[x];
                const S wy1 = static_cast<S>(ty.w1), wy0 = S(1) - wy1;
                const S wx1 = static_cast<S>(tx.w1), wx0 = S(1) - wx1;
                op[static_cast<std::size_t>(y) * out_w + x] =
                    wy0 * (wx0 * ip[static_cast<std::size_t>(ty.i0) * w + tx.i0] +
                           wx1 * ip[static_cast<std::size_t>(ty.i0) * w + tx.i1]) +
                    wy1 * (wx0 * ip[static_cast<std::size_t>(ty.i1) * w + tx.i0] +
                           wx1 * ip[static_cast<std::size_t>(ty.i1) * w + tx.i1]);
            }
    }
    if (n->requires_grad)
        n->backward = [c, h, w, out_h, out_w, ys, xs, in_plane, out_plane](detail::Node<S>& self) {
            auto& A = *self.inputs[0];
            if (!A.requires_grad) return;
            for (int ic = 0; ic < c; ++ic) {
                S* gp = A.grad.data() + ic * in_plane;
                const S* go = self.grad.data() + ic * out_plane;
                for (int y = 0; y < out_h; ++y)
                    for (int x = 0; x < out_w; ++x) {
                        const auto& ty = ys[y];
                        const auto& tx = xs[x];
                        const S g = go[static_cast<std::size_t>(y) * out_w + x];
                        const S wy1 = static_cast<S>(ty.w1), wy0 = S(1) - wy1;
                        const S wx1 = static_cast<S>(tx.w1), wx0 = S(1) - wx1;
                        gp[static_cast<std::size_t>(ty.i0) * w + tx.i0] += g * wy0 * wx0;
                        gp[static_cast<std::size_t>(ty.i0) * w + tx.i1] += g * wy0 * wx1;
                        gp[static_cast<std::size_t>(ty.i1) * w + tx.i0] += g * wy1 * wx0;
                        gp[static_cast<std::size_t>(ty.i1) * w + tx.i1] += g * wy1 * wx1;
                    }
            }
        };
    return Tensor<S>(std::move(n));
}

// ---------------------------------------------------------------------------
// image <-> tensor

template <typename S>
Tensor<S> tensor_from_image(const Image& img) {
    std::vector<S> data(img.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<S>(img.data[i]);
    return Tensor<S>::from_data({img.channels, img.height, img.width}, std::move(data));
}

template <typename S>
Image image_from_tensor(const Tensor<S>& t) {
    detail::require_chw(t, "image_from_tensor");
    Image img(t.shape()[1], t.shape()[2], t.shape()[0]);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = static_cast<float>(std::clamp(t.data()[i], S(0), S(1)));
    return img;
}

} // namespace klce
