// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "klce/adam.hpp"
#include "klce/checkpoint.hpp"
#include "klce/dataset.hpp"
#include "klce/decomposition.hpp"
#include "klce/light_curve.hpp"
#include "klce/restoration.hpp"
#include "klce/retinex_fusion.hpp"

// Three-stage training: decomposition first, then restoration and
// illumination on top of a frozen decomposition checkpoint. Upstream maps for
// the later stages are precomputed once per dataset (the frozen net never
// changes), so a step costs only the stage's own forward/backward.
//
// Determinism: parameters come from Rng(seed); batch indices and training
// crop windows come from Rng(seed ^ kTrainStreamSalt), drawn in a fixed order
// (per step: batch indices, then one crop window per illumination sample).

namespace klce {

enum class Stage { Decom, Restore, Illum };

inline const char* stage_tag(Stage s) {
    switch (s) {
        case Stage::Decom: return "decom";
        case Stage::Restore: return "restore";
        case Stage::Illum: return "illum";
    }
    return "?";
}

inline Stage parse_stage(const std::string& s) {
    if (s == "decom") return Stage::Decom;
    if (s == "restore") return Stage::Restore;
    if (s == "illum") return Stage::Illum;
    throw InvalidArgument("unknown stage '" + s + "' (want decom|restore|illum)");
}

struct TrainConfig {
    Stage stage = Stage::Decom;
    int steps = 2000;
    double lr = 1e-3;
    int batch = 4;
    std::uint64_t seed = 0;
    double crop_fraction = 0.5;
    CurveMode curve_mode = CurveMode::Iterative;
    double beta = kDefaultBeta;      // gradient-loss weight, illumination stage
    double lambda_rc = 0.01;         // reflectance consistency, decomposition
    double lambda_is = 0.1;          // illumination smoothness TV, decomposition
    double lambda_tv_restore = 0.1;  // TV weight in the restoration loss
    double lambda_tv_illum = 1.0;    // TV weight in the illumination loss (0 = ablated)
    int precision = 32;              // 32 or 64
};

struct Upstream {
    std::optional<Checkpoint> decom;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<double> loss_curve; // batch-mean loss per step
};

inline constexpr std::uint64_t kTrainStreamSalt = 0x517cc1b727220a95ull;

namespace detail {

template <typename S>
DecomParams<S> frozen_decom(const Upstream& upstream) {
    if (!upstream.decom)
        throw DependencyError("this stage requires a decomposition checkpoint");
    DecomParams<S> p = DecomParams<S>::init(0);
    load_params<S>(*upstream.decom, "decom", p);
    return p.detached();
}

template <typename S>
TrainResult train_stage_impl(const TrainConfig& cfg, const PairDataset& dataset,
                             const Upstream& upstream) {
    const std::size_t npairs = dataset.size();
    Rng rng(cfg.seed ^ kTrainStreamSalt);
    TrainResult result;
    result.loss_curve.reserve(cfg.steps);
    AdamState<S> opt;

    // Per-pair tensors the stage consumes, precomputed where frozen.
    struct Sample {
        Tensor<S> in_low, in_normal;             // decom stage
        Tensor<S> illum_low, refl_low;           // restore + illum stages
        Tensor<S> refl_normal;                   // restore stage target
        Tensor<S> illum_normal;                  // illum stage input/target
    };
    std::vector<Sample> samples(npairs);

    if (cfg.stage == Stage::Decom) {
        for (std::size_t i = 0; i < npairs; ++i) {
            samples[i].in_low = tensor_from_image<S>(dataset.pairs[i].first);
            samples[i].in_normal = tensor_from_image<S>(dataset.pairs[i].second);
        }
    } else {
        const DecomParams<S> decom = frozen_decom<S>(upstream);
        for (std::size_t i = 0; i < npairs; ++i) {
            auto [il, rl] = decompose_t(decom, tensor_from_image<S>(dataset.pairs[i].first));
            auto [in_, rn] = decompose_t(decom, tensor_from_image<S>(dataset.pairs[i].second));
            samples[i].illum_low = il;
            samples[i].refl_low = rl;
            samples[i].refl_normal = rn;
            samples[i].illum_normal = in_;
        }
    }

    DecomParams<S> decom_params;
    RestoreParams<S> restore_params;
    LceParams<S> lce_params;
    std::vector<std::pair<std::string, Tensor<S>>> named;
    switch (cfg.stage) {
        case Stage::Decom:
            decom_params = DecomParams<S>::init(cfg.seed);
            named = decom_params.named();
            break;
        case Stage::Restore:
            restore_params = RestoreParams<S>::init(cfg.seed);
            named = restore_params.named();
            break;
        case Stage::Illum:
            lce_params = LceParams<S>::init(cfg.seed);
            named = lce_params.named();
            break;
    }

    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<std::size_t> batch(cfg.batch);
        for (auto& b : batch) b = rng.index(npairs);

        Tensor<S> loss;
        for (std::size_t idx : batch) {
            const Sample& s = samples[idx];
            Tensor<S> sample_loss;
            switch (cfg.stage) {
                case Stage::Decom: {
                    auto [il, rl] = decompose_t(decom_params, s.in_low);
                    auto [in_, rn] = decompose_t(decom_params, s.in_normal);
                    sample_loss = decom_loss_t(il, rl, in_, rn, s.in_low, s.in_normal,
                                               cfg.lambda_rc, cfg.lambda_is);
                    break;
                }
                case Stage::Restore: {
                    const Tensor<S> out = restore_t(restore_params, s.illum_low, s.refl_low);
                    sample_loss = restore_loss_t(out, s.refl_normal, cfg.lambda_tv_restore);
                    break;
                }
                case Stage::Illum: {
                    const int h = s.illum_low.shape()[1], w = s.illum_low.shape()[2];
                    FusionInputs<S> fi;
                    fi.illum_low = s.illum_low;
                    fi.illum_normal = s.illum_normal;
                    fi.refl_low = s.refl_low;
                    fi.window = random_window(rng, h, w, cfg.crop_fraction);
                    const FusedStack<S> stack = fuse(fi);
                    const Tensor<S> out =
                        enhance_illumination(stack.x_rf, lce_params, cfg.curve_mode);
                    sample_loss =
                        illum_total_loss_t(out, s.illum_normal, cfg.beta, cfg.lambda_tv_illum)
                            .first;
                    break;
                }
            }
            loss = loss.defined() ? add(loss, sample_loss) : sample_loss;
        }
        loss = scalar_mul(loss, S(1) / static_cast<S>(cfg.batch));

        for (auto& [name, p] : named) p.zero_grad();
        backward(loss);
        adam_step(named, opt, cfg.lr);
        result.loss_curve.push_back(static_cast<double>(loss.item()));
    }

    switch (cfg.stage) {
        case Stage::Decom:
            result.checkpoint = make_checkpoint<S>(stage_tag(cfg.stage), decom_params);
            break;
        case Stage::Restore:
            result.checkpoint = make_checkpoint<S>(stage_tag(cfg.stage), restore_params);
            break;
        case Stage::Illum:
            result.checkpoint = make_checkpoint<S>(stage_tag(cfg.stage), lce_params);
            break;
    }
    return result;
}

} // namespace detail

inline TrainResult train_stage(const TrainConfig& cfg, const PairDataset& dataset,
                               const Upstream& upstream = {}) {
    if (cfg.steps < 1) throw InvalidArgument("train: steps must be >= 1");
    if (!(cfg.lr > 0.0)) throw InvalidArgument("train: lr must be > 0");
    if (cfg.batch < 1) throw InvalidArgument("train: batch must be >= 1");
    if (dataset.empty()) throw InvalidArgument("train: dataset is empty");
    if (cfg.stage != Stage::Decom && !upstream.decom)
        throw DependencyError(std::string(stage_tag(cfg.stage)) +
                              " stage requires a decomposition checkpoint");
    if (cfg.precision == 32) return detail::train_stage_impl<float>(cfg, dataset, upstream);
    if (cfg.precision == 64) return detail::train_stage_impl<double>(cfg, dataset, upstream);
    throw InvalidArgument("train: precision must be 32 or 64");
}

// Loss-curve CSV ("step,loss" header then one row per step).
inline void write_loss_csv(const std::vector<double>& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "step,loss\n";
    for (std::size_t i = 0; i < curve.size(); ++i) out << i << "," << curve[i] << "\n";
    if (!out) throw IoError("write failed for " + path);
}

} // namespace klce
