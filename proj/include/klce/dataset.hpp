// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "klce/image.hpp"

namespace klce {

// Paired low/normal training data. Synthetic pairs are procedural; directory
// pairs come from <dir>/low and <dir>/normal with matching filenames.
struct PairDataset {
    enum class Provenance { Synthetic, Directory };

    std::vector<std::pair<Image, Image>> pairs; // (low, normal), equal dims per pair
    Provenance provenance = Provenance::Synthetic;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
};

namespace detail {

// Procedural normal-light image: an oriented luminance ramp, a few rectangles,
// and band-limited sinusoids, per-channel tinted, then affinely rescaled so
// samples span [0.05, 0.95].
inline Image synth_normal_image(int size, Rng& rng) {
    Image img(size, size, 3);
    const double gx = rng.uniform(-1.0, 1.0);
    const double gy = rng.uniform(-1.0, 1.0);

    struct Rect {
        int y0, x0, y1, x1;
        double delta;
    };
    std::vector<Rect> rects;
    const int nrects = 2 + static_cast<int>(rng.index(3));
    for (int r = 0; r < nrects; ++r) {
        const int y0 = static_cast<int>(rng.index(size));
        const int x0 = static_cast<int>(rng.index(size));
        const int rh = 2 + static_cast<int>(rng.index(std::max(size / 2, 1)));
        const int rw = 2 + static_cast<int>(rng.index(std::max(size / 2, 1)));
        rects.push_back({y0, x0, std::min(y0 + rh, size), std::min(x0 + rw, size),
                         rng.uniform(-0.4, 0.4)});
    }

    struct Wave {
        double fx, fy, phase, amp;
    };
    std::vector<Wave> waves(3);
    for (auto& wv : waves)
        wv = {rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0), rng.uniform(0.0, 6.283185307179586),
              rng.uniform(0.05, 0.15)};

    double tint[3];
    for (auto& t : tint) t = rng.uniform(0.7, 1.0);

    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double u = static_cast<double>(x) / size;
                const double v = static_cast<double>(y) / size;
                double val = 0.5 + 0.5 * (gx * (u - 0.5) + gy * (v - 0.5));
                for (const auto& r : rects)
                    if (y >= r.y0 && y < r.y1 && x >= r.x0 && x < r.x1) val += r.delta;
                for (const auto& wv : waves)
                    val += wv.amp * std::sin(6.283185307179586 * (wv.fx * u + wv.fy * v) + wv.phase);
                img.at(c, y, x) = static_cast<float>(val * tint[c]);
            }

    float lo = img.data[0], hi = img.data[0];
    for (float s : img.data) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    const float span = std::max(hi - lo, 1e-6f);
    for (auto& s : img.data) s = 0.05f + 0.9f * (s - lo) / span;
    return img;
}

} // namespace detail

// n procedural pairs of the given size. low = darken(normal, gamma ~ U[2,5],
// sigma = 0.02), everything driven by the one seed.
inline PairDataset make_synthetic_pairs(int n, int size, std::uint64_t seed) {
    if (n < 0) throw InvalidArgument("make_synthetic_pairs: n must be >= 0");
    if (size < 16) throw InvalidArgument("make_synthetic_pairs: size must be >= 16");
    PairDataset ds;
    ds.provenance = PairDataset::Provenance::Synthetic;
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        Image normal = detail::synth_normal_image(size, rng);
        const double gamma = rng.uniform(2.0, 5.0);
        const std::uint64_t noise_seed = rng.raw();
        Image low = synth_darken(normal, gamma, 0.02, noise_seed);
        ds.pairs.emplace_back(std::move(low), std::move(normal));
    }
    return ds;
}

// Load (low, normal) pairs from <dir>/low/*.ppm and <dir>/normal/<same name>.
inline PairDataset load_pair_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path low_dir = fs::path(dir) / "low";
    const fs::path normal_dir = fs::path(dir) / "normal";
    if (!fs::is_directory(low_dir) || !fs::is_directory(normal_dir))
        throw InvalidArgument("pair directory needs low/ and normal/ subdirectories: " + dir);

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(low_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ppm")
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw InvalidArgument("no .ppm files in " + low_dir.string());

    PairDataset ds;
    ds.provenance = PairDataset::Provenance::Directory;
    for (const auto& name : names) {
        const fs::path normal_path = normal_dir / name;
        if (!fs::exists(normal_path))
            throw InvalidArgument("missing normal image for " + name);
        Image low = load_ppm((low_dir / name).string());
        Image normal = load_ppm(normal_path.string());
        if (low.height != normal.height || low.width != normal.width)
            throw InvalidArgument("pair dimensions differ for " + name);
        ds.pairs.emplace_back(std::move(low), std::move(normal));
    }
    return ds;
}

} // namespace klce
