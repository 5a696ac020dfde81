// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "klce/errors.hpp"
#include "klce/rng.hpp"

namespace klce {

// H x W x C raster with unit-interval samples. Storage is planar, row-major
// within a channel (all of channel 0, then channel 1, ...), which makes an
// Image bit-compatible with the C x H x W tensor convention used by the
// networks. All operations treat the layout as an implementation detail.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data; // size = channels * height * width

    Image() = default;

    Image(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c) {
        if (h < 1 || w < 1 || (c != 1 && c != 3))
            throw InvalidArgument("Image: bad dimensions " + std::to_string(h) + "x" +
                                  std::to_string(w) + "x" + std::to_string(c));
        data.assign(static_cast<std::size_t>(c) * h * w, fill);
    }

    float& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    std::size_t size() const { return data.size(); }
};

// round-half-away-from-zero quantizer to 8 bits
inline std::uint8_t quantize_u8(float v) {
    const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

namespace detail {

// Reads the next PPM header token, skipping whitespace and '#' comments.
inline std::string ppm_token(std::istream& in) {
    std::string tok;
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            // skip
        } else {
            break;
        }
        ch = in.get();
    }
    while (ch != EOF && !std::isspace(ch)) {
        tok.push_back(static_cast<char>(ch));
        ch = in.get();
    }
    return tok;
}

inline int ppm_int(std::istream& in, const char* what) {
    const std::string tok = ppm_token(in);
    if (tok.empty()) throw ParseError(std::string("ppm: missing ") + what);
    for (char c : tok)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw ParseError(std::string("ppm: bad ") + what + " '" + tok + "'");
    return std::stoi(tok);
}

} // namespace detail

// Binary P6 PPM reader, maxval 255 only. Pixel byte b maps to b/255.
inline Image load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '6')
        throw ParseError("ppm: bad magic in " + path);

    const int w = detail::ppm_int(in, "width");
    const int h = detail::ppm_int(in, "height");
    const int maxval = detail::ppm_int(in, "maxval");
    if (w < 1 || h < 1) throw ParseError("ppm: bad dimensions in " + path);
    if (maxval != 255)
        throw UnsupportedFormat("ppm: maxval " + std::to_string(maxval) + " unsupported (want 255)");
    // ppm_int consumed exactly one whitespace separator after maxval

    std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw ParseError("ppm: truncated pixel data in " + path);

    Image img(h, w, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) = static_cast<float>(raw[(static_cast<std::size_t>(y) * w + x) * 3 + c]) / 255.0f;
    return img;
}

// Binary P6 PPM writer. Samples quantize as round(clamp(v,0,1)*255),
// round-half-away-from-zero.
inline void save_ppm(const Image& img, const std::string& path) {
    if (img.channels != 3)
        throw ChannelMismatch("save_ppm: need 3 channels, got " + std::to_string(img.channels));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");

    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(img.width) * img.height * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                raw[(static_cast<std::size_t>(y) * img.width + x) * 3 + c] = quantize_u8(img.at(c, y, x));
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("write failed for " + path);
}

namespace detail {

// Half-pixel-center source coordinate for bilinear resampling, clamped to the
// valid range. Returns (i0, i1, weight of i1).
struct BilinearTap {
    int i0, i1;
    double w1;
};

inline BilinearTap bilinear_tap(int out_i, int out_n, int in_n) {
    double s = (out_i + 0.5) * static_cast<double>(in_n) / out_n - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in_n - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, in_n - 1);
    return {i0, i1, s - i0};
}

} // namespace detail

inline Image resize_bilinear(const Image& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw InvalidArgument("resize_bilinear: output dims must be >= 1");
    Image out(out_h, out_w, img.channels);
    std::vector<detail::BilinearTap> xs(out_w);
    for (int x = 0; x < out_w; ++x) xs[x] = detail::bilinear_tap(x, out_w, img.width);
    for (int y = 0; y < out_h; ++y) {
        const auto ty = detail::bilinear_tap(y, out_h, img.height);
        for (int c = 0; c < img.channels; ++c) {
            for (int x = 0; x < out_w; ++x) {
                const auto& tx = xs[x];
                const double v00 = img.at(c, ty.i0, tx.i0);
                const double v01 = img.at(c, ty.i0, tx.i1);
                const double v10 = img.at(c, ty.i1, tx.i0);
                const double v11 = img.at(c, ty.i1, tx.i1);
                const double top = v00 * (1.0 - tx.w1) + v01 * tx.w1;
                const double bot = v10 * (1.0 - tx.w1) + v11 * tx.w1;
                const double v = top * (1.0 - ty.w1) + bot * ty.w1;
                out.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

// Crop window shared by image and tensor paths: size round(fraction * extent)
// (half away from zero), centered with the smaller offset on ties.
struct CropWindow {
    int y0 = 0, x0 = 0, h = 0, w = 0;
};

inline CropWindow center_window(int height, int width, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw InvalidArgument("crop fraction must be in (0, 1]");
    const int ch = static_cast<int>(std::lround(fraction * height));
    const int cw = static_cast<int>(std::lround(fraction * width));
    if (ch < 1 || cw < 1) throw InvalidArgument("crop window would be empty");
    return {(height - ch) / 2, (width - cw) / 2, ch, cw};
}

inline CropWindow random_window(Rng& rng, int height, int width, double fraction) {
    CropWindow w = center_window(height, width, fraction);
    w.y0 = static_cast<int>(rng.index(static_cast<std::uint64_t>(height - w.h + 1)));
    w.x0 = static_cast<int>(rng.index(static_cast<std::uint64_t>(width - w.w + 1)));
    return w;
}

inline Image center_crop(const Image& img, double fraction) {
    const CropWindow w = center_window(img.height, img.width, fraction);
    Image out(w.h, w.w, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < w.h; ++y)
            for (int x = 0; x < w.w; ++x)
                out.at(c, y, x) = img.at(c, w.y0 + y, w.x0 + x);
    return out;
}

// Synthetic low-light degradation: out = clamp(img^gamma + N(0, sigma^2), 0, 1)
// per sample. Noise is drawn in planar raster order from the seeded Rng.
inline Image synth_darken(const Image& img, double gamma, double noise_sigma, std::uint64_t seed) {
    if (gamma < 1.0) throw InvalidArgument("synth_darken: gamma must be >= 1");
    if (noise_sigma < 0.0) throw InvalidArgument("synth_darken: sigma must be >= 0");
    Image out = img;
    Rng rng(seed);
    for (auto& v : out.data) {
        double d = (gamma == 1.0) ? static_cast<double>(v)
                                  : std::pow(static_cast<double>(v), gamma);
        if (noise_sigma > 0.0) d += noise_sigma * rng.gaussian();
        v = static_cast<float>(std::clamp(d, 0.0, 1.0));
    }
    return out;
}

inline Image replicate_to_rgb(const Image& gray) {
    if (gray.channels == 3) return gray;
    Image out(gray.height, gray.width, 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < gray.height; ++y)
            for (int x = 0; x < gray.width; ++x)
                out.at(c, y, x) = gray.at(0, y, x);
    return out;
}

} // namespace klce
