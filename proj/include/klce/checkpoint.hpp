// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "klce/errors.hpp"
#include "klce/tensor.hpp"

// Versioned binary checkpoint holding one pipeline stage's parameters.
//
// Layout (all integers unsigned 32-bit little-endian, floats IEEE-754
// little-endian binary32):
//
//   bytes 0..3   magic "KLCE"
//   u32          format version (currently 1)
//   u32 + bytes  stage tag ("decom" | "restore" | "illum")
//   u32          tensor count
//   per tensor, in ascending name order:
//     u32 + bytes  name
//     u32          rank
//     u32 * rank   extents
//     f32 * n      payload, n = product of extents
//
// Round-trips are bit-exact: load(save(c)) reproduces every payload byte.

namespace klce {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
    Shape shape;
    std::vector<float> data;
};

struct Checkpoint {
    std::string stage;
    std::map<std::string, CheckpointEntry> tensors; // sorted by name

    template <typename S>
    void add(const std::string& name, const Tensor<S>& t) {
        CheckpointEntry e;
        e.shape = t.shape();
        e.data.resize(t.numel());
        for (std::size_t i = 0; i < e.data.size(); ++i)
            e.data[i] = static_cast<float>(t.data()[i]);
        tensors.emplace(name, std::move(e));
    }

    const CheckpointEntry& at(const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw ParseError("checkpoint: missing tensor '" + name + "'");
        return it->second;
    }
};

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ParseError("checkpoint: truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

inline float read_f32(std::istream& in) {
    const std::uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline void write_str(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_str(std::istream& in) {
    const std::uint32_t len = read_u32(in);
    if (len > (1u << 20)) throw ParseError("checkpoint: implausible string length");
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw ParseError("checkpoint: truncated");
    return s;
}

} // namespace detail

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("KLCE", 4);
    detail::write_u32(out, kCheckpointVersion);
    detail::write_str(out, c.stage);
    detail::write_u32(out, static_cast<std::uint32_t>(c.tensors.size()));
    for (const auto& [name, entry] : c.tensors) { // std::map iterates in name order
        detail::write_str(out, name);
        detail::write_u32(out, static_cast<std::uint32_t>(entry.shape.size()));
        for (int e : entry.shape) detail::write_u32(out, static_cast<std::uint32_t>(e));
        for (float v : entry.data) detail::write_f32(out, v);
    }
    if (!out) throw IoError("write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "KLCE", 4) != 0)
        throw ParseError("checkpoint: bad magic in " + path);
    const std::uint32_t version = detail::read_u32(in);
    if (version != kCheckpointVersion)
        throw UnsupportedVersion("checkpoint: version " + std::to_string(version) +
                                 " (supported: " + std::to_string(kCheckpointVersion) + ")");
    Checkpoint c;
    c.stage = detail::read_str(in);
    const std::uint32_t count = detail::read_u32(in);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = detail::read_str(in);
        const std::uint32_t rank = detail::read_u32(in);
        if (rank > 8) throw ParseError("checkpoint: implausible rank");
        CheckpointEntry e;
        std::size_t n = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            const std::uint32_t extent = detail::read_u32(in);
            e.shape.push_back(static_cast<int>(extent));
            n *= extent;
        }
        e.data.resize(n);
        for (std::size_t k = 0; k < n; ++k) e.data[k] = detail::read_f32(in);
        c.tensors.emplace(name, std::move(e));
    }
    return c;
}

// Fill a parameter set from checkpoint entries, validating stage and shapes.
template <typename S, typename Params>
void load_params(const Checkpoint& c, const std::string& expected_stage, Params& params) {
    if (c.stage != expected_stage)
        throw InvalidArgument("checkpoint stage '" + c.stage + "' where '" + expected_stage +
                              "' was expected");
    for (auto& [name, tensor] : params.named()) {
        const CheckpointEntry& e = c.at(name);
        if (e.shape != tensor.shape())
            throw ParseError("checkpoint: tensor '" + name + "' has shape " + shape_str(e.shape) +
                             ", want " + shape_str(tensor.shape()));
        for (std::size_t i = 0; i < e.data.size(); ++i)
            tensor.data()[i] = static_cast<S>(e.data[i]);
    }
}

template <typename S, typename Params>
Checkpoint make_checkpoint(const std::string& stage, const Params& params) {
    Checkpoint c;
    c.stage = stage;
    for (const auto& [name, tensor] : params.named()) c.add(name, tensor);
    return c;
}

} // namespace klce
