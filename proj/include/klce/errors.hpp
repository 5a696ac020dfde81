// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

namespace klce {

// Root of the library's error taxonomy. CLI code maps these onto exit codes;
// everything else just throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error { using Error::Error; };          // malformed input bytes
struct UnsupportedFormat : Error { using Error::Error; };   // recognized but unsupported variant
struct UnsupportedVersion : Error { using Error::Error; };  // checkpoint from a different format version
struct IoError : Error { using Error::Error; };
struct ChannelMismatch : Error { using Error::Error; };
struct InvalidArgument : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct DependencyError : Error { using Error::Error; };     // missing upstream checkpoint

} // namespace klce
