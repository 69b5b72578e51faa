#pragma once

#include <filesystem>
#include <iosfwd>

#include "bclean/types.hpp"

namespace bclean {

/// Contents of a CSM container: geometry and frequencies needed to steer
/// the matrices, plus the matrices themselves.
struct CsmFile {
  MicArray array;
  FrequencyGrid freqs;
  SpectralMatrixSet csm;
};

inline constexpr std::uint32_t kCsmFormatVersion = 1;

/// Little-endian binary layout (see docs/csm_format.md):
///   magic "BCLNCSM\0", u32 version, u32 reserved, u64 M, u64 bins,
///   f64 bin width, f64[3] reference point, f64[3 M] mic positions,
///   f64[bins] bin frequencies, then per bin the upper triangle including
///   the diagonal, row by row, as (f64 re, f64 im) pairs.
void write_csm(std::ostream& out, const CsmFile& file);
void write_csm(const std::filesystem::path& path, const CsmFile& file);

/// Throws ConfigError on malformed input. Lower triangles are rebuilt as
/// conjugates, so an exactly Hermitian set round-trips bitwise.
[[nodiscard]] CsmFile read_csm(std::istream& in);
[[nodiscard]] CsmFile read_csm(const std::filesystem::path& path);

}  // namespace bclean
