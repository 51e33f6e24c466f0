#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include "labelflip/volume.hpp"

namespace labelflip::io {

enum class NiftiType : std::int16_t { UInt8 = 2, Int16 = 4, Float32 = 16 };

/// Parsed view of a NIfTI-1 header. The raw 348 bytes are kept so that
/// orientation and other fields pass through untouched on write.
struct NiftiHeader {
  Dims dims;
  Spacing spacing;
  NiftiType datatype = NiftiType::Float32;
  float scl_slope = 0.0F;
  float scl_inter = 0.0F;
  float vox_offset = 352.0F;
  /// Little-endian header bytes; absent for images built in memory.
  std::optional<std::array<char, 348>> raw;
};

struct NiftiImage {
  Volume3D volume;
  NiftiHeader header;
};

/// Reads .nii or .nii.gz (detected from content, not the extension).
/// Applies scl_slope / scl_inter when the slope is nonzero.
NiftiImage read_nifti(const std::string& path);

/// Reads an integer-valued image whose values must all be in `labels`.
Mask3D read_label_map(const std::string& path, const std::set<int>& labels, NiftiHeader* header = nullptr);

/// Reads a binary mask: any nonzero integer value is foreground.
Mask3D read_mask(const std::string& path, NiftiHeader* header = nullptr);

/// Writes a volume; gzip-compressed when the path ends in ".gz". The template
/// header, when given, supplies every field this writer does not set itself.
void write_nifti(const Volume3D& v, const std::string& path, NiftiType type = NiftiType::Float32,
                 const NiftiHeader* header_template = nullptr);

/// Label maps and masks are written as uint8.
void write_nifti(const Mask3D& m, const std::string& path, const NiftiHeader* header_template = nullptr);

}  // namespace labelflip::io
