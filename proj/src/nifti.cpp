#include "labelflip/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace labelflip::io {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;

static_assert(std::endian::native == std::endian::little,
              "the NIfTI reader assumes a little-endian host");

template <typename T>
T byteswap(T v) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <typename T>
T load(const char* base, std::size_t offset, bool swap) {
  T v;
  std::memcpy(&v, base + offset, sizeof(T));
  return swap ? byteswap(v) : v;
}

template <typename T>
void store(char* base, std::size_t offset, T v) {
  std::memcpy(base + offset, &v, sizeof(T));
}

std::vector<char> slurp(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw Error("cannot open '" + path + "'");
  std::unique_ptr<gzFile_s, decltype(&gzclose)> guard(f, &gzclose);
  std::vector<char> out;
  std::array<char, 1 << 16> buf{};
  for (;;) {
    const int n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) throw Error("corrupt or truncated compressed data in '" + path + "'");
    if (n == 0) break;
    out.insert(out.end(), buf.begin(), buf.begin() + n);
  }
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::size_t bytes_per_voxel(NiftiType t) {
  switch (t) {
    case NiftiType::UInt8: return 1;
    case NiftiType::Int16: return 2;
    case NiftiType::Float32: return 4;
  }
  return 4;
}

double positive_or_one(float v) {
  const double a = std::fabs(static_cast<double>(v));
  return std::isfinite(a) && a > 0.0 ? a : 1.0;
}

/// Raw (unscaled) voxel values plus the parsed header.
struct RawImage {
  NiftiHeader header;
  std::vector<double> values;
};

RawImage read_raw(const std::string& path) {
  const std::vector<char> bytes = slurp(path);
  if (bytes.size() < kHeaderSize) throw Error("'" + path + "' is too short for a NIfTI-1 header");
  const char* h = bytes.data();

  bool swap = false;
  const auto sizeof_hdr = load<std::int32_t>(h, 0, false);
  if (sizeof_hdr != 348) {
    if (byteswap(sizeof_hdr) != 348) throw Error("'" + path + "' is not a NIfTI-1 file");
    swap = true;
  }
  if (std::memcmp(h + 344, "n+1", 4) != 0 && std::memcmp(h + 344, "ni1", 4) != 0)
    throw Error("'" + path + "' has an unrecognised NIfTI magic string");
  if (std::memcmp(h + 344, "ni1", 4) == 0)
    throw Error("'" + path + "': two-file (.hdr/.img) NIfTI is not supported");

  std::array<std::int16_t, 8> dim{};
  for (std::size_t i = 0; i < 8; ++i) dim[i] = load<std::int16_t>(h, 40 + 2 * i, swap);
  if (dim[0] < 3 || dim[0] > 7) throw Error("'" + path + "' has unsupported dim[0]=" + std::to_string(dim[0]));
  for (int i = 4; i <= dim[0]; ++i) {
    if (dim[static_cast<std::size_t>(i)] > 1)
      throw Error("'" + path + "' is not a single 3D volume");
  }
  if (dim[1] < 1 || dim[2] < 1 || dim[3] < 1) throw Error("'" + path + "' has a non-positive dimension");

  RawImage img;
  auto& hdr = img.header;
  hdr.dims = {static_cast<std::size_t>(dim[1]), static_cast<std::size_t>(dim[2]),
              static_cast<std::size_t>(dim[3])};
  const auto code = load<std::int16_t>(h, 70, swap);
  if (code != 2 && code != 4 && code != 16)
    throw Error("'" + path + "' has unsupported datatype code " + std::to_string(code) +
                " (supported: uint8, int16, float32)");
  hdr.datatype = static_cast<NiftiType>(code);
  hdr.spacing = {positive_or_one(load<float>(h, 80, swap)), positive_or_one(load<float>(h, 84, swap)),
                 positive_or_one(load<float>(h, 88, swap))};
  hdr.vox_offset = load<float>(h, 108, swap);
  hdr.scl_slope = load<float>(h, 112, swap);
  hdr.scl_inter = load<float>(h, 116, swap);
  if (!swap) {
    std::array<char, kHeaderSize> raw{};
    std::memcpy(raw.data(), h, kHeaderSize);
    hdr.raw = raw;
  }

  const auto offset = static_cast<std::size_t>(hdr.vox_offset < 352.0F ? 352.0F : hdr.vox_offset);
  const std::size_t n = hdr.dims.voxels();
  const std::size_t bpv = bytes_per_voxel(hdr.datatype);
  if (bytes.size() < offset + n * bpv) throw Error("'" + path + "' is truncated: voxel data missing");

  img.values.resize(n);
  const char* data = h + offset;
  for (std::size_t i = 0; i < n; ++i) {
    switch (hdr.datatype) {
      case NiftiType::UInt8:
        img.values[i] = static_cast<unsigned char>(data[i]);
        break;
      case NiftiType::Int16:
        img.values[i] = load<std::int16_t>(data, 2 * i, swap);
        break;
      case NiftiType::Float32:
        img.values[i] = load<float>(data, 4 * i, swap);
        break;
    }
  }
  return img;
}

bool has_scaling(const NiftiHeader& h) {
  return h.scl_slope != 0.0F && std::isfinite(h.scl_slope) && std::isfinite(h.scl_inter);
}

std::array<char, kHeaderSize> build_header(const Dims& d, const Spacing& s, NiftiType type,
                                           const NiftiHeader* tmpl) {
  if (d.nx > 32767 || d.ny > 32767 || d.nz > 32767)
    throw Error("volume " + to_string(d) + " exceeds the NIfTI-1 dimension limit");
  if (tmpl != nullptr && tmpl->raw && tmpl->dims != d)
    throw Error("header template dims " + to_string(tmpl->dims) + " do not match volume " + to_string(d));
  std::array<char, kHeaderSize> h{};
  if (tmpl != nullptr && tmpl->raw) h = *tmpl->raw;
  char* p = h.data();
  store<std::int32_t>(p, 0, 348);
  std::array<std::int16_t, 8> dim = {3, static_cast<std::int16_t>(d.nx), static_cast<std::int16_t>(d.ny),
                                     static_cast<std::int16_t>(d.nz), 1, 1, 1, 1};
  for (std::size_t i = 0; i < 8; ++i) store<std::int16_t>(p, 40 + 2 * i, dim[i]);
  store<std::int16_t>(p, 70, static_cast<std::int16_t>(type));
  store<std::int16_t>(p, 72, static_cast<std::int16_t>(8 * bytes_per_voxel(type)));
  if (tmpl == nullptr || !tmpl->raw) store<float>(p, 76, 1.0F);  // qfac
  store<float>(p, 80, static_cast<float>(s.sx));
  store<float>(p, 84, static_cast<float>(s.sy));
  store<float>(p, 88, static_cast<float>(s.sz));
  store<float>(p, 108, static_cast<float>(kDataOffset));
  store<float>(p, 112, 1.0F);
  store<float>(p, 116, 0.0F);
  // cal_max / cal_min and glmax / glmin would describe the template's data.
  store<float>(p, 124, 0.0F);
  store<float>(p, 128, 0.0F);
  std::memcpy(p + 344, "n+1", 4);
  return h;
}

void write_bytes(const std::string& path, const std::array<char, kHeaderSize>& header,
                 const std::vector<char>& data) {
  std::vector<char> all(header.begin(), header.end());
  all.resize(kDataOffset, 0);  // 4-byte extension flag, all zero
  all.insert(all.end(), data.begin(), data.end());

  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb6");
    if (f == nullptr) throw Error("cannot write '" + path + "'");
    const int n = gzwrite(f, all.data(), static_cast<unsigned>(all.size()));
    const int rc = gzclose(f);
    if (n != static_cast<int>(all.size()) || rc != Z_OK) throw Error("failed writing '" + path + "'");
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write '" + path + "'");
  os.write(all.data(), static_cast<std::streamsize>(all.size()));
  if (!os) throw Error("failed writing '" + path + "'");
}

}  // namespace

NiftiImage read_nifti(const std::string& path) {
  RawImage raw = read_raw(path);
  if (has_scaling(raw.header)) {
    const double slope = raw.header.scl_slope;
    const double inter = raw.header.scl_inter;
    for (auto& v : raw.values) v = v * slope + inter;
  }
  for (const double v : raw.values) {
    if (!std::isfinite(v)) throw Error("'" + path + "' contains non-finite voxel values");
  }
  return {Volume3D(raw.header.dims, std::move(raw.values), raw.header.spacing), raw.header};
}

Mask3D read_label_map(const std::string& path, const std::set<int>& labels, NiftiHeader* header) {
  NiftiImage img = read_nifti(path);
  Mask3D out(img.header.dims, std::uint8_t{0}, img.header.spacing);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = img.volume[i];
    if (v != std::round(v)) throw Error("'" + path + "' holds non-integer values; expected a label map");
    const int label = static_cast<int>(v);
    if (labels.count(label) == 0)
      throw Error("'" + path + "' contains label " + std::to_string(label) + " outside the allowed set");
    out[i] = static_cast<std::uint8_t>(label);
  }
  if (header) *header = img.header;
  return out;
}

Mask3D read_mask(const std::string& path, NiftiHeader* header) {
  NiftiImage img = read_nifti(path);
  Mask3D out(img.header.dims, std::uint8_t{0}, img.header.spacing);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = img.volume[i];
    if (v != std::round(v)) throw Error("'" + path + "' holds non-integer values; expected a mask");
    out[i] = v != 0.0 ? 1 : 0;
  }
  if (header) *header = img.header;
  return out;
}

void write_nifti(const Volume3D& v, const std::string& path, NiftiType type,
                 const NiftiHeader* header_template) {
  const auto header = build_header(v.dims(), v.spacing(), type, header_template);
  std::vector<char> data(v.size() * bytes_per_voxel(type));
  for (std::size_t i = 0; i < v.size(); ++i) {
    switch (type) {
      case NiftiType::UInt8: {
        const double c = std::clamp(std::round(v[i]), 0.0, 255.0);
        data[i] = static_cast<char>(static_cast<std::uint8_t>(c));
        break;
      }
      case NiftiType::Int16: {
        const double c = std::clamp(std::round(v[i]), -32768.0, 32767.0);
        store<std::int16_t>(data.data(), 2 * i, static_cast<std::int16_t>(c));
        break;
      }
      case NiftiType::Float32:
        store<float>(data.data(), 4 * i, static_cast<float>(v[i]));
        break;
    }
  }
  write_bytes(path, header, data);
}

void write_nifti(const Mask3D& m, const std::string& path, const NiftiHeader* header_template) {
  const auto header = build_header(m.dims(), m.spacing(), NiftiType::UInt8, header_template);
  std::vector<char> data(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) data[i] = static_cast<char>(m[i]);
  write_bytes(path, header, data);
}

}  // namespace labelflip::io
