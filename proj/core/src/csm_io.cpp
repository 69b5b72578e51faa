#include "bclean/csm_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "bclean/errors.hpp"

namespace bclean {
namespace {

constexpr std::array<char, 8> kMagic = {'B', 'C', 'L', 'N', 'C', 'S', 'M', '\0'};
// Refuse absurd headers before allocating.
constexpr std::uint64_t kMaxMics = 1u << 16;
constexpr std::uint64_t kMaxBins = 1u << 24;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void vec3(const Vec3& v) {
    f64(v.x());
    f64(v.y());
    f64(v.z());
  }
  void raw(const char* data, std::size_t n) {
    out_.write(data, static_cast<std::streamsize>(n));
  }

 private:
  void le(std::uint64_t v, int bytes) {
    std::array<char, 8> buf{};
    for (int b = 0; b < bytes; ++b) {
      buf[static_cast<std::size_t>(b)] = static_cast<char>((v >> (8 * b)) & 0xFFu);
    }
    raw(buf.data(), static_cast<std::size_t>(bytes));
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  Vec3 vec3() {
    const double x = f64();
    const double y = f64();
    const double z = f64();
    return {x, y, z};
  }
  void raw(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw ConfigError("CSM file: unexpected end of data");
    }
  }

 private:
  std::uint64_t le(int bytes) {
    std::array<unsigned char, 8> buf{};
    raw(reinterpret_cast<char*>(buf.data()), static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int b = bytes - 1; b >= 0; --b) {
      v = (v << 8) | buf[static_cast<std::size_t>(b)];
    }
    return v;
  }
  std::istream& in_;
};

}  // namespace

void write_csm(std::ostream& out, const CsmFile& file) {
  const std::size_t m = file.array.size();
  if (file.csm.mics() != m || file.csm.bins() != file.freqs.size()) {
    throw DimensionError("write_csm: CSM set does not match array/frequencies");
  }
  Writer w(out);
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kCsmFormatVersion);
  w.u32(0);
  w.u64(m);
  w.u64(file.freqs.size());
  w.f64(file.freqs.bin_width());
  w.vec3(file.array.reference_point());
  for (const auto& p : file.array.positions()) w.vec3(p);
  for (double f : file.freqs.frequencies()) w.f64(f);
  for (std::size_t i = 0; i < file.csm.bins(); ++i) {
    const auto& c = file.csm[i];
    for (Eigen::Index r = 0; r < c.rows(); ++r) {
      for (Eigen::Index col = r; col < c.cols(); ++col) {
        w.f64(c(r, col).real());
        w.f64(c(r, col).imag());
      }
    }
  }
  if (!out) throw ConfigError("write_csm: write failed");
}

void write_csm(const std::filesystem::path& path, const CsmFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  write_csm(out, file);
}

CsmFile read_csm(std::istream& in) {
  Reader r(in);
  std::array<char, 8> magic{};
  r.raw(magic.data(), magic.size());
  if (magic != kMagic) throw ConfigError("CSM file: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCsmFormatVersion) {
    throw ConfigError("CSM file: unsupported version " + std::to_string(version));
  }
  (void)r.u32();
  const std::uint64_t m = r.u64();
  const std::uint64_t bins = r.u64();
  if (m == 0 || m > kMaxMics || bins == 0 || bins > kMaxBins) {
    throw ConfigError("CSM file: implausible header (M=" + std::to_string(m) +
                      ", bins=" + std::to_string(bins) + ")");
  }
  const double width = r.f64();
  const Vec3 reference = r.vec3();
  std::vector<Vec3> mics(m);
  for (auto& p : mics) p = r.vec3();
  std::vector<double> freqs(bins);
  for (auto& f : freqs) f = r.f64();

  const auto n = static_cast<Eigen::Index>(m);
  std::vector<Eigen::MatrixXcd> matrices(bins);
  for (auto& c : matrices) {
    c.resize(n, n);
    for (Eigen::Index row = 0; row < n; ++row) {
      for (Eigen::Index col = row; col < n; ++col) {
        const double re = r.f64();
        const double im = r.f64();
        c(row, col) = Complex(re, im);
        if (col != row) c(col, row) = Complex(re, -im);
      }
    }
  }
  return CsmFile{MicArray(std::move(mics), reference),
                 FrequencyGrid(std::move(freqs), width),
                 SpectralMatrixSet(std::move(matrices))};
}

CsmFile read_csm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open CSM file '" + path.string() + "'");
  return read_csm(in);
}

}  // namespace bclean
