#include "macf/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace macf {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw Error("checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

// Visits the half-spectrum in file order, passing the flat index.
template <typename Visit>
void for_each_half_spectrum(int dim, int n, Visit&& visit) {
  const Eigen::Index lead = detail::grid_volume(dim - 1, n);
  for (Eigen::Index outer = 0; outer < lead; ++outer) {
    for (int last = 0; last <= n / 2; ++last) visit(outer * n + last);
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const SpectralField& f) {
  out.write("MACF", 4);
  put_le<std::uint16_t>(out, kCheckpointVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(f.dim()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid_size()));
  for_each_half_spectrum(f.dim(), f.grid_size(), [&](Eigen::Index i) {
    put_le<double>(out, f.coeffs()[i].real());
    put_le<double>(out, f.coeffs()[i].imag());
  });
  if (!out) throw Error("checkpoint write failed");
}

SpectralField read_checkpoint(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "MACF", 4) != 0) throw Error("not a MACF checkpoint (bad magic)");
  const auto version = get_le<std::uint16_t>(in);
  if (version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  const int dim = get_le<std::uint8_t>(in);
  const auto n = get_le<std::uint32_t>(in);
  SpectralField f(dim, static_cast<int>(n));
  for_each_half_spectrum(dim, static_cast<int>(n), [&](Eigen::Index i) {
    const double re = get_le<double>(in);
    const double im = get_le<double>(in);
    f.coeffs()[i] = {re, im};
  });
  // Fill the other half by conjugate symmetry.
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (i % f.grid_size() > f.grid_size() / 2) {
      const Wavevector k = f.wavevector(i);
      f.coeffs()[i] = std::conj(f.coeff({-k[0], -k[1], -k[2]}));
    }
  }
  return f;
}

void save_checkpoint(const std::filesystem::path& path, const SpectralField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, f);
}

SpectralField load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace macf
