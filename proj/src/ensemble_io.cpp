#include "vfbl/ensemble_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>

#include "vfbl/errors.hpp"

namespace vfbl {
namespace {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

constexpr std::array<char, 4> kMagic{'V', 'F', 'B', 'L'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw IoError("truncated ensemble dump");
  return value;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = m;
  out.write(reinterpret_cast<const char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(double)));
}

Matrix get_matrix(std::istream& in, Eigen::Index r, Eigen::Index c) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(r, c);
  if (!in.read(reinterpret_cast<char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(double))))
    throw IoError("truncated ensemble dump");
  return rows;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

}  // namespace

void write_csv(const PathEnsemble& e, std::ostream& out) {
  out << "path_id,time,V,X\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int p = 0; p < e.n_paths(); ++p)
    for (Eigen::Index j = 0; j < e.V.cols(); ++j)
      out << p << ',' << e.grid[e.start + static_cast<int>(j)] << ',' << e.V(p, j) << ',' << e.X(p, j) << '\n';
  if (!out) throw IoError("failed writing CSV");
}

void write_csv(const PathEnsemble& e, const std::string& path) {
  std::ofstream out = open_out(path, std::ios::out);
  write_csv(e, out);
}

void write_binary(const PathEnsemble& e, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint16_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(e.grid.n_steps()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(e.start));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(e.n_paths()));
  put<std::uint64_t>(out, e.seed);
  put<double>(out, e.rho);
  for (double t : e.grid.nodes()) put<double>(out, t);
  put_matrix(out, e.V);
  put_matrix(out, e.X);
  put_matrix(out, e.dW);
  put_matrix(out, e.dB);
  if (!out) throw IoError("failed writing ensemble dump");
}

void write_binary(const PathEnsemble& e, const std::string& path) {
  std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
  write_binary(e, out);
}

PathEnsemble read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw IoError("not an ensemble dump (bad magic)");
  const auto version = get<std::uint16_t>(in);
  if (version != kVersion) throw IoError("unsupported dump version " + std::to_string(version));
  const auto n_steps = get<std::uint32_t>(in);
  const auto start = get<std::uint32_t>(in);
  const auto n_paths = get<std::uint64_t>(in);
  if (n_steps == 0 || start >= n_steps) throw IoError("inconsistent dump header");
  const auto seed = get<std::uint64_t>(in);
  const double rho = get<double>(in);
  std::vector<double> nodes(n_steps + 1);
  for (double& t : nodes) t = get<double>(in);
  const auto rows = static_cast<Eigen::Index>(n_paths);
  const auto m = static_cast<Eigen::Index>(n_steps - start);
  PathEnsemble e{TimeGrid(std::move(nodes)), static_cast<int>(start), {}, {}, {}, {}, seed, rho, {}, nullptr, 0.0};
  e.V = get_matrix(in, rows, m + 1);
  e.X = get_matrix(in, rows, m + 1);
  e.dW = get_matrix(in, rows, m);
  e.dB = get_matrix(in, rows, m);
  return e;
}

PathEnsemble read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_binary(in);
}

}  // namespace vfbl
