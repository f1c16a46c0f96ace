#include "bohmflow/field_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "bohmflow/errors.hpp"

namespace bohmflow {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorKind::Io, "truncated snapshot");
  return to_little(v);
}

void put_axis(std::ostream& out, const Axis& a) {
  put<double>(out, a.min);
  put<double>(out, a.max);
  put<std::uint64_t>(out, a.n);
}

Axis get_axis(std::istream& in) {
  Axis a;
  a.min = get<double>(in);
  a.max = get<double>(in);
  a.n = static_cast<std::size_t>(get<std::uint64_t>(in));
  return a;
}

}  // namespace

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_snapshot(std::ostream& out, const WaveField& field) {
  out.write(kSnapshotMagic, 4);
  put<std::uint32_t>(out, kSnapshotVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(field.mode()));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(field.grid().rank()));
  put<std::uint16_t>(out, 0);
  put_axis(out, field.grid().x());
  if (field.grid().rank() == 2) put_axis(out, field.grid().y());
  put<double>(out, field.param());
  put<double>(out, field.units().hbar);
  put<double>(out, field.units().mass);
  for (const auto& z : field.values()) {
    put<double>(out, z.real());
    put<double>(out, z.imag());
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing snapshot");
}

WaveField read_snapshot(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kSnapshotMagic, 4) != 0) throw Error(ErrorKind::Io, "not a snapshot file");
  const auto version = get<std::uint32_t>(in);
  if (version != kSnapshotVersion) throw Error(ErrorKind::Io, "unsupported snapshot version");
  const auto mode = get<std::uint8_t>(in);
  const auto rank = get<std::uint8_t>(in);
  (void)get<std::uint16_t>(in);
  if (mode > 1 || rank < 1 || rank > 2) throw Error(ErrorKind::Io, "corrupt snapshot header");
  const Axis x = get_axis(in);
  const Grid grid = rank == 2 ? Grid::plane(x, get_axis(in)) : Grid::line(x);
  const double param = get<double>(in);
  Units units;
  units.hbar = get<double>(in);
  units.mass = get<double>(in);
  std::vector<cplx> values(grid.size());
  for (auto& z : values) {
    const double re = get<double>(in);
    const double im = get<double>(in);
    z = {re, im};
  }
  return WaveField(grid, std::move(values), param, static_cast<Mode>(mode), units);
}

void save_snapshot(const std::filesystem::path& path, const WaveField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string());
  write_snapshot(out, field);
}

WaveField load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return read_snapshot(in);
}

void write_field_csv(std::ostream& out, const WaveField& field) {
  const Grid& g = field.grid();
  const auto v = field.values();
  const std::size_t nx = g.x().n;
  out << (g.rank() == 2 ? "x,y,re,im\n" : "x,re,im\n");
  for (std::size_t i = 0; i < v.size(); ++i) {
    out << format_double(g.x().coord(i % nx)) << ',';
    if (g.rank() == 2) out << format_double(g.y().coord(i / nx)) << ',';
    out << format_double(v[i].real()) << ',' << format_double(v[i].imag()) << '\n';
  }
}

WaveField read_field_csv(std::istream& in, Mode mode, Units units) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, "empty field CSV");
  if (line.rfind("x,re,im", 0) != 0) throw Error(ErrorKind::Io, "expected header x,re,im");
  std::vector<double> xs;
  std::vector<cplx> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double x, re, im;
    char c1, c2;
    if (!(row >> x >> c1 >> re >> c2 >> im) || c1 != ',' || c2 != ',') {
      throw Error(ErrorKind::Io, "malformed field CSV row: " + line);
    }
    xs.push_back(x);
    values.emplace_back(re, im);
  }
  if (xs.size() < 8) throw Error(ErrorKind::Io, "field CSV has too few rows");
  const Grid grid = Grid::line(xs.front(), xs.back(), xs.size());
  const double dx = grid.x().spacing();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (std::abs(xs[i] - grid.x().coord(i)) > 1e-9 * std::max(1.0, std::abs(xs[i])) + 1e-6 * dx) {
      throw Error(ErrorKind::Io, "field CSV x column is not uniform");
    }
  }
  return WaveField(grid, std::move(values), 0.0, mode, units);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

}  // namespace bohmflow
