#include "sublab/field_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

#include "sublab/errors.hpp"

namespace sublab {

namespace {

constexpr char kMagic[8] = {'S', 'L', 'F', 'I', 'E', 'L', 'D', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::string& path) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("field", "truncated field file " + path);
  return v;
}

}  // namespace

void write_field(const std::string& path, const GridFunction& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("field", "cannot write " + path);
  const Grid& g = f.grid();
  const int n = g.dim();
  os.write(kMagic, sizeof kMagic);
  put(os, kVersion);
  put(os, static_cast<std::uint32_t>(n));
  for (int k = 0; k < n; ++k) put(os, static_cast<std::uint64_t>(g.count(k)));
  for (int k = 0; k < n; ++k) put(os, g.box().lo[k]);
  for (int k = 0; k < n; ++k) put(os, g.box().hi[k]);
  for (int k = 0; k < n; ++k) put(os, g.spacing(k));
  const bool explicit_mask = !f.has_default_mask();
  put(os, static_cast<std::uint8_t>(explicit_mask ? 1 : 0));
  os.write(reinterpret_cast<const char*>(f.values().data()),
           static_cast<std::streamsize>(f.size() * sizeof(double)));
  if (explicit_mask)
    os.write(reinterpret_cast<const char*>(f.mask().data()), static_cast<std::streamsize>(f.size()));
  if (!os) throw ConfigError("field", "write failed for " + path);
}

GridFunction read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("field", "cannot open " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw ConfigError("field", path + " is not a field file");
  if (get<std::uint32_t>(is, path) != kVersion)
    throw ConfigError("field", "unsupported field version in " + path);
  const auto n = get<std::uint32_t>(is, path);
  if (n < 1 || n > 8) throw ConfigError("field", "bad dimension in " + path);
  std::vector<int> counts(n);
  Eigen::VectorXd lo(n), hi(n);
  for (auto& c : counts) c = static_cast<int>(get<std::uint64_t>(is, path));
  for (std::uint32_t k = 0; k < n; ++k) lo[k] = get<double>(is, path);
  for (std::uint32_t k = 0; k < n; ++k) hi[k] = get<double>(is, path);
  for (std::uint32_t k = 0; k < n; ++k) get<double>(is, path);
  const auto encoding = get<std::uint8_t>(is, path);
  if (encoding > 1) throw ConfigError("field", "bad mask encoding in " + path);
  Grid g;
  try {
    g = Grid(Box(lo, hi), counts);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("field", std::string(e.what()) + " in " + path);
  }
  std::vector<double> values(g.size());
  is.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!is) throw ConfigError("field", "truncated values in " + path);
  GridFunction f(g, std::move(values));
  if (encoding == 1) {
    is.read(reinterpret_cast<char*>(f.mask().data()), static_cast<std::streamsize>(f.size()));
    if (!is) throw ConfigError("field", "truncated mask in " + path);
  }
  return f;
}

void write_field_csv(const std::string& path, const GridFunction& f) {
  std::ofstream os(path);
  if (!os) throw ConfigError("field", "cannot write " + path);
  const int n = f.grid().dim();
  for (int k = 0; k < n; ++k) os << "x" << k << ",";
  os << "value,interior\n";
  os << std::setprecision(17);
  Point p(n);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.grid().point(i, p.data());
    for (int k = 0; k < n; ++k) os << p[k] << ",";
    os << f[i] << "," << static_cast<int>(f.mask()[i]) << "\n";
  }
}

}  // namespace sublab
