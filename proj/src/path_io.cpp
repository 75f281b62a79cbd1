#include "occuriesz/path_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace occuriesz {

static_assert(std::endian::native == std::endian::little, "binary path format assumes little-endian");

namespace {

constexpr char kMagic[8] = {'O', 'C', 'R', 'Z', 'P', 'A', 'T', 'H'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParseError("truncated binary path file", 0);
  return v;
}

std::ofstream open_out(const std::filesystem::path& file, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(file, mode | std::ios::trunc);
  if (!os) throw Error("cannot open " + file.string() + " for writing");
  return os;
}

}  // namespace

PathHeader make_header(const ProcessSpec& spec, std::uint64_t seed) {
  PathHeader h;
  h.kind = spec.kind;
  h.hurst = spec.hurst;
  h.beta_stable = spec.beta_stable;
  h.dim = std::uint32_t(spec.sde ? spec.sde->x0.size() : spec.dim);
  h.n_steps = spec.n_steps;
  h.horizon = spec.horizon;
  h.seed = seed;
  return h;
}

void write_path_binary(const std::filesystem::path& file, const SamplePath& path, const PathHeader& header) {
  validate(path);
  auto os = open_out(file, std::ios::binary);
  os.write(kMagic, sizeof kMagic);
  put(os, header.schema_version);
  put(os, std::uint32_t(header.kind));
  put(os, header.hurst);
  put(os, header.beta_stable);
  put(os, std::uint32_t(path.dim()));
  put(os, header.n_steps);
  put(os, header.horizon);
  put(os, header.seed);
  put(os, std::uint64_t(path.size()));
  put(os, std::uint8_t(path.hurst_hint.has_value()));
  put(os, path.hurst_hint.value_or(0.0));
  os.write(reinterpret_cast<const char*>(path.times.data()), std::streamsize(sizeof(double) * path.size()));
  // positions are column-major, so each coordinate column is contiguous
  os.write(reinterpret_cast<const char*>(path.positions.data()),
           std::streamsize(sizeof(double) * path.positions.size()));
  if (!os) throw Error("write failed for " + file.string());
}

StoredPath read_path_binary(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw Error("cannot open " + file.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw ParseError("not a binary path file", 0);
  StoredPath out;
  PathHeader& h = out.header;
  h.schema_version = get<std::uint32_t>(is);
  if (h.schema_version != kPathSchemaVersion)
    throw ParseError("unsupported path schema version " + std::to_string(h.schema_version), 0);
  const auto kind = get<std::uint32_t>(is);
  if (kind > std::uint32_t(ProcessKind::YOUNG_SDE)) throw ParseError("bad process kind in path header", 0);
  h.kind = ProcessKind(kind);
  h.hurst = get<double>(is);
  h.beta_stable = get<double>(is);
  h.dim = get<std::uint32_t>(is);
  h.n_steps = get<std::uint64_t>(is);
  h.horizon = get<double>(is);
  h.seed = get<std::uint64_t>(is);
  const auto rows = get<std::uint64_t>(is);
  const bool has_hint = get<std::uint8_t>(is) != 0;
  const double hint = get<double>(is);
  if (h.dim == 0 || rows < 2 || rows > (std::uint64_t(1) << 34) / h.dim)
    throw ParseError("implausible path dimensions in header", 0);
  SamplePath& p = out.path;
  p.times.resize(Eigen::Index(rows));
  p.positions.resize(Eigen::Index(rows), Eigen::Index(h.dim));
  if (!is.read(reinterpret_cast<char*>(p.times.data()), std::streamsize(sizeof(double) * rows)) ||
      !is.read(reinterpret_cast<char*>(p.positions.data()), std::streamsize(sizeof(double) * rows * h.dim)))
    throw ParseError("truncated binary path file", 0);
  if (has_hint) p.hurst_hint = hint;
  validate(p);
  return out;
}

void write_path_csv(const std::filesystem::path& file, const SamplePath& path, const PathHeader& header) {
  validate(path);
  auto os = open_out(file);
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "# occuriesz-path schema=" << header.schema_version << " kind=" << to_string(header.kind)
     << " H=" << num(header.hurst) << " beta_stable=" << num(header.beta_stable) << " d=" << path.dim()
     << " n_steps=" << header.n_steps << " T=" << num(header.horizon) << " seed=" << header.seed;
  if (path.hurst_hint) os << " hurst_hint=" << num(*path.hurst_hint);
  os << "\nt";
  for (Eigen::Index j = 0; j < path.dim(); ++j) os << ",x" << j + 1;
  os << '\n';
  for (Eigen::Index i = 0; i < path.size(); ++i) {
    os << num(path.times(i));
    for (Eigen::Index j = 0; j < path.dim(); ++j) os << ',' << num(path.positions(i, j));
    os << '\n';
  }
  if (!os) throw Error("write failed for " + file.string());
}

StoredPath read_path_csv(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw Error("cannot open " + file.string());
  StoredPath out;
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line) || line.rfind("# occuriesz-path", 0) != 0)
    throw ParseError("missing path header comment", lineno);
  std::istringstream hs(line.substr(16));
  std::string field;
  std::optional<double> hint;
  while (hs >> field) {
    auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError("malformed header field '" + field + "'", lineno);
    const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
    try {
      if (key == "schema") out.header.schema_version = std::uint32_t(std::stoul(val));
      else if (key == "kind") out.header.kind = parse_process_kind(val);
      else if (key == "H") out.header.hurst = std::stod(val);
      else if (key == "beta_stable") out.header.beta_stable = std::stod(val);
      else if (key == "d") out.header.dim = std::uint32_t(std::stoul(val));
      else if (key == "n_steps") out.header.n_steps = std::stoull(val);
      else if (key == "T") out.header.horizon = std::stod(val);
      else if (key == "seed") out.header.seed = std::stoull(val);
      else if (key == "hurst_hint") hint = std::stod(val);
    } catch (const std::logic_error&) {
      throw ParseError("bad value for header field '" + key + "'", lineno);
    }
  }
  ++lineno;
  if (!std::getline(is, line)) throw ParseError("missing column line", lineno);
  const Eigen::Index d = out.header.dim;
  std::vector<double> values;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    Eigen::Index cols = 0;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') throw ParseError("non-numeric cell '" + cell + "'", lineno);
      values.push_back(v);
      ++cols;
    }
    if (cols != d + 1) throw ParseError("expected " + std::to_string(d + 1) + " columns", lineno);
  }
  const Eigen::Index rows = Eigen::Index(values.size()) / (d + 1);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(values.data(), rows, d + 1);
  out.path.times = m.col(0);
  out.path.positions = m.rightCols(d);
  out.path.hurst_hint = hint;
  validate(out.path);
  return out;
}

}  // namespace occuriesz
