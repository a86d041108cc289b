#include "helidiff/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "helidiff/errors.hpp"

namespace helidiff {
namespace {

static_assert(std::endian::native == std::endian::little, "grid files are written in native little-endian order");

constexpr const char* kSliceTag = "# helidiff slice";

fs::path sidecar_of(const fs::path& bin) {
  fs::path p = bin;
  return p.replace_extension(".json");
}

DensityGrid load_binary(const fs::path& bin) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text(sidecar_of(bin)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad grid sidecar for '" + bin.string() + "': " + e.what());
  }
  DensityGrid f;
  try {
    const auto shape = meta.at("shape").get<std::array<int, 3>>();
    const auto center = meta.at("box").at("center").get<std::array<double, 3>>();
    f = DensityGrid(shape, meta.at("box").at("side").get<double>(), Vec3{center[0], center[1], center[2]});
    f.time = meta.value("time", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad grid sidecar for '" + bin.string() + "': " + e.what());
  }
  const std::string bytes = read_text(bin);
  if (bytes.size() != f.size() * sizeof(double)) {
    throw ConfigError(fmt::format("'{}' holds {} bytes, the sidecar shape needs {}", bin.string(), bytes.size(),
                                  f.size() * sizeof(double)));
  }
  std::memcpy(f.values.data(), bytes.data(), bytes.size());
  return f;
}

DensityGrid load_slice(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw ConfigError("cannot read '" + csv.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind(kSliceTag, 0) != 0) throw ConfigError("'" + csv.string() + "' is not a slice file");
  int nx = 0, ny = 0;
  double side = 0, cx = 0, cy = 0, cz = 0, z = 0, t = 0;
  if (std::sscanf(line.c_str() + std::strlen(kSliceTag), " nx=%d ny=%d side=%lf center=%lf,%lf,%lf z=%lf time=%lf", &nx,
                  &ny, &side, &cx, &cy, &cz, &z, &t) != 8 ||
      nx < 1 || ny < 1 || !(side > 0)) {
    throw ConfigError("bad slice header in '" + csv.string() + "'");
  }
  DensityGrid f({nx, ny, 1}, side, Vec3{cx, cy, cz});
  f.time = t;
  std::getline(in, line);  // column names
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double x = 0, y = 0, v = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &v) != 3 || rows >= f.size()) {
      throw ConfigError("bad slice row in '" + csv.string() + "'");
    }
    f.values[rows++] = v;
  }
  if (rows != f.size()) throw ConfigError("slice '" + csv.string() + "' is truncated");
  return f;
}

}  // namespace

void write_grid(const DensityGrid& f, const fs::path& bin) {
  std::string bytes(f.size() * sizeof(double), '\0');
  std::memcpy(bytes.data(), f.values.data(), bytes.size());
  write_text(bin, bytes);
  const nlohmann::json meta{{"shape", f.shape},
                            {"box", {{"center", {f.center[0], f.center[1], f.center[2]}}, {"side", f.side}}},
                            {"time", f.time},
                            {"dtype", "float64-le"},
                            {"order", "row-major, x slowest"}};
  write_text(sidecar_of(bin), meta.dump(2) + "\n");
}

void write_slice_csv(const DensityGrid& f, int k, const fs::path& csv) {
  require(k >= 0 && k < f.shape[2], "write_slice_csv: layer out of range");
  std::string out = fmt::format("{} nx={} ny={} side={:.17g} center={:.17g},{:.17g},{:.17g} z={:.17g} time={:.17g}\n",
                                kSliceTag, f.shape[0], f.shape[1], f.side, f.center[0], f.center[1], f.center[2],
                                f.cell_center(0, 0, k)[2], f.time);
  out += "x,y,f\n";
  for (int i = 0; i < f.shape[0]; ++i) {
    for (int j = 0; j < f.shape[1]; ++j) {
      const Vec3 c = f.cell_center(i, j, k);
      out += fmt::format("{:.17g},{:.17g},{:.17g}\n", c[0], c[1], f.values[f.index(i, j, k)]);
    }
  }
  write_text(csv, out);
}

DensityGrid load_density(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return load_slice(path);
  if (ext == ".json") {
    fs::path bin = path;
    return load_binary(bin.replace_extension(".bin"));
  }
  return load_binary(path);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

}  // namespace helidiff
