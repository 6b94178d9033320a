#include "binplan/raw_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace binplan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path sidecar(const fs::path& path) { return fs::path(path.string() + ".json"); }

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return r;
  }
  return v;
}

}  // namespace

TensorXd read_raw(const fs::path& path) {
  std::ifstream meta_in(sidecar(path));
  if (!meta_in) throw ContractViolation("missing sidecar '" + sidecar(path).string() + "'");
  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::exception& e) {
    throw ContractViolation("bad sidecar '" + sidecar(path).string() + "': " + e.what());
  }
  if (meta.value("dtype", "") != "f64le")
    throw ContractViolation("sidecar '" + sidecar(path).string() + "' must declare dtype f64le");
  if (!meta.contains("shape") || !meta["shape"].is_array())
    throw ContractViolation("sidecar '" + sidecar(path).string() + "' has no shape");
  Shape shape;
  for (const auto& d : meta["shape"]) {
    if (!d.is_number_integer()) throw ContractViolation("non-integer dimension in '" + sidecar(path).string() + "'");
    shape.push_back(d.get<Index>());
  }
  TensorXd tensor(shape);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("cannot open '" + path.string() + "'");
  const auto expected = static_cast<std::uintmax_t>(tensor.size()) * 8;
  if (fs::file_size(path) != expected)
    throw ContractViolation("'" + path.string() + "' holds " + std::to_string(fs::file_size(path)) +
                            " bytes, shape " + shape_string(shape) + " needs " + std::to_string(expected));
  for (Index i = 0; i < tensor.size(); ++i) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), 8);
    tensor.data()[i] = std::bit_cast<double>(to_little_endian(bits));
  }
  return tensor;
}

void write_raw(const fs::path& path, const TensorXd& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractViolation("cannot write '" + path.string() + "'");
  for (Index i = 0; i < tensor.size(); ++i) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(tensor.data()[i]));
    out.write(reinterpret_cast<const char*>(&bits), 8);
  }
  json meta = {{"dtype", "f64le"}, {"shape", tensor.shape()}};
  std::ofstream(sidecar(path)) << meta.dump() << '\n';
}

std::vector<TensorXd> read_weight_dir(const fs::path& dir, int layers) {
  std::vector<TensorXd> weights;
  for (int n = 1; n <= layers; ++n) weights.push_back(read_raw(dir / ("layer" + std::to_string(n) + ".raw")));
  return weights;
}

void write_weight_dir(const fs::path& dir, const std::vector<TensorXd>& weights) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < weights.size(); ++k)
    write_raw(dir / ("layer" + std::to_string(k + 1) + ".raw"), weights[k]);
}

}  // namespace binplan
