#include "knowsite/serialize.hpp"

#include <cstring>
#include <fstream>

namespace knowsite {

namespace {
constexpr char kMagic[8] = {'K', 'S', 'P', 'A', 'R', '0', '0', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& in, const std::string& what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ParseError("truncated parameter file at " + what);
  return v;
}
}  // namespace

void save_parameters(const std::filesystem::path& path,
                     const num::ParameterStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SourceError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<uint32_t>(out, static_cast<uint32_t>(store.size()));
  for (const auto& p : store.params()) {
    put<uint32_t>(out, static_cast<uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const auto& shape = p.tensor.shape();
    put<uint32_t>(out, static_cast<uint32_t>(shape.size()));
    for (int64_t d : shape) put<uint32_t>(out, static_cast<uint32_t>(d));
    const auto& data = p.tensor.value();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw SourceError("short write to " + path.string());
}

void load_parameters(const std::filesystem::path& path,
                     num::ParameterStore& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SourceError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path.string() + ": not a KSPAR001 file");
  }
  const auto count = get<uint32_t>(in, "count");
  for (uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<uint32_t>(in, "name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw ParseError(path.string() + ": truncated name");
    const auto rank = get<uint32_t>(in, name);
    num::Shape shape;
    int64_t numel = 1;
    for (uint32_t r = 0; r < rank; ++r) {
      shape.push_back(get<uint32_t>(in, name));
      numel *= shape.back();
    }
    std::vector<double> data(static_cast<size_t>(numel));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw ParseError(path.string() + ": truncated data for " + name);
    auto& param = store.at(name);
    if (param.tensor.shape() != shape) {
      throw DimensionError("parameter " + name +
                           " shape mismatch on load: file has " +
                           num::shape_str(shape));
    }
    param.tensor.leaf_value() = std::move(data);
  }
}

}  // namespace knowsite
