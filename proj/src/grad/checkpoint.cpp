#include "vid2ode/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vid2ode/util.hpp"

namespace vid2ode::grad {

using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'V', 'I', 'D', '2', 'O', 'D', 'E', '1'};
}

void Checkpoint::put(const std::string& name, std::vector<std::size_t> shape,
                     std::vector<double> data) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  if (n != data.size()) throw Error("checkpoint: shape/data mismatch for " + name);
  arrays[name] = {std::move(shape), std::move(data)};
}

const std::vector<double>& Checkpoint::get(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw Error("checkpoint: missing array " + name);
  return it->second.second;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json header;
  header["arrays"] = json::object();
  std::size_t offset = 0;
  for (const auto& [name, sd] : ckpt.arrays) {
    header["arrays"][name] = {{"shape", sd.first}, {"offset", offset}};
    offset += sd.second.size();
  }
  std::string hs = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  std::uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, sd] : ckpt.arrays)
    out.write(reinterpret_cast<const char*>(sd.second.data()),
              static_cast<std::streamsize>(sd.second.size() * sizeof(double)));
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("bad checkpoint magic in " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  json header;
  try {
    header = json::parse(hs);
  } catch (const json::exception& e) {
    throw Error("corrupt checkpoint header in " + path + ": " + e.what());
  }
  // Arrays are stored in header-map order (sorted by name, same as written).
  Checkpoint ckpt;
  for (const auto& [name, meta] : header.at("arrays").items()) {
    std::vector<std::size_t> shape = meta.at("shape").get<std::vector<std::size_t>>();
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    std::vector<double> data(n);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw Error("truncated checkpoint: " + path);
    ckpt.arrays[name] = {std::move(shape), std::move(data)};
  }
  return ckpt;
}

}  // namespace vid2ode::grad
