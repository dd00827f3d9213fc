#pragma once

#include <map>
#include <string>
#include <vector>

namespace vid2ode::grad {

// Engine-wide checkpoint: magic "VID2ODE1", a little-endian uint64 header
// length, a JSON header {"arrays": {name: {"shape": [...], "offset": N}}},
// then the concatenated little-endian doubles.
struct Checkpoint {
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<double>>>
      arrays;  // name -> (shape, data)

  void put(const std::string& name, std::vector<std::size_t> shape,
           std::vector<double> data);
  const std::vector<double>& get(const std::string& name) const;
  bool has(const std::string& name) const { return arrays.count(name) > 0; }
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace vid2ode::grad
