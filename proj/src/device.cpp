#include "mapfuse/device.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace mapfuse::vm {

int DeviceConfig::occupancy(int shared_bytes, int threads) const {
  int occ = max_blocks_per_sm;
  if (shared_bytes > 0) occ = std::min(occ, shared_bytes_per_block / shared_bytes);
  if (threads > 0) occ = std::min(occ, max_threads_per_block / threads);
  return std::max(occ, 0);
}

double DeviceConfig::latency_factor(int occ) const {
  if (occ <= 0) return 0.0;
  return std::min(1.0, static_cast<double>(occ) / latency_hiding_divisor);
}

void DeviceConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw std::runtime_error(std::string("device config: ") + name + " must be positive");
  };
  positive(warp_size, "warp_size");
  positive(max_threads_per_block, "max_threads_per_block");
  positive(shared_bytes_per_block, "shared_bytes_per_block");
  positive(sm_count, "sm_count");
  positive(max_blocks_per_sm, "max_blocks_per_sm");
  positive(cycles_per_global_word, "cycles_per_global_word");
  positive(cycles_per_shared_word, "cycles_per_shared_word");
  positive(cycles_per_arith_op, "cycles_per_arith_op");
  positive(cycles_per_barrier, "cycles_per_barrier");
  positive(cycles_per_atomic, "cycles_per_atomic");
  positive(latency_hiding_divisor, "latency_hiding_divisor");
  if (max_threads_per_block % warp_size != 0)
    throw std::runtime_error("device config: warp_size must divide max_threads_per_block");
}

DeviceConfig parse_device_config(const std::string& text) {
  DeviceConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto pos = line.find("//");
    if (pos != std::string::npos) line.erase(pos);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    int value;
    if (!(ls >> value))
      throw std::runtime_error("device config line " + std::to_string(lineno) + ": missing value");
    if (key == "warp_size") c.warp_size = value;
    else if (key == "max_threads_per_block") c.max_threads_per_block = value;
    else if (key == "shared_bytes_per_block") c.shared_bytes_per_block = value;
    else if (key == "sm_count") c.sm_count = value;
    else if (key == "max_blocks_per_sm") c.max_blocks_per_sm = value;
    else if (key == "cycles_per_global_word") c.cycles_per_global_word = value;
    else if (key == "cycles_per_shared_word") c.cycles_per_shared_word = value;
    else if (key == "cycles_per_arith_op") c.cycles_per_arith_op = value;
    else if (key == "cycles_per_barrier") c.cycles_per_barrier = value;
    else if (key == "cycles_per_atomic") c.cycles_per_atomic = value;
    else if (key == "latency_hiding_divisor") c.latency_hiding_divisor = value;
    else throw std::runtime_error("device config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

std::string print_device_config(const DeviceConfig& c) {
  std::ostringstream out;
  out << "warp_size " << c.warp_size << "\n"
      << "max_threads_per_block " << c.max_threads_per_block << "\n"
      << "shared_bytes_per_block " << c.shared_bytes_per_block << "\n"
      << "sm_count " << c.sm_count << "\n"
      << "max_blocks_per_sm " << c.max_blocks_per_sm << "\n"
      << "cycles_per_global_word " << c.cycles_per_global_word << "\n"
      << "cycles_per_shared_word " << c.cycles_per_shared_word << "\n"
      << "cycles_per_arith_op " << c.cycles_per_arith_op << "\n"
      << "cycles_per_barrier " << c.cycles_per_barrier << "\n"
      << "cycles_per_atomic " << c.cycles_per_atomic << "\n"
      << "latency_hiding_divisor " << c.latency_hiding_divisor << "\n";
  return out.str();
}

uint64_t device_config_hash(const DeviceConfig& c) {
  std::string s = print_device_config(c);
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace mapfuse::vm
