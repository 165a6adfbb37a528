#pragma once

#include <cstdint>
#include <string>

namespace mapfuse::vm {

// Parameters of the virtual SIMT device and its cycle model.
struct DeviceConfig {
  int warp_size = 32;
  int max_threads_per_block = 1024;
  int shared_bytes_per_block = 48 * 1024;
  int sm_count = 16;
  int max_blocks_per_sm = 8;
  int cycles_per_global_word = 8;
  int cycles_per_shared_word = 1;
  int cycles_per_arith_op = 1;
  int cycles_per_barrier = 32;
  int cycles_per_atomic = 4;
  int latency_hiding_divisor = 4;

  bool operator==(const DeviceConfig&) const = default;

  // blocks per SM given a kernel's resource footprint
  int occupancy(int shared_bytes, int threads) const;
  double latency_factor(int occ) const;
  void validate() const;
};

DeviceConfig parse_device_config(const std::string& text);
std::string print_device_config(const DeviceConfig& c);
uint64_t device_config_hash(const DeviceConfig& c);

}  // namespace mapfuse::vm
