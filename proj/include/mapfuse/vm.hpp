#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mapfuse/device.hpp"
#include "mapfuse/kernel.hpp"

// Deterministic SIMT interpreter. Blocks run in ascending block-id order;
// within a block, threads execute each routine-call segment in ascending flat
// id, which is observationally equivalent to warp-lockstep execution for
// race-free kernels and deterministic for all of them (atomics apply in that
// fixed order).

namespace mapfuse::vm {

struct VmFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalBuffer {
  int rows = 1, cols = 0;
  std::vector<float>* data = nullptr;
};

struct LaunchArgs {
  std::map<std::string, GlobalBuffer> buffers;
  std::map<std::string, float> scalars;
  bool trace = false;           // record on-chip and global accesses
  bool poison_onchip = true;    // NaN-poison uninitialized on-chip words
};

struct BufferTraffic {
  uint64_t loaded = 0, stored = 0;
};

struct ExecutionStats {
  uint64_t global_words_loaded = 0;
  uint64_t global_words_stored = 0;
  std::map<std::string, BufferTraffic> per_buffer;
  uint64_t shared_accesses = 0;
  uint64_t atomics = 0;
  uint64_t barriers = 0;        // per-block barrier events
  uint64_t arith_ops = 0;
  uint64_t block_cycles_sum = 0;  // raw per-block cycle maxima, summed
  uint64_t cycles = 0;            // occupancy-adjusted modeled kernel cycles
  int blocks = 0;
  int threads_per_block = 0;
  int shared_bytes = 0;           // high-water arena bytes per block
  int occupancy = 0;              // blocks per SM
  double latency_factor = 1.0;
};

enum class Space : uint8_t { Shared, Register, Global };

struct TraceRecord {
  int32_t block = 0;
  int32_t epoch = 0;
  Space space = Space::Shared;
  int32_t region = 0;   // shared-region / register-array index, unused for global
  int64_t addr = 0;     // absolute arena word, logical element word, or global word
  int32_t thread = 0;
  uint8_t kinds = 0;    // 1 read, 2 write, 4 atomic
};

struct Hazard {
  std::string key;      // arena region of the conflicting write
  int64_t word = 0;     // word index within the region
  int writer = 0;
  int other = 0;
  uint8_t writer_kinds = 0, other_kinds = 0;
  int block = 0;
  int epoch = 0;
};

struct RaceReport {
  std::vector<Hazard> hazards;
  bool clean() const { return hazards.empty(); }
};

struct LaunchResult {
  ExecutionStats stats;
  RaceReport races;
  std::vector<TraceRecord> trace;
};

// Executes the kernel over the full grid derived from the domain buffer.
// Buffers are updated in place. Reduce outputs must be zeroed by the caller
// (the pipeline runtime does this before each launch).
LaunchResult launch(const kernel::KernelIR& k, const DeviceConfig& dev, const LaunchArgs& args);

// Epoch-based shared-memory hazard scan over a recorded trace.
RaceReport detect_races(const kernel::KernelIR& k, const std::vector<TraceRecord>& trace);

struct MeasureEnv {
  int instances = 1;
  int iterations = 1;
  int extra_shared_bytes = 0;
};

// Modeled cycles for one block executing the routine once in the simulated
// fusion environment (occupancy-adjusted, averaged over the serial
// iterations). nullopt when the environment is infeasible.
std::optional<uint64_t> measure_routine(const lib::ElementaryFunction& f, const lib::Routine& r,
                                        const MeasureEnv& env, const DeviceConfig& dev);

}  // namespace mapfuse::vm
