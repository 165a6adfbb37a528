#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mapfuse/ir.hpp"
#include "mapfuse/library.hpp"

// Executable kernel IR. A kernel is a shared-memory arena, a set of
// per-thread register arrays, and three routine-call sections following the
// kernel schema: prologue (invariant loads, clears of outputs accumulated
// across serial iterations), the iteration loop, and the epilogue (stores of
// accumulated outputs).

namespace mapfuse::kernel {

struct Binding {
  enum class Kind { Global, Shared, Register } kind = Kind::Global;
  std::string name;   // global buffer name or on-chip arena key
  int offset = 0;     // Shared: word offset within one instance's arena
  int stride = 32;    // Shared: row stride for 2-D elements
  int reg_array = -1; // Register: index into KernelIR::reg_arrays
};

struct RegisterArray {
  std::string key;
  int words = 0;             // full element size per thread
  int collapse_threads = 0;  // >0: word w lives in slot w / collapse_threads
};

struct SharedRegion {
  std::string key;
  int offset = 0;
  int words = 0;
  int stride = 32;
};

enum class Remap { Identity, FlatSplit };

struct RoutineCallIR {
  bool barrier_before = false;
  std::string clear_key;           // on-chip key zeroed before the routine, "" if none
  bool barrier_after_clear = false;
  Remap remap = Remap::Identity;
  int routine_px = 32, routine_py = 1;  // per-instance thread shape
  int active_threads = 0;               // flat participation guard (0 = all)
  ir::Program body;                     // macro-expanded, elements renamed to keys
  // element slot -> binding; slot names in `body` already match binding names
  std::vector<Binding> bindings;        // indexed by body element slot
  std::string label;                    // "sgemv.load_A"
  int call_id = -1;
  lib::RoutineKind kind = lib::RoutineKind::Compute;

  bool is_pure_clear() const { return body.stmts.empty() && !clear_key.empty(); }
};

struct KernelIR {
  std::string name;
  int depth = 1;
  int block_x = 32, block_y = 1;
  int instances = 1;
  int iterations = 1;
  char iter_dim = 'y';          // grid dimension shrunk by the iteration count
  std::string domain;           // buffer whose padded dims define the instance grid
  int shared_words = 0;         // per instance
  std::vector<SharedRegion> shared_regions;
  std::vector<RegisterArray> reg_arrays;
  std::vector<std::string> scalar_params;  // script scalar names used
  std::vector<RoutineCallIR> prologue, body, epilogue;

  int threads() const { return block_x * block_y; }
  int shared_words_total() const { return shared_words * instances; }
  int shared_bytes_total() const { return shared_words_total() * 4; }
};

// Deterministic, human-readable kernel text; parse_kernel_text inverts it.
std::string emit_pseudo_source(const KernelIR& k);
KernelIR parse_kernel_text(const std::string& text);

}  // namespace mapfuse::kernel
