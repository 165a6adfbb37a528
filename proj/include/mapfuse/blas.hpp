#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mapfuse/library.hpp"
#include "mapfuse/script.hpp"

// Shipped sequence suite with seeded input generation and a double-precision
// scalar reference executor used as the correctness oracle.

namespace mapfuse::blas {

std::string library_manifest();
std::string default_device_config_text();
const lib::Library& default_library();

struct SequenceCase {
  std::string name;        // upper-case suite name
  std::string script_text;
  std::string tag;         // expected-fusibility tag: combinations of F/S/B, () = weak
};

std::vector<std::string> sequence_names();
SequenceCase build_sequence(const std::string& name);

// Concrete problem data. All buffers are float32, row-major, padded so both
// dimensions are multiples of 32. Vectors have rows == 1, scalars 1x1.
struct Problem {
  int rows = 0, cols = 0;
  std::map<std::string, std::vector<float>> buffers;
  std::map<std::string, std::pair<int, int>> dims;
  std::map<std::string, float> scalars;

  const std::vector<float>& buffer(const std::string& name) const;
};

// Fills every script input deterministically from the seed; output buffers
// are allocated and zeroed (the runtime contract for reduction outputs).
Problem make_problem(const script::Script& s, int rows, int cols, uint32_t seed);

// Straight double-precision evaluation of the sequence formulas (not routed
// through the library), rounded to float32 at the end.
std::map<std::string, std::vector<float>> reference_execute(const SequenceCase& c,
                                                            const Problem& p);

// Per-call scalar semantics of each library function; used to execute scripts
// call by call (e.g. to compare execution orders).
void reference_call(const script::Script& s, const script::CallStatement& call, Problem* p);
std::map<std::string, std::vector<float>> reference_run_script(
    const script::Script& s, const Problem& p, const std::vector<int>& call_order);

}  // namespace mapfuse::blas
