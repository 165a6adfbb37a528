#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mapfuse/ir.hpp"

// Elementary functions: metadata plus load/compute/store routines written in
// the routine IR, loaded from a manifest.

namespace mapfuse::lib {

enum class HigherOrderKind { Map, Reduce, MapMap, MapReduce };
enum class ElemKind { Scalar, Subvector32, Tile32x32 };
enum class RoutineKind { Load, Compute, Store };

const char* to_string(HigherOrderKind k);
const char* to_string(ElemKind k);
const char* to_string(RoutineKind k);

int elem_rows(ElemKind k);   // words along the r coordinate
int elem_cols(ElemKind k);   // words along the c coordinate
int elem_words(ElemKind k);

// Which global instance indices the element's address depends on. An input
// that does not vary along the iterated grid dimension is invariant across
// serial iterations; a reduction output that does not vary along it can be
// accumulated across them.
struct Varies {
  bool x = false;
  bool y = false;
  bool operator==(const Varies&) const = default;
};

struct ElementDecl {
  std::string name;
  ElemKind kind = ElemKind::Subvector32;
  bool is_output = false;
  bool accumulable = false;  // reduction output, added across blocks
  Varies varies;
};

// Thread-to-data mapping of one routine's accesses to one element.
// SingleThread: word (r, c) touched by exactly the thread given by the two
// affine coordinate forms. Broadcast: read by several threads per word.
// Atomic: written with atomic adds, possibly by several threads per word.
struct MapCoord {
  int64_t cr = 0, cc = 0, c0 = 0;
  int64_t mod_const = 0;        // 0 = no modulus
  std::string mod_macro;        // symbolic modulus (e.g. BY), empty if none

  bool operator==(const MapCoord&) const = default;
};

struct ThreadMap {
  enum class Kind { SingleThread, Broadcast, Atomic, DataDep } kind = Kind::SingleThread;
  MapCoord tx, ty;
};

enum class MappingEq { Equal, Unequal, Unknown };

struct Routine {
  RoutineKind kind = RoutineKind::Compute;
  std::string target;  // element loaded/stored; empty for compute
  int variant = 1;
  ir::Program body;
  std::map<std::string, ThreadMap> maps;  // declared, element name -> map
  bool writes_atomic = false;             // derived from body

  std::string id() const;  // "load_A", "compute", "store_y" (+variant suffix when > 1)
};

struct ArgSig {
  bool is_scalar = false;
  std::string name;
};

struct ElementaryFunction {
  std::string name;
  HigherOrderKind kind = HigherOrderKind::Map;
  int depth = 1;
  int par_x = 32;                // instance threads along x
  bool par_y_is_block = false;   // instance threads along y follow the block shape (depth 2)
  int max_instances = 1;
  std::vector<ElementDecl> elements;
  std::vector<ArgSig> args;               // call argument order (elements and scalars)
  std::vector<std::string> results;       // output element names in result order
  std::vector<std::string> scalar_params;
  std::vector<Routine> routines;

  const ElementDecl* element(const std::string& n) const;
  const Routine* routine(RoutineKind k, const std::string& target, int variant) const;
  std::vector<const Routine*> routines_of(RoutineKind k) const;
  int variant_count(RoutineKind k, const std::string& target) const;
  bool is_reduction() const {
    return kind == HigherOrderKind::Reduce || kind == HigherOrderKind::MapReduce;
  }
};

struct Diagnostic {
  std::string rule;
  std::string where;
  std::string message;
};

struct Library {
  std::map<std::string, ElementaryFunction> functions;  // name-ordered
  std::string source;

  const ElementaryFunction* find(const std::string& name) const;
};

// Word -> accessing threads, computed by exhaustively executing a routine
// body's control flow for one instance at a concrete block shape.
struct AccessRecord {
  int thread = 0;     // flat thread id within the instance shape
  uint8_t kinds = 0;  // bit 0 read, bit 1 write, bit 2 atomic
};

struct ElementAccessTable {
  int words = 0;
  std::vector<std::vector<AccessRecord>> per_word;  // thread-sorted

  bool touched(int w) const { return !per_word[w].empty(); }
  bool single_thread() const;   // every touched word accessed by one thread
  bool has_nonatomic_multiwriter_word() const;
  bool operator==(const ElementAccessTable&) const = default;
};

// Enumerates the body of `r` at instance shape (px, py) with the given macro
// values and returns per-element on-chip access tables.
std::map<std::string, ElementAccessTable> enumerate_accesses(
    const ElementaryFunction& f, const Routine& r, int px, int py,
    const std::map<std::string, int64_t>& macros);

// Derived address dependence of each global element touched by the routine.
std::map<std::string, Varies> derive_varies(const Routine& r);

// ---------------------------------------------------------------------------
// Operations

Library load_library(const std::string& manifest_text);

std::vector<Diagnostic> check_routine(const Routine& r, const ElementaryFunction& f);

MappingEq thread_data_mapping_equal(const Routine& a, const Routine& b,
                                    const std::string& element);

// The macro names every routine body may reference.
std::vector<std::string> routine_macros();

std::string print_manifest(const Library& lib);

}  // namespace mapfuse::lib
