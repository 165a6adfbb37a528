#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mapfuse/library.hpp"

// High-level script parsing and the data-dependency graph over calls.

namespace mapfuse::script {

struct ElementSpec {
  lib::ElemKind kind = lib::ElemKind::Subvector32;
  int depth() const { return kind == lib::ElemKind::Tile32x32 ? 2 : 1; }
};

struct CallStatement {
  int id = 0;
  std::string function;
  std::vector<std::string> arguments;       // names or numeric literals (scalars)
  std::vector<std::string> results;
};

struct Script {
  std::map<std::string, ElementSpec> declarations;
  std::vector<std::string> inputs;
  std::vector<CallStatement> calls;
  std::vector<std::string> outputs;
};

struct Edge {
  int producer = 0;
  int consumer = 0;
  std::string name;  // the produced value carried along the edge

  auto operator<=>(const Edge&) const = default;
};

// Two calls reading the same value that neither of them produces.
struct SharedInput {
  int a = 0;
  int b = 0;
  std::string name;

  auto operator<=>(const SharedInput&) const = default;
};

struct DataDependencyGraph {
  std::vector<int> nodes;  // call ids in script order
  std::vector<Edge> edges;
  std::vector<SharedInput> shared_inputs;
  std::vector<std::string> input_bindings;   // script inputs
  std::vector<std::string> output_bindings;  // script outputs

  std::vector<int> consumers(int node) const;
  std::vector<int> producers(int node) const;
  bool has_path(int from, int to) const;  // directed, along edges
};

Script parse_script(const std::string& text);
std::string print_script(const Script& s);

DataDependencyGraph build_dependency_graph(const Script& s, const lib::Library& lib);

std::vector<lib::Diagnostic> validate(const Script& s, const DataDependencyGraph& g,
                                      const lib::Library& lib);

}  // namespace mapfuse::script
