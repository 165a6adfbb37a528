#include <random>
#include <set>

#include "doctest.h"
#include "mapfuse/blas.hpp"
#include "mapfuse/script.hpp"

using namespace mapfuse;

static const char* kListing1 =
    "TILE32x32 A;\n"
    "subvector32 p, q, r, s;\n"
    "\n"
    "input A, p, r;\n"
    "\n"
    "q = sgemv(A, p);\n"
    "s = sgemtv(A, r);\n"
    "\n"
    "return q, s;\n";

TEST_CASE("BiCGK script parses to the expected structure") {
  auto s = script::parse_script(kListing1);
  CHECK(s.declarations.at("A").kind == lib::ElemKind::Tile32x32);
  CHECK(s.declarations.at("p").kind == lib::ElemKind::Subvector32);
  CHECK(s.inputs == std::vector<std::string>{"A", "p", "r"});
  REQUIRE(s.calls.size() == 2);
  CHECK(s.calls[0].function == "sgemv");
  CHECK(s.calls[0].arguments == std::vector<std::string>{"A", "p"});
  CHECK(s.calls[0].results == std::vector<std::string>{"q"});
  CHECK(s.calls[1].function == "sgemtv");
  CHECK(s.outputs == std::vector<std::string>{"q", "s"});
}

TEST_CASE("identity script has no calls") {
  auto s = script::parse_script("subvector32 x;\ninput x;\nreturn x;\n");
  CHECK(s.calls.empty());
  CHECK(s.outputs == std::vector<std::string>{"x"});
}

TEST_CASE("undeclared identifier is rejected by name") {
  try {
    script::parse_script("subvector32 x;\ninput x;\nreturn t;\n");
    FAIL("expected error");
  } catch (const ir::ParseError& e) {
    CHECK(std::string(e.what()).find("'t'") != std::string::npos);
  }
}

TEST_CASE("single assignment per name is enforced") {
  CHECK_THROWS_AS(script::parse_script("subvector32 x, y;\ninput x;\ny = scal(1.0, x);\n"
                                       "y = scal(2.0, x);\nreturn y;\n"),
                  ir::ParseError);
}

TEST_CASE("out-of-place calls only") {
  CHECK_THROWS_AS(script::parse_script("subvector32 x, y;\ninput x, y;\n"
                                       "(x) = add(x, y);\nreturn x;\n"),
                  ir::ParseError);
}

TEST_CASE("parse-print round trip is structural identity") {
  for (const auto& name : blas::sequence_names()) {
    auto c = blas::build_sequence(name);
    auto s = script::parse_script(c.script_text);
    auto s2 = script::parse_script(script::print_script(s));
    CHECK(script::print_script(s2) == script::print_script(s));
    CHECK(s2.inputs == s.inputs);
    CHECK(s2.outputs == s.outputs);
    REQUIRE(s2.calls.size() == s.calls.size());
    for (size_t i = 0; i < s.calls.size(); ++i) {
      CHECK(s2.calls[i].function == s.calls[i].function);
      CHECK(s2.calls[i].arguments == s.calls[i].arguments);
      CHECK(s2.calls[i].results == s.calls[i].results);
    }
  }
}

TEST_CASE("BiCGK dependency graph: two nodes, no edges, shared input A") {
  auto s = script::parse_script(kListing1);
  auto g = script::build_dependency_graph(s, blas::default_library());
  CHECK(g.nodes.size() == 2);
  CHECK(g.edges.empty());
  REQUIRE(g.shared_inputs.size() == 1);
  CHECK(g.shared_inputs[0].name == "A");
  CHECK(script::validate(s, g, blas::default_library()).empty());
}

TEST_CASE("VADD chain has one edge labeled t") {
  auto c = blas::build_sequence("VADD");
  auto s = script::parse_script(c.script_text);
  auto g = script::build_dependency_graph(s, blas::default_library());
  CHECK(g.nodes.size() == 2);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].producer == 0);
  CHECK(g.edges[0].consumer == 1);
  CHECK(g.edges[0].name == "t");
}

TEST_CASE("single-call script gives a single node") {
  auto c = blas::build_sequence("SSCAL");
  auto s = script::parse_script(c.script_text);
  auto g = script::build_dependency_graph(s, blas::default_library());
  CHECK(g.nodes.size() == 1);
  CHECK(g.edges.empty());
}

TEST_CASE("validate flags type mismatches and unproduced outputs") {
  auto s = script::parse_script(
      "subvector32 A, x, y;\ninput A, x;\ny = sgemv(A, x);\nreturn y;\n");
  auto g = script::build_dependency_graph(s, blas::default_library());
  auto diags = script::validate(s, g, blas::default_library());
  bool type_mismatch = false;
  for (const auto& d : diags) type_mismatch |= (d.rule == "type-mismatch");
  CHECK(type_mismatch);

  auto s2 = script::parse_script("subvector32 x, y;\ninput x;\nreturn y;\n");
  auto g2 = script::build_dependency_graph(s2, blas::default_library());
  auto diags2 = script::validate(s2, g2, blas::default_library());
  bool unproduced = false;
  for (const auto& d : diags2) unproduced |= (d.rule == "unproduced-output");
  CHECK(unproduced);
}

// Random straight-line scripts; the graph's edge set must equal a brute-force
// all-pairs (producer result, consumer argument) name scan.
TEST_CASE("edge set matches brute force on random scripts") {
  std::mt19937 rng(7);
  for (int iter = 0; iter < 50; ++iter) {
    int ncalls = 1 + static_cast<int>(rng() % 10);
    std::string text = "subvector32 ";
    std::vector<std::string> names = {"i0", "i1", "i2"};
    for (int i = 0; i < ncalls; ++i) names.push_back("v" + std::to_string(i));
    for (size_t i = 0; i < names.size(); ++i) text += (i ? ", " : "") + names[i];
    text += ";\ninput i0, i1, i2;\n";
    std::vector<std::string> defined = {"i0", "i1", "i2"};
    std::vector<std::pair<std::string, std::vector<std::string>>> calls;
    for (int i = 0; i < ncalls; ++i) {
      std::string a = defined[rng() % defined.size()];
      std::string b = defined[rng() % defined.size()];
      std::string r = "v" + std::to_string(i);
      text += r + " = add(" + a + ", " + b + ");\n";
      calls.push_back({r, {a, b}});
      defined.push_back(r);
    }
    text += "return v" + std::to_string(ncalls - 1) + ";\n";
    auto s = script::parse_script(text);
    auto g = script::build_dependency_graph(s, blas::default_library());
    std::set<std::tuple<int, int, std::string>> expect;
    for (size_t i = 0; i < calls.size(); ++i)
      for (size_t j = 0; j < calls.size(); ++j)
        for (const auto& arg : calls[j].second)
          if (i != j && calls[i].first == arg)
            expect.insert({static_cast<int>(i), static_cast<int>(j), arg});
    std::set<std::tuple<int, int, std::string>> got;
    for (const auto& e : g.edges) got.insert({e.producer, e.consumer, e.name});
    CHECK(got == expect);
  }
}
