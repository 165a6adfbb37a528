#include "doctest.h"
#include "mapfuse/blas.hpp"
#include "mapfuse/library.hpp"

using namespace mapfuse;
using lib::MappingEq;
using lib::RoutineKind;

TEST_CASE("shipped manifest loads with expected sgemv routine set") {
  const auto& L = blas::default_library();
  const auto* f = L.find("sgemv");
  REQUIRE(f);
  CHECK(f->kind == lib::HigherOrderKind::MapReduce);
  CHECK(f->depth == 2);
  CHECK(f->max_instances == 1);
  CHECK(f->routines_of(RoutineKind::Load).size() == 2);
  CHECK(f->routines_of(RoutineKind::Compute).size() == 1);
  CHECK(f->routines_of(RoutineKind::Store).size() == 1);
  // every routine of every function is clean
  for (const auto& [name, fn] : L.functions)
    for (const auto& r : fn.routines)
      CHECK(lib::check_routine(r, fn).empty());
}

TEST_CASE("empty manifest loads as empty library") {
  auto L = lib::load_library("");
  CHECK(L.functions.empty());
}

TEST_CASE("compute routine reading global memory is rejected") {
  std::string bad =
      "function badf {\n"
      "  kind map\n"
      "  depth 1\n"
      "  parallelism 32 1\n"
      "  max_instances 1\n"
      "  arg a subvector32 varies x\n"
      "  out b subvector32 varies x\n"
      "  routine load a {\n"
      "    map a: tx = w, ty = 0\n"
      "    body {\n"
      "      onchip a[tx] = global a[ex*32 + tx]\n"
      "    }\n"
      "  }\n"
      "  routine compute {\n"
      "    map a: tx = w, ty = 0\n"
      "    map b: tx = w, ty = 0\n"
      "    body {\n"
      "      onchip b[tx] = global a[ex*32 + tx]\n"
      "    }\n"
      "  }\n"
      "  routine store b {\n"
      "    map b: tx = w, ty = 0\n"
      "    body {\n"
      "      global b[ex*32 + tx] = onchip b[tx]\n"
      "    }\n"
      "  }\n"
      "}\n";
  CHECK_THROWS_WITH_AS(lib::load_library(bad), doctest::Contains("kind-violation"),
                       std::runtime_error);
}

TEST_CASE("store routine writing shared memory is a kind violation") {
  const auto& L = blas::default_library();
  const auto* f = L.find("scal");
  REQUIRE(f);
  lib::Routine r = *f->routine(RoutineKind::Store, "x", 1);
  ir::ParseContext ctx;
  ctx.macros = lib::routine_macros();
  r.body = ir::parse_program("onchip x[tx] = onchip x[tx]\n", ctx);
  auto diags = lib::check_routine(r, *f);
  bool found = false;
  for (const auto& d : diags) found |= (d.rule == "kind-violation");
  CHECK(found);
}

TEST_CASE("non-affine on-chip index is flagged unless datadep") {
  const auto& L = blas::default_library();
  const auto* f = L.find("scal");
  lib::Routine r = *f->routine(RoutineKind::Compute, "", 1);
  ir::ParseContext ctx;
  ctx.params = {"alpha"};
  ctx.macros = lib::routine_macros();
  r.body = ir::parse_program("onchip x[tx*tx] = alpha\n", ctx);
  auto diags = lib::check_routine(r, *f);
  bool non_affine = false;
  for (const auto& d : diags) non_affine |= (d.rule == "non-affine");
  CHECK(non_affine);

  r.maps["x"].kind = lib::ThreadMap::Kind::DataDep;
  diags = lib::check_routine(r, *f);
  non_affine = false;
  for (const auto& d : diags) non_affine |= (d.rule == "non-affine");
  CHECK(!non_affine);
}

TEST_CASE("declared mapping mismatch is detected") {
  const auto& L = blas::default_library();
  const auto* f = L.find("scal");
  lib::Routine r = *f->routine(RoutineKind::Load, "v", 1);
  r.maps["v"].tx = {0, 0, 5, 0, ""};  // claims thread 5 accesses every word
  auto diags = lib::check_routine(r, *f);
  bool mismatch = false;
  for (const auto& d : diags) mismatch |= (d.rule == "mapping-mismatch");
  CHECK(mismatch);
}

TEST_CASE("sgemv load and compute disagree on the tile mapping") {
  const auto& L = blas::default_library();
  const auto* f = L.find("sgemv");
  const auto* load = f->routine(RoutineKind::Load, "A", 1);
  const auto* compute = f->routine(RoutineKind::Compute, "", 1);
  REQUIRE(load);
  REQUIRE(compute);
  CHECK(lib::thread_data_mapping_equal(*load, *compute, "A") == MappingEq::Unequal);
  CHECK(lib::thread_data_mapping_equal(*load, *load, "A") == MappingEq::Equal);
}

TEST_CASE("sgemtv load and compute share the tile mapping") {
  const auto& L = blas::default_library();
  const auto* f = L.find("sgemtv");
  const auto* load = f->routine(RoutineKind::Load, "A", 1);
  const auto* compute = f->routine(RoutineKind::Compute, "", 1);
  CHECK(lib::thread_data_mapping_equal(*load, *compute, "A") == MappingEq::Equal);
}

TEST_CASE("element-wise maps with identical indexing compare equal across functions") {
  const auto& L = blas::default_library();
  const auto* add = L.find("add");
  const auto* scal = L.find("scal");
  const auto* store_c = add->routine(RoutineKind::Store, "c", 1);
  const auto* load_v = scal->routine(RoutineKind::Load, "v", 1);
  // both use tx = w, ty = 0
  lib::Routine a = *store_c, b = *load_v;
  a.maps["e"] = a.maps.at("c");
  b.maps["e"] = b.maps.at("v");
  CHECK(lib::thread_data_mapping_equal(a, b, "e") == MappingEq::Equal);
  // cross-check by enumeration on a 32x2 block: single accessor per word
  auto ta = lib::enumerate_accesses(*add, *store_c, 32, 1, {{"BY", 1}, {"IPB", 1}, {"ITERS", 1}});
  CHECK(ta.at("c").single_thread());
}

TEST_CASE("data-dependent mapping yields unknown") {
  const auto& L = blas::default_library();
  const auto* f = L.find("scal");
  lib::Routine a = *f->routine(RoutineKind::Load, "v", 1);
  lib::Routine b = a;
  a.maps["v"].kind = lib::ThreadMap::Kind::DataDep;
  CHECK(lib::thread_data_mapping_equal(a, b, "v") == MappingEq::Unknown);
}

TEST_CASE("mapping equality is an equivalence relation over library routines") {
  const auto& L = blas::default_library();
  // gather all (routine, element) pairs with single-thread maps over subvectors
  struct Item {
    const lib::Routine* r;
    std::string elem;
  };
  std::vector<Item> items;
  for (const auto& [name, fn] : L.functions)
    for (const auto& r : fn.routines)
      for (const auto& [elem, m] : r.maps)
        if (m.kind == lib::ThreadMap::Kind::SingleThread) items.push_back({&r, elem});
  auto eq = [](const Item& a, const Item& b) {
    lib::Routine ra = *a.r, rb = *b.r;
    ra.maps["e"] = ra.maps.at(a.elem);
    rb.maps["e"] = rb.maps.at(b.elem);
    return lib::thread_data_mapping_equal(ra, rb, "e") == MappingEq::Equal;
  };
  for (const auto& a : items) CHECK(eq(a, a));  // reflexive
  for (size_t i = 0; i < items.size(); ++i)
    for (size_t j = i + 1; j < items.size(); ++j) CHECK(eq(items[i], items[j]) == eq(items[j], items[i]));
  // transitivity on a sample
  for (size_t i = 0; i < items.size(); i += 3)
    for (size_t j = 0; j < items.size(); j += 5)
      for (size_t k = 0; k < items.size(); k += 7)
        if (eq(items[i], items[j]) && eq(items[j], items[k])) CHECK(eq(items[i], items[k]));
}

TEST_CASE("enumerated accesses cover exactly the words the descriptor predicts") {
  const auto& L = blas::default_library();
  const auto* f = L.find("sgemv");
  const auto* load = f->routine(RoutineKind::Load, "A", 1);
  for (int by : {2, 4, 8}) {
    auto tables = lib::enumerate_accesses(*f, *load, 32, by, {{"BY", by}, {"IPB", 1}, {"ITERS", 1}});
    const auto& t = tables.at("A");
    REQUIRE(t.words == 1024);
    for (int w = 0; w < t.words; ++w) {
      REQUIRE(t.per_word[w].size() == 1);
      int r = w / 32, c = w % 32;
      int expect = (r % by) * 32 + c;  // thread (tx=c, ty=r%BY)
      CHECK(t.per_word[w][0].thread == expect);
    }
  }
}

TEST_CASE("manifest file and embedded manifest agree") {
  // keeps data/blas_library.mf in sync with the compiled-in copy
  CHECK(blas::library_manifest().find("function sgemv") != std::string::npos);
}
