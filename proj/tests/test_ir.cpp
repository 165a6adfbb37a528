#include "doctest.h"
#include "mapfuse/ir.hpp"

using namespace mapfuse;

static ir::ParseContext ctx_with(std::vector<std::string> params = {},
                                 std::vector<std::string> macros = {"BY", "IPB", "ITERS"}) {
  ir::ParseContext ctx;
  ctx.params = std::move(params);
  ctx.macros = std::move(macros);
  return ctx;
}

TEST_CASE("parse and reprint the sgemv load body") {
  std::string body =
      "for j = 0 .. 32 step BY unroll {\n"
      "  onchip A[ty + j, tx] = global A[ey*32 + ty + j, ex*32 + tx]\n"
      "}\n";
  auto p = ir::parse_program(body, ctx_with());
  REQUIRE(p.stmts.size() == 1);
  CHECK(p.stmts[0].kind == ir::StmtKind::For);
  CHECK(p.stmts[0].unroll);
  std::string printed = ir::print_program(p);
  auto p2 = ir::parse_program(printed, ctx_with());
  CHECK(ir::print_program(p2) == printed);
}

TEST_CASE("evaluate integer expressions") {
  auto p = ir::parse_program("onchip x[tx*3 + ty % 2 - 1] = 0.0\n", ctx_with());
  REQUIRE(p.stmts.size() == 1);
  std::vector<int64_t> env(p.symbol_count(), 0);
  env[ir::kSymTx] = 5;
  env[ir::kSymTy] = 7;
  CHECK(p.eval_int(p.stmts[0].idx0, env) == 5 * 3 + 7 % 2 - 1);
}

TEST_CASE("affine extraction") {
  auto p = ir::parse_program("onchip x[ex*32 + tx] = onchip y[tx*tx]\n", ctx_with());
  auto lin = p.linear(p.stmts[0].idx0);
  REQUIRE(lin.has_value());
  CHECK(lin->coeff(ir::kSymEx) == 32);
  CHECK(lin->coeff(ir::kSymTx) == 1);
  CHECK(lin->c0 == 0);
  // tx*tx is not affine
  const auto& load = p.floats[p.stmts[0].fexpr];
  CHECK(!p.linear(load.idx0).has_value());
}

TEST_CASE("+= with product desugars to fma") {
  auto p = ir::parse_program(
      "float tmp = 0.0\n"
      "tmp += onchip A[tx, ty]*onchip x[ty]\n",
      ctx_with());
  REQUIRE(p.stmts.size() == 2);
  CHECK(p.floats[p.stmts[1].fexpr].op == ir::FloatOp::Fma);
}

TEST_CASE("macro substitution closes the program") {
  auto p = ir::parse_program("for j = 0 .. 32 step BY { onchip x[j] = 0.0 }\n", ctx_with());
  auto q = ir::substitute_macros(p, {{"BY", 8}, {"IPB", 1}, {"ITERS", 1}});
  std::vector<int64_t> env(q.symbol_count(), 0);
  CHECK(q.eval_int(q.stmts[0].step, env) == 8);
  CHECK_THROWS(ir::substitute_macros(p, {{"IPB", 1}}));
}

TEST_CASE("parse errors carry positions") {
  try {
    ir::parse_program("onchip x[tq] = 0.0\n", ctx_with());
    FAIL("expected parse error");
  } catch (const ir::ParseError& e) {
    CHECK(e.line == 1);
    CHECK(std::string(e.what()).find("tq") != std::string::npos);
  }
}

TEST_CASE("scalar parameters resolve, unknown idents fail") {
  auto p = ir::parse_program("onchip z[tx] = alpha*onchip w[tx]\n", ctx_with({"alpha"}));
  CHECK(p.params.size() == 1);
  CHECK_THROWS_AS(ir::parse_program("onchip z[tx] = beta\n", ctx_with()), ir::ParseError);
}

TEST_CASE("kernel statements only allowed in kernel context") {
  CHECK_THROWS_AS(ir::parse_program("barrier\n", ctx_with()), ir::ParseError);
  auto ctx = ctx_with();
  ctx.allow_kernel_stmts = true;
  auto p = ir::parse_program("barrier\nclear q\n", ctx);
  CHECK(p.stmts.size() == 2);
  CHECK(p.stmts[0].kind == ir::StmtKind::Barrier);
  CHECK(p.stmts[1].kind == ir::StmtKind::Clear);
}
