#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Routine IR: the small per-thread language routine bodies are written in.
// Bodies are parsed from the library manifest (and re-parsed from emitted
// kernel text), statically analyzed for affine thread-to-data mappings, and
// interpreted by the virtual device.

namespace mapfuse::ir {

// Fixed symbol slots available to every routine body. Loop variables and
// macros get dynamic slots after these.
enum BuiltinSym : int {
  kSymTx = 0,   // thread x within routine shape
  kSymTy,       // thread y within routine shape
  kSymEx,       // global instance index along x
  kSymEy,       // global instance index along y
  kSymBx,       // launched block x
  kSymBy,       // launched block y
  kSymInst,     // instance within block
  kSymFlat,     // flat thread id within block
  kSymNx,       // domain extent in instances, x
  kSymNy,       // domain extent in instances, y
  kNumBuiltinSyms
};

const char* builtin_sym_name(int slot);

struct ParseError : std::runtime_error {
  int line = 0;
  int column = 0;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " (line " + std::to_string(line_) + ", column " +
                           std::to_string(col_) + ")"),
        line(line_),
        column(col_) {}
};

// ---------------------------------------------------------------------------
// Integer index expressions (flat arena, referenced by index).

enum class IntOp : uint8_t { Const, Sym, Add, Sub, Mul, Div, Mod, Min };

struct IntNode {
  IntOp op = IntOp::Const;
  int64_t value = 0;  // Const payload or symbol slot
  int32_t lhs = -1;
  int32_t rhs = -1;
};

// Linear form over symbol slots: c0 + sum(coeff_i * slot_i).
struct LinearForm {
  int64_t c0 = 0;
  std::vector<std::pair<int, int64_t>> terms;  // (slot, coeff), slot-sorted

  bool operator==(const LinearForm&) const = default;
  int64_t coeff(int slot) const;
  bool uses(int slot) const { return coeff(slot) != 0; }
};

enum class CmpOp : uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

// ---------------------------------------------------------------------------
// Float expressions.

enum class FloatOp : uint8_t { Const, Temp, Param, Load, Add, Sub, Mul, Neg, Fma };

struct FloatNode {
  FloatOp op = FloatOp::Const;
  float value = 0.0f;  // Const payload
  int32_t slot = -1;   // Temp/Param slot, or element index for Load
  int32_t a = -1, b = -1, c = -1;  // child float nodes
  int32_t idx0 = -1, idx1 = -1;    // Load coordinate int-expr indices (idx1 < 0 for 1-D)
  bool global = false;             // Load space: global vs on-chip
};

// ---------------------------------------------------------------------------
// Statements.

enum class StmtKind : uint8_t {
  For,        // counted loop, constant/macro bounds
  If,         // guarded block over integer predicate
  DeclTemp,   // float t = expr
  AssignTemp, // t = expr / t += expr (desugared)
  Store,      // onchip/global NAME[i,j] = expr
  AtomicAdd,  // atomic onchip/global NAME[i,j] += expr
  Barrier,    // kernel text only; never appears in library routines
  Clear,      // kernel text only; zero an on-chip element
};

struct Stmt {
  StmtKind kind;
  // For
  int loop_sym = -1;
  int32_t begin = -1, end = -1, step = -1;  // int-expr indices
  bool unroll = false;
  // If
  int32_t cmp_lhs = -1, cmp_rhs = -1;
  CmpOp cmp = CmpOp::Eq;
  // For / If
  std::vector<Stmt> body;
  // DeclTemp / AssignTemp
  int temp_slot = -1;
  // Store / AtomicAdd / Clear
  bool global = false;
  int element = -1;                // index into program element table
  int32_t idx0 = -1, idx1 = -1;    // coordinate int-expr indices
  // value expression (DeclTemp/AssignTemp/Store/AtomicAdd)
  int32_t fexpr = -1;
};

// A named symbol of a program beyond the builtins.
enum class ExtraSymKind : uint8_t { LoopVar, Macro };

struct ExtraSym {
  std::string name;
  ExtraSymKind kind;
};

// Element reference table entry: routine bodies name elements; resolution to
// storage happens at kernel-generation time.
struct ElementRef {
  std::string name;
  int dims = 1;  // 1 or 2 coordinate accesses seen
};

// A load/compute/store body plus its symbol and element tables.
struct Program {
  std::vector<IntNode> ints;
  std::vector<FloatNode> floats;
  std::vector<Stmt> stmts;
  std::vector<ExtraSym> extra_syms;      // slots kNumBuiltinSyms + i
  std::vector<std::string> temps;        // temp slots
  std::vector<std::string> params;       // scalar parameter slots
  std::vector<ElementRef> elements;      // referenced elements

  int symbol_count() const { return kNumBuiltinSyms + static_cast<int>(extra_syms.size()); }
  int find_extra(const std::string& name, ExtraSymKind kind) const;
  int find_element(const std::string& name) const;
  int64_t eval_int(int32_t node, const std::vector<int64_t>& env) const;

  // Affine extraction: fails (nullopt) on products of symbols, div/mod, min.
  std::optional<LinearForm> linear(int32_t node) const;
};

// ---------------------------------------------------------------------------
// Construction helpers (used by the parser and by codegen).

int32_t add_const(Program& p, int64_t v);
int32_t add_sym(Program& p, int slot);
int32_t add_bin(Program& p, IntOp op, int32_t lhs, int32_t rhs);
int32_t add_float_const(Program& p, float v);

// ---------------------------------------------------------------------------
// Parsing and printing.
//
// Statement syntax, one per line, blocks in braces:
//   for j = 0 .. 32 step BY unroll {
//   if ty == 0 {
//   onchip A[ty + j, tx] = global A[ey*32 + ty + j, ex*32 + tx]
//   global y[ex*32 + tx] = onchip y[tx]
//   atomic onchip y[tx] += tmp
//   atomic global r[0] += onchip r[0]
//   float tmp = 0.0
//   tmp += onchip A[tx, ty + j] * onchip x[ty + j]

struct ParseContext {
  std::vector<std::string> params;  // scalar parameter names in scope
  std::vector<std::string> macros;  // macro names usable in int expressions
  bool allow_kernel_stmts = false;  // barrier / clear
};

// Parses statements from text until the closing brace depth returns to zero
// (or end of input). `first_line` is used for error positions.
Program parse_program(const std::string& text, const ParseContext& ctx, int first_line = 1);

std::string print_program(const Program& p, int indent = 0);
std::string print_int_expr(const Program& p, int32_t node);
std::string print_float_expr(const Program& p, int32_t node);
std::string print_stmt(const Program& p, const Stmt& s, int indent);

// Substitutes macro symbols with constants, producing a closed program
// (every extra symbol except loop vars resolved). Unknown macros throw.
Program substitute_macros(const Program& p, const std::map<std::string, int64_t>& values);

}  // namespace mapfuse::ir
