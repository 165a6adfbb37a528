#include "mapfuse/ir.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <sstream>

namespace mapfuse::ir {

const char* builtin_sym_name(int slot) {
  static const char* names[kNumBuiltinSyms] = {"tx", "ty", "ex", "ey", "bx",
                                               "by", "inst", "flat", "nx", "ny"};
  return names[slot];
}

int64_t LinearForm::coeff(int slot) const {
  for (const auto& [s, c] : terms)
    if (s == slot) return c;
  return 0;
}

int Program::find_extra(const std::string& name, ExtraSymKind kind) const {
  for (size_t i = 0; i < extra_syms.size(); ++i)
    if (extra_syms[i].name == name && extra_syms[i].kind == kind)
      return kNumBuiltinSyms + static_cast<int>(i);
  return -1;
}

int Program::find_element(const std::string& name) const {
  for (size_t i = 0; i < elements.size(); ++i)
    if (elements[i].name == name) return static_cast<int>(i);
  return -1;
}

int64_t Program::eval_int(int32_t node, const std::vector<int64_t>& env) const {
  const IntNode& n = ints[node];
  switch (n.op) {
    case IntOp::Const: return n.value;
    case IntOp::Sym: return env[n.value];
    case IntOp::Add: return eval_int(n.lhs, env) + eval_int(n.rhs, env);
    case IntOp::Sub: return eval_int(n.lhs, env) - eval_int(n.rhs, env);
    case IntOp::Mul: return eval_int(n.lhs, env) * eval_int(n.rhs, env);
    case IntOp::Div: {
      int64_t d = eval_int(n.rhs, env);
      if (d == 0) throw std::runtime_error("division by zero in index expression");
      return eval_int(n.lhs, env) / d;
    }
    case IntOp::Mod: {
      int64_t d = eval_int(n.rhs, env);
      if (d == 0) throw std::runtime_error("modulo by zero in index expression");
      return eval_int(n.lhs, env) % d;
    }
    case IntOp::Min: return std::min(eval_int(n.lhs, env), eval_int(n.rhs, env));
  }
  return 0;
}

std::optional<LinearForm> Program::linear(int32_t node) const {
  const IntNode& n = ints[node];
  auto combine = [](LinearForm a, const LinearForm& b, int64_t sign) {
    a.c0 += sign * b.c0;
    for (const auto& [s, c] : b.terms) {
      bool found = false;
      for (auto& [s2, c2] : a.terms)
        if (s2 == s) {
          c2 += sign * c;
          found = true;
          break;
        }
      if (!found) a.terms.emplace_back(s, sign * c);
    }
    std::erase_if(a.terms, [](auto& t) { return t.second == 0; });
    std::sort(a.terms.begin(), a.terms.end());
    return a;
  };
  switch (n.op) {
    case IntOp::Const: return LinearForm{n.value, {}};
    case IntOp::Sym: return LinearForm{0, {{static_cast<int>(n.value), 1}}};
    case IntOp::Add: {
      auto a = linear(n.lhs), b = linear(n.rhs);
      if (!a || !b) return std::nullopt;
      return combine(*a, *b, 1);
    }
    case IntOp::Sub: {
      auto a = linear(n.lhs), b = linear(n.rhs);
      if (!a || !b) return std::nullopt;
      return combine(*a, *b, -1);
    }
    case IntOp::Mul: {
      auto a = linear(n.lhs), b = linear(n.rhs);
      if (!a || !b) return std::nullopt;
      const LinearForm* k = a->terms.empty() ? &*a : (b->terms.empty() ? &*b : nullptr);
      if (!k) return std::nullopt;  // symbol * symbol
      const LinearForm& v = (k == &*a) ? *b : *a;
      LinearForm out;
      out.c0 = k->c0 * v.c0;
      for (const auto& [s, c] : v.terms)
        if (c * k->c0 != 0) out.terms.emplace_back(s, c * k->c0);
      return out;
    }
    default: return std::nullopt;
  }
}

int32_t add_const(Program& p, int64_t v) {
  p.ints.push_back({IntOp::Const, v, -1, -1});
  return static_cast<int32_t>(p.ints.size() - 1);
}
int32_t add_sym(Program& p, int slot) {
  p.ints.push_back({IntOp::Sym, slot, -1, -1});
  return static_cast<int32_t>(p.ints.size() - 1);
}
int32_t add_bin(Program& p, IntOp op, int32_t lhs, int32_t rhs) {
  p.ints.push_back({op, 0, lhs, rhs});
  return static_cast<int32_t>(p.ints.size() - 1);
}
int32_t add_float_const(Program& p, float v) {
  FloatNode n;
  n.op = FloatOp::Const;
  n.value = v;
  p.floats.push_back(n);
  return static_cast<int32_t>(p.floats.size() - 1);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Cursor {
  const std::string& text;
  size_t pos = 0;
  int line;
  int line_start_line;  // line number of current statement start
  size_t col_base = 0;

  explicit Cursor(const std::string& t, int first_line) : text(t), line(first_line), line_start_line(first_line) {}

  [[noreturn]] void fail(const std::string& msg, size_t at) const {
    int col = static_cast<int>(at - col_base) + 1;
    throw ParseError(msg, line, col);
  }

  void skip_ws_inline() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\r')) ++pos;
    if (pos + 1 < text.size() && text[pos] == '/' && text[pos + 1] == '/') {
      while (pos < text.size() && text[pos] != '\n') ++pos;
    }
  }
  void skip_blank() {
    for (;;) {
      skip_ws_inline();
      if (pos < text.size() && text[pos] == '\n') {
        ++pos;
        ++line;
        col_base = pos;
        continue;
      }
      break;
    }
  }
  bool at_end() {
    skip_blank();
    return pos >= text.size();
  }
  char peek() const { return pos < text.size() ? text[pos] : '\0'; }
  bool eat(char c) {
    skip_ws_inline();
    if (peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c, const char* what) {
    if (!eat(c)) fail(std::string("expected '") + c + "' " + what, pos);
  }
  bool eat_word(const char* w) {
    skip_ws_inline();
    size_t n = strlen(w);
    if (text.compare(pos, n, w) == 0) {
      size_t after = pos + n;
      if (after >= text.size() || !(std::isalnum(static_cast<unsigned char>(text[after])) || text[after] == '_')) {
        pos = after;
        return true;
      }
    }
    return false;
  }
  std::string ident() {
    skip_ws_inline();
    size_t start = pos;
    if (pos < text.size() && (std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
      ++pos;
      while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) ++pos;
    }
    if (start == pos) fail("expected identifier", pos);
    return text.substr(start, pos - start);
  }
  std::optional<std::string> try_ident() {
    skip_ws_inline();
    if (pos < text.size() && (std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) return ident();
    return std::nullopt;
  }
};

struct Parser {
  Cursor cur;
  Program prog;
  const ParseContext& ctx;

  Parser(const std::string& text, const ParseContext& c, int first_line) : cur(text, first_line), ctx(c) {
    for (const auto& m : ctx.macros) prog.extra_syms.push_back({m, ExtraSymKind::Macro});
    for (const auto& p : ctx.params) prog.params.push_back(p);
  }

  int sym_slot(const std::string& name, bool* is_sym) {
    *is_sym = true;
    for (int i = 0; i < kNumBuiltinSyms; ++i)
      if (name == builtin_sym_name(i)) return i;
    int s = prog.find_extra(name, ExtraSymKind::Macro);
    if (s >= 0) return s;
    s = prog.find_extra(name, ExtraSymKind::LoopVar);
    if (s >= 0) return s;
    *is_sym = false;
    return -1;
  }

  int element_slot(const std::string& name) {
    int e = prog.find_element(name);
    if (e >= 0) return e;
    prog.elements.push_back({name, 1});
    return static_cast<int>(prog.elements.size() - 1);
  }

  int temp_slot(const std::string& name) {
    for (size_t i = 0; i < prog.temps.size(); ++i)
      if (prog.temps[i] == name) return static_cast<int>(i);
    return -1;
  }
  int param_slot(const std::string& name) {
    for (size_t i = 0; i < prog.params.size(); ++i)
      if (prog.params[i] == name) return static_cast<int>(i);
    return -1;
  }

  // --- integer expressions ---
  int32_t int_primary() {
    cur.skip_ws_inline();
    if (cur.eat('(')) {
      int32_t e = int_expr();
      cur.expect(')', "to close parenthesis");
      return e;
    }
    char c = cur.peek();
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = cur.pos;
      while (std::isdigit(static_cast<unsigned char>(cur.peek()))) ++cur.pos;
      int64_t v = 0;
      std::from_chars(cur.text.data() + start, cur.text.data() + cur.pos, v);
      return add_const(prog, v);
    }
    if (cur.eat_word("min")) {
      cur.expect('(', "after min");
      int32_t a = int_expr();
      cur.expect(',', "between min arguments");
      int32_t b = int_expr();
      cur.expect(')', "to close min");
      return add_bin(prog, IntOp::Min, a, b);
    }
    std::string name = cur.ident();
    bool is_sym = false;
    int slot = sym_slot(name, &is_sym);
    if (!is_sym) cur.fail("unknown symbol '" + name + "' in index expression", cur.pos);
    return add_sym(prog, slot);
  }
  int32_t int_unary() {
    if (cur.eat('-')) return add_bin(prog, IntOp::Sub, add_const(prog, 0), int_unary());
    return int_primary();
  }
  int32_t int_term() {
    int32_t e = int_unary();
    for (;;) {
      cur.skip_ws_inline();
      if (cur.eat('*')) e = add_bin(prog, IntOp::Mul, e, int_unary());
      else if (cur.eat('/')) e = add_bin(prog, IntOp::Div, e, int_unary());
      else if (cur.eat('%')) e = add_bin(prog, IntOp::Mod, e, int_unary());
      else return e;
    }
  }
  int32_t int_expr() {
    int32_t e = int_term();
    for (;;) {
      cur.skip_ws_inline();
      if (cur.eat('+')) e = add_bin(prog, IntOp::Add, e, int_term());
      else if (cur.peek() == '-') {
        // don't consume "-" of "->"
        if (cur.pos + 1 < cur.text.size() && cur.text[cur.pos + 1] == '>') return e;
        cur.eat('-');
        e = add_bin(prog, IntOp::Sub, e, int_term());
      } else return e;
    }
  }

  // --- float expressions ---
  int32_t make_float(FloatNode n) {
    prog.floats.push_back(n);
    return static_cast<int32_t>(prog.floats.size() - 1);
  }

  bool looks_like_float_literal() {
    cur.skip_ws_inline();
    size_t p = cur.pos;
    if (p < cur.text.size() && (cur.text[p] == '-' || cur.text[p] == '+')) ++p;
    if (p >= cur.text.size() || !std::isdigit(static_cast<unsigned char>(cur.text[p]))) return false;
    return true;
  }

  int32_t float_literal() {
    cur.skip_ws_inline();
    size_t start = cur.pos;
    if (cur.peek() == '-' || cur.peek() == '+') ++cur.pos;
    while (std::isdigit(static_cast<unsigned char>(cur.peek()))) ++cur.pos;
    if (cur.peek() == '.') {
      ++cur.pos;
      while (std::isdigit(static_cast<unsigned char>(cur.peek()))) ++cur.pos;
    }
    if (cur.peek() == 'e' || cur.peek() == 'E') {
      ++cur.pos;
      if (cur.peek() == '-' || cur.peek() == '+') ++cur.pos;
      while (std::isdigit(static_cast<unsigned char>(cur.peek()))) ++cur.pos;
    }
    if (cur.peek() == 'f') ++cur.pos;
    std::string s = cur.text.substr(start, cur.pos - start);
    if (!s.empty() && s.back() == 'f') s.pop_back();
    return add_float_const(prog, std::stof(s));
  }

  // Parses "onchip NAME[i]" / "global NAME[i, j]" memory references.
  std::optional<FloatNode> try_mem_ref() {
    bool global;
    if (cur.eat_word("onchip")) global = false;
    else if (cur.eat_word("global")) global = true;
    else return std::nullopt;
    std::string name = cur.ident();
    FloatNode n;
    n.op = FloatOp::Load;
    n.global = global;
    n.slot = element_slot(name);
    cur.expect('[', "in memory reference");
    n.idx0 = int_expr();
    if (cur.eat(',')) {
      n.idx1 = int_expr();
      prog.elements[n.slot].dims = 2;
    }
    cur.expect(']', "in memory reference");
    return n;
  }

  int32_t float_primary() {
    cur.skip_ws_inline();
    if (cur.eat('(')) {
      int32_t e = float_expr();
      cur.expect(')', "to close parenthesis");
      return e;
    }
    if (auto mem = try_mem_ref()) return make_float(*mem);
    if (cur.eat_word("fma")) {
      cur.expect('(', "after fma");
      FloatNode n;
      n.op = FloatOp::Fma;
      n.a = float_expr();
      cur.expect(',', "in fma");
      n.b = float_expr();
      cur.expect(',', "in fma");
      n.c = float_expr();
      cur.expect(')', "to close fma");
      return make_float(n);
    }
    if (looks_like_float_literal()) return float_literal();
    size_t at = cur.pos;
    std::string name = cur.ident();
    int t = temp_slot(name);
    if (t >= 0) {
      FloatNode n;
      n.op = FloatOp::Temp;
      n.slot = t;
      return make_float(n);
    }
    int p = param_slot(name);
    if (p >= 0) {
      FloatNode n;
      n.op = FloatOp::Param;
      n.slot = p;
      return make_float(n);
    }
    cur.fail("unknown value '" + name + "' (not a temp or scalar parameter)", at);
  }
  int32_t float_unary() {
    cur.skip_ws_inline();
    if (cur.peek() == '-' && !looks_like_float_literal()) {
      cur.eat('-');
      FloatNode n;
      n.op = FloatOp::Neg;
      n.a = float_unary();
      return make_float(n);
    }
    return float_primary();
  }
  int32_t float_term() {
    int32_t e = float_unary();
    for (;;) {
      cur.skip_ws_inline();
      if (cur.eat('*')) {
        FloatNode n;
        n.op = FloatOp::Mul;
        n.a = e;
        n.b = float_unary();
        e = make_float(n);
      } else return e;
    }
  }
  int32_t float_expr() {
    int32_t e = float_term();
    for (;;) {
      cur.skip_ws_inline();
      char c = cur.peek();
      if (c == '+' || c == '-') {
        cur.pos++;
        FloatNode n;
        n.op = (c == '+') ? FloatOp::Add : FloatOp::Sub;
        n.a = e;
        n.b = float_term();
        e = make_float(n);
      } else return e;
    }
  }

  CmpOp cmp_op() {
    cur.skip_ws_inline();
    auto two = [&](char a, char b) {
      if (cur.pos + 1 < cur.text.size() && cur.text[cur.pos] == a && cur.text[cur.pos + 1] == b) {
        cur.pos += 2;
        return true;
      }
      return false;
    };
    if (two('=', '=')) return CmpOp::Eq;
    if (two('!', '=')) return CmpOp::Ne;
    if (two('<', '=')) return CmpOp::Le;
    if (two('>', '=')) return CmpOp::Ge;
    if (cur.eat('<')) return CmpOp::Lt;
    if (cur.eat('>')) return CmpOp::Gt;
    cur.fail("expected comparison operator", cur.pos);
  }

  void parse_block(std::vector<Stmt>* out) {
    for (;;) {
      if (cur.at_end()) cur.fail("unexpected end of input inside block", cur.pos);
      if (cur.eat('}')) return;
      out->push_back(statement());
    }
  }

  Stmt statement() {
    Stmt s{};
    if (cur.eat_word("for")) {
      s.kind = StmtKind::For;
      std::string var = cur.ident();
      bool is_sym;
      if (sym_slot(var, &is_sym); is_sym) cur.fail("loop variable '" + var + "' shadows an existing symbol", cur.pos);
      prog.extra_syms.push_back({var, ExtraSymKind::LoopVar});
      s.loop_sym = prog.symbol_count() - 1;
      cur.expect('=', "in for");
      s.begin = int_expr();
      cur.skip_ws_inline();
      if (!(cur.eat('.') && cur.eat('.'))) cur.fail("expected '..' in for", cur.pos);
      s.end = int_expr();
      if (cur.eat_word("step")) s.step = int_expr();
      else s.step = add_const(prog, 1);
      if (cur.eat_word("unroll")) s.unroll = true;
      cur.expect('{', "to open for body");
      parse_block(&s.body);
      return s;
    }
    if (cur.eat_word("if")) {
      s.kind = StmtKind::If;
      s.cmp_lhs = int_expr();
      s.cmp = cmp_op();
      s.cmp_rhs = int_expr();
      cur.expect('{', "to open if body");
      parse_block(&s.body);
      return s;
    }
    if (ctx.allow_kernel_stmts && cur.eat_word("barrier")) {
      s.kind = StmtKind::Barrier;
      return s;
    }
    if (ctx.allow_kernel_stmts && cur.eat_word("clear")) {
      s.kind = StmtKind::Clear;
      s.element = element_slot(cur.ident());
      return s;
    }
    if (cur.eat_word("atomic")) {
      s.kind = StmtKind::AtomicAdd;
      auto mem = try_mem_ref();
      if (!mem) cur.fail("expected memory reference after 'atomic'", cur.pos);
      s.global = mem->global;
      s.element = mem->slot;
      s.idx0 = mem->idx0;
      s.idx1 = mem->idx1;
      cur.skip_ws_inline();
      if (!(cur.eat('+') && cur.eat('='))) cur.fail("expected '+=' in atomic add", cur.pos);
      s.fexpr = float_expr();
      return s;
    }
    if (cur.eat_word("float")) {
      s.kind = StmtKind::DeclTemp;
      std::string name = cur.ident();
      if (temp_slot(name) >= 0) cur.fail("duplicate temp '" + name + "'", cur.pos);
      prog.temps.push_back(name);
      s.temp_slot = static_cast<int>(prog.temps.size() - 1);
      cur.expect('=', "in temp declaration");
      s.fexpr = float_expr();
      return s;
    }
    if (auto mem = try_mem_ref()) {
      s.global = mem->global;
      s.element = mem->slot;
      s.idx0 = mem->idx0;
      s.idx1 = mem->idx1;
      cur.skip_ws_inline();
      if (cur.eat('=')) {
        s.kind = StmtKind::Store;
        s.fexpr = float_expr();
        return s;
      }
      cur.fail("expected '=' after memory reference", cur.pos);
    }
    // temp assignment: "t = e" or "t += e"
    size_t at = cur.pos;
    std::string name = cur.ident();
    int t = temp_slot(name);
    if (t < 0) cur.fail("unknown statement or temp '" + name + "'", at);
    s.kind = StmtKind::AssignTemp;
    s.temp_slot = t;
    cur.skip_ws_inline();
    if (cur.eat('+')) {
      cur.expect('=', "in '+='");
      int32_t rhs = float_expr();
      // t += a * b becomes fma(a, b, t); anything else becomes t + rhs
      FloatNode self;
      self.op = FloatOp::Temp;
      self.slot = t;
      int32_t self_idx = make_float(self);
      const FloatNode& r = prog.floats[rhs];
      FloatNode n;
      if (r.op == FloatOp::Mul) {
        n.op = FloatOp::Fma;
        n.a = r.a;
        n.b = r.b;
        n.c = self_idx;
      } else {
        n.op = FloatOp::Add;
        n.a = self_idx;
        n.b = rhs;
      }
      s.fexpr = make_float(n);
      return s;
    }
    cur.expect('=', "in assignment");
    s.fexpr = float_expr();
    return s;
  }

  void run() {
    while (!cur.at_end()) {
      if (cur.peek() == '}') cur.fail("unmatched '}'", cur.pos);
      prog.stmts.push_back(statement());
    }
  }
};

}  // namespace

Program parse_program(const std::string& text, const ParseContext& ctx, int first_line) {
  Parser p(text, ctx, first_line);
  p.run();
  return std::move(p.prog);
}

// ---------------------------------------------------------------------------
// Printer

std::string print_int_expr(const Program& p, int32_t node) {
  const IntNode& n = p.ints[node];
  auto name = [&](int slot) -> std::string {
    if (slot < kNumBuiltinSyms) return builtin_sym_name(slot);
    return p.extra_syms[slot - kNumBuiltinSyms].name;
  };
  auto wrap = [&](int32_t child) {
    const IntNode& c = p.ints[child];
    std::string s = print_int_expr(p, child);
    if (c.op == IntOp::Add || c.op == IntOp::Sub) return "(" + s + ")";
    return s;
  };
  switch (n.op) {
    case IntOp::Const: return std::to_string(n.value);
    case IntOp::Sym: return name(static_cast<int>(n.value));
    case IntOp::Add: return print_int_expr(p, n.lhs) + " + " + print_int_expr(p, n.rhs);
    case IntOp::Sub: {
      // normalize "0 - x" to "-x"
      const IntNode& l = p.ints[n.lhs];
      if (l.op == IntOp::Const && l.value == 0) return "-" + wrap(n.rhs);
      return print_int_expr(p, n.lhs) + " - " + wrap(n.rhs);
    }
    case IntOp::Mul: return wrap(n.lhs) + "*" + wrap(n.rhs);
    case IntOp::Div: return wrap(n.lhs) + "/" + wrap(n.rhs);
    case IntOp::Mod: return wrap(n.lhs) + " % " + wrap(n.rhs);
    case IntOp::Min: return "min(" + print_int_expr(p, n.lhs) + ", " + print_int_expr(p, n.rhs) + ")";
  }
  return "?";
}

static std::string print_float_value(float v) {
  std::ostringstream os;
  os << v;
  std::string s = os.str();
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

std::string print_float_expr(const Program& p, int32_t node) {
  const FloatNode& n = p.floats[node];
  auto wrap = [&](int32_t child) {
    const FloatNode& c = p.floats[child];
    std::string s = print_float_expr(p, child);
    if (c.op == FloatOp::Add || c.op == FloatOp::Sub) return "(" + s + ")";
    return s;
  };
  switch (n.op) {
    case FloatOp::Const: return print_float_value(n.value);
    case FloatOp::Temp: return p.temps[n.slot];
    case FloatOp::Param: return p.params[n.slot];
    case FloatOp::Load: {
      std::string s = (n.global ? "global " : "onchip ") + p.elements[n.slot].name + "[" +
                      print_int_expr(p, n.idx0);
      if (n.idx1 >= 0) s += ", " + print_int_expr(p, n.idx1);
      return s + "]";
    }
    case FloatOp::Add: return print_float_expr(p, n.a) + " + " + print_float_expr(p, n.b);
    case FloatOp::Sub: return print_float_expr(p, n.a) + " - " + wrap(n.b);
    case FloatOp::Mul: return wrap(n.a) + "*" + wrap(n.b);
    case FloatOp::Neg: return "-" + wrap(n.a);
    case FloatOp::Fma:
      return "fma(" + print_float_expr(p, n.a) + ", " + print_float_expr(p, n.b) + ", " +
             print_float_expr(p, n.c) + ")";
  }
  return "?";
}

static const char* cmp_str(CmpOp c) {
  switch (c) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

std::string print_stmt(const Program& p, const Stmt& s, int indent) {
  std::string pad(static_cast<size_t>(indent) * 2, ' ');
  std::string out = pad;
  auto block = [&](const std::vector<Stmt>& body) {
    out += " {\n";
    for (const auto& b : body) out += print_stmt(p, b, indent + 1);
    out += pad + "}\n";
  };
  switch (s.kind) {
    case StmtKind::For: {
      out += "for " + p.extra_syms[s.loop_sym - kNumBuiltinSyms].name + " = " +
             print_int_expr(p, s.begin) + " .. " + print_int_expr(p, s.end);
      const IntNode& st = p.ints[s.step];
      if (!(st.op == IntOp::Const && st.value == 1)) out += " step " + print_int_expr(p, s.step);
      if (s.unroll) out += " unroll";
      block(s.body);
      return out;
    }
    case StmtKind::If: {
      out += "if " + print_int_expr(p, s.cmp_lhs) + " " + cmp_str(s.cmp) + " " +
             print_int_expr(p, s.cmp_rhs);
      block(s.body);
      return out;
    }
    case StmtKind::DeclTemp:
      return out + "float " + p.temps[s.temp_slot] + " = " + print_float_expr(p, s.fexpr) + "\n";
    case StmtKind::AssignTemp:
      return out + p.temps[s.temp_slot] + " = " + print_float_expr(p, s.fexpr) + "\n";
    case StmtKind::Store: {
      out += (s.global ? "global " : "onchip ") + p.elements[s.element].name + "[" +
             print_int_expr(p, s.idx0);
      if (s.idx1 >= 0) out += ", " + print_int_expr(p, s.idx1);
      out += "] = " + print_float_expr(p, s.fexpr) + "\n";
      return out;
    }
    case StmtKind::AtomicAdd: {
      out += std::string("atomic ") + (s.global ? "global " : "onchip ") + p.elements[s.element].name +
             "[" + print_int_expr(p, s.idx0);
      if (s.idx1 >= 0) out += ", " + print_int_expr(p, s.idx1);
      out += "] += " + print_float_expr(p, s.fexpr) + "\n";
      return out;
    }
    case StmtKind::Barrier:
      return out + "barrier\n";
    case StmtKind::Clear:
      return out + "clear " + p.elements[s.element].name + "\n";
  }
  return out + "?\n";
}

std::string print_program(const Program& p, int indent) {
  std::string out;
  for (const auto& s : p.stmts) out += print_stmt(p, s, indent);
  return out;
}

Program substitute_macros(const Program& p, const std::map<std::string, int64_t>& values) {
  Program out = p;
  for (size_t i = 0; i < out.extra_syms.size(); ++i) {
    if (out.extra_syms[i].kind != ExtraSymKind::Macro) continue;
    auto it = values.find(out.extra_syms[i].name);
    if (it == values.end())
      throw std::runtime_error("unresolved macro '" + out.extra_syms[i].name + "'");
    int slot = kNumBuiltinSyms + static_cast<int>(i);
    for (auto& n : out.ints) {
      if (n.op == IntOp::Sym && n.value == slot) {
        n.op = IntOp::Const;
        n.value = it->second;
      }
    }
  }
  return out;
}

}  // namespace mapfuse::ir
