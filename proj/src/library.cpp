#include "mapfuse/library.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace mapfuse::lib {

const char* to_string(HigherOrderKind k) {
  switch (k) {
    case HigherOrderKind::Map: return "map";
    case HigherOrderKind::Reduce: return "reduce";
    case HigherOrderKind::MapMap: return "map_map";
    case HigherOrderKind::MapReduce: return "map_reduce";
  }
  return "?";
}
const char* to_string(ElemKind k) {
  switch (k) {
    case ElemKind::Scalar: return "scalar";
    case ElemKind::Subvector32: return "subvector32";
    case ElemKind::Tile32x32: return "tile32x32";
  }
  return "?";
}
const char* to_string(RoutineKind k) {
  switch (k) {
    case RoutineKind::Load: return "load";
    case RoutineKind::Compute: return "compute";
    case RoutineKind::Store: return "store";
  }
  return "?";
}

int elem_rows(ElemKind k) { return k == ElemKind::Tile32x32 ? 32 : 1; }
int elem_cols(ElemKind k) {
  switch (k) {
    case ElemKind::Scalar: return 1;
    case ElemKind::Subvector32: return 32;
    case ElemKind::Tile32x32: return 32;
  }
  return 1;
}
int elem_words(ElemKind k) { return elem_rows(k) * elem_cols(k); }

std::string Routine::id() const {
  std::string s = to_string(kind);
  if (!target.empty()) s += "_" + target;
  if (variant != 1) s += "_v" + std::to_string(variant);
  return s;
}

const ElementDecl* ElementaryFunction::element(const std::string& n) const {
  for (const auto& e : elements)
    if (e.name == n) return &e;
  return nullptr;
}

const Routine* ElementaryFunction::routine(RoutineKind k, const std::string& t, int variant) const {
  for (const auto& r : routines)
    if (r.kind == k && r.target == t && r.variant == variant) return &r;
  return nullptr;
}

std::vector<const Routine*> ElementaryFunction::routines_of(RoutineKind k) const {
  std::vector<const Routine*> out;
  for (const auto& r : routines)
    if (r.kind == k) out.push_back(&r);
  return out;
}

int ElementaryFunction::variant_count(RoutineKind k, const std::string& t) const {
  int n = 0;
  for (const auto& r : routines)
    if (r.kind == k && r.target == t) ++n;
  return n;
}

const ElementaryFunction* Library::find(const std::string& name) const {
  auto it = functions.find(name);
  return it == functions.end() ? nullptr : &it->second;
}

bool ElementAccessTable::single_thread() const {
  for (const auto& recs : per_word) {
    if (recs.empty()) continue;
    for (const auto& r : recs)
      if (r.thread != recs.front().thread) return false;
  }
  return true;
}

bool ElementAccessTable::has_nonatomic_multiwriter_word() const {
  for (const auto& recs : per_word) {
    bool nonatomic_write = false;
    for (const auto& r : recs)
      if ((r.kinds & 2) && !(r.kinds & 4)) nonatomic_write = true;
    if (!nonatomic_write) continue;
    for (const auto& r : recs)
      if (r.thread != recs.front().thread) return true;
  }
  return false;
}

std::vector<std::string> routine_macros() { return {"BY", "IPB", "ITERS"}; }

// ---------------------------------------------------------------------------
// Access enumeration

namespace {

struct AccessWalker {
  const ir::Program& prog;
  const ElementaryFunction& fun;
  std::vector<int64_t> env;
  std::map<std::string, ElementAccessTable>* tables;
  int flat_thread = 0;

  void touch(int elem, int32_t i0, int32_t i1, uint8_t kinds) {
    const std::string& name = prog.elements[elem].name;
    const ElementDecl* decl = fun.element(name);
    if (!decl) return;  // validated separately
    auto [it, inserted] = tables->try_emplace(name);
    ElementAccessTable& t = it->second;
    if (inserted) {
      t.words = elem_words(decl->kind);
      t.per_word.resize(t.words);
    }
    int64_t r = prog.eval_int(i0, env);
    int64_t c = 0;
    if (i1 >= 0) c = prog.eval_int(i1, env);
    int64_t w = (i1 >= 0) ? r * elem_cols(decl->kind) + c : r;
    if (w < 0 || w >= t.words)
      throw std::runtime_error("on-chip access out of element bounds: " + name + "[" +
                               std::to_string(w) + "]");
    auto& recs = t.per_word[w];
    for (auto& rec : recs)
      if (rec.thread == flat_thread) {
        rec.kinds |= kinds;
        return;
      }
    recs.push_back({flat_thread, kinds});
  }

  void walk_float(int32_t fe) {
    const ir::FloatNode& n = prog.floats[fe];
    switch (n.op) {
      case ir::FloatOp::Load:
        if (!n.global) touch(n.slot, n.idx0, n.idx1, 1);
        return;
      case ir::FloatOp::Add:
      case ir::FloatOp::Sub:
      case ir::FloatOp::Mul:
        walk_float(n.a);
        walk_float(n.b);
        return;
      case ir::FloatOp::Neg:
        walk_float(n.a);
        return;
      case ir::FloatOp::Fma:
        walk_float(n.a);
        walk_float(n.b);
        walk_float(n.c);
        return;
      default:
        return;
    }
  }

  bool cmp(const ir::Stmt& s) {
    int64_t a = prog.eval_int(s.cmp_lhs, env);
    int64_t b = prog.eval_int(s.cmp_rhs, env);
    switch (s.cmp) {
      case ir::CmpOp::Eq: return a == b;
      case ir::CmpOp::Ne: return a != b;
      case ir::CmpOp::Lt: return a < b;
      case ir::CmpOp::Le: return a <= b;
      case ir::CmpOp::Gt: return a > b;
      case ir::CmpOp::Ge: return a >= b;
    }
    return false;
  }

  void walk(const std::vector<ir::Stmt>& stmts) {
    for (const auto& s : stmts) {
      switch (s.kind) {
        case ir::StmtKind::For: {
          int64_t b = prog.eval_int(s.begin, env);
          int64_t e = prog.eval_int(s.end, env);
          int64_t st = prog.eval_int(s.step, env);
          if (st <= 0) throw std::runtime_error("non-positive loop step");
          for (int64_t v = b; v < e; v += st) {
            env[s.loop_sym] = v;
            walk(s.body);
          }
          break;
        }
        case ir::StmtKind::If:
          if (cmp(s)) walk(s.body);
          break;
        case ir::StmtKind::DeclTemp:
        case ir::StmtKind::AssignTemp:
          walk_float(s.fexpr);
          break;
        case ir::StmtKind::Store:
          walk_float(s.fexpr);
          if (!s.global) touch(s.element, s.idx0, s.idx1, 2);
          break;
        case ir::StmtKind::AtomicAdd:
          walk_float(s.fexpr);
          if (!s.global) touch(s.element, s.idx0, s.idx1, 2 | 4);
          break;
        default:
          break;
      }
    }
  }
};

}  // namespace

std::map<std::string, ElementAccessTable> enumerate_accesses(
    const ElementaryFunction& f, const Routine& r, int px, int py,
    const std::map<std::string, int64_t>& macros) {
  std::map<std::string, ElementAccessTable> tables;
  ir::Program body = ir::substitute_macros(r.body, macros);
  AccessWalker w{body, f, {}, &tables};
  w.env.assign(body.symbol_count(), 0);
  w.env[ir::kSymNx] = 1 << 20;
  w.env[ir::kSymNy] = 1 << 20;
  for (int ty = 0; ty < py; ++ty)
    for (int tx = 0; tx < px; ++tx) {
      w.env[ir::kSymTx] = tx;
      w.env[ir::kSymTy] = ty;
      w.env[ir::kSymFlat] = ty * px + tx;
      w.flat_thread = ty * px + tx;
      w.walk(body.stmts);
    }
  for (auto& [name, t] : tables)
    for (auto& recs : t.per_word)
      std::sort(recs.begin(), recs.end(),
                [](const AccessRecord& a, const AccessRecord& b) { return a.thread < b.thread; });
  return tables;
}

std::map<std::string, Varies> derive_varies(const Routine& r) {
  std::map<std::string, Varies> out;
  const ir::Program& p = r.body;
  auto note = [&](int elem, int32_t idx) {
    if (idx < 0) return;
    Varies& v = out[p.elements[elem].name];
    auto lin = p.linear(idx);
    if (!lin) {
      v.x = v.y = true;  // conservatively varies
      return;
    }
    if (lin->uses(ir::kSymEx) || lin->uses(ir::kSymBx) || lin->uses(ir::kSymInst)) v.x = true;
    if (lin->uses(ir::kSymEy) || lin->uses(ir::kSymBy)) v.y = true;
  };
  std::function<void(int32_t)> walk_float = [&](int32_t fe) {
    const ir::FloatNode& n = p.floats[fe];
    switch (n.op) {
      case ir::FloatOp::Load:
        if (n.global) {
          note(n.slot, n.idx0);
          note(n.slot, n.idx1);
        }
        return;
      case ir::FloatOp::Add:
      case ir::FloatOp::Sub:
      case ir::FloatOp::Mul:
        walk_float(n.a);
        walk_float(n.b);
        return;
      case ir::FloatOp::Neg:
        walk_float(n.a);
        return;
      case ir::FloatOp::Fma:
        walk_float(n.a);
        walk_float(n.b);
        walk_float(n.c);
        return;
      default:
        return;
    }
  };
  std::function<void(const std::vector<ir::Stmt>&)> walk = [&](const std::vector<ir::Stmt>& stmts) {
    for (const auto& s : stmts) {
      if (s.fexpr >= 0) walk_float(s.fexpr);
      if ((s.kind == ir::StmtKind::Store || s.kind == ir::StmtKind::AtomicAdd) && s.global) {
        note(s.element, s.idx0);
        note(s.element, s.idx1);
      }
      walk(s.body);
    }
  };
  walk(p.stmts);
  return out;
}

// ---------------------------------------------------------------------------
// Manifest parsing

namespace {

struct Lines {
  std::vector<std::string> lines;
  size_t i = 0;

  explicit Lines(const std::string& text) {
    std::istringstream in(text);
    std::string l;
    while (std::getline(in, l)) lines.push_back(l);
  }
  static std::string strip(std::string s) {
    auto pos = s.find("//");
    if (pos != std::string::npos) s.erase(pos);
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
  bool next(std::string* out) {
    while (i < lines.size()) {
      std::string s = strip(lines[i]);
      ++i;
      if (!s.empty()) {
        *out = s;
        return true;
      }
    }
    return false;
  }
  int line_no() const { return static_cast<int>(i); }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ir::ParseError("manifest: " + msg, line_no(), 1);
  }
};

std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

// Parses an affine coordinate form over r/c/w with optional "% m".
MapCoord parse_map_coord(const std::string& text, Lines& src) {
  MapCoord mc;
  std::string expr = text, mod;
  auto pct = text.find('%');
  if (pct != std::string::npos) {
    expr = text.substr(0, pct);
    mod = Lines::strip(text.substr(pct + 1));
  }
  // tiny affine parser: terms split on +/-, each term [k*]var or constant
  int sign = 1;
  size_t p = 0;
  auto skipws = [&] { while (p < expr.size() && std::isspace(static_cast<unsigned char>(expr[p]))) ++p; };
  skipws();
  while (p < expr.size()) {
    if (expr[p] == '+') { sign = 1; ++p; skipws(); continue; }
    if (expr[p] == '-') { sign = -1; ++p; skipws(); continue; }
    int64_t k = 1;
    bool have_k = false;
    if (std::isdigit(static_cast<unsigned char>(expr[p]))) {
      k = 0;
      while (p < expr.size() && std::isdigit(static_cast<unsigned char>(expr[p]))) k = k * 10 + (expr[p++] - '0');
      have_k = true;
      skipws();
      if (p < expr.size() && expr[p] == '*') { ++p; skipws(); }
    }
    if (p < expr.size() && std::isalpha(static_cast<unsigned char>(expr[p]))) {
      char v = expr[p++];
      if (v == 'r' || v == 'w') mc.cr += sign * k;
      else if (v == 'c') mc.cc += sign * k;
      else src.fail(std::string("unknown mapping coordinate '") + v + "'");
    } else if (have_k) {
      mc.c0 += sign * k;
    } else {
      src.fail("cannot parse mapping expression '" + text + "'");
    }
    sign = 1;
    skipws();
  }
  if (!mod.empty()) {
    if (std::isdigit(static_cast<unsigned char>(mod[0]))) mc.mod_const = std::stoll(mod);
    else mc.mod_macro = mod;
  }
  return mc;
}

ThreadMap parse_thread_map(const std::string& rhs, Lines& src) {
  ThreadMap m;
  std::string r = Lines::strip(rhs);
  if (r == "broadcast") { m.kind = ThreadMap::Kind::Broadcast; return m; }
  if (r == "atomic") { m.kind = ThreadMap::Kind::Atomic; return m; }
  if (r == "datadep") { m.kind = ThreadMap::Kind::DataDep; return m; }
  m.kind = ThreadMap::Kind::SingleThread;
  // "tx = <expr>, ty = <expr>"
  auto comma = r.find(',');
  std::string first = r.substr(0, comma == std::string::npos ? r.size() : comma);
  std::string second = comma == std::string::npos ? "" : r.substr(comma + 1);
  for (std::string part : {first, second}) {
    part = Lines::strip(part);
    if (part.empty()) continue;
    auto eq = part.find('=');
    if (eq == std::string::npos) src.fail("expected 'tx = ...' in mapping");
    std::string lhs = Lines::strip(part.substr(0, eq));
    MapCoord mc = parse_map_coord(Lines::strip(part.substr(eq + 1)), src);
    if (lhs == "tx") m.tx = mc;
    else if (lhs == "ty") m.ty = mc;
    else src.fail("mapping assigns unknown coordinate '" + lhs + "'");
  }
  return m;
}

// Reads lines until the matching closing brace, returns raw text.
std::string read_braced_block(Lines& src) {
  std::string out;
  int depth = 1;
  while (src.i < src.lines.size()) {
    std::string raw = src.lines[src.i++];
    std::string s = Lines::strip(raw);
    for (char ch : s) {
      if (ch == '{') ++depth;
      if (ch == '}') --depth;
    }
    if (depth == 0) return out;
    out += raw + "\n";
  }
  src.fail("unterminated block");
}

Routine parse_routine(Lines& src, const std::vector<std::string>& tk,
                      const ElementaryFunction& f) {
  Routine r;
  size_t at = 1;
  if (at >= tk.size()) src.fail("routine header too short");
  std::string kind = tk[at++];
  if (kind == "load") r.kind = RoutineKind::Load;
  else if (kind == "compute") r.kind = RoutineKind::Compute;
  else if (kind == "store") r.kind = RoutineKind::Store;
  else src.fail("unknown routine kind '" + kind + "'");
  if (r.kind != RoutineKind::Compute) {
    if (at >= tk.size()) src.fail("load/store routine needs a target element");
    r.target = tk[at++];
  }
  for (; at < tk.size(); ++at) {
    if (tk[at] == "variant" && at + 1 < tk.size()) r.variant = std::stoi(tk[++at]);
    else if (tk[at] == "{") break;
  }

  std::string body_text;
  int body_first_line = src.line_no();
  std::string line;
  for (;;) {
    if (!src.next(&line)) src.fail("unterminated routine block");
    if (line == "}") break;
    auto tk2 = tokens(line);
    if (!tk2.empty() && tk2[0] == "map") {
      auto colon = line.find(':');
      if (colon == std::string::npos) src.fail("map line needs ':'");
      std::string elem = Lines::strip(line.substr(3, colon - 3));
      r.maps[elem] = parse_thread_map(line.substr(colon + 1), src);
      continue;
    }
    if (!tk2.empty() && tk2[0] == "body") {
      body_first_line = src.line_no();
      body_text = read_braced_block(src);
      continue;
    }
    src.fail("unexpected line in routine block: '" + line + "'");
  }

  ir::ParseContext ctx;
  ctx.params = f.scalar_params;
  ctx.macros = routine_macros();
  r.body = ir::parse_program(body_text, ctx, body_first_line);

  std::function<bool(const std::vector<ir::Stmt>&)> any_atomic =
      [&](const std::vector<ir::Stmt>& ss) {
        for (const auto& s : ss) {
          if (s.kind == ir::StmtKind::AtomicAdd) return true;
          if (any_atomic(s.body)) return true;
        }
        return false;
      };
  r.writes_atomic = any_atomic(r.body.stmts);
  return r;
}

ElementaryFunction parse_function(Lines& src, const std::string& name) {
  ElementaryFunction f;
  f.name = name;
  std::string line;
  // first pass collects scalar params before routine bodies are parsed, so
  // gather raw lines of the function block, then process
  std::vector<std::pair<int, std::string>> decls;
  std::vector<std::pair<int, std::vector<std::string>>> routine_starts;
  int depth = 1;
  std::vector<std::string> block;
  int base = src.line_no();
  while (src.i < src.lines.size()) {
    std::string raw = src.lines[src.i++];
    std::string s = Lines::strip(raw);
    int before = depth;
    for (char ch : s) {
      if (ch == '{') ++depth;
      if (ch == '}') --depth;
    }
    if (depth == 0 && before == 1) break;
    block.push_back(raw);
  }
  if (depth != 0) src.fail("unterminated function block");

  // metadata lines at depth 1 of the block
  Lines sub("");
  sub.lines = block;
  sub.i = 0;
  while (sub.i < sub.lines.size()) {
    std::string s = Lines::strip(sub.lines[sub.i]);
    if (s.empty()) {
      ++sub.i;
      continue;
    }
    auto tk = tokens(s);
    if (tk[0] == "routine") {
      ++sub.i;
      Routine r = parse_routine(sub, tk, f);
      f.routines.push_back(std::move(r));
      continue;
    }
    ++sub.i;
    if (tk[0] == "kind") {
      if (tk.size() < 2) sub.fail("kind needs a value");
      if (tk[1] == "map") f.kind = HigherOrderKind::Map;
      else if (tk[1] == "reduce") f.kind = HigherOrderKind::Reduce;
      else if (tk[1] == "map_map") f.kind = HigherOrderKind::MapMap;
      else if (tk[1] == "map_reduce") f.kind = HigherOrderKind::MapReduce;
      else sub.fail("unknown higher-order kind '" + tk[1] + "'");
    } else if (tk[0] == "depth") {
      f.depth = std::stoi(tk.at(1));
    } else if (tk[0] == "parallelism") {
      f.par_x = std::stoi(tk.at(1));
      f.par_y_is_block = (tk.at(2) == "BY");
      if (!f.par_y_is_block && std::stoi(tk.at(2)) != 1)
        sub.fail("instance parallelism y must be 1 or BY");
    } else if (tk[0] == "max_instances") {
      f.max_instances = std::stoi(tk.at(1));
    } else if (tk[0] == "scalar") {
      f.scalar_params.push_back(tk.at(1));
      f.args.push_back({true, tk.at(1)});
    } else if (tk[0] == "arg" || tk[0] == "out") {
      ElementDecl d;
      d.name = tk.at(1);
      d.is_output = (tk[0] == "out");
      std::string kind = tk.at(2);
      if (kind == "scalar") d.kind = ElemKind::Scalar;
      else if (kind == "subvector32") d.kind = ElemKind::Subvector32;
      else if (kind == "tile32x32") d.kind = ElemKind::Tile32x32;
      else sub.fail("unknown element kind '" + kind + "'");
      for (size_t i = 3; i < tk.size(); ++i) {
        if (tk[i] == "accumulable") d.accumulable = true;
        else if (tk[i] == "varies") {
          const std::string& v = tk.at(++i);
          d.varies.x = v.find('x') != std::string::npos;
          d.varies.y = v.find('y') != std::string::npos;
          if (v == "none") d.varies = {false, false};
        } else sub.fail("unknown element attribute '" + tk[i] + "'");
      }
      f.elements.push_back(d);
      if (d.is_output) f.results.push_back(d.name);
      else f.args.push_back({false, d.name});
    } else {
      sub.fail("unknown function key '" + tk[0] + "' in " + name);
    }
  }
  (void)base;
  return f;
}

}  // namespace

Library load_library(const std::string& manifest_text) {
  Library lib;
  lib.source = manifest_text;
  Lines src(manifest_text);
  std::string line;
  while (src.next(&line)) {
    auto tk = tokens(line);
    if (tk[0] != "function") src.fail("expected 'function <name> {'");
    if (tk.size() < 2) src.fail("function needs a name");
    ElementaryFunction f = parse_function(src, tk[1]);
    if (lib.functions.count(f.name)) src.fail("duplicate function '" + f.name + "'");
    // validate
    std::vector<Diagnostic> diags;
    for (const auto& r : f.routines) {
      auto d = check_routine(r, f);
      diags.insert(diags.end(), d.begin(), d.end());
    }
    // structural checks
    for (const auto& e : f.elements) {
      if (!e.is_output) {
        bool has_load = false;
        for (const auto& r : f.routines)
          if (r.kind == RoutineKind::Load && r.target == e.name) has_load = true;
        if (!has_load && e.kind != ElemKind::Scalar)
          diags.push_back({"missing-routine", f.name, "input " + e.name + " has no load routine"});
      } else {
        bool has_store = false;
        for (const auto& r : f.routines)
          if (r.kind == RoutineKind::Store && r.target == e.name) has_store = true;
        if (!has_store)
          diags.push_back({"missing-routine", f.name, "output " + e.name + " has no store routine"});
      }
    }
    if (f.routines_of(RoutineKind::Compute).empty())
      diags.push_back({"missing-routine", f.name, "no compute routine"});
    if (f.is_reduction()) {
      int acc = 0;
      for (const auto& e : f.elements)
        if (e.is_output && e.accumulable) ++acc;
      if (acc != 1)
        diags.push_back({"invalid-metadata", f.name,
                         "reduction must have exactly one accumulable output"});
    }
    if (f.depth == 2) {
      bool any_tile = false;
      for (const auto& e : f.elements)
        if (e.kind == ElemKind::Tile32x32) any_tile = true;
      if (!any_tile)
        diags.push_back({"invalid-metadata", f.name,
                         "depth-2 function declares no tile element"});
    }
    if (!diags.empty()) {
      std::string msg = "library validation failed for " + f.name + ":";
      for (const auto& d : diags) msg += "\n  [" + d.rule + "] " + d.message;
      throw std::runtime_error(msg);
    }
    lib.functions.emplace(f.name, std::move(f));
  }
  return lib;
}

namespace {

// Collects memory reference statistics over a body.
struct RefScan {
  bool global_read = false, global_write = false;
  bool onchip_read = false, onchip_write = false;
  std::vector<std::pair<int, int32_t>> onchip_coords;  // (element, int expr)
  std::vector<std::string> touched;

  void scan(const ir::Program& p) {
    std::function<void(int32_t)> wf = [&](int32_t fe) {
      const ir::FloatNode& n = p.floats[fe];
      switch (n.op) {
        case ir::FloatOp::Load: {
          (n.global ? global_read : onchip_read) = true;
          note(p, n.slot);
          if (!n.global) {
            onchip_coords.emplace_back(n.slot, n.idx0);
            if (n.idx1 >= 0) onchip_coords.emplace_back(n.slot, n.idx1);
          }
          return;
        }
        case ir::FloatOp::Add:
        case ir::FloatOp::Sub:
        case ir::FloatOp::Mul:
          wf(n.a); wf(n.b); return;
        case ir::FloatOp::Neg: wf(n.a); return;
        case ir::FloatOp::Fma: wf(n.a); wf(n.b); wf(n.c); return;
        default: return;
      }
    };
    std::function<void(const std::vector<ir::Stmt>&)> ws = [&](const std::vector<ir::Stmt>& ss) {
      for (const auto& s : ss) {
        if (s.fexpr >= 0) wf(s.fexpr);
        if (s.kind == ir::StmtKind::Store || s.kind == ir::StmtKind::AtomicAdd) {
          (s.global ? global_write : onchip_write) = true;
          note(p, s.element);
          if (!s.global) {
            onchip_coords.emplace_back(s.element, s.idx0);
            if (s.idx1 >= 0) onchip_coords.emplace_back(s.element, s.idx1);
          }
        }
        ws(s.body);
      }
    };
    ws(p.stmts);
  }
  void note(const ir::Program& p, int elem) {
    const std::string& n = p.elements[elem].name;
    if (std::find(touched.begin(), touched.end(), n) == touched.end()) touched.push_back(n);
  }
};

}  // namespace

std::vector<Diagnostic> check_routine(const Routine& r, const ElementaryFunction& f) {
  std::vector<Diagnostic> out;
  std::string where = f.name + "." + r.id();
  RefScan scan;
  scan.scan(r.body);

  switch (r.kind) {
    case RoutineKind::Load:
      if (scan.global_write)
        out.push_back({"kind-violation", where, "load routine writes global memory"});
      if (scan.onchip_read)
        out.push_back({"kind-violation", where, "load routine reads on-chip memory"});
      break;
    case RoutineKind::Compute:
      if (scan.global_read || scan.global_write)
        out.push_back({"kind-violation", where, "compute routine touches global memory"});
      break;
    case RoutineKind::Store:
      if (scan.global_read)
        out.push_back({"kind-violation", where, "store routine reads global memory"});
      if (scan.onchip_write)
        out.push_back({"kind-violation", where, "store routine writes on-chip memory"});
      break;
  }

  for (const auto& name : scan.touched) {
    if (!f.element(name))
      out.push_back({"unknown-element", where, "element '" + name + "' not in signature"});
  }
  if (!r.target.empty() && !f.element(r.target))
    out.push_back({"unknown-element", where, "target '" + r.target + "' not in signature"});

  // affine on-chip indexing unless flagged data-dependent
  for (const auto& [elem, idx] : scan.onchip_coords) {
    const std::string& name = r.body.elements[elem].name;
    auto it = r.maps.find(name);
    bool datadep = it != r.maps.end() && it->second.kind == ThreadMap::Kind::DataDep;
    if (!datadep && !r.body.linear(idx)) {
      out.push_back({"non-affine", where,
                     "on-chip index of '" + name + "' is not affine and not flagged datadep"});
    }
  }

  // declared mapping vs body enumeration at sample block shapes
  if (out.empty()) {
    std::vector<int> by_values = f.par_y_is_block ? std::vector<int>{2, 8} : std::vector<int>{1};
    for (int by : by_values) {
      std::map<std::string, int64_t> macros{{"BY", by}, {"IPB", 1}, {"ITERS", 1}};
      std::map<std::string, ElementAccessTable> tables;
      try {
        tables = enumerate_accesses(f, r, f.par_x, by, macros);
      } catch (const std::exception& e) {
        out.push_back({"body-error", where, e.what()});
        break;
      }
      for (const auto& [name, table] : tables) {
        auto it = r.maps.find(name);
        if (it == r.maps.end()) {
          out.push_back({"missing-mapping", where, "no declared mapping for '" + name + "'"});
          continue;
        }
        const ThreadMap& m = it->second;
        if (m.kind == ThreadMap::Kind::DataDep) continue;
        if (m.kind == ThreadMap::Kind::Atomic) {
          for (const auto& recs : table.per_word)
            for (const auto& rec : recs)
              if ((rec.kinds & 2) && !(rec.kinds & 4))
                out.push_back({"mapping-mismatch", where,
                               "'" + name + "' declared atomic but written non-atomically"});
          continue;
        }
        if (m.kind == ThreadMap::Kind::Broadcast) {
          bool multi = false;
          for (const auto& recs : table.per_word)
            if (recs.size() > 1) multi = true;
          for (const auto& recs : table.per_word)
            for (const auto& rec : recs)
              if (rec.kinds & 2)
                out.push_back({"mapping-mismatch", where,
                               "'" + name + "' declared broadcast but is written"});
          (void)multi;
          continue;
        }
        // SingleThread: verify each touched word's accessor. Word coords:
        // tiles (r, c) = (w/32, w%32); vectors r = w, c = 0.
        const ElementDecl* decl = f.element(name);
        bool tile = decl->kind == ElemKind::Tile32x32;
        auto eval_coord = [&](const MapCoord& mc, int64_t row, int64_t col) {
          int64_t v = mc.cr * row + mc.cc * col + mc.c0;
          int64_t mod = mc.mod_const;
          if (!mc.mod_macro.empty()) {
            if (mc.mod_macro == "BY") mod = by;
            else mod = 0;
          }
          if (mod > 0) v %= mod;
          return v;
        };
        for (int w = 0; w < table.words; ++w) {
          const auto& recs = table.per_word[w];
          if (recs.empty()) continue;
          if (recs.size() > 1) {
            out.push_back({"mapping-mismatch", where,
                           "'" + name + "' declared single-thread but word " + std::to_string(w) +
                               " touched by several threads"});
            break;
          }
          int64_t row = tile ? w / 32 : w;
          int64_t col = tile ? w % 32 : 0;
          int64_t etx = eval_coord(m.tx, row, col);
          int64_t ety = eval_coord(m.ty, row, col);
          int expect = static_cast<int>(ety * f.par_x + etx);
          if (recs[0].thread != expect) {
            out.push_back({"mapping-mismatch", where,
                           "'" + name + "' word " + std::to_string(w) + " accessed by thread " +
                               std::to_string(recs[0].thread) + ", declared " +
                               std::to_string(expect)});
            break;
          }
        }
      }
    }
  }

  // declared varies vs body-derived dependence
  for (const auto& [name, v] : derive_varies(r)) {
    const ElementDecl* decl = f.element(name);
    if (!decl) continue;
    if ((v.x && !decl->varies.x) || (v.y && !decl->varies.y)) {
      out.push_back({"varies-mismatch", where,
                     "element '" + name + "' address depends on more grid dimensions than declared"});
    }
  }
  return out;
}

static MapCoord normalize(MapCoord mc) {
  if (mc.mod_const > 0) {
    mc.cr %= mc.mod_const;
    mc.cc %= mc.mod_const;
    mc.c0 %= mc.mod_const;
    if (mc.cr < 0) mc.cr += mc.mod_const;
    if (mc.cc < 0) mc.cc += mc.mod_const;
    if (mc.c0 < 0) mc.c0 += mc.mod_const;
  }
  return mc;
}

MappingEq thread_data_mapping_equal(const Routine& a, const Routine& b,
                                    const std::string& element) {
  auto ia = a.maps.find(element);
  auto ib = b.maps.find(element);
  if (ia == a.maps.end() || ib == b.maps.end()) return MappingEq::Unknown;
  const ThreadMap& ma = ia->second;
  const ThreadMap& mb = ib->second;
  if (ma.kind == ThreadMap::Kind::DataDep || mb.kind == ThreadMap::Kind::DataDep)
    return MappingEq::Unknown;
  if (ma.kind != mb.kind) return MappingEq::Unequal;
  if (ma.kind != ThreadMap::Kind::SingleThread)
    return MappingEq::Equal;  // same non-single access discipline
  return (normalize(ma.tx) == normalize(mb.tx) && normalize(ma.ty) == normalize(mb.ty))
             ? MappingEq::Equal
             : MappingEq::Unequal;
}

std::string print_manifest(const Library& lib) { return lib.source; }

}  // namespace mapfuse::lib
