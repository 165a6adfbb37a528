#include "mapfuse/kernel.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace mapfuse::kernel {

namespace {

const char* remap_str(Remap r) { return r == Remap::Identity ? "identity" : "flat"; }

void emit_call(std::ostringstream& out, const RoutineCallIR& c, int indent) {
  std::string pad(static_cast<size_t>(indent) * 2, ' ');
  if (c.is_pure_clear()) {
    if (c.barrier_before) out << pad << "barrier\n";
    out << pad << "clear " << c.clear_key << "\n";
    return;
  }
  out << pad << "call " << c.label << " id=" << c.call_id << " kind=" << lib::to_string(c.kind)
      << " shape=" << c.routine_px << "x" << c.routine_py << " remap=" << remap_str(c.remap);
  if (c.active_threads > 0) out << " guard=" << c.active_threads;
  out << " {\n";
  if (c.barrier_before) out << pad << "  barrier\n";
  if (!c.clear_key.empty()) out << pad << "  clear " << c.clear_key << "\n";
  if (c.barrier_after_clear) out << pad << "  barrier\n";
  out << ir::print_program(c.body, indent + 1);
  out << pad << "}\n";
}

}  // namespace

std::string emit_pseudo_source(const KernelIR& k) {
  std::ostringstream out;
  out << "kernel " << k.name << " {\n";
  out << "  depth " << k.depth << "\n";
  out << "  block " << k.block_x << " " << k.block_y << "\n";
  out << "  instances " << k.instances << "\n";
  out << "  iterations " << k.iterations << "\n";
  out << "  iterate " << k.iter_dim << "\n";
  out << "  domain " << k.domain << "\n";
  out << "  shared " << k.shared_words << "\n";
  for (const auto& r : k.shared_regions) {
    out << "  shared " << r.key << " @ " << r.offset << " words " << r.words;
    if (r.stride != 32) out << " stride " << r.stride;
    out << "\n";
  }
  for (const auto& r : k.reg_arrays) {
    out << "  registers " << r.key << " words " << r.words;
    if (r.collapse_threads > 0) out << " collapse " << r.collapse_threads;
    out << "\n";
  }
  for (const auto& p : k.scalar_params) out << "  param " << p << "\n";
  auto section = [&](const char* name, const std::vector<RoutineCallIR>& calls) {
    if (calls.empty() && std::string(name) != "loop") return;
    out << "  " << name << " {\n";
    for (const auto& c : calls) emit_call(out, c, 2);
    out << "  }\n";
  };
  section("prologue", k.prologue);
  section("loop", k.body);
  section("epilogue", k.epilogue);
  out << "}\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Parser for the emitted format.

namespace {

struct KLines {
  std::vector<std::string> lines;
  size_t i = 0;

  static std::string strip(std::string s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
  bool peek(std::string* out) {
    size_t j = i;
    while (j < lines.size()) {
      std::string s = strip(lines[j]);
      if (!s.empty()) {
        *out = s;
        return true;
      }
      ++j;
    }
    return false;
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
  [[noreturn]] void fail(const std::string& msg) {
    throw std::runtime_error("kernel text line " + std::to_string(i) + ": " + msg);
  }
};

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

RoutineCallIR parse_call(KLines& src, const std::string& header,
                         const std::vector<std::string>& params) {
  RoutineCallIR c;
  auto tk = words(header);
  c.label = tk.at(1);
  for (size_t i = 2; i < tk.size(); ++i) {
    const std::string& t = tk[i];
    auto eq = t.find('=');
    if (eq == std::string::npos) continue;
    std::string key = t.substr(0, eq), val = t.substr(eq + 1);
    if (key == "id") c.call_id = std::stoi(val);
    else if (key == "kind") {
      if (val == "load") c.kind = lib::RoutineKind::Load;
      else if (val == "store") c.kind = lib::RoutineKind::Store;
      else c.kind = lib::RoutineKind::Compute;
    } else if (key == "shape") {
      auto x = val.find('x');
      c.routine_px = std::stoi(val.substr(0, x));
      c.routine_py = std::stoi(val.substr(x + 1));
    } else if (key == "remap") {
      c.remap = (val == "identity") ? Remap::Identity : Remap::FlatSplit;
    } else if (key == "guard") {
      c.active_threads = std::stoi(val);
    }
  }
  std::string body_text;
  int depth = 1;
  std::vector<std::string> raw;
  while (depth > 0) {
    std::string line;
    if (!src.next(&line)) src.fail("unterminated call block");
    for (char ch : line) {
      if (ch == '{') ++depth;
      if (ch == '}') --depth;
    }
    if (depth == 0) break;
    raw.push_back(line);
  }
  size_t start = 0;
  if (start < raw.size() && raw[start] == "barrier") {
    c.barrier_before = true;
    ++start;
  }
  if (start < raw.size() && raw[start].rfind("clear ", 0) == 0) {
    c.clear_key = KLines::strip(raw[start].substr(6));
    ++start;
    if (start < raw.size() && raw[start] == "barrier") {
      c.barrier_after_clear = true;
      ++start;
    }
  }
  for (size_t i = start; i < raw.size(); ++i) body_text += raw[i] + "\n";
  ir::ParseContext ctx;
  ctx.params = params;
  c.body = ir::parse_program(body_text, ctx);
  return c;
}

}  // namespace

KernelIR parse_kernel_text(const std::string& text) {
  KernelIR k;
  KLines src;
  {
    std::istringstream in(text);
    std::string l;
    while (std::getline(in, l)) src.lines.push_back(l);
  }
  std::string line;
  if (!src.next(&line) || words(line).at(0) != "kernel") src.fail("expected 'kernel <name> {'");
  k.name = words(line).at(1);
  while (src.next(&line)) {
    if (line == "}") break;
    auto tk = words(line);
    const std::string& key = tk[0];
    if (key == "depth") k.depth = std::stoi(tk.at(1));
    else if (key == "block") {
      k.block_x = std::stoi(tk.at(1));
      k.block_y = std::stoi(tk.at(2));
    } else if (key == "instances") k.instances = std::stoi(tk.at(1));
    else if (key == "iterations") k.iterations = std::stoi(tk.at(1));
    else if (key == "iterate") k.iter_dim = tk.at(1)[0];
    else if (key == "domain") k.domain = tk.at(1);
    else if (key == "shared" && tk.size() == 2) k.shared_words = std::stoi(tk.at(1));
    else if (key == "shared") {
      SharedRegion r;
      r.key = tk.at(1);
      for (size_t i = 2; i < tk.size(); ++i) {
        if (tk[i] == "@") r.offset = std::stoi(tk.at(++i));
        else if (tk[i] == "words") r.words = std::stoi(tk.at(++i));
        else if (tk[i] == "stride") r.stride = std::stoi(tk.at(++i));
      }
      k.shared_regions.push_back(r);
    } else if (key == "registers") {
      RegisterArray r;
      r.key = tk.at(1);
      for (size_t i = 2; i < tk.size(); ++i) {
        if (tk[i] == "words") r.words = std::stoi(tk.at(++i));
        else if (tk[i] == "collapse") r.collapse_threads = std::stoi(tk.at(++i));
      }
      k.reg_arrays.push_back(r);
    } else if (key == "param") {
      k.scalar_params.push_back(tk.at(1));
    } else if (key == "prologue" || key == "loop" || key == "epilogue") {
      std::vector<RoutineCallIR>* section =
          key == "prologue" ? &k.prologue : (key == "loop" ? &k.body : &k.epilogue);
      for (;;) {
        std::string inner;
        if (!src.next(&inner)) src.fail("unterminated section");
        if (inner == "}") break;
        if (inner == "barrier") {
          std::string nxt;
          if (!src.peek(&nxt)) src.fail("dangling barrier");
          if (nxt.rfind("clear ", 0) == 0) {
            src.next(&nxt);
            RoutineCallIR c;
            c.barrier_before = true;
            c.clear_key = KLines::strip(nxt.substr(6));
            section->push_back(std::move(c));
            continue;
          }
          src.fail("unexpected standalone barrier");
        }
        if (inner.rfind("clear ", 0) == 0) {
          RoutineCallIR c;
          c.clear_key = KLines::strip(inner.substr(6));
          section->push_back(std::move(c));
          continue;
        }
        if (inner.rfind("call ", 0) != 0) src.fail("expected call/clear, got '" + inner + "'");
        section->push_back(parse_call(src, inner, k.scalar_params));
      }
    } else {
      src.fail("unknown kernel key '" + key + "'");
    }
  }
  // resolve element slots against the arena tables
  auto bind = [&](RoutineCallIR& c) {
    c.bindings.assign(c.body.elements.size(), {});
    for (size_t e = 0; e < c.body.elements.size(); ++e) {
      const std::string& name = c.body.elements[e].name;
      Binding b;
      b.kind = Binding::Kind::Global;
      b.name = name;
      for (const auto& r : k.shared_regions)
        if (r.key == name) {
          b.kind = Binding::Kind::Shared;
          b.offset = r.offset;
          b.stride = r.stride;
        }
      if (b.kind == Binding::Kind::Global)
        for (size_t i = 0; i < k.reg_arrays.size(); ++i)
          if (k.reg_arrays[i].key == name) {
            b.kind = Binding::Kind::Register;
            b.reg_array = static_cast<int>(i);
          }
      c.bindings[e] = b;
    }
  };
  for (auto* sec : {&k.prologue, &k.body, &k.epilogue})
    for (auto& c : *sec) bind(c);
  return k;
}

}  // namespace mapfuse::kernel
