#include "mapfuse/script.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>
#include <sstream>

namespace mapfuse::script {

namespace {

bool is_numeric_literal(const std::string& s) {
  if (s.empty()) return false;
  size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i >= s.size()) return false;
  bool digit = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) digit = true;
    else if (c != '.' && c != 'e' && c != 'E' && c != '-' && c != '+' && c != 'f') return false;
  }
  return digit;
}

struct Tok {
  std::string text;
  int line, col;
};

std::vector<Tok> lex(const std::string& text) {
  std::vector<Tok> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (text[i + k] == '\n') {
        ++line;
        col = 1;
      } else ++col;
    }
    i += n;
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      out.push_back({text.substr(i, j - i), line, col});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        ((c == '-' || c == '+') && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      size_t j = i + 1;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '.' ||
                                 ((text[j] == '-' || text[j] == '+') && (text[j - 1] == 'e' || text[j - 1] == 'E'))))
        ++j;
      out.push_back({text.substr(i, j - i), line, col});
      advance(j - i);
      continue;
    }
    out.push_back({std::string(1, c), line, col});
    advance(1);
  }
  return out;
}

struct ScriptParser {
  std::vector<Tok> toks;
  size_t pos = 0;
  Script s;
  std::set<std::string> produced;  // inputs + results so far
  int next_call_id = 0;

  [[noreturn]] void fail(const std::string& msg) {
    const Tok& t = pos < toks.size() ? toks[pos] : toks.back();
    throw ir::ParseError("script: " + msg, t.line, t.col);
  }
  bool at(const std::string& t) const { return pos < toks.size() && toks[pos].text == t; }
  bool eat(const std::string& t) {
    if (at(t)) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(const std::string& t) {
    if (!eat(t)) fail("expected '" + t + "'");
  }
  std::string ident() {
    if (pos >= toks.size()) fail("unexpected end of script");
    std::string t = toks[pos].text;
    if (!std::isalpha(static_cast<unsigned char>(t[0])) && t[0] != '_') fail("expected identifier, got '" + t + "'");
    ++pos;
    return t;
  }

  void require_declared(const std::string& name) {
    if (!s.declarations.count(name)) fail("undeclared identifier '" + name + "'");
  }

  std::vector<std::string> ident_list() {
    std::vector<std::string> out;
    out.push_back(ident());
    while (eat(",")) out.push_back(ident());
    return out;
  }

  void declaration(lib::ElemKind kind) {
    for (const auto& name : ident_list()) {
      if (s.declarations.count(name)) fail("duplicate declaration of '" + name + "'");
      s.declarations[name] = ElementSpec{kind};
    }
    expect(";");
  }

  void call(std::vector<std::string> results) {
    for (const auto& r : results) {
      require_declared(r);
      if (produced.count(r)) fail("name '" + r + "' assigned more than once");
    }
    CallStatement c;
    c.id = next_call_id++;
    c.results = std::move(results);
    c.function = ident();
    expect("(");
    if (!at(")")) {
      do {
        if (pos >= toks.size()) fail("unexpected end of call arguments");
        std::string a = toks[pos].text;
        if (is_numeric_literal(a)) {
          ++pos;
        } else {
          a = ident();
          require_declared(a);
          if (!produced.count(a)) fail("use of '" + a + "' before definition");
        }
        c.arguments.push_back(a);
      } while (eat(","));
    }
    expect(")");
    expect(";");
    for (const auto& r : c.results) {
      if (std::find(c.arguments.begin(), c.arguments.end(), r) != c.arguments.end())
        fail("result '" + r + "' also appears as an argument (calls are out-of-place)");
      produced.insert(r);
    }
    s.calls.push_back(std::move(c));
  }

  Script run() {
    while (pos < toks.size()) {
      if (eat("float")) declaration(lib::ElemKind::Scalar);
      else if (eat("subvector32")) declaration(lib::ElemKind::Subvector32);
      else if (eat("TILE32x32")) declaration(lib::ElemKind::Tile32x32);
      else if (eat("input")) {
        for (const auto& name : ident_list()) {
          require_declared(name);
          if (produced.count(name)) fail("duplicate input '" + name + "'");
          s.inputs.push_back(name);
          produced.insert(name);
        }
        expect(";");
      } else if (eat("return")) {
        for (const auto& name : ident_list()) {
          require_declared(name);
          s.outputs.push_back(name);
        }
        expect(";");
      } else if (eat("(")) {
        auto results = ident_list();
        expect(")");
        expect("=");
        call(std::move(results));
      } else {
        std::string r = ident();
        require_declared(r);
        expect("=");
        call({r});
      }
    }
    return std::move(s);
  }
};

}  // namespace

Script parse_script(const std::string& text) {
  ScriptParser p;
  p.toks = lex(text);
  if (p.toks.empty()) throw ir::ParseError("script: empty input", 1, 1);
  return p.run();
}

std::string print_script(const Script& s) {
  std::ostringstream out;
  auto emit_group = [&](lib::ElemKind kind, const char* kw) {
    std::vector<std::string> names;
    for (const auto& [n, spec] : s.declarations)
      if (spec.kind == kind) names.push_back(n);
    if (names.empty()) return;
    out << kw << " ";
    for (size_t i = 0; i < names.size(); ++i) out << (i ? ", " : "") << names[i];
    out << ";\n";
  };
  emit_group(lib::ElemKind::Tile32x32, "TILE32x32");
  emit_group(lib::ElemKind::Subvector32, "subvector32");
  emit_group(lib::ElemKind::Scalar, "float");
  if (!s.inputs.empty()) {
    out << "input ";
    for (size_t i = 0; i < s.inputs.size(); ++i) out << (i ? ", " : "") << s.inputs[i];
    out << ";\n";
  }
  for (const auto& c : s.calls) {
    if (c.results.size() == 1) out << c.results[0];
    else {
      out << "(";
      for (size_t i = 0; i < c.results.size(); ++i) out << (i ? ", " : "") << c.results[i];
      out << ")";
    }
    out << " = " << c.function << "(";
    for (size_t i = 0; i < c.arguments.size(); ++i) out << (i ? ", " : "") << c.arguments[i];
    out << ");\n";
  }
  if (!s.outputs.empty()) {
    out << "return ";
    for (size_t i = 0; i < s.outputs.size(); ++i) out << (i ? ", " : "") << s.outputs[i];
    out << ";\n";
  }
  return out.str();
}

std::vector<int> DataDependencyGraph::consumers(int node) const {
  std::vector<int> out;
  for (const auto& e : edges)
    if (e.producer == node) out.push_back(e.consumer);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> DataDependencyGraph::producers(int node) const {
  std::vector<int> out;
  for (const auto& e : edges)
    if (e.consumer == node) out.push_back(e.producer);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool DataDependencyGraph::has_path(int from, int to) const {
  if (from == to) return true;
  std::vector<int> stack{from};
  std::set<int> seen;
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    for (int c : consumers(n)) {
      if (c == to) return true;
      if (seen.insert(c).second) stack.push_back(c);
    }
  }
  return false;
}

DataDependencyGraph build_dependency_graph(const Script& s, const lib::Library& lib) {
  DataDependencyGraph g;
  g.input_bindings = s.inputs;
  g.output_bindings = s.outputs;
  std::map<std::string, int> producer_of;
  for (const auto& c : s.calls) {
    g.nodes.push_back(c.id);
    const auto* f = lib.find(c.function);
    if (!f) throw std::runtime_error("script calls unknown function '" + c.function + "'");
    if (c.arguments.size() != f->args.size() || c.results.size() != f->results.size())
      throw std::runtime_error("call to '" + c.function + "' has wrong arity");
    for (const auto& r : c.results) producer_of[r] = c.id;
  }
  for (const auto& c : s.calls) {
    for (const auto& a : c.arguments) {
      auto it = producer_of.find(a);
      if (it != producer_of.end() && it->second != c.id && it->second < c.id)
        g.edges.push_back({it->second, c.id, a});
    }
  }
  // shared read-only inputs: a value consumed by two calls, produced by neither
  for (size_t i = 0; i < s.calls.size(); ++i) {
    for (size_t j = i + 1; j < s.calls.size(); ++j) {
      const auto& a = s.calls[i];
      const auto& b = s.calls[j];
      for (const auto& name : a.arguments) {
        if (is_numeric_literal(name)) continue;
        if (std::find(b.arguments.begin(), b.arguments.end(), name) == b.arguments.end()) continue;
        auto it = producer_of.find(name);
        if (it != producer_of.end() && (it->second == a.id || it->second == b.id)) continue;
        g.shared_inputs.push_back({a.id, b.id, name});
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  std::sort(g.shared_inputs.begin(), g.shared_inputs.end());
  g.shared_inputs.erase(std::unique(g.shared_inputs.begin(), g.shared_inputs.end()),
                        g.shared_inputs.end());
  return g;
}

std::vector<lib::Diagnostic> validate(const Script& s, const DataDependencyGraph& g,
                                      const lib::Library& lib) {
  std::vector<lib::Diagnostic> out;
  std::set<std::string> produced(s.inputs.begin(), s.inputs.end());
  for (const auto& c : s.calls) {
    const auto* f = lib.find(c.function);
    std::string where = "call " + std::to_string(c.id) + " (" + c.function + ")";
    if (!f) {
      out.push_back({"unknown-function", where, "no such library function"});
      continue;
    }
    if (c.arguments.size() != f->args.size()) {
      out.push_back({"arity-mismatch", where,
                     "expected " + std::to_string(f->args.size()) + " arguments, got " +
                         std::to_string(c.arguments.size())});
      continue;
    }
    for (size_t i = 0; i < c.arguments.size(); ++i) {
      const auto& sig = f->args[i];
      const std::string& a = c.arguments[i];
      bool literal = is_numeric_literal(a);
      if (sig.is_scalar) {
        if (!literal) {
          auto it = s.declarations.find(a);
          if (it == s.declarations.end() || it->second.kind != lib::ElemKind::Scalar)
            out.push_back({"type-mismatch", where,
                           "argument " + std::to_string(i) + " ('" + a + "') must be a scalar"});
        }
        continue;
      }
      if (literal) {
        out.push_back({"type-mismatch", where,
                       "argument " + std::to_string(i) + " is a literal but an element is expected"});
        continue;
      }
      auto it = s.declarations.find(a);
      const auto* decl = f->element(sig.name);
      if (it == s.declarations.end()) {
        out.push_back({"undeclared", where, "argument '" + a + "' is not declared"});
      } else if (decl && it->second.kind != decl->kind) {
        out.push_back({"type-mismatch", where,
                       "argument '" + a + "' is " + lib::to_string(it->second.kind) +
                           " but " + f->name + " expects " + lib::to_string(decl->kind)});
      }
      if (!produced.count(a))
        out.push_back({"use-before-def", where, "argument '" + a + "' used before definition"});
    }
    if (c.results.size() != f->results.size()) {
      out.push_back({"arity-mismatch", where,
                     "expected " + std::to_string(f->results.size()) + " results, got " +
                         std::to_string(c.results.size())});
    } else {
      for (size_t i = 0; i < c.results.size(); ++i) {
        auto it = s.declarations.find(c.results[i]);
        const auto* decl = f->element(f->results[i]);
        if (it != s.declarations.end() && decl && it->second.kind != decl->kind)
          out.push_back({"type-mismatch", where,
                         "result '" + c.results[i] + "' is " + lib::to_string(it->second.kind) +
                             " but " + f->name + " produces " + lib::to_string(decl->kind)});
      }
    }
    for (const auto& r : c.results) produced.insert(r);
  }
  for (const auto& o : s.outputs) {
    if (!produced.count(o))
      out.push_back({"unproduced-output", "return", "output '" + o + "' is never produced"});
  }
  // edge consistency: one edge per (producer result, consumer argument) match
  for (const auto& e : g.edges) {
    if (e.producer >= e.consumer)
      out.push_back({"graph-order", "edge " + e.name, "edge does not follow script order"});
  }
  return out;
}

}  // namespace mapfuse::script
