#include "mapfuse/blas.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "blas_data.inc"

namespace mapfuse::blas {

std::string library_manifest() { return blas_data::kLibraryManifest; }
std::string default_device_config_text() { return blas_data::kDeviceConfig; }

const lib::Library& default_library() {
  static const lib::Library lib = lib::load_library(library_manifest());
  return lib;
}

namespace {

struct CaseInfo {
  const char* key;   // script file key
  const char* tag;
};

const std::map<std::string, CaseInfo>& cases() {
  static const std::map<std::string, CaseInfo> m = {
      {"AXPYDOT", {"axpydot", "FS"}}, {"ATAX", {"atax", ""}},
      {"BICGK", {"bicgk", "F"}},      {"SGEMV", {"sgemv", "B"}},
      {"SGEMVT", {"sgemvt", "(S)"}},  {"SSCAL", {"sscal", "B"}},
      {"GEMVER", {"gemver", "FS"}},   {"GESUMMV", {"gesummv", "(F)"}},
      {"MADD", {"madd", "S"}},        {"VADD", {"vadd", "FS"}},
      {"WAXPBY", {"waxpby", "F"}},
  };
  return m;
}

std::string canonical(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(), ::toupper);
  if (up == "BICGK" || up == "BICG") return "BICGK";
  return up;
}

}  // namespace

std::vector<std::string> sequence_names() {
  std::vector<std::string> out;
  for (const auto& [name, info] : cases()) out.push_back(name);
  return out;
}

SequenceCase build_sequence(const std::string& name) {
  auto it = cases().find(canonical(name));
  if (it == cases().end()) throw std::runtime_error("unknown sequence '" + name + "'");
  auto sit = blas_data::kScripts.find(it->second.key);
  if (sit == blas_data::kScripts.end())
    throw std::runtime_error("missing script for sequence '" + name + "'");
  return {it->first, sit->second, it->second.tag};
}

const std::vector<float>& Problem::buffer(const std::string& name) const {
  auto it = buffers.find(name);
  if (it == buffers.end()) throw std::runtime_error("no buffer '" + name + "'");
  return it->second;
}

namespace {

int pad32(int v) { return (v + 31) / 32 * 32; }

// Buffer shape of a declared name within one sequence problem. Vectors take
// their length from the matrix dimension they index; with square problems the
// distinction is moot, but the VM checks exact dims.
std::pair<int, int> shape_of(const script::Script& s, const std::string& name, int rows, int cols) {
  auto it = s.declarations.find(name);
  if (it == s.declarations.end()) throw std::runtime_error("undeclared name '" + name + "'");
  switch (it->second.kind) {
    case lib::ElemKind::Tile32x32: return {rows, cols};
    case lib::ElemKind::Scalar: return {1, 1};
    case lib::ElemKind::Subvector32: break;
  }
  // Determine the vector's role by walking calls: arguments/results bound to
  // "varies y" elements index the row space, others the column space.
  const lib::Library& L = default_library();
  for (const auto& c : s.calls) {
    const auto* f = L.find(c.function);
    if (!f) continue;
    for (size_t i = 0; i < c.arguments.size(); ++i) {
      if (c.arguments[i] != name) continue;
      const auto& sig = f->args[i];
      if (sig.is_scalar) continue;
      const auto* decl = f->element(sig.name);
      if (decl && f->depth == 2) return decl->varies.y ? std::make_pair(1, rows) : std::make_pair(1, cols);
    }
    for (size_t i = 0; i < c.results.size(); ++i) {
      if (c.results[i] != name) continue;
      const auto* decl = f->element(f->results[i]);
      if (decl && f->depth == 2) return decl->varies.y ? std::make_pair(1, rows) : std::make_pair(1, cols);
    }
  }
  return {1, cols};
}

}  // namespace

Problem make_problem(const script::Script& s, int rows, int cols, uint32_t seed) {
  Problem p;
  p.rows = pad32(rows);
  p.cols = pad32(cols);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  // vector roles can depend on producers, so do two passes: dims first
  for (const auto& [name, spec] : s.declarations)
    p.dims[name] = shape_of(s, name, p.rows, p.cols);
  // deterministic fill order: script input order, then remaining names
  for (const auto& name : s.inputs) {
    auto d = s.declarations.at(name);
    if (d.kind == lib::ElemKind::Scalar) {
      p.scalars[name] = 0.25f + 0.5f * std::abs(dist(rng));
      continue;
    }
    auto [r, c] = p.dims[name];
    std::vector<float> buf(static_cast<size_t>(r) * c);
    for (auto& v : buf) v = dist(rng);
    p.buffers[name] = std::move(buf);
  }
  for (const auto& [name, spec] : s.declarations) {
    if (p.buffers.count(name) || p.scalars.count(name)) continue;
    if (spec.kind == lib::ElemKind::Scalar) {
      bool is_input = std::find(s.inputs.begin(), s.inputs.end(), name) != s.inputs.end();
      if (!is_input) p.buffers[name] = std::vector<float>(1, 0.0f);
      continue;
    }
    auto [r, c] = p.dims[name];
    p.buffers[name] = std::vector<float>(static_cast<size_t>(r) * c, 0.0f);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Reference executor: Table-style formulas in double precision.

namespace {

using Vec = std::vector<double>;

Vec widen(const std::vector<float>& v) { return Vec(v.begin(), v.end()); }

std::vector<float> narrow(const Vec& v) {
  std::vector<float> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

Vec matvec(const Vec& a, int rows, int cols, const Vec& x) {
  Vec y(rows, 0.0);
  for (int i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < cols; ++j) acc += a[static_cast<size_t>(i) * cols + j] * x[j];
    y[i] = acc;
  }
  return y;
}

Vec matvec_t(const Vec& a, int rows, int cols, const Vec& x) {
  Vec y(cols, 0.0);
  for (int j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (int i = 0; i < rows; ++i) acc += a[static_cast<size_t>(i) * cols + j] * x[i];
    y[j] = acc;
  }
  return y;
}

}  // namespace

std::map<std::string, std::vector<float>> reference_execute(const SequenceCase& c,
                                                            const Problem& p) {
  std::map<std::string, std::vector<float>> out;
  int m = p.rows, n = p.cols;
  auto buf = [&](const char* name) { return widen(p.buffer(name)); };
  auto scalar = [&](const char* name) { return static_cast<double>(p.scalars.at(name)); };

  if (c.name == "AXPYDOT") {
    Vec w = buf("w"), v = buf("v"), u = buf("u");
    double alpha = scalar("alpha");
    Vec z(n);
    double r = 0.0;
    for (int i = 0; i < n; ++i) z[i] = w[i] - alpha * v[i];
    for (int i = 0; i < n; ++i) r += z[i] * u[i];
    out["z"] = narrow(z);
    out["r"] = {static_cast<float>(r)};
  } else if (c.name == "ATAX") {
    Vec a = buf("A"), x = buf("x");
    out["y"] = narrow(matvec_t(a, m, n, matvec(a, m, n, x)));
  } else if (c.name == "BICGK") {
    Vec a = buf("A");
    out["q"] = narrow(matvec(a, m, n, buf("p")));
    out["s"] = narrow(matvec_t(a, m, n, buf("r")));
  } else if (c.name == "SGEMV") {
    Vec t = matvec(buf("A"), m, n, buf("x"));
    Vec y = buf("y");
    double alpha = scalar("alpha"), beta = scalar("beta");
    Vec z(m);
    for (int i = 0; i < m; ++i) z[i] = alpha * t[i] + beta * y[i];
    out["z"] = narrow(z);
  } else if (c.name == "SGEMVT") {
    Vec a = buf("A"), y = buf("y"), z = buf("z");
    double alpha = scalar("alpha"), beta = scalar("beta");
    Vec t = matvec_t(a, m, n, y);
    Vec x(n);
    for (int j = 0; j < n; ++j) x[j] = beta * t[j] + z[j];
    Vec u = matvec(a, m, n, x);
    Vec w(m);
    for (int i = 0; i < m; ++i) w[i] = alpha * u[i];
    out["x"] = narrow(x);
    out["w"] = narrow(w);
  } else if (c.name == "SSCAL") {
    Vec x = buf("x");
    double alpha = scalar("alpha");
    Vec y(n);
    for (int i = 0; i < n; ++i) y[i] = alpha * x[i];
    out["y"] = narrow(y);
  } else if (c.name == "GEMVER") {
    Vec a = buf("A"), u1 = buf("u1"), v1 = buf("v1"), u2 = buf("u2"), v2 = buf("v2");
    Vec y = buf("y"), z = buf("z");
    double alpha = scalar("alpha"), beta = scalar("beta");
    Vec b(static_cast<size_t>(m) * n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        b[static_cast<size_t>(i) * n + j] =
            a[static_cast<size_t>(i) * n + j] + u1[i] * v1[j] + u2[i] * v2[j];
    Vec t = matvec_t(b, m, n, y);
    Vec x(n);
    for (int j = 0; j < n; ++j) x[j] = beta * t[j] + z[j];
    Vec w0 = matvec(b, m, n, x);
    Vec w(m);
    for (int i = 0; i < m; ++i) w[i] = alpha * w0[i];
    out["B"] = narrow(b);
    out["x"] = narrow(x);
    out["w"] = narrow(w);
  } else if (c.name == "GESUMMV") {
    Vec t1 = matvec(buf("A"), m, n, buf("x"));
    Vec t2 = matvec(buf("B"), m, n, buf("x"));
    double alpha = scalar("alpha"), beta = scalar("beta");
    Vec y(m);
    for (int i = 0; i < m; ++i) y[i] = alpha * t1[i] + beta * t2[i];
    out["y"] = narrow(y);
  } else if (c.name == "MADD") {
    Vec a = buf("A"), b = buf("B");
    Vec cc(static_cast<size_t>(m) * n);
    for (size_t i = 0; i < cc.size(); ++i) cc[i] = a[i] + b[i];
    out["C"] = narrow(cc);
  } else if (c.name == "VADD") {
    Vec w = buf("w"), y = buf("y"), z = buf("z");
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = w[i] + y[i] + z[i];
    out["x"] = narrow(x);
  } else if (c.name == "WAXPBY") {
    Vec x = buf("x"), y = buf("y");
    double alpha = scalar("alpha"), beta = scalar("beta");
    Vec w(n);
    for (int i = 0; i < n; ++i) w[i] = alpha * x[i] + beta * y[i];
    out["w"] = narrow(w);
  } else {
    throw std::runtime_error("unknown sequence '" + c.name + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-call scalar semantics.

void reference_call(const script::Script& s, const script::CallStatement& call, Problem* p) {
  auto vec = [&](const std::string& name) { return widen(p->buffer(name)); };
  auto scalar_arg = [&](const std::string& a) -> double {
    if (p->scalars.count(a)) return p->scalars.at(a);
    return std::stod(a);  // numeric literal
  };
  auto put = [&](const std::string& name, const Vec& v) { p->buffers[name] = narrow(v); };
  (void)s;

  const auto& args = call.arguments;
  const auto& res = call.results;
  const std::string& f = call.function;
  if (f == "add") {
    Vec a = vec(args[0]), b = vec(args[1]), c(a.size());
    for (size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
    put(res[0], c);
  } else if (f == "scal") {
    double alpha = scalar_arg(args[0]);
    Vec v = vec(args[1]), x(v.size());
    for (size_t i = 0; i < v.size(); ++i) x[i] = alpha * v[i];
    put(res[0], x);
  } else if (f == "waxpby") {
    double alpha = scalar_arg(args[0]), beta = scalar_arg(args[2]);
    Vec x = vec(args[1]), y = vec(args[3]), w(x.size());
    for (size_t i = 0; i < w.size(); ++i) w[i] = alpha * x[i] + beta * y[i];
    put(res[0], w);
  } else if (f == "axpydot_stage") {
    Vec w = vec(args[0]), v = vec(args[2]);
    double alpha = scalar_arg(args[1]);
    Vec z(w.size());
    for (size_t i = 0; i < z.size(); ++i) z[i] = w[i] - alpha * v[i];
    put(res[0], z);
  } else if (f == "dot") {
    Vec x = vec(args[0]), y = vec(args[1]);
    double r = 0.0;
    for (size_t i = 0; i < x.size(); ++i) r += x[i] * y[i];
    put(res[0], Vec{r});
  } else if (f == "madd") {
    Vec a = vec(args[0]), b = vec(args[1]), c(a.size());
    for (size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
    put(res[0], c);
  } else if (f == "ger2") {
    auto [m, n] = p->dims.at(args[0]);
    Vec a = vec(args[0]), u1 = vec(args[1]), v1 = vec(args[2]), u2 = vec(args[3]), v2 = vec(args[4]);
    Vec b(a.size());
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        b[static_cast<size_t>(i) * n + j] =
            a[static_cast<size_t>(i) * n + j] + u1[i] * v1[j] + u2[i] * v2[j];
    put(res[0], b);
  } else if (f == "sgemv" || f == "sgemvs") {
    bool scaled = (f == "sgemvs");
    const std::string& a_name = scaled ? args[1] : args[0];
    const std::string& x_name = scaled ? args[2] : args[1];
    auto [m, n] = p->dims.at(a_name);
    Vec y = matvec(vec(a_name), m, n, vec(x_name));
    if (scaled) {
      double alpha = scalar_arg(args[0]);
      for (auto& v : y) v *= alpha;
    }
    put(res[0], y);
  } else if (f == "sgemtv") {
    auto [m, n] = p->dims.at(args[0]);
    put(res[0], matvec_t(vec(args[0]), m, n, vec(args[1])));
  } else {
    throw std::runtime_error("reference_call: unknown function '" + f + "'");
  }
}

std::map<std::string, std::vector<float>> reference_run_script(
    const script::Script& s, const Problem& p, const std::vector<int>& call_order) {
  Problem work = p;
  for (int id : call_order) {
    const script::CallStatement* call = nullptr;
    for (const auto& c : s.calls)
      if (c.id == id) call = &c;
    if (!call) throw std::runtime_error("reference_run_script: bad call id");
    reference_call(s, *call, &work);
  }
  std::map<std::string, std::vector<float>> out;
  for (const auto& o : s.outputs) out[o] = work.buffer(o);
  return out;
}

}  // namespace mapfuse::blas
