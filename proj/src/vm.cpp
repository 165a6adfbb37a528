#include "mapfuse/vm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mapfuse::vm {

namespace {

using kernel::Binding;
using kernel::KernelIR;
using kernel::Remap;
using kernel::RoutineCallIR;

constexpr float kPoison = std::numeric_limits<float>::quiet_NaN();

struct Grid {
  int full_x = 0, full_y = 0;      // instance grid in blocks
  int launch_x = 0, launch_y = 0;  // after shrinking the iterated dimension
  int n_elems = 0;                 // depth-1 element count
};

Grid derive_grid(const KernelIR& k, const LaunchArgs& args) {
  Grid g;
  auto it = args.buffers.find(k.domain);
  if (it == args.buffers.end()) throw VmFault("launch: no domain buffer '" + k.domain + "'");
  const GlobalBuffer& dom = it->second;
  auto ceil_div = [](int a, int b) { return (a + b - 1) / b; };
  if (k.depth == 2) {
    if (dom.rows % 32 || dom.cols % 32)
      throw VmFault("launch: domain '" + k.domain + "' not padded to 32");
    g.full_x = dom.cols / 32;
    g.full_y = dom.rows / 32;
    g.launch_x = k.iter_dim == 'x' ? ceil_div(g.full_x, k.iterations) : g.full_x;
    g.launch_y = k.iter_dim == 'y' ? ceil_div(g.full_y, k.iterations) : g.full_y;
  } else {
    int len = dom.rows == 1 ? dom.cols : dom.rows;
    if (len % 32) throw VmFault("launch: domain '" + k.domain + "' not padded to 32");
    g.n_elems = len / 32;
    g.full_x = ceil_div(g.n_elems, k.instances);
    g.full_y = 1;
    g.launch_x = ceil_div(g.full_x, k.iterations);
    g.launch_y = 1;
  }
  return g;
}

struct ThreadCost {
  uint32_t global_words = 0;
  uint32_t shared_words = 0;
  uint32_t atomics = 0;
  uint32_t arith = 0;
};

struct Interp {
  const KernelIR& k;
  const DeviceConfig& dev;
  const LaunchArgs& args;
  ExecutionStats stats;
  std::vector<TraceRecord>* trace;

  std::vector<float> shared;                    // arena, all instances
  std::vector<std::vector<float>> regs;         // [array][thread * words + slot]
  int block_id = 0, bx = 0, by = 0;
  int epoch = 0;
  std::vector<uint64_t> warp_cycles;
  int warps = 0;

  // per-call thread context
  std::vector<int64_t> env;
  std::vector<float> temps;
  ThreadCost cost;
  int cur_thread = 0;
  const RoutineCallIR* cur_call = nullptr;

  [[noreturn]] void fault(const std::string& msg) const {
    throw VmFault("vm fault: " + msg + " (block " + std::to_string(bx) + "," +
                  std::to_string(by) + ", thread " + std::to_string(cur_thread) +
                  (cur_call ? ", in " + cur_call->label : "") + ")");
  }

  GlobalBuffer buffer(const std::string& name) const {
    auto it = args.buffers.find(name);
    if (it == args.buffers.end()) throw VmFault("vm fault: unbound buffer '" + name + "'");
    return it->second;
  }

  void record(Space space, int region, int64_t addr, uint8_t kinds) {
    if (!trace) return;
    trace->push_back({block_id, epoch, space, region, addr, cur_thread, kinds});
  }

  // --- address resolution ---

  int64_t global_index(const GlobalBuffer& buf, const ir::Program& p, int32_t i0, int32_t i1,
                       const std::string& name) {
    int64_t r = p.eval_int(i0, env);
    if (i1 >= 0) {
      int64_t c = p.eval_int(i1, env);
      if (r < 0 || r >= buf.rows || c < 0 || c >= buf.cols)
        fault("global access out of bounds: " + name + "[" + std::to_string(r) + ", " +
              std::to_string(c) + "] dims " + std::to_string(buf.rows) + "x" +
              std::to_string(buf.cols));
      return r * buf.cols + c;
    }
    int64_t limit = static_cast<int64_t>(buf.rows) * buf.cols;
    if (r < 0 || r >= limit)
      fault("global access out of bounds: " + name + "[" + std::to_string(r) + "]");
    return r;
  }

  float* onchip_addr(const RoutineCallIR& c, const ir::Program& p, int elem, int32_t i0,
                     int32_t i1, int inst, int* region_out, int64_t* addr_out, Space* space_out) {
    const Binding& b = c.bindings[elem];
    int64_t r = p.eval_int(i0, env);
    int64_t cc = (i1 >= 0) ? p.eval_int(i1, env) : 0;
    if (b.kind == Binding::Kind::Shared) {
      const kernel::SharedRegion* region = nullptr;
      int region_idx = 0;
      for (size_t i = 0; i < k.shared_regions.size(); ++i)
        if (k.shared_regions[i].key == b.name) {
          region = &k.shared_regions[i];
          region_idx = static_cast<int>(i);
        }
      if (!region) fault("no shared region '" + b.name + "'");
      int64_t within = (i1 >= 0) ? r * region->stride + cc : r;
      if (within < 0 || within >= region->words)
        fault("on-chip access out of element bounds: " + b.name + " word " +
              std::to_string(within));
      int64_t addr = static_cast<int64_t>(inst) * k.shared_words + b.offset + within;
      *region_out = region_idx;
      *addr_out = addr;
      *space_out = Space::Shared;
      return &shared[addr];
    }
    if (b.kind == Binding::Kind::Register) {
      const kernel::RegisterArray& arr = k.reg_arrays[b.reg_array];
      // 2-D register elements are tiles; logical word = r*32 + c
      int64_t w = (i1 >= 0) ? r * 32 + cc : r;
      if (w < 0 || w >= arr.words)
        fault("register access out of element bounds: " + b.name + " word " + std::to_string(w));
      int64_t slot = arr.collapse_threads > 0 ? w / arr.collapse_threads : w;
      *region_out = b.reg_array;
      *addr_out = w;  // logical word, for the ownership audit
      *space_out = Space::Register;
      return &regs[b.reg_array][static_cast<int64_t>(cur_thread) * arr.words + slot];
    }
    fault("on-chip reference to '" + b.name + "' which has no on-chip binding");
  }

  // --- expression evaluation ---

  float eval_float(const RoutineCallIR& c, const ir::Program& p, int32_t fe, int inst) {
    const ir::FloatNode& n = p.floats[fe];
    switch (n.op) {
      case ir::FloatOp::Const: return n.value;
      case ir::FloatOp::Temp: return temps[n.slot];
      case ir::FloatOp::Param: {
        auto it = args.scalars.find(p.params[n.slot]);
        if (it == args.scalars.end()) fault("unbound scalar '" + p.params[n.slot] + "'");
        return it->second;
      }
      case ir::FloatOp::Load: {
        if (n.global) {
          const std::string& name = p.elements[n.slot].name;
          GlobalBuffer buf = buffer(name);
          int64_t idx = global_index(buf, p, n.idx0, n.idx1, name);
          cost.global_words += 1;
          stats.global_words_loaded += 1;
          stats.per_buffer[name].loaded += 1;
          record(Space::Global, 0, idx, 1);
          return (*buf.data)[idx];
        }
        int region;
        int64_t addr;
        Space space;
        float* ptr = onchip_addr(c, p, n.slot, n.idx0, n.idx1, inst, &region, &addr, &space);
        if (space == Space::Shared) {
          cost.shared_words += 1;
          stats.shared_accesses += 1;
        }
        record(space, region, addr, 1);
        if (args.poison_onchip && std::isnan(*ptr))
          fault("read of uninitialized on-chip word in '" + p.elements[n.slot].name + "'");
        return *ptr;
      }
      case ir::FloatOp::Add:
        cost.arith += 1;
        return eval_float(c, p, n.a, inst) + eval_float(c, p, n.b, inst);
      case ir::FloatOp::Sub:
        cost.arith += 1;
        return eval_float(c, p, n.a, inst) - eval_float(c, p, n.b, inst);
      case ir::FloatOp::Mul:
        cost.arith += 1;
        return eval_float(c, p, n.a, inst) * eval_float(c, p, n.b, inst);
      case ir::FloatOp::Neg:
        cost.arith += 1;
        return -eval_float(c, p, n.a, inst);
      case ir::FloatOp::Fma: {
        cost.arith += 1;
        float a = eval_float(c, p, n.a, inst);
        float b = eval_float(c, p, n.b, inst);
        float d = eval_float(c, p, n.c, inst);
        return std::fmaf(a, b, d);
      }
    }
    return 0.0f;
  }

  bool eval_cmp(const ir::Program& p, const ir::Stmt& s) {
    int64_t a = p.eval_int(s.cmp_lhs, env);
    int64_t b = p.eval_int(s.cmp_rhs, env);
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

  void exec_stmts(const RoutineCallIR& c, const ir::Program& p, const std::vector<ir::Stmt>& stmts,
                  int inst) {
    for (const auto& s : stmts) {
      switch (s.kind) {
        case ir::StmtKind::For: {
          int64_t b = p.eval_int(s.begin, env);
          int64_t e = p.eval_int(s.end, env);
          int64_t st = p.eval_int(s.step, env);
          for (int64_t v = b; v < e; v += st) {
            env[s.loop_sym] = v;
            exec_stmts(c, p, s.body, inst);
          }
          break;
        }
        case ir::StmtKind::If:
          if (eval_cmp(p, s)) exec_stmts(c, p, s.body, inst);
          break;
        case ir::StmtKind::DeclTemp:
        case ir::StmtKind::AssignTemp:
          temps[s.temp_slot] = eval_float(c, p, s.fexpr, inst);
          break;
        case ir::StmtKind::Store: {
          float v = eval_float(c, p, s.fexpr, inst);
          if (s.global) {
            const std::string& name = p.elements[s.element].name;
            GlobalBuffer buf = buffer(name);
            int64_t idx = global_index(buf, p, s.idx0, s.idx1, name);
            cost.global_words += 1;
            stats.global_words_stored += 1;
            stats.per_buffer[name].stored += 1;
            record(Space::Global, 0, idx, 2);
            (*buf.data)[idx] = v;
          } else {
            int region;
            int64_t addr;
            Space space;
            float* ptr = onchip_addr(c, p, s.element, s.idx0, s.idx1, inst, &region, &addr, &space);
            if (space == Space::Shared) {
              cost.shared_words += 1;
              stats.shared_accesses += 1;
            }
            record(space, region, addr, 2);
            *ptr = v;
          }
          break;
        }
        case ir::StmtKind::AtomicAdd: {
          float v = eval_float(c, p, s.fexpr, inst);
          cost.atomics += 1;
          stats.atomics += 1;
          if (s.global) {
            const std::string& name = p.elements[s.element].name;
            GlobalBuffer buf = buffer(name);
            int64_t idx = global_index(buf, p, s.idx0, s.idx1, name);
            cost.global_words += 1;
            stats.global_words_stored += 1;
            stats.per_buffer[name].stored += 1;
            record(Space::Global, 0, idx, 2 | 4);
            (*buf.data)[idx] += v;
          } else {
            int region;
            int64_t addr;
            Space space;
            float* ptr = onchip_addr(c, p, s.element, s.idx0, s.idx1, inst, &region, &addr, &space);
            if (space == Space::Shared) {
              cost.shared_words += 1;
              stats.shared_accesses += 1;
            }
            record(space, region, addr, 2 | 4);
            if (args.poison_onchip && std::isnan(*ptr))
              fault("atomic add to uninitialized on-chip word in '" + p.elements[s.element].name +
                    "'");
            *ptr += v;
          }
          break;
        }
        case ir::StmtKind::Barrier:
        case ir::StmtKind::Clear:
          fault("barrier/clear statement inside routine body");
      }
    }
  }

  void barrier() {
    for (auto& w : warp_cycles) w += dev.cycles_per_barrier;
    stats.barriers += 1;
    ++epoch;
  }

  void run_clear(const std::string& key) {
    const kernel::SharedRegion* region = nullptr;
    int region_idx = 0;
    for (size_t i = 0; i < k.shared_regions.size(); ++i)
      if (k.shared_regions[i].key == key) {
        region = &k.shared_regions[i];
        region_idx = static_cast<int>(i);
      }
    if (!region) throw VmFault("vm fault: clear of unknown region '" + key + "'");
    int threads = k.threads();
    std::vector<ThreadCost> costs(threads);
    for (int inst = 0; inst < k.instances; ++inst) {
      for (int w = 0; w < region->words; ++w) {
        int t = (inst * region->words + w) % threads;
        cur_thread = t;
        int64_t addr = static_cast<int64_t>(inst) * k.shared_words + region->offset + w;
        shared[addr] = 0.0f;
        record(Space::Shared, region_idx, addr, 2);
        costs[t].shared_words += 1;
        stats.shared_accesses += 1;
      }
    }
    fold_costs(costs);
  }

  void fold_costs(const std::vector<ThreadCost>& costs) {
    for (int w = 0; w < warps; ++w) {
      uint64_t mem = 0, arith_max = 0;
      for (int l = 0; l < dev.warp_size; ++l) {
        int t = w * dev.warp_size + l;
        if (t >= static_cast<int>(costs.size())) break;
        const ThreadCost& tc = costs[t];
        mem += static_cast<uint64_t>(tc.global_words) * dev.cycles_per_global_word +
               static_cast<uint64_t>(tc.shared_words) * dev.cycles_per_shared_word +
               static_cast<uint64_t>(tc.atomics) * dev.cycles_per_atomic;
        arith_max = std::max<uint64_t>(arith_max, tc.arith);
        stats.arith_ops += tc.arith;
      }
      warp_cycles[w] += mem + arith_max * dev.cycles_per_arith_op;
    }
  }

  // Executes one routine call for every thread of the block.
  void run_call(const RoutineCallIR& c, const Grid& g, int lbx, int lby, int it) {
    if (c.barrier_before) barrier();
    if (!c.clear_key.empty()) run_clear(c.clear_key);
    if (c.barrier_after_clear) barrier();
    if (c.body.stmts.empty()) return;

    int threads = k.threads();
    std::vector<ThreadCost> costs(threads);
    int inst_size = c.routine_px * c.routine_py;
    for (int f = 0; f < threads; ++f) {
      if (c.active_threads > 0 && f >= c.active_threads) continue;
      int inst, tx, ty;
      if (c.remap == Remap::Identity) {
        inst = 0;
        tx = f % k.block_x;
        ty = f / k.block_x;
      } else {
        inst = f / inst_size;
        int local = f % inst_size;
        tx = local % c.routine_px;
        ty = local / c.routine_px;
        if (inst >= k.instances) continue;
      }
      // instance coordinates in the simulated full grid
      int64_t ex, ey;
      bool active = true;
      if (k.depth == 2) {
        if (k.iter_dim == 'y') {
          ex = lbx;
          ey = static_cast<int64_t>(lby) * k.iterations + it;
          if (ey >= g.full_y) active = false;
        } else {
          ex = static_cast<int64_t>(lbx) * k.iterations + it;
          ey = lby;
          if (ex >= g.full_x) active = false;
        }
      } else {
        int64_t gblock = static_cast<int64_t>(lbx) * k.iterations + it;
        ex = gblock * k.instances + inst;
        ey = 0;
        if (ex >= g.n_elems) active = false;
      }
      if (!active) continue;

      env.assign(c.body.symbol_count(), 0);
      env[ir::kSymTx] = tx;
      env[ir::kSymTy] = ty;
      env[ir::kSymEx] = ex;
      env[ir::kSymEy] = ey;
      env[ir::kSymBx] = lbx;
      env[ir::kSymBy] = lby;
      env[ir::kSymInst] = inst;
      env[ir::kSymFlat] = f;
      env[ir::kSymNx] = k.depth == 2 ? g.full_x : g.n_elems;
      env[ir::kSymNy] = g.full_y;
      temps.assign(c.body.temps.size(), 0.0f);
      cost = {};
      cur_thread = f;
      cur_call = &c;
      exec_stmts(c, c.body, c.body.stmts, inst);
      costs[f] = cost;
      cur_call = nullptr;
    }
    fold_costs(costs);
  }

  void run_block(const Grid& g, int lbx, int lby) {
    bx = lbx;
    by = lby;
    epoch = 0;
    warps = (k.threads() + dev.warp_size - 1) / dev.warp_size;
    warp_cycles.assign(warps, 0);
    shared.assign(static_cast<size_t>(k.shared_words_total()),
                  args.poison_onchip ? kPoison : 0.0f);
    regs.clear();
    for (const auto& arr : k.reg_arrays)
      regs.emplace_back(static_cast<size_t>(arr.words) * k.threads(),
                        args.poison_onchip ? kPoison : 0.0f);

    for (const auto& c : k.prologue) run_call(c, g, lbx, lby, 0);
    for (int it = 0; it < k.iterations; ++it) {
      for (const auto& c : k.body) run_call(c, g, lbx, lby, it);
    }
    for (const auto& c : k.epilogue) run_call(c, g, lbx, lby, k.iterations - 1);

    uint64_t block_cycles = 0;
    for (uint64_t w : warp_cycles) block_cycles = std::max(block_cycles, w);
    stats.block_cycles_sum += block_cycles;
  }
};

}  // namespace

LaunchResult launch(const KernelIR& k, const DeviceConfig& dev, const LaunchArgs& args) {
  LaunchResult result;
  Grid g = derive_grid(k, args);
  Interp in{k, dev, args, {}, args.trace ? &result.trace : nullptr};

  in.stats.threads_per_block = k.threads();
  in.stats.shared_bytes = k.shared_bytes_total();
  if (k.threads() > dev.max_threads_per_block)
    throw VmFault("vm fault: block of " + std::to_string(k.threads()) + " threads exceeds device");
  if (k.shared_bytes_total() > dev.shared_bytes_per_block)
    throw VmFault("vm fault: shared allocation exceeds device limit");

  for (int lby = 0; lby < g.launch_y; ++lby)
    for (int lbx = 0; lbx < g.launch_x; ++lbx) {
      in.block_id = lby * g.launch_x + lbx;
      in.run_block(g, lbx, lby);
    }

  in.stats.blocks = g.launch_x * g.launch_y;
  int occ = dev.occupancy(k.shared_bytes_total(), k.threads());
  if (occ == 0) throw VmFault("vm fault: zero occupancy");
  in.stats.occupancy = occ;
  in.stats.latency_factor = dev.latency_factor(occ);
  double parallel = static_cast<double>(in.stats.block_cycles_sum) /
                    (static_cast<double>(dev.sm_count) * occ);
  in.stats.cycles = static_cast<uint64_t>(std::ceil(parallel / in.stats.latency_factor));
  result.stats = in.stats;
  if (args.trace) result.races = detect_races(k, result.trace);
  return result;
}

RaceReport detect_races(const kernel::KernelIR& k, const std::vector<TraceRecord>& trace) {
  RaceReport report;
  // group shared accesses by (block, epoch, addr)
  struct Key {
    int32_t block, epoch;
    int64_t addr;
    bool operator<(const Key& o) const {
      if (block != o.block) return block < o.block;
      if (epoch != o.epoch) return epoch < o.epoch;
      return addr < o.addr;
    }
  };
  std::map<Key, std::vector<const TraceRecord*>> groups;
  for (const auto& r : trace)
    if (r.space == Space::Shared) groups[{r.block, r.epoch, r.addr}].push_back(&r);
  for (auto& [key, recs] : groups) {
    for (const auto* w : recs) {
      if (!(w->kinds & 2) || (w->kinds & 4)) continue;  // non-atomic writes only
      const TraceRecord* conflict = nullptr;
      for (const auto* o : recs)
        if (o->thread != w->thread) {
          conflict = o;
          break;
        }
      if (conflict) {
        Hazard h;
        h.key = k.shared_regions[w->region].key;
        h.word = key.addr - k.shared_regions[w->region].offset;
        h.writer = w->thread;
        h.other = conflict->thread;
        h.writer_kinds = w->kinds;
        h.other_kinds = conflict->kinds;
        h.block = key.block;
        h.epoch = key.epoch;
        report.hazards.push_back(h);
        break;  // one hazard per word/epoch is enough
      }
    }
  }
  return report;
}

std::optional<uint64_t> measure_routine(const lib::ElementaryFunction& f, const lib::Routine& r,
                                        const MeasureEnv& env, const DeviceConfig& dev) {
  if (env.instances > f.max_instances) return std::nullopt;
  int by = f.depth == 2 ? 4 : 1;
  int block_x = f.depth == 2 ? 32 : 32 * env.instances;
  int block_y = f.depth == 2 ? by : 1;

  kernel::KernelIR k;
  k.name = "bench_" + f.name + "_" + r.id();
  k.depth = f.depth;
  k.block_x = block_x;
  k.block_y = block_y;
  k.instances = f.depth == 2 ? 1 : env.instances;
  k.iterations = env.iterations;
  k.iter_dim = f.depth == 2 ? 'y' : 'x';
  k.domain = "__domain";

  kernel::RoutineCallIR call;
  call.body = ir::substitute_macros(
      r.body, {{"BY", by}, {"IPB", k.instances}, {"ITERS", env.iterations}});
  call.label = f.name + "." + r.id();
  call.kind = r.kind;
  call.routine_px = f.par_x;
  call.routine_py = f.depth == 2 ? block_y : 1;
  call.remap = f.depth == 2 ? kernel::Remap::Identity : kernel::Remap::FlatSplit;
  call.active_threads = 0;

  // pack every referenced element into shared memory
  int offset = 0;
  call.bindings.resize(call.body.elements.size());
  for (size_t e = 0; e < call.body.elements.size(); ++e) {
    const std::string& name = call.body.elements[e].name;
    const auto* decl = f.element(name);
    if (!decl) return std::nullopt;
    bool tile = decl->kind == lib::ElemKind::Tile32x32;
    int stride = tile ? 33 : 32;
    int words = tile ? 33 * 32 : lib::elem_words(decl->kind);
    kernel::SharedRegion region{name, offset, words, stride};
    k.shared_regions.push_back(region);
    kernel::Binding b;
    b.kind = kernel::Binding::Kind::Shared;
    b.name = name;
    b.offset = offset;
    b.stride = stride;
    call.bindings[e] = b;
    offset += words;
  }
  k.shared_words = offset;
  int shared_bytes = k.shared_words_total() * 4 + env.extra_shared_bytes;
  if (shared_bytes > dev.shared_bytes_per_block) return std::nullopt;
  if (k.threads() > dev.max_threads_per_block) return std::nullopt;

  k.body.push_back(std::move(call));

  // synthetic buffers covering one block's footprint across the iterations
  LaunchArgs args;
  args.poison_onchip = false;
  std::map<std::string, std::vector<float>> storage;
  int rows = 32 * env.iterations;
  int dcols = 32 * (f.depth == 2 ? 1 : k.instances * env.iterations);
  storage["__domain"] = std::vector<float>(
      f.depth == 2 ? static_cast<size_t>(rows) * 32 : static_cast<size_t>(dcols), 1.0f);
  args.buffers["__domain"] = f.depth == 2 ? GlobalBuffer{rows, 32, &storage["__domain"]}
                                          : GlobalBuffer{1, dcols, &storage["__domain"]};
  for (const auto& decl : f.elements) {
    if (storage.count(decl.name)) continue;
    int brows = 1, bcols = 1;
    if (decl.kind == lib::ElemKind::Tile32x32) {
      brows = f.depth == 2 && k.iter_dim == 'y' ? rows : 32;
      bcols = 32;
    } else if (decl.kind == lib::ElemKind::Subvector32) {
      bcols = decl.varies.y ? rows : dcols;
    }
    storage[decl.name] = std::vector<float>(static_cast<size_t>(brows) * bcols, 1.0f);
    args.buffers[decl.name] = {brows, bcols, &storage[decl.name]};
  }
  for (const auto& p : f.scalar_params) args.scalars[p] = 1.0f;

  // occupancy from the simulated environment, including the extra allocation
  int occ = dev.occupancy(shared_bytes, k.threads());
  if (occ == 0) return std::nullopt;

  LaunchResult res = launch(k, dev, args);
  double adjusted = static_cast<double>(res.stats.block_cycles_sum) / dev.latency_factor(occ);
  return static_cast<uint64_t>(std::ceil(adjusted / env.iterations));
}

}  // namespace mapfuse::vm
