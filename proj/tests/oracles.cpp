// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hetersched::oracle {
namespace {

struct Task {
  std::uint32_t op = 0;
  Tick delivered = 0;
  std::vector<std::uint32_t> deps;  // task indices
  std::vector<std::uint32_t> dependents;
  Tick cpu = 0;
  double speedup = 0.0;
};

struct State {
  std::vector<Tick> finish;      // F_j
  std::vector<Tick> completion;  // kNever until mapped
  std::vector<std::uint32_t> waiting;  // unmapped dependencies
  Tick now = 0;
  std::size_t mapped = 0;
  std::vector<Decision> decisions;
};

Tick copy_time(const TransferModel& m, std::uint64_t bytes, unsigned hops, unsigned sharers) {
  if (bytes == 0) return 0;
  const double slow = hops > 1 ? 1.0 + m.hop_penalty * (hops - 1) * std::max(sharers, 1u) : 1.0;
  const double base = static_cast<double>(m.latency) + std::ceil(static_cast<double>(bytes) / m.bandwidth);
  return round_ticks(base * slow);
}

class Model {
 public:
  Model(const Workflow& wf, const NodeConfig& cfg, Policy policy, const NodeCase& nc, std::span<const double> sp)
      : wf_(&wf), cfg_(cfg), policy_(policy) {
    const double scale = 1.0 + cfg.cpu_contention * (cfg.cpu_cores > 0 ? cfg.cpu_cores - 1.0 : 0.0);
    for (std::uint32_t g = 0; g < cfg.gpus; ++g) kinds_.push_back(DeviceKind::Gpu);
    for (std::uint32_t c = 0; c < cfg.cpu_cores; ++c) kinds_.push_back(DeviceKind::CpuCore);
    for (std::size_t i = 0; i < nc.instances.size(); ++i) {
      const auto& st = wf.stage(nc.instances[i].stage);
      const auto base = static_cast<std::uint32_t>(tasks_.size());
      for (std::uint32_t l = 0; l < st.op_count; ++l) {
        const auto& op = wf.op(st.first_op + l);
        Task t;
        t.op = st.first_op + l;
        t.delivered = nc.delivered[i];
        for (std::uint32_t d : op.deps) t.deps.push_back(base + (d - st.first_op));
        t.cpu = std::max<Tick>(1, round_ticks(static_cast<double>(op.spec->cpu_cost) * scale));
        t.speedup = sp.empty() ? op.spec->speedup_estimate() : sp[t.op];
        tasks_.push_back(std::move(t));
      }
    }
    for (std::uint32_t i = 0; i < tasks_.size(); ++i) {
      for (std::uint32_t d : tasks_[i].deps) tasks_[d].dependents.push_back(i);
    }
  }

  State initial() const {
    State s;
    s.finish.assign(kinds_.size(), 0);
    s.completion.assign(tasks_.size(), kNever);
    for (const auto& t : tasks_) s.waiting.push_back(static_cast<std::uint32_t>(t.deps.size()));
    return s;
  }

  bool done(const State& s) const { return s.mapped == tasks_.size(); }
  std::size_t task_count() const { return tasks_.size(); }
  std::size_t device_count() const { return kinds_.size(); }

  bool ready(const State& s, std::uint32_t i) const { return s.completion[i] == kNever && s.waiting[i] == 0; }

  /// c_i: delivery for stage roots, else the latest dependency completion.
  Tick created(const State& s, std::uint32_t i) const {
    if (tasks_[i].deps.empty()) return tasks_[i].delivered;
    Tick c = 0;
    for (std::uint32_t d : tasks_[i].deps) c = std::max(c, s.completion[d]);
    return c;
  }

  /// beta(now), or kNever when nothing is ready.
  Tick beta(const State& s) const {
    Tick zeta = kNever;
    for (std::uint32_t i = 0; i < tasks_.size(); ++i) {
      if (!ready(s, i)) continue;
      const Tick c = created(s, i);
      zeta = std::min(zeta, c <= s.now ? s.now : c);
    }
    if (zeta == kNever) return kNever;
    const Tick tau = *std::min_element(s.finish.begin(), s.finish.end());
    return std::max(tau, zeta);
  }

  std::uint32_t phi(const State& s) const {
    std::uint32_t best = 0;
    for (std::uint32_t j = 1; j < s.finish.size(); ++j) {
      if (s.finish[j] < s.finish[best]) best = j;
    }
    return best;
  }

  std::uint32_t theta(const State& s, Tick b, DeviceKind kind) const {
    std::uint32_t best = kNoInstance;
    auto earlier = [&](std::uint32_t a, std::uint32_t c) {
      const Tick ca = created(s, a), cc = created(s, c);
      return ca != cc ? ca < cc : a < c;
    };
    for (std::uint32_t i = 0; i < tasks_.size(); ++i) {
      if (!ready(s, i) || created(s, i) > b) continue;
      if (best == kNoInstance) {
        best = i;
        continue;
      }
      const double si = tasks_[i].speedup, sb = tasks_[best].speedup;
      bool better;
      if (policy_ == Policy::Fcfs) {
        better = earlier(i, best);
      } else if (kind == DeviceKind::Gpu) {
        better = si > sb || (si == sb && earlier(i, best));
      } else {
        better = si < sb || (si == sb && earlier(i, best));
      }
      if (better) best = i;
    }
    return best;
  }

  Tick cost(std::uint32_t i, std::uint32_t j) const {
    const Task& t = tasks_[i];
    if (kinds_[j] == DeviceKind::CpuCore) return t.cpu;
    const auto& spec = *wf_->op(t.op).spec;
    const unsigned hops = cfg_.links.hops.empty() ? 1 : cfg_.links.hops[j];
    const unsigned sharers = cfg_.links.sharers.empty() ? 1 : cfg_.links.sharers[j];
    return copy_time(cfg_.transfer, spec.input_bytes, hops, sharers) + spec.gpu_cost +
           copy_time(cfg_.transfer, spec.output_bytes, hops, sharers);
  }

  void apply(State& s, std::uint32_t i, std::uint32_t j, Tick t) const {
    const Tick end = t + cfg_.sched_overhead + cost(i, j);
    s.finish[j] = end;
    s.completion[i] = end;
    for (std::uint32_t d : tasks_[i].dependents) --s.waiting[d];
    s.now = t;
    ++s.mapped;
    s.decisions.push_back(Decision{i, j, t});
  }

  Tick makespan(const State& s) const { return *std::max_element(s.finish.begin(), s.finish.end()); }

  DeviceKind kind(std::uint32_t j) const { return kinds_[j]; }

 private:
  const Workflow* wf_ = nullptr;
  NodeConfig cfg_;
  Policy policy_;
  std::vector<DeviceKind> kinds_;
  std::vector<Task> tasks_;
};

void search(const Model& m, const State& s, std::vector<RefRun>& out, std::size_t cap) {
  if (out.size() >= cap) return;
  if (m.done(s)) {
    out.push_back(RefRun{s.decisions, m.makespan(s)});
    return;
  }
  const Tick b = m.beta(s);
  if (b == kNever) return;
  const std::uint32_t want_dev = m.phi(s);
  const std::uint32_t want_task = m.theta(s, b, m.kind(want_dev));
  for (std::uint32_t i = 0; i < m.task_count(); ++i) {
    if (!m.ready(s, i)) continue;
    for (std::uint32_t j = 0; j < m.device_count(); ++j) {
      const Tick t = std::max({s.finish[j], m.created(s, i), s.now});
      if (j != want_dev || t != b || i != want_task) continue;
      State next = s;
      m.apply(next, i, j, t);
      search(m, next, out, cap);
    }
  }
}

}  // namespace

RefRun reference_run(const Workflow& wf, const NodeConfig& cfg, Policy policy, const NodeCase& nc,
                     std::span<const double> speedups) {
  const Model m(wf, cfg, policy, nc, speedups);
  State s = m.initial();
  while (!m.done(s)) {
    const Tick b = m.beta(s);
    const std::uint32_t j = m.phi(s);
    m.apply(s, m.theta(s, b, m.kind(j)), j, b);
  }
  return RefRun{s.decisions, m.makespan(s)};
}

std::vector<RefRun> consistent_sequences(const Workflow& wf, const NodeConfig& cfg, Policy policy,
                                         const NodeCase& nc, std::size_t max_sequences) {
  const Model m(wf, cfg, policy, nc, {});
  std::vector<RefRun> out;
  search(m, m.initial(), out, max_sequences);
  return out;
}

RefRun engine_run(const Workflow& wf, const NodeConfig& cfg, const PolicyConfig& policy, const NodeCase& nc) {
  NodeEngine e(wf, cfg, policy);
  for (std::size_t i = 0; i < nc.instances.size(); ++i) e.deliver(nc.instances[i], nc.delivered[i]);
  RefRun r;
  r.makespan = e.run_to_completion();
  for (const auto& a : e.assignments()) r.decisions.push_back(Decision{a.instance, a.device, a.time});
  return r;
}

NodeCase random_case(const Workflow& wf, std::uint64_t seed, Tick spread) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Tick> at(0, spread);
  NodeCase nc;
  nc.instances = instantiate(wf);
  for (std::size_t i = 0; i < nc.instances.size(); ++i) nc.delivered.push_back(at(rng));
  return nc;
}

NodeConfig random_node(std::uint64_t seed, unsigned max_devices) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 7);
  const unsigned total = std::uniform_int_distribution<unsigned>(2, std::max(2u, max_devices))(rng);
  NodeConfig c;
  c.gpus = std::uniform_int_distribution<unsigned>(1, std::min(3u, total - 1))(rng);
  c.cpu_cores = total - c.gpus;
  c.transfer.latency = std::uniform_int_distribution<Tick>(0, 20)(rng);
  c.transfer.bandwidth = std::uniform_real_distribution<double>(50.0, 4000.0)(rng);
  c.transfer.hop_penalty = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
  std::bernoulli_distribution remote(0.3);
  for (unsigned g = 0; g < c.gpus; ++g) {
    const bool r = remote(rng);
    c.links.hops.push_back(r ? 2 : 1);
    c.links.sharers.push_back(r ? c.gpus : 1);
  }
  c.cpu_contention = std::uniform_real_distribution<double>(0.0, 0.05)(rng);
  c.sched_overhead = std::uniform_int_distribution<Tick>(0, 3)(rng);
  return c;
}

}  // namespace hetersched::oracle
