// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetersched/cluster.hpp"

#include <algorithm>
#include <queue>
#include <tuple>

namespace hetersched {

Tick IoModel::read_time(unsigned active_clients) const {
  const double clients = static_cast<double>(std::max(active_clients, 1u));
  return round_ticks(static_cast<double>(io_base) * (1.0 + gamma * (clients - 1.0)));
}

unsigned ClusterConfig::schedulable_cores() const {
  if (cpu_workers) return *cpu_workers;
  return cpu_cores > gpus ? cpu_cores - gpus : 0;
}

void ClusterConfig::validate() const {
  if (nodes < 1) throw Error(ErrorCode::ConfigError, "nodes must be >= 1");
  if (window < 1) throw Error(ErrorCode::ConfigError, "window must be >= 1");
  if (io.gamma < 0.0) throw Error(ErrorCode::ConfigError, "io_gamma must be >= 0");
  if (gpus + schedulable_cores() == 0) throw Error(ErrorCode::ConfigError, "node has no devices");
  if (!stage_nodes.empty()) {
    throw Error(ErrorCode::ConfigError,
                "per-stage worker sets are not supported; only full pipeline replication is implemented");
  }
}

NodeConfig ClusterConfig::node_config() const {
  NodeConfig n = node;
  n.gpus = gpus;
  n.cpu_cores = schedulable_cores();
  return n;
}

Manager::Manager(std::vector<StageInstance> instances, unsigned workers, unsigned window)
    : instances_(std::move(instances)),
      window_(window),
      outstanding_(workers, 0),
      blocked_on_(instances_.size(), 0),
      dependents_(instances_.size()),
      is_waiting_(workers, false),
      undispatched_(instances_.size()) {
  if (window_ < 1) throw Error(ErrorCode::ConfigError, "window must be >= 1");
  for (std::uint32_t i = 0; i < instances_.size(); ++i) {
    if (instances_[i].id != i) throw Error(ErrorCode::InvalidStructure, "stage instance ids must be dense");
    for (std::uint32_t up : instances_[i].depends_on) {
      dependents_.at(up).push_back(i);
      ++blocked_on_[i];
    }
    if (blocked_on_[i] == 0) eligible_.emplace(instances_[i].order, i);
  }
}

std::vector<std::uint32_t> Manager::fill(unsigned worker) {
  std::vector<std::uint32_t> out;
  while (outstanding_[worker] < window_ && !eligible_.empty()) {
    const std::uint32_t id = eligible_.begin()->second;
    eligible_.erase(eligible_.begin());
    instances_[id].state = StageState::Assigned;
    ++outstanding_[worker];
    --undispatched_;
    dispatched_.push_back(id);
    out.push_back(id);
  }
  return out;
}

std::vector<std::uint32_t> Manager::dispatch(unsigned worker) {
  if (undispatched_ == 0) throw Error(ErrorCode::NoWorkRemaining, "worker " + std::to_string(worker));
  auto out = fill(worker);
  if (outstanding_[worker] < window_ && !is_waiting_[worker]) {
    waiting_.push_back(worker);
    is_waiting_[worker] = true;
  }
  return out;
}

std::vector<Dispatch> Manager::on_stage_complete(unsigned worker, std::uint32_t instance) {
  auto& si = instances_.at(instance);
  if (si.state != StageState::Assigned) {
    throw Error(ErrorCode::DoubleCompletion, "stage instance " + std::to_string(instance));
  }
  si.state = StageState::Done;
  ++done_count_;
  --outstanding_.at(worker);
  for (std::uint32_t d : dependents_[instance]) {
    if (--blocked_on_[d] == 0) eligible_.emplace(instances_[d].order, d);
  }
  if (!is_waiting_[worker] && undispatched_ > 0) {
    waiting_.push_back(worker);
    is_waiting_[worker] = true;
  }

  std::vector<Dispatch> out;
  while (!waiting_.empty() && !eligible_.empty()) {
    const unsigned w = waiting_.front();
    for (std::uint32_t id : fill(w)) out.push_back(Dispatch{w, id});
    if (outstanding_[w] >= window_) {
      waiting_.pop_front();
      is_waiting_[w] = false;
    }
  }
  if (undispatched_ == 0) {
    waiting_.clear();
    std::fill(is_waiting_.begin(), is_waiting_.end(), false);
  }
  return out;
}

ClusterRun simulate_cluster(const Workflow& wf, const ClusterConfig& cfg, const PolicyConfig& policy,
                            std::uint64_t seed) {
  cfg.validate();
  NodeConfig ncfg = cfg.node_config();
  ncfg.jitter_seed = seed;

  std::vector<NodeEngine> engines;
  engines.reserve(cfg.nodes);
  for (unsigned n = 0; n < cfg.nodes; ++n) engines.emplace_back(wf, ncfg, policy);

  Manager manager(instantiate(wf), cfg.nodes, cfg.window);
  const Tick read = cfg.io.read_time(cfg.nodes);
  std::vector<Tick> io_free(cfg.nodes, 0);

  ClusterRun run;
  run.tiles = wf.chunk_count();

  auto deliver = [&](unsigned w, std::uint32_t id, Tick now) {
    const StageInstance& si = manager.instance(id);
    Tick at = now + cfg.manager_rtt;
    if (wf.stage(si.stage).reads_input && read > 0) {
      const Tick start = std::max(at, io_free[w]);
      at = start + read;
      io_free[w] = at;
      run.io_time += read;
    }
    engines[w].deliver(si, at);
    run.max_outstanding = std::max(run.max_outstanding, manager.outstanding(w));
  };

  for (unsigned w = 0; w < cfg.nodes && !manager.exhausted(); ++w) {
    for (std::uint32_t id : manager.dispatch(w)) deliver(w, id, 0);
  }

  // (time, seq, node, stage instance)
  using Event = std::tuple<Tick, std::uint64_t, unsigned, std::uint32_t>;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t seq = 0;

  for (;;) {
    Tick beta = kNever;
    unsigned node = 0;
    for (unsigned n = 0; n < cfg.nodes; ++n) {
      const Tick b = engines[n].next_mapping_time();
      if (b < beta) {
        beta = b;
        node = n;
      }
    }
    // Manager messages go first at equal times so refills are visible.
    if (!events.empty() && std::get<0>(events.top()) <= beta) {
      const auto [t, s, w, id] = events.top();
      events.pop();
      for (const auto& d : manager.on_stage_complete(w, id)) deliver(d.worker, d.instance, t);
      continue;
    }
    if (beta == kNever) break;
    engines[node].map_one();
    for (const auto& done : engines[node].take_stage_completions()) {
      events.emplace(done.time, seq++, node, done.stage_instance);
    }
  }
  if (!manager.all_done()) throw Error(ErrorCode::InvalidStructure, "cluster run ended with pending stage instances");

  for (auto& e : engines) {
    run.makespan = std::max(run.makespan, e.makespan());
    run.node_stats.push_back(e.stats());
    run.assignments.push_back(e.assignments());
    if (ncfg.record_trace) run.traces.push_back(e.take_trace());
  }
  run.dispatch_order = manager.dispatched();
  run.tiles_per_s = run.makespan > 0 ? static_cast<double>(run.tiles) / ticks_to_seconds(run.makespan) : 0.0;
  return run;
}

double efficiency(const ScaleSample& run, const ScaleSample& base) {
  if (run.tiles != base.tiles) {
    throw Error(ErrorCode::MismatchedWorkload, "tile counts differ: " + std::to_string(run.tiles) + " vs " +
                                                   std::to_string(base.tiles));
  }
  if (run.makespan == 0 || run.nodes == 0) throw Error(ErrorCode::MismatchedWorkload, "empty run");
  return (static_cast<double>(base.makespan) * base.nodes) / (static_cast<double>(run.makespan) * run.nodes);
}

}  // namespace hetersched
