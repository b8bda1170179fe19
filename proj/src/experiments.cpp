// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetersched/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "hetersched/workload_io.hpp"

namespace hetersched {

namespace {

unsigned window_of(const ExperimentPlan& plan) { return plan.window.value_or(plan.cluster.window); }

GpuLinks links_of(unsigned gpus, PlacementMode mode, std::uint64_t seed) {
  return apply_placement(mode, NodeTopology::keeneland(gpus), seed);
}

std::vector<double> estimates(const ExperimentPlan& plan, const Workflow& wf, double error_pct) {
  SpeedupProfile base = SpeedupProfile::from_workflow(wf);
  if (error_pct == 0.0) return base.by_op_index(wf);
  const auto low = plan.low_speedup_set.empty() ? default_low_speedup_set(wf.spec()) : plan.low_speedup_set;
  return perturb_profile(base, error_pct, low).by_op_index(wf);
}

RunOptions base_options(const ExperimentPlan& plan, const Workflow& wf) {
  RunOptions o;
  o.policy = plan.policy;
  o.dl = plan.dl;
  o.prefetch = plan.prefetch;
  o.window = window_of(plan);
  o.nodes = plan.nodes.empty() ? 1 : plan.nodes.front();
  o.speedups = estimates(plan, wf, plan.estimate_error);
  o.links = links_of(plan.cluster.gpus, plan.placement, plan.seed);
  return o;
}

void info(const ExperimentPlan& plan, const std::string& line) {
  if (plan.log) plan.log(line);
}

std::string run_label(const RunOptions& o) {
  std::string s = to_string(o.policy);
  if (o.dl) s += "+dl";
  if (o.prefetch) s += "+prefetch";
  return s + " window=" + std::to_string(o.window) + " nodes=" + std::to_string(o.nodes);
}

}  // namespace

std::string fmt_double(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

PipelineSpec effective_workload(const ExperimentPlan& plan) {
  PipelineSpec spec = plan.workload;
  if (plan.tiles) spec.chunk_count = *plan.tiles;
  validate(spec);
  return spec;
}

ClusterRun run_once(const Workflow& wf, const ClusterConfig& cluster, const RunOptions& opt, std::uint64_t seed) {
  ClusterConfig c = cluster;
  c.nodes = opt.nodes;
  c.window = opt.window;
  c.node.prefetch = opt.prefetch;
  c.node.record_trace = opt.record_trace;
  if (opt.links) c.node.links = *opt.links;
  if (opt.io_base) c.io.io_base = *opt.io_base;
  PolicyConfig pc;
  pc.sched = SchedulerConfig{opt.policy, opt.dl};
  pc.speedups = opt.speedups;
  return simulate_cluster(wf, c, pc, seed);
}

void cmd_simulate(const ExperimentPlan& plan, std::ostream& out) {
  const Workflow wf(effective_workload(plan));
  RunOptions o = base_options(plan, wf);
  o.record_trace = true;
  const ClusterRun run = run_once(wf, plan.cluster, o, plan.seed);
  info(plan, run_label(o) + " makespan_us=" + std::to_string(run.makespan));

  const unsigned per_node = plan.cluster.gpus + plan.cluster.schedulable_cores();
  struct Row {
    TraceRecord r;
    unsigned node;
  };
  std::vector<Row> rows;
  for (unsigned n = 0; n < run.traces.size(); ++n) {
    for (const auto& r : run.traces[n].records) rows.push_back(Row{r, n});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.r.time != b.r.time) return a.r.time < b.r.time;
    if (a.node != b.node) return a.node < b.node;
    return a.r.seq < b.r.seq;
  });
  out << "time_us,event,op_id,chunk_id,device_id\n";
  for (const auto& [r, n] : rows) {
    std::string line = std::to_string(r.time) + ',' + to_string(r.event) + ',' + wf.op(r.op).spec->id + ',' +
                       std::to_string(r.chunk) + ',' + std::to_string(n * per_node + r.device);
    if (plan.log_trace) info(plan, line);
    out << line << '\n';
  }

  // Summary: makespan and per-device busy fraction.
  out << "# makespan_us=" << run.makespan << " utilization=";
  bool first = true;
  std::vector<double> busy;
  for (unsigned n = 0; n < run.traces.size(); ++n) {
    std::vector<Tick> dev_busy(per_node, 0);
    std::vector<Tick> start(per_node, 0);
    for (const auto& r : run.traces[n].sorted()) {
      if (r.event == TraceEvent::RunStart) start[r.device] = r.time;
      if (r.event == TraceEvent::RunEnd) dev_busy[r.device] += r.time - start[r.device];
    }
    for (Tick b : dev_busy) {
      busy.push_back(run.makespan ? static_cast<double>(b) / static_cast<double>(run.makespan) : 0.0);
    }
  }
  for (std::size_t d = 0; d < busy.size(); ++d) {
    if (!first) out << ';';
    first = false;
    out << d << ':' << fmt_double(busy[d], 4);
  }
  out << '\n';
}

std::vector<CompareRow> compare_matrix(const ExperimentPlan& plan) {
  const PipelineSpec spec = effective_workload(plan);
  std::vector<CompareRow> rows;
  for (bool pipelined : {false, true}) {
    const Workflow wf(pipelined ? spec : non_pipelined(spec));
    for (Policy policy : {Policy::Fcfs, Policy::Pats}) {
      for (auto [dl, prefetch] : {std::pair{false, false}, {true, false}, {false, true}, {true, true}}) {
        RunOptions o = base_options(plan, wf);
        o.policy = policy;
        o.dl = dl;
        o.prefetch = prefetch;
        const ClusterRun run = run_once(wf, plan.cluster, o, plan.seed);
        std::uint64_t bytes = 0;
        for (const auto& s : run.node_stats) bytes += s.transferred_bytes();
        info(plan, std::string(pipelined ? "pipelined " : "non-pipelined ") + run_label(o) +
                       " makespan_us=" + std::to_string(run.makespan));
        rows.push_back(CompareRow{policy, pipelined, dl, prefetch, run.makespan, bytes});
      }
    }
  }
  return rows;
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
  out << "policy,pipelined,dl,prefetch,makespan_us,transferred_bytes\n";
  for (const auto& r : rows) {
    out << to_string(r.policy) << ',' << r.pipelined << ',' << r.dl << ',' << r.prefetch << ',' << r.makespan << ','
        << r.transferred_bytes << '\n';
  }
}

std::vector<WindowRow> sweep_window(const ExperimentPlan& plan, unsigned first, unsigned last) {
  if (first < 1 || last < first) throw Error(ErrorCode::ConfigError, "window range must satisfy 1 <= first <= last");
  const Workflow wf(effective_workload(plan));
  std::vector<WindowRow> rows;
  for (unsigned w = first; w <= last; ++w) {
    for (Policy policy : {Policy::Fcfs, Policy::Pats}) {
      RunOptions o = base_options(plan, wf);
      o.policy = policy;
      o.window = w;
      const ClusterRun run = run_once(wf, plan.cluster, o, plan.seed);
      WindowRow row{w, policy, run.makespan, {}, {}, 0};
      for (std::uint32_t s = 0; s < wf.stage_count(); ++s) {
        std::uint64_t gpu = 0, total = 0;
        const auto& st = wf.stage(s);
        for (const auto& ns : run.node_stats) {
          for (std::uint32_t i = st.first_op; i < st.first_op + st.op_count; ++i) {
            gpu += ns.gpu_ops[i];
            total += ns.gpu_ops[i] + ns.cpu_ops[i];
          }
        }
        row.gpu_pct.push_back(total ? 100.0 * static_cast<double>(gpu) / static_cast<double>(total) : 0.0);
      }
      for (const auto& ns : run.node_stats) row.multi_choice += ns.multi_choice_selections;
      for (const auto& a : run.assignments) row.assignments.insert(row.assignments.end(), a.begin(), a.end());
      info(plan, run_label(o) + " makespan_us=" + std::to_string(run.makespan));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_window_csv(std::ostream& out, const PipelineSpec& spec, const std::vector<WindowRow>& rows) {
  out << "window,policy,makespan_us";
  for (const auto& st : spec.stages) out << ",gpu_pct_" << st.id;
  out << '\n';
  for (const auto& r : rows) {
    out << r.window << ',' << to_string(r.policy) << ',' << r.makespan;
    for (double p : r.gpu_pct) out << ',' << fmt_double(p, 2);
    out << '\n';
  }
}

std::vector<ErrorRow> error_sweep(const ExperimentPlan& plan, const std::vector<double>& pcts) {
  for (double p : pcts) {
    if (!(p >= 0.0 && p <= 100.0)) throw Error(ErrorCode::ConfigError, "error percentages must lie in [0,100]");
  }
  const Workflow wf(effective_workload(plan));
  RunOptions o = base_options(plan, wf);
  o.policy = Policy::Fcfs;
  o.speedups = estimates(plan, wf, 0.0);
  const Tick fcfs = run_once(wf, plan.cluster, o, plan.seed).makespan;
  o.policy = Policy::Pats;
  const Tick zero = run_once(wf, plan.cluster, o, plan.seed).makespan;
  std::vector<ErrorRow> rows;
  for (double p : pcts) {
    o.speedups = estimates(plan, wf, p);
    const Tick m = run_once(wf, plan.cluster, o, plan.seed).makespan;
    info(plan, "error_pct=" + fmt_double(p, 1) + " makespan_us=" + std::to_string(m));
    rows.push_back(ErrorRow{p, m, static_cast<double>(m) / static_cast<double>(zero),
                            static_cast<double>(m) / static_cast<double>(fcfs)});
  }
  return rows;
}

void write_error_csv(std::ostream& out, const std::vector<ErrorRow>& rows) {
  out << "error_pct,makespan_us,vs_zero_ratio,vs_fcfs_ratio\n";
  for (const auto& r : rows) {
    out << fmt_double(r.error_pct, 1) << ',' << r.makespan << ',' << fmt_double(r.vs_zero, 4) << ','
        << fmt_double(r.vs_fcfs, 4) << '\n';
  }
}

std::vector<ScaleRow> scale(const ExperimentPlan& plan) {
  std::vector<unsigned> counts = plan.nodes.empty() ? std::vector<unsigned>{8, 16, 32, 64, 100} : plan.nodes;
  if (!std::is_sorted(counts.begin(), counts.end()) || counts.front() < 1) {
    throw Error(ErrorCode::ConfigError, "node counts must be ascending and >= 1");
  }
  const Workflow wf(effective_workload(plan));
  std::vector<ScaleRow> rows;
  ScaleSample base, base_comp;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    RunOptions o = base_options(plan, wf);
    o.nodes = counts[i];
    const ClusterRun run = run_once(wf, plan.cluster, o, plan.seed);
    o.io_base = 0;
    const ClusterRun comp = run_once(wf, plan.cluster, o, plan.seed);
    const ScaleSample s{counts[i], run.makespan, run.tiles};
    const ScaleSample sc{counts[i], comp.makespan, comp.tiles};
    if (i == 0) {
      base = s;
      base_comp = sc;
    }
    info(plan, "nodes=" + std::to_string(counts[i]) + " makespan_us=" + std::to_string(run.makespan));
    rows.push_back(ScaleRow{counts[i], plan.policy, o.window, run.makespan, run.tiles_per_s, efficiency(s, base),
                            efficiency(sc, base_comp)});
  }
  return rows;
}

void write_scale_csv(std::ostream& out, const std::vector<ScaleRow>& rows) {
  out << "nodes,policy,window,makespan_us,tiles_per_s,efficiency,comp_efficiency\n";
  for (const auto& r : rows) {
    out << r.nodes << ',' << to_string(r.policy) << ',' << r.window << ',' << r.makespan << ','
        << fmt_double(r.tiles_per_s, 3) << ',' << fmt_double(r.efficiency, 4) << ','
        << fmt_double(r.comp_efficiency, 4) << '\n';
  }
}

std::vector<PlacementRow> placement(const ExperimentPlan& plan) {
  if (plan.placement_seeds < 1) throw Error(ErrorCode::ConfigError, "placement needs at least one seed");
  const Workflow wf(effective_workload(plan));
  std::vector<PlacementRow> rows;
  for (unsigned g = 1; g <= 3; ++g) {
    ClusterConfig c = plan.cluster;
    c.gpus = g;
    c.cpu_workers = 0;
    RunOptions o = base_options(plan, wf);
    o.nodes = 1;
    o.links = links_of(g, PlacementMode::Closest, plan.seed);
    const double closest = static_cast<double>(run_once(wf, c, o, plan.seed).makespan);
    double os = 0.0;
    for (unsigned k = 0; k < plan.placement_seeds; ++k) {
      o.links = links_of(g, PlacementMode::Os, plan.seed + k);
      os += static_cast<double>(run_once(wf, c, o, plan.seed).makespan);
    }
    os /= plan.placement_seeds;
    info(plan, "gpus=" + std::to_string(g) + " closest=" + fmt_double(closest, 0) + " os=" + fmt_double(os, 0));
    rows.push_back(PlacementRow{g, PlacementMode::Os, os, 0.0});
    rows.push_back(PlacementRow{g, PlacementMode::Closest, closest, 100.0 * (os - closest) / os});
  }
  return rows;
}

void write_placement_csv(std::ostream& out, const std::vector<PlacementRow>& rows) {
  out << "gpus,mode,makespan_us,gain_pct\n";
  for (const auto& r : rows) {
    out << r.gpus << ',' << to_string(r.mode) << ',' << fmt_double(r.makespan, 1) << ',' << fmt_double(r.gain_pct, 3)
        << '\n';
  }
}

}  // namespace hetersched
