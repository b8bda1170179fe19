// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetersched/workload_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace hetersched {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ParseError, where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) parse_fail(where, "expected object");
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(where, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) parse_fail(where, "expected number");
  return v.get<double>();
}

std::uint64_t count(const json& v, const std::string& where) {
  if (!v.is_number_integer() && !(v.is_number() && std::floor(v.get<double>()) == v.get<double>())) {
    parse_fail(where, "expected non-negative integer");
  }
  const double d = v.get<double>();
  if (d < 0) parse_fail(where, "expected non-negative integer");
  return static_cast<std::uint64_t>(d);
}

std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) parse_fail(where, "expected string");
  return v.get<std::string>();
}

std::vector<std::string> strings(const json& obj, const char* key, const std::string& where) {
  std::vector<std::string> out;
  auto it = obj.find(key);
  if (it == obj.end()) return out;
  if (!it->is_array()) parse_fail(where + "." + key, "expected array");
  for (std::size_t i = 0; i < it->size(); ++i) {
    out.push_back(text((*it)[i], where + "." + key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace

PipelineSpec parse_workload(const json& doc) {
  if (!doc.is_object()) parse_fail("$", "expected object");
  PipelineSpec spec;
  if (auto it = doc.find("name"); it != doc.end()) spec.name = text(*it, "$.name");
  if (auto it = doc.find("chunks"); it != doc.end()) {
    spec.chunk_count = static_cast<std::uint32_t>(count(*it, "$.chunks"));
  }
  const json& stages = require(doc, "stages", "$");
  if (!stages.is_array()) parse_fail("$.stages", "expected array");
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string sw = "$.stages[" + std::to_string(s) + "]";
    const json& sj = stages[s];
    StageSpec st;
    st.id = text(require(sj, "id", sw), sw + ".id");
    st.stage_deps = strings(sj, "stage_deps", sw);
    const json& ops = require(sj, "ops", sw);
    if (!ops.is_array()) parse_fail(sw + ".ops", "expected array");
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const std::string ow = sw + ".ops[" + std::to_string(i) + "]";
      const json& oj = ops[i];
      OperationSpec op;
      op.id = text(require(oj, "id", ow), ow + ".id");
      op.stage = st.id;
      op.deps = strings(oj, "deps", ow);
      op.cpu_cost = ms_to_ticks(number(require(oj, "cpu_ms", ow), ow + ".cpu_ms"));
      op.gpu_cost = ms_to_ticks(number(require(oj, "gpu_ms", ow), ow + ".gpu_ms"));
      if (auto it = oj.find("input_bytes"); it != oj.end()) op.input_bytes = count(*it, ow + ".input_bytes");
      if (auto it = oj.find("output_bytes"); it != oj.end()) op.output_bytes = count(*it, ow + ".output_bytes");
      if (auto it = oj.find("speedup"); it != oj.end()) op.speedup = number(*it, ow + ".speedup");
      if (auto it = oj.find("transfer_impact"); it != oj.end()) {
        op.transfer_impact = number(*it, ow + ".transfer_impact");
      }
      st.ops.push_back(std::move(op));
    }
    spec.stages.push_back(std::move(st));
  }
  validate(spec);
  return spec;
}

PipelineSpec parse_workload_text(std::string_view text_doc) {
  json doc;
  try {
    doc = json::parse(text_doc);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return parse_workload(doc);
}

PipelineSpec load_workload(const std::filesystem::path& path) { return parse_workload(read_json_file(path)); }

json workload_to_json(const PipelineSpec& spec) {
  json doc;
  if (!spec.name.empty()) doc["name"] = spec.name;
  doc["chunks"] = spec.chunk_count;
  doc["stages"] = json::array();
  for (const auto& st : spec.stages) {
    json sj;
    sj["id"] = st.id;
    sj["stage_deps"] = st.stage_deps;
    sj["ops"] = json::array();
    for (const auto& op : st.ops) {
      json oj;
      oj["id"] = op.id;
      oj["deps"] = op.deps;
      oj["cpu_ms"] = static_cast<double>(op.cpu_cost) / 1000.0;
      oj["gpu_ms"] = static_cast<double>(op.gpu_cost) / 1000.0;
      oj["input_bytes"] = op.input_bytes;
      oj["output_bytes"] = op.output_bytes;
      if (op.speedup) oj["speedup"] = *op.speedup;
      if (op.transfer_impact) oj["transfer_impact"] = *op.transfer_impact;
      sj["ops"].push_back(std::move(oj));
    }
    doc["stages"].push_back(std::move(sj));
  }
  return doc;
}

ClusterConfig default_cluster_config() {
  ClusterConfig c;
  c.nodes = 1;
  c.cpu_cores = 12;
  c.gpus = 3;
  c.window = 16;
  c.manager_rtt = 100;
  c.io.io_base = 10000;
  c.io.gamma = 0.5;
  c.node.cpu_contention = 1.0 / 33.0;
  c.node.transfer.latency = 10;
  c.node.transfer.bandwidth = 3000.0;
  c.node.transfer.hop_penalty = 0.25;
  return c;
}

ClusterConfig parse_cluster_config(const json& doc) {
  if (!doc.is_object()) parse_fail("$", "expected object");
  ClusterConfig c = default_cluster_config();
  auto opt_count = [&](const char* key, auto& field) {
    if (auto it = doc.find(key); it != doc.end()) {
      field = static_cast<std::remove_reference_t<decltype(field)>>(count(*it, std::string("$.") + key));
    }
  };
  auto opt_number = [&](const char* key, double& field) {
    if (auto it = doc.find(key); it != doc.end()) field = number(*it, std::string("$.") + key);
  };
  opt_count("nodes", c.nodes);
  opt_count("cpu_cores", c.cpu_cores);
  opt_count("gpus", c.gpus);
  opt_count("window", c.window);
  opt_count("manager_rtt_us", c.manager_rtt);
  opt_count("io_base_us", c.io.io_base);
  opt_number("io_gamma", c.io.gamma);
  if (auto it = doc.find("cpu_workers"); it != doc.end()) {
    c.cpu_workers = static_cast<unsigned>(count(*it, "$.cpu_workers"));
  }
  opt_number("cpu_contention", c.node.cpu_contention);
  opt_count("sched_overhead_us", c.node.sched_overhead);
  opt_number("cost_jitter", c.node.cost_jitter);
  opt_count("gpu_memory_bytes", c.node.gpu_memory);
  if (auto it = doc.find("transfer"); it != doc.end()) {
    const json& t = *it;
    if (!t.is_object()) parse_fail("$.transfer", "expected object");
    if (auto f = t.find("latency_us"); f != t.end()) c.node.transfer.latency = count(*f, "$.transfer.latency_us");
    if (auto f = t.find("bandwidth_bytes_per_us"); f != t.end()) {
      c.node.transfer.bandwidth = number(*f, "$.transfer.bandwidth_bytes_per_us");
    }
    if (auto f = t.find("hop_penalty"); f != t.end()) c.node.transfer.hop_penalty = number(*f, "$.transfer.hop_penalty");
  }
  if (auto it = doc.find("stage_nodes"); it != doc.end()) {
    if (!it->is_object()) parse_fail("$.stage_nodes", "expected object");
    for (const auto& [stage, nodes] : it->items()) {
      std::vector<unsigned> ns;
      if (!nodes.is_array()) parse_fail("$.stage_nodes." + stage, "expected array");
      for (const auto& n : nodes) ns.push_back(static_cast<unsigned>(count(n, "$.stage_nodes." + stage)));
      c.stage_nodes.push_back(std::move(ns));
    }
  }
  c.validate();
  if (!(c.node.transfer.bandwidth > 0.0)) throw Error(ErrorCode::ConfigError, "bandwidth must be positive");
  if (c.node.transfer.hop_penalty < 0.0) throw Error(ErrorCode::ConfigError, "hop_penalty must be >= 0");
  if (c.node.cpu_contention < 0.0) throw Error(ErrorCode::ConfigError, "cpu_contention must be >= 0");
  return c;
}

ClusterConfig load_cluster_config(const std::filesystem::path& path) {
  return parse_cluster_config(read_json_file(path));
}

PipelineSpec gen_random_workload(const RandomWorkloadParams& p) {
  if (!(p.min_speedup > 0.0) || p.max_speedup < p.min_speedup) {
    throw Error(ErrorCode::ConfigError, "speedup range must satisfy 0 < min <= max");
  }
  if (p.ops < 1 || p.stages < 1 || p.stages > p.ops) throw Error(ErrorCode::ConfigError, "need 1 <= stages <= ops");
  if (!(p.min_cpu_ms > 0.0) || p.max_cpu_ms < p.min_cpu_ms) throw Error(ErrorCode::ConfigError, "bad cpu range");

  std::mt19937_64 rng(p.seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto log_uniform = [&](double lo, double hi) { return lo == hi ? lo : std::exp(std::log(lo) + unit() * (std::log(hi) - std::log(lo))); };

  PipelineSpec spec;
  spec.name = "random-" + std::to_string(p.seed);
  spec.chunk_count = p.chunks;
  unsigned next = 0;
  for (unsigned s = 0; s < p.stages; ++s) {
    StageSpec st;
    st.id = "s" + std::to_string(s);
    if (s > 0) st.stage_deps.push_back("s" + std::to_string(s - 1));
    const unsigned n = p.ops / p.stages + (s < p.ops % p.stages ? 1 : 0);
    for (unsigned i = 0; i < n; ++i) {
      OperationSpec op;
      op.id = "op" + std::to_string(next++);
      op.stage = st.id;
      for (const auto& prev : st.ops) {
        if (unit() < p.density) op.deps.push_back(prev.id);
      }
      const double cpu_ms = log_uniform(p.min_cpu_ms, p.max_cpu_ms);
      const double speedup = log_uniform(p.min_speedup, p.max_speedup);
      op.cpu_cost = std::max<Tick>(1, ms_to_ticks(cpu_ms));
      op.gpu_cost = std::max<Tick>(1, round_ticks(static_cast<double>(op.cpu_cost) / speedup));
      op.speedup = speedup;
      if (p.max_bytes > 0) {
        op.input_bytes = static_cast<std::uint64_t>(unit() * static_cast<double>(p.max_bytes));
        op.output_bytes = static_cast<std::uint64_t>(unit() * static_cast<double>(p.max_bytes));
      }
      st.ops.push_back(std::move(op));
    }
    spec.stages.push_back(std::move(st));
  }
  validate(spec);
  return spec;
}

PipelineSpec non_pipelined(const PipelineSpec& spec) {
  PipelineSpec out;
  out.name = spec.name.empty() ? "non-pipelined" : spec.name + "-non-pipelined";
  out.chunk_count = spec.chunk_count;
  for (const auto& st : spec.stages) {
    StageSpec m;
    m.id = st.id;
    m.stage_deps = st.stage_deps;
    OperationSpec op;
    op.id = st.id;
    op.stage = st.id;
    for (const auto& o : st.ops) {
      op.cpu_cost += o.cpu_cost;
      op.gpu_cost += o.gpu_cost;
      op.input_bytes += o.input_bytes;
      op.output_bytes += o.output_bytes;
    }
    m.ops.push_back(std::move(op));
    out.stages.push_back(std::move(m));
  }
  validate(out);
  return out;
}

std::vector<std::string> default_low_speedup_set(const PipelineSpec& spec) {
  std::vector<std::pair<double, std::string>> all;
  for (const auto& st : spec.stages) {
    for (const auto& op : st.ops) all.emplace_back(op.speedup_estimate(), op.id);
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < all.size() / 2; ++i) out.push_back(all[i].second);
  return out;
}

}  // namespace hetersched
