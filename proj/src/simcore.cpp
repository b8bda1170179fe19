// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetersched/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>

namespace hetersched {

namespace {

constexpr std::uint64_t kStageInputTag = 1ULL << 40;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double TransferModel::multiplier(unsigned hops, unsigned sharers) const {
  if (hops <= 1) return 1.0;
  return 1.0 + hop_penalty * static_cast<double>(hops - 1) * static_cast<double>(std::max(sharers, 1u));
}

Tick TransferModel::time(std::uint64_t bytes, unsigned hops, unsigned sharers) const {
  if (bytes == 0) return 0;
  const double raw = std::ceil(static_cast<double>(bytes) / bandwidth);
  return round_ticks((static_cast<double>(latency) + raw) * multiplier(hops, sharers));
}

const char* to_string(PlacementMode m) { return m == PlacementMode::Os ? "os" : "closest"; }

PlacementMode parse_placement(std::string_view s) {
  if (s == "os") return PlacementMode::Os;
  if (s == "closest") return PlacementMode::Closest;
  throw Error(ErrorCode::ConfigError, "unknown placement '" + std::string(s) + "'");
}

NodeTopology NodeTopology::keeneland(unsigned gpus) {
  NodeTopology t;
  t.sockets = 2;
  for (unsigned g = 0; g < gpus; ++g) {
    t.gpu_home_socket.push_back(g == 0 ? 0u : 1u);
    t.gpu_min_hops.push_back(1);
  }
  return t;
}

NodeTopology NodeTopology::single_socket(unsigned gpus) {
  NodeTopology t;
  t.sockets = 1;
  t.gpu_home_socket.assign(gpus, 0);
  t.gpu_min_hops.assign(gpus, 1);
  return t;
}

GpuLinks apply_placement(PlacementMode mode, const NodeTopology& topo, std::uint64_t seed) {
  const std::size_t gpus = topo.gpu_min_hops.size();
  GpuLinks out;
  out.hops = topo.gpu_min_hops;
  out.sharers.assign(gpus, 1);
  if (mode == PlacementMode::Closest || topo.sockets <= 1) return out;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<unsigned> socket(0, topo.sockets - 1);
  // A remote controller's copies cross the inter-socket link shared by every GPU.
  for (std::size_t g = 0; g < gpus; ++g) {
    if (socket(rng) != topo.gpu_home_socket[g]) {
      out.hops[g] += 1;
      out.sharers[g] = static_cast<unsigned>(gpus);
    }
  }
  return out;
}

PhaseTimes schedule_gpu_phases(Tick upload, Tick compute, Tick download, GpuChannels& ch, bool prefetch,
                               Tick now) {
  PhaseTimes p;
  if (!prefetch) {
    const Tick start = std::max({now, ch.upload_free, ch.compute_free, ch.download_free});
    p.upload_start = start;
    p.upload_end = start + upload;
    p.compute_start = p.upload_end;
    p.compute_end = p.compute_start + compute;
    p.download_start = p.compute_end;
    p.download_end = p.download_start + download;
    ch.upload_free = ch.compute_free = ch.download_free = p.download_end;
    return p;
  }
  p.upload_start = std::max(now, ch.upload_free);
  p.upload_end = p.upload_start + upload;
  p.compute_start = std::max(p.upload_end, ch.compute_free);
  p.compute_end = p.compute_start + compute;
  p.download_start = std::max(p.compute_end, ch.download_free);
  p.download_end = p.download_start + download;
  ch.upload_free = p.upload_end;
  ch.compute_free = p.compute_end;
  ch.download_free = p.download_end;
  return p;
}

TransferTimes transfer_time(const OperationSpec& op, double resident_input_fraction, bool defer_download,
                            const TransferModel& model, unsigned hops, unsigned sharers) {
  TransferTimes t;
  const double missing = std::clamp(1.0 - resident_input_fraction, 0.0, 1.0);
  t.upload_bytes = static_cast<std::uint64_t>(std::llround(static_cast<double>(op.input_bytes) * missing));
  t.download_bytes = defer_download ? 0 : op.output_bytes;
  t.upload = model.time(t.upload_bytes, hops, sharers);
  t.download = model.time(t.download_bytes, hops, sharers);
  return t;
}

Tick finish_time(const Device& d) { return d.finish; }

Tick next_task_time(std::span<const Tick> pending_created, Tick t) {
  Tick best = kNever;
  for (Tick c : pending_created) {
    if (c <= t) return t;
    best = std::min(best, c);
  }
  return best;
}

Tick next_mapping_time(std::span<const Device> devices, std::span<const Tick> pending_created, Tick t) {
  const Tick zeta = next_task_time(pending_created, t);
  if (zeta == kNever || devices.empty()) return kNever;
  Tick tau = kNever;
  for (const auto& d : devices) tau = std::min(tau, d.available);
  return std::max(tau, zeta);
}

std::uint32_t pick_processor(std::span<const Device> devices) {
  std::uint32_t best = 0;
  for (std::uint32_t j = 1; j < devices.size(); ++j) {
    if (devices[j].available < devices[best].available) best = j;
  }
  return best;
}

const char* to_string(TraceEvent e) {
  switch (e) {
    case TraceEvent::Map: return "map";
    case TraceEvent::UploadStart: return "upload_start";
    case TraceEvent::UploadEnd: return "upload_end";
    case TraceEvent::RunStart: return "run_start";
    case TraceEvent::RunEnd: return "run_end";
    case TraceEvent::DownloadStart: return "download_start";
    case TraceEvent::DownloadEnd: return "download_end";
    case TraceEvent::Complete: return "complete";
    case TraceEvent::WritebackStart: return "writeback_start";
    case TraceEvent::WritebackEnd: return "writeback_end";
  }
  return "?";
}

std::vector<TraceRecord> ScheduleTrace::sorted() const {
  std::vector<TraceRecord> out = records;
  std::sort(out.begin(), out.end(), [](const TraceRecord& a, const TraceRecord& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.seq < b.seq;
  });
  return out;
}

NodeEngine::NodeEngine(const Workflow& wf, NodeConfig cfg, PolicyConfig policy)
    : wf_(&wf), cfg_(std::move(cfg)), policy_(std::move(policy)), queue_(policy_.sched.policy) {
  if (cfg_.device_count() == 0) throw Error(ErrorCode::ConfigError, "node has no devices");
  if (!(cfg_.transfer.bandwidth > 0.0)) throw Error(ErrorCode::ConfigError, "bandwidth must be positive");
  if (cfg_.transfer.hop_penalty < 0.0) throw Error(ErrorCode::ConfigError, "hop penalty must be >= 0");
  if (!(cfg_.cost_jitter >= 0.0 && cfg_.cost_jitter < 1.0)) {
    throw Error(ErrorCode::ConfigError, "cost jitter must lie in [0,1)");
  }
  if (cfg_.gpus > 32) throw Error(ErrorCode::ConfigError, "at most 32 GPUs per node");

  speedups_ = policy_.speedups.empty() ? SpeedupProfile::from_workflow(wf).by_op_index(wf) : policy_.speedups;
  if (speedups_.size() != wf.op_count()) throw Error(ErrorCode::ConfigError, "speedup vector size mismatch");

  const double scale = 1.0 + cfg_.cpu_contention * static_cast<double>(cfg_.cpu_cores > 0 ? cfg_.cpu_cores - 1 : 0);
  for (const auto& op : wf.ops()) {
    cpu_base_.push_back(std::max<Tick>(1, round_ticks(static_cast<double>(op.spec->cpu_cost) * scale)));
    gpu_base_.push_back(op.spec->gpu_cost);
  }

  if (cfg_.links.hops.empty()) {
    cfg_.links.hops.assign(cfg_.gpus, 1);
    cfg_.links.sharers.assign(cfg_.gpus, 1);
  }
  if (cfg_.links.hops.size() != cfg_.gpus || cfg_.links.sharers.size() != cfg_.gpus) {
    throw Error(ErrorCode::ConfigError, "link layout does not match GPU count");
  }

  // GPUs first, then CPU cores; this order breaks finish-time ties.
  for (unsigned g = 0; g < cfg_.gpus; ++g) {
    Device d;
    d.index = static_cast<std::uint32_t>(devices_.size());
    d.kind = DeviceKind::Gpu;
    d.link_hops = cfg_.links.hops[g];
    d.link_sharers = cfg_.links.sharers[g];
    devices_.push_back(d);
  }
  for (unsigned c = 0; c < cfg_.cpu_cores; ++c) {
    Device d;
    d.index = static_cast<std::uint32_t>(devices_.size());
    d.kind = DeviceKind::CpuCore;
    devices_.push_back(d);
  }
  recent_.resize(cfg_.gpus);
  lru_.resize(cfg_.gpus);
  resident_bytes_.assign(cfg_.gpus, 0);
  stats_.gpu_ops.assign(wf.op_count(), 0);
  stats_.cpu_ops.assign(wf.op_count(), 0);
}

double NodeEngine::jitter(std::uint32_t op, std::uint32_t chunk, std::uint64_t salt) const {
  const std::uint64_t h =
      splitmix64(cfg_.jitter_seed ^ splitmix64((static_cast<std::uint64_t>(chunk) << 20) ^ (op << 2) ^ salt));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return 1.0 + cfg_.cost_jitter * (2.0 * u - 1.0);
}

Tick NodeEngine::cpu_cost(std::uint32_t op, std::uint32_t chunk) const {
  if (cfg_.cost_jitter == 0.0) return cpu_base_[op];
  return std::max<Tick>(1, round_ticks(static_cast<double>(cpu_base_[op]) * jitter(op, chunk, 1)));
}

Tick NodeEngine::gpu_cost(std::uint32_t op, std::uint32_t chunk) const {
  if (cfg_.cost_jitter == 0.0) return gpu_base_[op];
  return std::max<Tick>(1, round_ticks(static_cast<double>(gpu_base_[op]) * jitter(op, chunk, 2)));
}

StageExecution& NodeEngine::exec_of(InstanceId id) { return execs_[exec_of_id_.at(id)]; }
const StageExecution& NodeEngine::exec_of(InstanceId id) const { return execs_[exec_of_id_.at(id)]; }

const OperationInstance& NodeEngine::instance(InstanceId id) const { return exec_of(id).op(id); }

void NodeEngine::deliver(const StageInstance& si, Tick at) {
  const auto first = static_cast<InstanceId>(exec_of_id_.size());
  const auto exec_index = static_cast<std::uint32_t>(execs_.size());
  execs_.push_back(expand(*wf_, si, first, at));
  const auto& ex = execs_.back();
  exec_state_.push_back(ExecState{ex.ops().size(), at});
  for (std::size_t i = 0; i < ex.ops().size(); ++i) {
    exec_of_id_.push_back(exec_index);
    done_at_.push_back(kNever);
  }
  for (InstanceId id : ex.ready()) future_.emplace(ex.op(id).created, id);
}

Tick NodeEngine::next_mapping_time() const {
  if (policy_.forced) {
    if (forced_next_ >= policy_.forced->size()) return kNever;
    const auto& a = (*policy_.forced)[forced_next_];
    return std::max({devices_.at(a.device).available, instance(a.instance).created, now_});
  }
  Tick zeta;
  if (!queue_.empty()) {
    zeta = now_;
  } else if (!future_.empty()) {
    zeta = std::max(future_.top().first, now_);
  } else {
    return kNever;
  }
  Tick tau = kNever;
  for (const auto& d : devices_) tau = std::min(tau, d.available);
  return std::max(tau, zeta);
}

void NodeEngine::release_until(Tick t) {
  while (!future_.empty() && future_.top().first <= t) {
    const InstanceId id = future_.top().second;
    future_.pop();
    insert_ready(queue_, instance(id), *wf_, speedups_);
  }
  stats_.max_queue = std::max(stats_.max_queue, queue_.size());
}

std::vector<std::uint64_t> NodeEngine::inputs_of(const OperationInstance& oi) const {
  const auto& op = wf_->op(oi.op);
  std::vector<std::uint64_t> in;
  if (op.deps.empty()) {
    in.push_back(kStageInputTag | oi.stage_instance);
    return in;
  }
  const auto& ex = exec_of(oi.id);
  const auto base = wf_->stage(op.stage).first_op;
  for (std::uint32_t d : op.deps) in.push_back(ex.first_id() + (d - base));
  return in;
}

std::uint64_t NodeEngine::input_share(const OperationInstance& oi, std::size_t n_inputs, std::size_t k) const {
  const std::uint64_t total = wf_->op(oi.op).spec->input_bytes;
  const std::uint64_t share = total / n_inputs;
  return k == 0 ? share + total % n_inputs : share;
}

std::vector<InstanceId> NodeEngine::reuse_candidates(std::uint32_t gpu, Tick t) const {
  std::vector<InstanceId> out;
  for (const auto& r : recent_[gpu]) {
    if (r.compute_end > t) continue;
    const auto& oi = instance(r.id);
    const auto& ex = exec_of(r.id);
    const auto& op = wf_->op(oi.op);
    const auto base = wf_->stage(op.stage).first_op;
    for (std::uint32_t dep : op.dependents) {
      const InstanceId cand = ex.first_id() + (dep - base);
      auto it = data_.find(r.id);
      if (it != data_.end() && (it->second.gpu_mask & (1u << gpu)) != 0 && queue_.contains(cand)) {
        out.push_back(cand);
      }
    }
  }
  return out;
}

double NodeEngine::transfer_impact(InstanceId id, std::uint32_t gpu) const {
  const auto& oi = instance(id);
  const auto& spec = *wf_->op(oi.op).spec;
  if (spec.transfer_impact) return *spec.transfer_impact;
  const auto inputs = inputs_of(oi);
  std::uint64_t missing = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto it = data_.find(inputs[k]);
    const bool resident = it != data_.end() && (it->second.gpu_mask & (1u << gpu)) != 0;
    if (!resident) missing += input_share(oi, inputs.size(), k);
  }
  const auto& dev = devices_[gpu];
  const double up = static_cast<double>(cfg_.transfer.time(missing, dev.link_hops, dev.link_sharers));
  const double comp = static_cast<double>(gpu_cost(oi.op, oi.chunk));
  return up / (up + comp);
}

void NodeEngine::record(Tick t, TraceEvent e, const OperationInstance& oi, std::uint32_t device) {
  if (!cfg_.record_trace) return;
  trace_.records.push_back(TraceRecord{t, e, oi.id, oi.op, oi.chunk, device, trace_seq_++});
}

void NodeEngine::touch(std::uint32_t gpu, std::uint64_t data) {
  if (cfg_.gpu_memory == 0) return;
  auto& lru = lru_[gpu];
  auto it = std::find_if(lru.begin(), lru.end(), [&](const LruEntry& e) { return e.data == data; });
  if (it == lru.end()) return;
  LruEntry e = *it;
  lru.erase(it);
  lru.push_back(e);
}

void NodeEngine::make_resident(std::uint32_t gpu, std::uint64_t data, std::uint64_t bytes, Tick) {
  auto& loc = data_[data];
  if (loc.gpu_mask & (1u << gpu)) {
    touch(gpu, data);
    return;
  }
  loc.gpu_mask |= (1u << gpu);
  if (cfg_.gpu_memory == 0) return;
  lru_[gpu].push_back(LruEntry{data, bytes});
  resident_bytes_[gpu] += bytes;
}

void NodeEngine::assign(InstanceId id, std::uint32_t j, Tick t) {
  StageExecution& ex = exec_of(id);
  const OperationInstance oi = ex.op(id);
  const auto& op = wf_->op(oi.op);
  Device& dev = devices_[j];
  const bool dl = policy_.sched.dl;
  const auto inputs = inputs_of(oi);

  ex.assign(id, j);
  record(t, TraceEvent::Map, oi, j);
  trace_.assignments.push_back(Assignment{id, j, t});
  ++stats_.ops_mapped;
  ++dev.tasks;

  // Inputs left on another GPU by deferred downloads are written back first.
  Tick fetch = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto it = data_.find(inputs[k]);
    if (it == data_.end() || it->second.on_host) continue;
    if (dev.kind == DeviceKind::Gpu && (it->second.gpu_mask & (1u << j))) continue;
    std::uint32_t src = 0;
    while (!(it->second.gpu_mask & (1u << src))) ++src;
    const auto bytes = it->second.bytes;
    const Tick w = cfg_.transfer.time(bytes, devices_[src].link_hops, devices_[src].link_sharers);
    const auto& producer = instance(static_cast<InstanceId>(inputs[k]));
    record(t + fetch, TraceEvent::WritebackStart, producer, src);
    fetch += w;
    record(t + fetch, TraceEvent::WritebackEnd, producer, src);
    it->second.on_host = true;
    stats_.download_bytes += bytes;
    ++stats_.downloads;
  }

  Tick completion = 0;
  ex.advance(id, OpState::Ready);
  if (dev.kind == DeviceKind::CpuCore) {
    const Tick cost = cpu_cost(oi.op, oi.chunk);
    const Tick start = t + cfg_.sched_overhead + fetch;
    const Tick end = start + cost;
    ex.advance(id, OpState::Running);
    record(start, TraceEvent::RunStart, oi, j);
    record(end, TraceEvent::RunEnd, oi, j);
    dev.wait_time += (t - dev.finish) + cfg_.sched_overhead;
    dev.transfer_time += fetch;
    dev.compute_time += cost;
    dev.finish = dev.available = end;
    completion = end;
    ++stats_.cpu_ops[oi.op];
    if (dl) data_[id] = DataLoc{op.spec->output_bytes, true, 0};
  } else {
    std::uint64_t up_bytes = 0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      bool resident = false;
      if (dl) {
        auto it = data_.find(inputs[k]);
        resident = it != data_.end() && (it->second.gpu_mask & (1u << j));
      }
      if (resident) {
        touch(j, inputs[k]);
      } else {
        up_bytes += input_share(oi, inputs.size(), k);
      }
    }
    const bool defer = dl && !op.dependents.empty();
    const std::uint64_t down_bytes = defer ? 0 : op.spec->output_bytes;
    Tick upload = cfg_.transfer.time(up_bytes, dev.link_hops, dev.link_sharers);
    Tick download = cfg_.transfer.time(down_bytes, dev.link_hops, dev.link_sharers);
    const Tick compute = gpu_cost(oi.op, oi.chunk);

    if (dl) {
      for (std::size_t k = 0; k < inputs.size(); ++k) make_resident(j, inputs[k], input_share(oi, inputs.size(), k), t);
      data_[id] = DataLoc{op.spec->output_bytes, !defer, 0};
      make_resident(j, id, op.spec->output_bytes, t);
      if (cfg_.gpu_memory > 0) {
        // Evict least recently used data; host-less data is written back as
        // part of this operation's download phase.
        auto& lru = lru_[j];
        while (resident_bytes_[j] > cfg_.gpu_memory && lru.size() > 1 + inputs.size()) {
          const LruEntry victim = lru.front();
          lru.pop_front();
          resident_bytes_[j] -= victim.bytes;
          auto& loc = data_[victim.data];
          loc.gpu_mask &= ~(1u << j);
          if (!loc.on_host && loc.gpu_mask == 0) {
            loc.on_host = true;
            download += cfg_.transfer.time(victim.bytes, dev.link_hops, dev.link_sharers);
            stats_.download_bytes += victim.bytes;
            ++stats_.downloads;
          }
        }
      }
    }

    const Tick prev_finish = dev.finish;
    const PhaseTimes ph =
        schedule_gpu_phases(upload, compute, download, dev.channels, cfg_.prefetch, t + cfg_.sched_overhead + fetch);
    if (upload > 0) {
      ex.advance(id, OpState::Uploading);
      record(ph.upload_start, TraceEvent::UploadStart, oi, j);
      record(ph.upload_end, TraceEvent::UploadEnd, oi, j);
      stats_.upload_bytes += up_bytes;
      ++stats_.uploads;
    }
    ex.advance(id, OpState::Running);
    record(ph.compute_start, TraceEvent::RunStart, oi, j);
    record(ph.compute_end, TraceEvent::RunEnd, oi, j);
    if (download > 0) {
      ex.advance(id, OpState::Downloading);
      record(ph.download_start, TraceEvent::DownloadStart, oi, j);
      record(ph.download_end, TraceEvent::DownloadEnd, oi, j);
      stats_.download_bytes += down_bytes;
      if (down_bytes > 0) ++stats_.downloads;
    }

    dev.compute_time += compute;
    dev.transfer_time += fetch + upload + download;
    if (cfg_.prefetch) {
      // Ask for the next task early enough to hide an upload of this size.
      dev.finish = std::max(prev_finish, ph.download_end);
      dev.available = std::max(ph.compute_start, ph.compute_end - std::min(ph.compute_end, upload));
    } else {
      dev.wait_time += (t - prev_finish) + cfg_.sched_overhead;
      dev.finish = dev.available = ph.download_end;
    }
    completion = defer ? ph.compute_end : ph.download_end;
    ++stats_.gpu_ops[oi.op];
    if (dl && defer) recent_[j].push_back(Recent{id, ph.compute_end});
  }

  record(completion, TraceEvent::Complete, oi, j);
  done_at_[id] = completion;
  auto res = ex.complete(id, completion);
  for (InstanceId r : res.newly_ready) future_.emplace(ex.op(r).created, r);

  auto& st = exec_state_[exec_of_id_[id]];
  st.done = std::max(st.done, completion);
  if (--st.unmapped == 0) stage_done_.push_back(StageDone{ex.stage_instance(), st.done});
  stats_.makespan = std::max(stats_.makespan, dev.finish);
}

Tick NodeEngine::map_one() {
  if (policy_.forced) {
    if (forced_next_ >= policy_.forced->size()) throw Error(ErrorCode::NoPendingWork, "replay sequence exhausted");
    const Assignment a = (*policy_.forced)[forced_next_++];
    if (instance(a.instance).state != OpState::Ready) {
      throw Error(ErrorCode::InvalidStructure, "replayed instance is not ready");
    }
    const Tick t = std::max({devices_.at(a.device).available, instance(a.instance).created, now_});
    release_until(t);
    queue_.remove(a.instance);
    now_ = t;
    assign(a.instance, a.device, t);
    return next_mapping_time();
  }

  const Tick t = next_mapping_time();
  if (t == kNever) throw Error(ErrorCode::NoPendingWork, "no unscheduled task");
  now_ = t;
  release_until(t);
  if (queue_.empty()) return next_mapping_time();

  const std::uint32_t j = pick_processor(devices_);
  const DeviceKind kind = devices_[j].kind;
  if (queue_.size() > 1) ++stats_.multi_choice_selections;

  std::vector<InstanceId> reuse;
  const bool dl_gpu = policy_.sched.dl && kind == DeviceKind::Gpu;
  if (dl_gpu) reuse = reuse_candidates(j, t);
  const InstanceId id =
      select(queue_, kind, policy_.sched, reuse, [&](InstanceId q) { return transfer_impact(q, j); });
  if (dl_gpu) {
    auto& rec = recent_[j];
    rec.erase(std::remove_if(rec.begin(), rec.end(), [&](const Recent& r) { return r.compute_end <= t; }),
              rec.end());
  }
  assign(id, j, t);
  return next_mapping_time();
}

Tick NodeEngine::run_to_completion() {
  while (next_mapping_time() != kNever) map_one();
  return makespan();
}

std::vector<StageDone> NodeEngine::take_stage_completions() {
  std::vector<StageDone> out;
  out.swap(stage_done_);
  return out;
}

Tick NodeEngine::makespan() const {
  Tick m = 0;
  for (const auto& d : devices_) m = std::max(m, d.finish);
  return m;
}

ScheduleTrace NodeEngine::take_trace() {
  trace_.makespan = makespan();
  ScheduleTrace out;
  std::swap(out, trace_);
  return out;
}

Tick critical_path_bound(const NodeEngine& engine, std::span<const StageInstance> instances) {
  const Workflow& wf = engine.workflow();
  // Longest op path of each stage for a given chunk.
  auto stage_path = [&](std::uint32_t s, std::uint32_t chunk) {
    const auto& st = wf.stage(s);
    std::vector<Tick> finish(st.op_count, 0);
    std::vector<bool> done(st.op_count, false);
    std::function<Tick(std::uint32_t)> f = [&](std::uint32_t local) -> Tick {
      if (done[local]) return finish[local];
      const std::uint32_t g = st.first_op + local;
      Tick start = 0;
      for (std::uint32_t d : wf.op(g).deps) start = std::max(start, f(d - st.first_op));
      finish[local] = start + std::min(engine.cpu_cost(g, chunk), engine.gpu_cost(g, chunk));
      done[local] = true;
      return finish[local];
    };
    Tick best = 0;
    for (std::uint32_t i = 0; i < st.op_count; ++i) best = std::max(best, f(i));
    return best;
  };

  std::unordered_map<std::uint32_t, const StageInstance*> by_id;
  for (const auto& si : instances) by_id.emplace(si.id, &si);
  std::unordered_map<std::uint32_t, Tick> memo;
  std::function<Tick(const StageInstance&)> end_of = [&](const StageInstance& si) -> Tick {
    if (auto it = memo.find(si.id); it != memo.end()) return it->second;
    Tick start = 0;
    for (std::uint32_t up : si.depends_on) {
      if (auto it = by_id.find(up); it != by_id.end()) start = std::max(start, end_of(*it->second));
    }
    const Tick v = start + stage_path(si.stage, si.chunk);
    memo.emplace(si.id, v);
    return v;
  };
  Tick bound = 0;
  for (const auto& si : instances) bound = std::max(bound, end_of(si));
  return bound;
}

Tick replay(const Workflow& wf, const NodeConfig& cfg, const SchedulerConfig& sched,
            std::span<const StageInstance> instances, std::span<const Tick> delivered,
            const std::vector<Assignment>& sequence) {
  PolicyConfig pc;
  pc.sched = sched;
  pc.forced = sequence;
  NodeEngine engine(wf, cfg, std::move(pc));
  for (std::size_t i = 0; i < instances.size(); ++i) engine.deliver(instances[i], delivered[i]);
  return engine.run_to_completion();
}

void write_trace_csv(std::ostream& os, const Workflow& wf, const ScheduleTrace& trace) {
  os << "time_us,event,op_id,chunk_id,device_id\n";
  for (const auto& r : trace.sorted()) {
    os << r.time << ',' << to_string(r.event) << ',' << wf.op(r.op).spec->id << ',' << r.chunk << ',' << r.device
       << '\n';
  }
}

}  // namespace hetersched
