#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace srn {

/// How operation counts are attributed.
///   kDense: analytic full counts (what a static profiler reports),
///           independent of input sparsity.
///   kEvent: actual work, gated by nonzero inputs / spikes.
///   kMixed: dense MACs + event ACs; the convention the published per-frame
///           tables follow (MAC constant in r, AC varying with spikes).
enum class CountingMode { kDense, kEvent, kMixed };

const char* counting_mode_name(CountingMode mode);

struct OpCounts {
  std::uint64_t mac_dense = 0;
  std::uint64_t mac_event = 0;
  std::uint64_t ac_dense = 0;
  std::uint64_t ac_event = 0;

  std::uint64_t mac(CountingMode mode) const {
    return mode == CountingMode::kEvent ? mac_event : mac_dense;
  }
  std::uint64_t ac(CountingMode mode) const {
    return mode == CountingMode::kDense ? ac_dense : ac_event;
  }
  OpCounts& operator+=(const OpCounts& o) {
    mac_dense += o.mac_dense;
    mac_event += o.mac_event;
    ac_dense += o.ac_dense;
    ac_event += o.ac_event;
    return *this;
  }
};

/// Per-layer MAC/AC counters for one forward pass (or an accumulated run).
/// Counts only ever increase; shard merge is addition.
class OpLedger {
 public:
  struct Row {
    std::string layer;
    OpCounts counts;
  };

  /// Additive record of macs/acs under both conventions at once. Use this
  /// when feeding externally known counts (e.g. published per-frame totals).
  void record(const std::string& layer, std::uint64_t macs, std::uint64_t acs);

  /// Additive record with the conventions separated; the conv kernels use this.
  void record_counts(const std::string& layer, const OpCounts& counts);

  void merge(const OpLedger& other);
  void clear();

  bool empty() const { return rows_.empty(); }
  const std::vector<Row>& rows() const { return rows_; }

  std::uint64_t mac_count(CountingMode mode = CountingMode::kMixed) const;
  std::uint64_t ac_count(CountingMode mode = CountingMode::kMixed) const;

  std::uint64_t frame_id = 0;

 private:
  std::vector<Row> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// 45 nm CMOS per-operation energy estimates.
struct EnergyModel {
  double e_mac = 4.6e-12;  // joules per multiply-accumulate
  double e_ac = 0.9e-12;   // joules per accumulate

  void validate() const;
};

/// E = e_mac * total MACs + e_ac * total ACs.
double energy_joules(const OpLedger& ledger, const EnergyModel& model,
                     CountingMode mode = CountingMode::kMixed);

/// Percentage reduction 100 * (1 - E_b / E_a). Invariant under uniform
/// rescaling of both energy constants.
double compare(const OpLedger& baseline, const OpLedger& candidate, const EnergyModel& model,
               CountingMode mode = CountingMode::kMixed);

}  // namespace srn
