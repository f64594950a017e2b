#include "srn/energy.hpp"

#include <stdexcept>

namespace srn {

const char* counting_mode_name(CountingMode mode) {
  switch (mode) {
    case CountingMode::kDense: return "dense";
    case CountingMode::kEvent: return "event";
    case CountingMode::kMixed: return "mixed";
  }
  return "?";
}

void OpLedger::record(const std::string& layer, std::uint64_t macs, std::uint64_t acs) {
  record_counts(layer, OpCounts{macs, macs, acs, acs});
}

void OpLedger::record_counts(const std::string& layer, const OpCounts& counts) {
  auto it = index_.find(layer);
  if (it == index_.end()) {
    index_.emplace(layer, rows_.size());
    rows_.push_back(Row{layer, counts});
  } else {
    rows_[it->second].counts += counts;
  }
}

void OpLedger::merge(const OpLedger& other) {
  for (const Row& row : other.rows_) record_counts(row.layer, row.counts);
}

void OpLedger::clear() {
  rows_.clear();
  index_.clear();
}

std::uint64_t OpLedger::mac_count(CountingMode mode) const {
  std::uint64_t total = 0;
  for (const Row& row : rows_) total += row.counts.mac(mode);
  return total;
}

std::uint64_t OpLedger::ac_count(CountingMode mode) const {
  std::uint64_t total = 0;
  for (const Row& row : rows_) total += row.counts.ac(mode);
  return total;
}

void EnergyModel::validate() const {
  if (!(e_mac > 0.0) || !(e_ac > 0.0))
    throw std::invalid_argument("energy model: per-op energies must be positive");
}

double energy_joules(const OpLedger& ledger, const EnergyModel& model, CountingMode mode) {
  model.validate();
  return model.e_mac * static_cast<double>(ledger.mac_count(mode)) +
         model.e_ac * static_cast<double>(ledger.ac_count(mode));
}

double compare(const OpLedger& baseline, const OpLedger& candidate, const EnergyModel& model,
               CountingMode mode) {
  if (baseline.empty() || candidate.empty())
    throw std::invalid_argument("compare: both ledgers must be non-empty");
  const double e_a = energy_joules(baseline, model, mode);
  const double e_b = energy_joules(candidate, model, mode);
  if (e_a == 0.0) throw std::invalid_argument("compare: baseline energy is zero");
  return 100.0 * (1.0 - e_b / e_a);
}

}  // namespace srn
