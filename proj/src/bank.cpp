#include "grcl/bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "grcl/error.hpp"

namespace grcl {

FeatureBank::FeatureBank(double momentum) : momentum_(momentum) {
  require(momentum >= 0.0 && momentum <= 1.0, Errc::contract_violation,
          "feature bank: momentum must lie in [0, 1]");
}

void FeatureBank::insert(SampleId id, Origin origin, std::span<const double> key) {
  if (contains(id)) {
    fail(Errc::contract_violation,
         "feature bank: duplicate sample id " + std::to_string(id));
  }
  require(keys_.empty() || key.size() == keys_.front().size(), Errc::dimension,
          "feature bank: key dimension differs from existing entries");
  index_.emplace(id, keys_.size());
  ids_.push_back(id);
  origins_.push_back(origin);
  keys_.push_back(l2_normalize(key));
}

std::size_t FeatureBank::index_of(SampleId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    fail(Errc::missing_entry, "feature bank: no entry for sample id " + std::to_string(id));
  }
  return it->second;
}

void FeatureBank::momentum_update(SampleId id, std::span<const double> fresh) {
  Vector& k = keys_[index_of(id)];
  require(fresh.size() == k.size(), Errc::dimension, "momentum_update: dimension mismatch");
  if (momentum_ == 1.0) return;
  Vector blended(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    blended[i] = momentum_ * k[i] + (1.0 - momentum_) * fresh[i];
  }
  k = l2_normalize(blended);
}

void FeatureBank::export_csv(std::ostream& out) const {
  const std::size_t dim = keys_.empty() ? 0 : keys_.front().size();
  out << "sample_id,domain,index,origin";
  for (std::size_t d = 0; d < dim; ++d) out << ",e_" << d + 1;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    out << ids_[i] << ',' << sample_domain(ids_[i]) << ',' << sample_index(ids_[i]) << ','
        << to_string(origins_[i]);
    for (double v : keys_[i]) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

FeatureBank init_bank(const ModelParams& prev, std::span<const BankSample> samples,
                      double momentum) {
  require(!samples.empty(), Errc::degenerate_input, "init_bank: empty sample set");
  FeatureBank bank(momentum);
  for (const BankSample& s : samples) {
    bank.insert(s.id, s.origin, encode_project(prev, s.input));
  }
  return bank;
}

std::vector<std::size_t> draw_negative_indices(const FeatureBank& bank, SampleId exclude,
                                               std::size_t count, Rng& rng) {
  const std::size_t excluded = bank.index_of(exclude);
  if (count >= bank.size()) {
    fail(Errc::insufficient_negatives,
         "draw_negatives: requested " + std::to_string(count) + " negatives from a bank of " +
             std::to_string(bank.size()));
  }
  // Floyd's sampling over the n - 1 admissible slots, then skip the excluded entry.
  const std::size_t n = bank.size() - 1;
  std::vector<std::size_t> picked;
  picked.reserve(count);
  for (std::size_t j = n - count; j < n; ++j) {
    const auto t = static_cast<std::size_t>(uniform_index(rng, j + 1));
    if (std::find(picked.begin(), picked.end(), t) == picked.end()) {
      picked.push_back(t);
    } else {
      picked.push_back(j);
    }
  }
  for (std::size_t& i : picked) {
    if (i >= excluded) ++i;
  }
  return picked;
}

std::vector<Vector> draw_negatives(const FeatureBank& bank, SampleId exclude, std::size_t count,
                                   Rng& rng) {
  std::vector<Vector> out;
  for (std::size_t i : draw_negative_indices(bank, exclude, count, rng)) {
    out.push_back(bank.key_at(i));
  }
  return out;
}

}  // namespace grcl
