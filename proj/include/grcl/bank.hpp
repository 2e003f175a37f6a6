#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "grcl/model.hpp"
#include "grcl/numerics.hpp"
#include "grcl/random.hpp"

namespace grcl {

/// One input to be keyed into the bank.
struct BankSample {
  SampleId id;
  Origin origin;
  Vector input;
};

/// Unit-norm key per sample, blended towards fresh embeddings with momentum m.
///
/// Entries keep insertion order, so negative draws are reproducible for a
/// given seed. The training loop is the only writer.
class FeatureBank {
 public:
  explicit FeatureBank(double momentum = 0.5);

  double momentum() const { return momentum_; }
  std::size_t size() const { return keys_.size(); }
  bool contains(SampleId id) const { return index_.count(id) != 0; }

  /// Adds a new entry; the key is normalized on insertion.
  void insert(SampleId id, Origin origin, std::span<const double> key);

  std::size_t index_of(SampleId id) const;
  const Vector& key(SampleId id) const { return keys_[index_of(id)]; }
  const Vector& key_at(std::size_t i) const { return keys_[i]; }
  SampleId id_at(std::size_t i) const { return ids_[i]; }
  const Origin& origin_at(std::size_t i) const { return origins_[i]; }

  /// k <- normalize(m * k + (1 - m) * fresh)
  void momentum_update(SampleId id, std::span<const double> fresh);

  /// Writes "sample_id,domain,index,origin,e_1..e_d" rows.
  void export_csv(std::ostream& out) const;

 private:
  double momentum_;
  std::vector<SampleId> ids_;
  std::vector<Origin> origins_;
  std::vector<Vector> keys_;
  std::unordered_map<SampleId, std::size_t> index_;
};

/// Bank whose keys are the embeddings of `prev` for every sample.
FeatureBank init_bank(const ModelParams& prev, std::span<const BankSample> samples,
                      double momentum);

/// `count` distinct entry indices drawn uniformly from the bank, never the
/// entry of `exclude`.
std::vector<std::size_t> draw_negative_indices(const FeatureBank& bank, SampleId exclude,
                                               std::size_t count, Rng& rng);
std::vector<Vector> draw_negatives(const FeatureBank& bank, SampleId exclude, std::size_t count,
                                   Rng& rng);

}  // namespace grcl
