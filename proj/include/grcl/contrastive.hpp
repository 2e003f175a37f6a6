#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grcl/bank.hpp"
#include "grcl/model.hpp"
#include "grcl/numerics.hpp"
#include "grcl/random.hpp"

namespace grcl {

struct ContrastiveConfig {
  double temperature = 0.07;
  std::size_t negatives = 256;
  /// Use every other bank entry as a negative instead of sampling `negatives`.
  bool full_bank = false;

  void validate() const;
};

/// -log( exp(q.k+/t) / (exp(q.k+/t) + sum exp(q.k-/t)) )
double nce_loss(std::span<const double> q, std::span<const double> k_pos,
                std::span<const Vector> k_negs, double temperature);

struct ContrastiveResult {
  double loss = 0.0;            // mean over the batch
  Vector grad;                  // length P; classifier entries are zero
  std::vector<double> losses;   // per sample
  std::vector<Vector> queries;  // per-sample unit embeddings, for the bank update
};

/// Mean contrastive loss of the batch against the bank and its gradient.
/// Bank keys are constants; each sample's positive is its own entry.
/// Negatives are drawn per query, in batch order, from `rng`.
ContrastiveResult contrastive_grad(const ModelParams& params, const Batch& batch,
                                   const FeatureBank& bank, const ContrastiveConfig& cfg,
                                   Rng& rng);

}  // namespace grcl
