#include "grcl/contrastive.hpp"

#include <cmath>

#include "grcl/error.hpp"

namespace grcl {

void ContrastiveConfig::validate() const {
  require(temperature > 0.0 && std::isfinite(temperature), Errc::contract_violation,
          "contrastive: temperature must be positive");
}

namespace {

// Logits [q.k+, q.k-_1, ...] / t.
Vector similarity_logits(std::span<const double> q, std::span<const double> k_pos,
                         std::span<const Vector> k_negs, double temperature) {
  Vector logits;
  logits.reserve(k_negs.size() + 1);
  logits.push_back(dot(q, k_pos) / temperature);
  for (const Vector& k : k_negs) logits.push_back(dot(q, k) / temperature);
  return logits;
}

}  // namespace

double nce_loss(std::span<const double> q, std::span<const double> k_pos,
                std::span<const Vector> k_negs, double temperature) {
  require(temperature > 0.0, Errc::contract_violation, "nce_loss: temperature must be positive");
  if (k_negs.empty()) {
    require(q.size() == k_pos.size(), Errc::dimension, "nce_loss: dimension mismatch");
    return 0.0;
  }
  const Vector logits = similarity_logits(q, k_pos, k_negs, temperature);
  return log_sum_exp(logits) - logits.front();
}

ContrastiveResult contrastive_grad(const ModelParams& params, const Batch& batch,
                                   const FeatureBank& bank, const ContrastiveConfig& cfg,
                                   Rng& rng) {
  cfg.validate();
  require(batch.ids.size() == batch.size(), Errc::dimension,
          "contrastive_grad: ids and inputs differ in length");
  ContrastiveResult out;
  out.grad.assign(params.size(), 0.0);
  if (batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double inv_t = 1.0 / cfg.temperature;

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const std::size_t pos = bank.index_of(batch.ids[s]);
    std::vector<std::size_t> negs;
    if (cfg.full_bank) {
      negs.reserve(bank.size() - 1);
      for (std::size_t i = 0; i < bank.size(); ++i) {
        if (i != pos) negs.push_back(i);
      }
    } else {
      negs = draw_negative_indices(bank, batch.ids[s], cfg.negatives, rng);
    }

    ForwardTrace trace = trace_encoder(params, batch.inputs[s]);
    trace_projector(params, trace);
    const Vector& z = trace.projector_out;
    const double z_norm = norm(z);
    const Vector q = l2_normalize(z);
    require(q.size() == bank.key_at(pos).size(), Errc::dimension,
            "contrastive_grad: embedding and bank key dimensions differ");

    Vector logits(negs.size() + 1);
    logits[0] = dot(q, bank.key_at(pos)) * inv_t;
    for (std::size_t j = 0; j < negs.size(); ++j) logits[j + 1] = dot(q, bank.key_at(negs[j])) * inv_t;
    const double lse = log_sum_exp(logits);
    const double loss = lse - logits[0];
    out.losses.push_back(loss);
    out.loss += loss * inv_n;

    // dL/dq = (1/t) [ (p_0 - 1) k+ + sum_j p_j k_j ]
    Vector dq(q.size(), 0.0);
    axpy((std::exp(logits[0] - lse) - 1.0) * inv_t, bank.key_at(pos), dq);
    for (std::size_t j = 0; j < negs.size(); ++j) {
      axpy(std::exp(logits[j + 1] - lse) * inv_t, bank.key_at(negs[j]), dq);
    }
    // Through q = z / |z|: dL/dz = (dq - (q.dq) q) / |z|
    const double along = dot(q, dq);
    Vector dz(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) dz[i] = (dq[i] - along * q[i]) * inv_n / z_norm;

    const Vector df = backprop_projector(params, trace, dz, out.grad);
    backprop_encoder(params, trace, df, out.grad);
    out.queries.push_back(q);
  }
  return out;
}

}  // namespace grcl
