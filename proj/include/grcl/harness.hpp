#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grcl/bank.hpp"
#include "grcl/contrastive.hpp"
#include "grcl/datagen.hpp"
#include "grcl/memory.hpp"
#include "grcl/model.hpp"
#include "grcl/projection.hpp"

namespace grcl {

enum class Strategy {
  src_only,     // source training only, frozen afterwards
  multitask,    // w = g_t + l1 g_s + l2 g_dm
  crt_src,      // multitask with l2 = 0
  crt_src_mem,  // multitask with both terms (ablation row name)
  crt_sdc,      // contrastive + source constraint
  grcl,         // contrastive + source and memory constraints
};

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

enum class MemoryConstraint {
  pooled,      // one constraint on the union of all memories
  per_domain,  // one constraint per memory, solved with project_n
};

struct BatchRatio {
  double source = 0.25;
  double memory = 0.25;
  double target = 0.5;
};

struct AdaptationPlan {
  Strategy strategy = Strategy::grcl;
  double lambda_source = 1.0;
  double lambda_memory = 1.0;

  std::size_t pretrain_epochs = 30;
  std::size_t epochs_per_domain = 1;
  std::size_t batch_size = 64;
  BatchRatio ratio;
  double lr = 0.05;
  bool cosine_decay = true;

  double bank_momentum = 0.5;
  ContrastiveConfig contrastive;
  std::size_t memory_capacity = 128;
  std::size_t kmeans_max_iter = 100;
  std::size_t kmeans_restarts = 10;
  MemoryConstraint memory_constraint = MemoryConstraint::pooled;
  /// Zero the classifier block of every gradient before combining them.
  bool exclude_classifier = false;

  ModelShape model;
  std::uint64_t seed = 0;

  void validate() const;
};

/// R[t][j]: accuracy on domain j after adapting through domain t (0 = source).
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;
  explicit AccuracyMatrix(std::size_t num_targets);

  std::size_t num_targets() const { return n_; }
  void set(std::size_t t, std::size_t j, double acc);
  bool has(std::size_t t, std::size_t j) const;
  double at(std::size_t t, std::size_t j) const;

  /// "row,col_0..col_N" with empty cells for missing entries.
  void write_csv(std::ostream& out) const;

  bool operator==(const AccuracyMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::optional<double>> cells_;
};

struct Metrics {
  double acc = 0.0;       // (1/N) sum_{t=0..N} R[N][t], as printed
  double acc_mean = 0.0;  // same sum divided by N + 1
  std::optional<double> bwt;  // (1/(N-1)) sum_{t=1..N-1} (R[N][t] - R[t][t]); absent for N = 1
};

Metrics compute_metrics(const AccuracyMatrix& r, std::size_t num_targets);

/// Fraction of argmax predictions matching the labels; ties take the lowest class.
double accuracy(const ModelParams& params, const LabeledSet& test);
/// Accuracies on test sets of domains 0..t.
std::vector<double> evaluate(const ModelParams& params, std::span<const Domain> domains,
                             std::size_t t);

Vector multitask_step_grad(const GradientSet& g, double lambda_source, double lambda_memory);

struct IterationDiagnostics {
  int domain = 0;
  std::size_t iteration = 0;
  double lr = 0.0;
  double loss_contrastive = 0.0;
  double loss_source = 0.0;
  double loss_memory = 0.0;
  std::string case_tag;  // projection case, or "multitask"
  double u_source = 0.0;
  double u_memory = 0.0;  // summed over memories in per-domain mode
  double slack_source = 0.0;
  double slack_memory = 0.0;  // minimum over memories in per-domain mode
  double tolerance = 0.0;
  double update_shift = 0.0;  // |w - g_t|
};

void write_diagnostics_csv(std::ostream& out, std::span<const IterationDiagnostics> rows);

struct MemoryReport {
  int domain = 0;
  std::size_t size = 0;
  double pseudo_label_accuracy = 0.0;  // against held ground truth
};

struct RunResult {
  AccuracyMatrix r;
  Metrics metrics;
  std::vector<IterationDiagnostics> diagnostics;
  std::vector<EpisodicMemory> memories;
  std::vector<MemoryReport> memory_reports;
  std::size_t constraint_checks = 0;
  std::size_t constraint_violations = 0;
  ModelParams final_params;
  FeatureBank final_bank{0.5};  // bank of the last adaptation phase
};

/// State carried between domains.
struct AdaptationState {
  ModelParams params;
  std::vector<EpisodicMemory> memories;
  FeatureBank bank{0.5};
};

/// Supervised cross-entropy training on the source train split.
ModelParams pretrain_source(const AdaptationPlan& plan, const Domain& source);

/// One adaptation phase onto domain t; appends M_t to the state's memories.
void adapt_domain(AdaptationState& state, std::size_t t, const AdaptationPlan& plan,
                  const DomainSequence& data, RunResult& result);

/// Source pre-training, then every target domain in order, with evaluation
/// after each phase.
RunResult run_adaptation(const AdaptationPlan& plan, const DomainSequence& data);

}  // namespace grcl
