#include "grcl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "grcl/error.hpp"
#include "grcl/random.hpp"

namespace grcl {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::src_only: return "SRC_ONLY";
    case Strategy::multitask: return "MULTITASK";
    case Strategy::crt_src: return "CRT_SRC";
    case Strategy::crt_src_mem: return "CRT_SRC_MEM";
    case Strategy::crt_sdc: return "CRT_SDC";
    case Strategy::grcl: return "GRCL";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  for (Strategy s : {Strategy::src_only, Strategy::multitask, Strategy::crt_src,
                     Strategy::crt_src_mem, Strategy::crt_sdc, Strategy::grcl}) {
    if (name == to_string(s)) return s;
  }
  fail(Errc::invalid_config, "unknown strategy '" + name + "'");
}

void AdaptationPlan::validate() const {
  auto check = [](bool ok, const char* what) { require(ok, Errc::invalid_config, what); };
  check(lambda_source >= 0.0 && lambda_memory >= 0.0, "lambdas must be non-negative");
  check(ratio.source >= 0.0 && ratio.memory >= 0.0 && ratio.target >= 0.0,
        "batch ratios must be non-negative");
  check(std::abs(ratio.source + ratio.memory + ratio.target - 1.0) < 1e-9,
        "batch ratios must sum to 1");
  check(ratio.target > 0.0, "batch ratio for the target domain must be positive");
  check(batch_size >= 2, "batch_size must be at least 2");
  check(lr > 0.0 && std::isfinite(lr), "lr must be positive");
  check(bank_momentum >= 0.0 && bank_momentum <= 1.0, "bank momentum must lie in [0, 1]");
  check(contrastive.temperature > 0.0, "temperature must be positive");
  check(memory_capacity >= 1, "memory_capacity must be at least 1");
  check(kmeans_max_iter >= 1, "kmeans_max_iter must be at least 1");
  check(kmeans_restarts >= 1, "kmeans_restarts must be at least 1");
  model.validate();
}

// ---------------------------------------------------------------------------
// Accuracy matrix and metrics
// ---------------------------------------------------------------------------

AccuracyMatrix::AccuracyMatrix(std::size_t num_targets)
    : n_(num_targets), cells_((num_targets + 1) * (num_targets + 1)) {}

void AccuracyMatrix::set(std::size_t t, std::size_t j, double acc) {
  require(t <= n_ && j <= n_, Errc::dimension, "accuracy matrix: index out of range");
  require(acc >= 0.0 && acc <= 1.0, Errc::contract_violation,
          "accuracy matrix: entries must lie in [0, 1]");
  cells_[t * (n_ + 1) + j] = acc;
}

bool AccuracyMatrix::has(std::size_t t, std::size_t j) const {
  return t <= n_ && j <= n_ && cells_[t * (n_ + 1) + j].has_value();
}

double AccuracyMatrix::at(std::size_t t, std::size_t j) const {
  if (!has(t, j)) {
    fail(Errc::contract_violation,
         "accuracy matrix: missing entry R[" + std::to_string(t) + "][" + std::to_string(j) + "]");
  }
  return *cells_[t * (n_ + 1) + j];
}

void AccuracyMatrix::write_csv(std::ostream& out) const {
  out << "after_domain";
  for (std::size_t j = 0; j <= n_; ++j) out << ",domain_" << j;
  out << '\n';
  char buf[32];
  for (std::size_t t = 0; t <= n_; ++t) {
    out << t;
    for (std::size_t j = 0; j <= n_; ++j) {
      out << ',';
      if (has(t, j)) {
        std::snprintf(buf, sizeof buf, "%.17g", at(t, j));
        out << buf;
      }
    }
    out << '\n';
  }
}

Metrics compute_metrics(const AccuracyMatrix& r, std::size_t num_targets) {
  require(num_targets >= 1, Errc::contract_violation, "compute_metrics: need N >= 1");
  const std::size_t n = num_targets;
  Metrics m;
  double sum = 0.0;
  for (std::size_t t = 0; t <= n; ++t) sum += r.at(n, t);
  m.acc = sum / static_cast<double>(n);
  m.acc_mean = sum / static_cast<double>(n + 1);
  if (n >= 2) {
    double b = 0.0;
    for (std::size_t t = 1; t < n; ++t) b += r.at(n, t) - r.at(t, t);
    m.bwt = b / static_cast<double>(n - 1);
  }
  return m;
}

double accuracy(const ModelParams& params, const LabeledSet& test) {
  require(test.size() > 0, Errc::degenerate_input, "accuracy: empty test set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (predict(params, test.inputs[i]) == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<double> evaluate(const ModelParams& params, std::span<const Domain> domains,
                             std::size_t t) {
  require(t < domains.size(), Errc::dimension, "evaluate: domain index out of range");
  std::vector<double> row;
  for (std::size_t j = 0; j <= t; ++j) row.push_back(accuracy(params, domains[j].test));
  return row;
}

Vector multitask_step_grad(const GradientSet& g, double lambda_source, double lambda_memory) {
  require(g.g_s.size() == g.g_t.size() && g.g_dm.size() == g.g_t.size(), Errc::dimension,
          "multitask_step_grad: gradient lengths differ");
  Vector w = g.g_t;
  axpy(lambda_source, g.g_s, w);
  axpy(lambda_memory, g.g_dm, w);
  return w;
}

void write_diagnostics_csv(std::ostream& out, std::span<const IterationDiagnostics> rows) {
  out << "domain,iteration,lr,loss_contrastive,loss_source,loss_memory,case,u_source,u_memory,"
         "slack_source,slack_memory,tolerance,update_shift\n";
  char buf[512];
  for (const IterationDiagnostics& d : rows) {
    std::snprintf(buf, sizeof buf,
                  "%d,%zu,%.17g,%.17g,%.17g,%.17g,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  d.domain, d.iteration, d.lr, d.loss_contrastive, d.loss_source, d.loss_memory,
                  d.case_tag.c_str(), d.u_source, d.u_memory, d.slack_source, d.slack_memory,
                  d.tolerance, d.update_shift);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

/// Endless stream of indices in [0, n): a fresh permutation per pass.
class IndexCycler {
 public:
  IndexCycler(std::size_t n, Rng& rng) : order_(n), rng_(rng) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    pos_ = n;
  }

  std::size_t next() {
    if (pos_ == order_.size()) {
      for (std::size_t i = order_.size(); i > 1; --i) {
        std::swap(order_[i - 1], order_[uniform_index(rng_, i)]);
      }
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::vector<std::size_t> order_;
  Rng& rng_;
  std::size_t pos_ = 0;
};

double cosine_lr(const AdaptationPlan& plan, std::size_t it, std::size_t total) {
  if (!plan.cosine_decay || total == 0) return plan.lr;
  constexpr double kPi = 3.14159265358979323846;
  return plan.lr * 0.5 *
         (1.0 + std::cos(kPi * static_cast<double>(it) / static_cast<double>(total)));
}

void zero_block(const ModelParams& params, Block block, Vector& v) {
  const auto [begin, end] = params.block_range(block);
  std::fill(v.begin() + static_cast<std::ptrdiff_t>(begin),
            v.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
}

struct MemoryRef {
  const PseudoLabeled* sample;
  int domain;
};

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

ModelParams pretrain_source(const AdaptationPlan& plan, const Domain& source) {
  Rng init_rng = make_rng(plan.seed, SeedStream::init);
  ModelParams params = ModelParams::glorot(plan.model, init_rng);
  const LabeledSet& train = source.train;
  require(train.size() > 0, Errc::degenerate_input, "pretrain: empty source domain");
  Rng rng = make_rng(plan.seed, SeedStream::batches, 0);
  IndexCycler cycler(train.size(), rng);
  const std::size_t per_epoch = ceil_div(train.size(), plan.batch_size);
  const std::size_t total = per_epoch * plan.pretrain_epochs;
  for (std::size_t it = 0; it < total; ++it) {
    Batch batch;
    for (std::size_t b = 0; b < plan.batch_size; ++b) {
      const std::size_t i = cycler.next();
      batch.add(train.inputs[i], train.labels[i], Origin::source(), make_sample_id(0, i));
    }
    const LossGrad lg = ce_loss_and_grad(params, batch);
    params = sgd_step(params, lg.grad, cosine_lr(plan, it, total));
  }
  return params;
}

void adapt_domain(AdaptationState& state, std::size_t t, const AdaptationPlan& plan,
                  const DomainSequence& data, RunResult& result) {
  require(t >= 1 && t < data.domains.size(), Errc::dimension, "adapt_domain: bad domain index");
  if (plan.strategy == Strategy::src_only) return;

  const Domain& source = data.domains[0];
  const Domain& target = data.domains[t];
  const int dom = static_cast<int>(t);
  require(target.train.size() > 0, Errc::degenerate_input, "adapt_domain: empty target domain");

  // Bank over D_s, M_{1:t-1} and D_t keyed by the previous-stage model.
  std::vector<BankSample> keyed;
  for (std::size_t i = 0; i < source.train.size(); ++i) {
    keyed.push_back({make_sample_id(0, i), Origin::source(), source.train.inputs[i]});
  }
  std::vector<MemoryRef> pool;
  for (const EpisodicMemory& mem : state.memories) {
    for (const PseudoLabeled& s : mem.samples) {
      keyed.push_back({s.id, Origin::memory(mem.domain), s.input});
      pool.push_back({&s, mem.domain});
    }
  }
  for (std::size_t i = 0; i < target.train.size(); ++i) {
    keyed.push_back({make_sample_id(dom, i), Origin::target(dom), target.train.inputs[i]});
  }
  state.bank = init_bank(state.params, keyed, plan.bank_momentum);

  auto n_target = static_cast<std::size_t>(
      std::llround(plan.ratio.target * static_cast<double>(plan.batch_size)));
  auto n_source = static_cast<std::size_t>(
      std::llround(plan.ratio.source * static_cast<double>(plan.batch_size)));
  n_target = std::clamp<std::size_t>(n_target, 1, plan.batch_size);
  n_source = std::min(n_source, plan.batch_size - n_target);
  std::size_t n_memory = plan.batch_size - n_target - n_source;
  if (pool.empty()) {
    n_source += n_memory;
    n_memory = 0;
  }

  Rng batch_rng = make_rng(plan.seed, SeedStream::batches, t);
  Rng neg_rng = make_rng(plan.seed, SeedStream::negatives, t);
  IndexCycler target_cycler(target.train.size(), batch_rng);
  IndexCycler source_cycler(source.train.size(), batch_rng);
  IndexCycler memory_cycler(std::max<std::size_t>(pool.size(), 1), batch_rng);

  const bool projected = plan.strategy == Strategy::crt_sdc || plan.strategy == Strategy::grcl;
  const bool use_memory_constraint = plan.strategy == Strategy::grcl;
  double lambda_s = plan.lambda_source;
  double lambda_m = plan.lambda_memory;
  if (plan.strategy == Strategy::crt_src) lambda_m = 0.0;

  const std::size_t total = ceil_div(target.train.size(), n_target) * plan.epochs_per_domain;
  for (std::size_t it = 0; it < total; ++it) {
    Batch batch;
    Batch src_batch;
    Batch mem_batch;
    std::vector<Batch> per_memory(state.memories.size());
    for (std::size_t b = 0; b < n_target; ++b) {
      const std::size_t i = target_cycler.next();
      batch.add(target.train.inputs[i], kNoLabel, Origin::target(dom), make_sample_id(dom, i));
    }
    for (std::size_t b = 0; b < n_source; ++b) {
      const std::size_t i = source_cycler.next();
      src_batch.add(source.train.inputs[i], source.train.labels[i], Origin::source(),
                    make_sample_id(0, i));
    }
    for (std::size_t b = 0; b < n_memory; ++b) {
      const MemoryRef& m = pool[memory_cycler.next()];
      mem_batch.add(m.sample->input, m.sample->label, Origin::memory(m.domain), m.sample->id);
      per_memory[static_cast<std::size_t>(m.domain) - 1].add(
          m.sample->input, m.sample->label, Origin::memory(m.domain), m.sample->id);
    }
    for (const Batch* part : {&src_batch, &mem_batch}) {
      for (std::size_t i = 0; i < part->size(); ++i) {
        batch.add(part->inputs[i], part->labels[i], part->origins[i], part->ids[i]);
      }
    }
    batch.validate();

    ContrastiveResult crt = contrastive_grad(state.params, batch, state.bank, plan.contrastive,
                                             neg_rng);
    LossGrad ce_s = ce_loss_and_grad(state.params, src_batch);
    LossGrad ce_m = ce_loss_and_grad(state.params, mem_batch);
    GradientSet g{std::move(crt.grad), std::move(ce_s.grad), std::move(ce_m.grad)};
    if (plan.exclude_classifier) {
      for (Vector* v : {&g.g_t, &g.g_s, &g.g_dm}) zero_block(state.params, Block::classifier, *v);
    }

    IterationDiagnostics diag;
    diag.domain = dom;
    diag.iteration = it;
    diag.lr = cosine_lr(plan, it, total);
    diag.loss_contrastive = crt.loss;
    diag.loss_source = ce_s.loss;
    diag.loss_memory = ce_m.loss;

    Vector w;
    if (!projected) {
      w = multitask_step_grad(g, lambda_s, lambda_m);
      diag.case_tag = "multitask";
      diag.u_source = lambda_s;
      diag.u_memory = lambda_m;
      diag.slack_source = dot(w, g.g_s);
      diag.slack_memory = dot(w, g.g_dm);
    } else {
      std::vector<Vector> constraints{g.g_s};
      if (use_memory_constraint) {
        if (plan.memory_constraint == MemoryConstraint::pooled) {
          constraints.push_back(g.g_dm);
        } else {
          for (const Batch& part : per_memory) {
            if (part.empty()) continue;
            LossGrad lg = ce_loss_and_grad(state.params, part);
            if (plan.exclude_classifier) zero_block(state.params, Block::classifier, lg.grad);
            constraints.push_back(std::move(lg.grad));
          }
        }
      }
      ProjectionResult proj;
      if (constraints.size() == 2 && plan.memory_constraint == MemoryConstraint::pooled) {
        proj = project_two(g);
      } else if (constraints.size() == 1) {
        GradientSet single{g.g_t, g.g_s, Vector(g.g_t.size(), 0.0)};
        proj = project_two(single);
      } else {
        proj = project_n(g.g_t, constraints);
      }
      w = std::move(proj.w);
      diag.case_tag = to_string(proj.tag);
      diag.u_source = proj.u_star.empty() ? 0.0 : proj.u_star[0];
      diag.tolerance = proj.tolerance;
      diag.slack_source = dot(w, g.g_s);
      diag.slack_memory = 0.0;
      for (std::size_t c = 1; c < constraints.size(); ++c) {
        const double slack = dot(w, constraints[c]);
        diag.slack_memory = c == 1 ? slack : std::min(diag.slack_memory, slack);
        if (c < proj.u_star.size()) diag.u_memory += proj.u_star[c];
      }
      for (std::size_t c = 0; c < constraints.size(); ++c) {
        ++result.constraint_checks;
        if (dot(w, constraints[c]) < -proj.tolerance) ++result.constraint_violations;
      }
    }
    {
      double shift = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        const double d = w[k] - g.g_t[k];
        shift += d * d;
      }
      diag.update_shift = std::sqrt(shift);
    }
    result.diagnostics.push_back(diag);

    state.params = sgd_step(state.params, w, diag.lr);
    for (std::size_t s = 0; s < batch.size(); ++s) {
      state.bank.momentum_update(batch.ids[s], crt.queries[s]);
    }
  }

  // Episodic memory for this domain from the adapted model.
  std::vector<Vector> embeddings;
  std::vector<DomainSample> samples;
  for (std::size_t i = 0; i < target.train.size(); ++i) {
    embeddings.push_back(encode_project(state.params, target.train.inputs[i]));
    samples.push_back({make_sample_id(dom, i), target.train.inputs[i]});
  }
  Rng cluster_rng = make_rng(plan.seed, SeedStream::clustering, t);
  const ClusterModel clusters =
      kmeans_best_of(embeddings, data.num_classes, cluster_rng, plan.kmeans_max_iter,
                     plan.kmeans_restarts);
  const std::vector<int> align =
      align_clusters(clusters, state.params, source.train.inputs, source.train.labels);
  const std::vector<PseudoLabeled> labeled = pseudo_label(state.params, samples, clusters, align);
  EpisodicMemory mem = build_memory(labeled, plan.memory_capacity, dom);

  MemoryReport report;
  report.domain = dom;
  report.size = mem.size();
  std::size_t correct = 0;
  for (const PseudoLabeled& s : mem.samples) {
    if (target.train.labels[sample_index(s.id)] == s.label) ++correct;
  }
  report.pseudo_label_accuracy =
      mem.size() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(mem.size());
  result.memory_reports.push_back(report);
  state.memories.push_back(std::move(mem));
}

RunResult run_adaptation(const AdaptationPlan& plan, const DomainSequence& data) {
  plan.validate();
  require(data.domains.size() >= 2, Errc::contract_violation,
          "run_adaptation: need a source and at least one target domain");
  require(data.num_classes == plan.model.num_classes, Errc::contract_violation,
          "run_adaptation: model class count differs from the dataset");
  require(data.input_dim == plan.model.input_dim, Errc::contract_violation,
          "run_adaptation: model input dimension differs from the dataset");

  const std::size_t n = data.num_targets();
  RunResult result;
  result.r = AccuracyMatrix(n);

  AdaptationState state;
  state.params = pretrain_source(plan, data.domains[0]);
  result.r.set(0, 0, accuracy(state.params, data.domains[0].test));

  for (std::size_t t = 1; t <= n; ++t) {
    adapt_domain(state, t, plan, data, result);
    const std::vector<double> row = evaluate(state.params, data.domains, t);
    for (std::size_t j = 0; j <= t; ++j) result.r.set(t, j, row[j]);
  }
  result.metrics = compute_metrics(result.r, n);
  result.memories = std::move(state.memories);
  result.final_params = std::move(state.params);
  result.final_bank = std::move(state.bank);
  return result;
}

}  // namespace grcl
