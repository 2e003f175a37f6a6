#include "grcl/grcl.h"

#include <exception>
#include <fstream>
#include <new>
#include <string>
#include <vector>

#include "grcl/datagen.hpp"
#include "grcl/error.hpp"
#include "grcl/harness.hpp"
#include "grcl/model.hpp"
#include "grcl/projection.hpp"
#include "grcl/run.hpp"

struct grcl_config_s {
  grcl::RunConfig cfg;
  std::string json;
  std::string output_dir;
};

struct grcl_result_s {
  grcl::RunConfig cfg;
  grcl::RunResult result;
  std::string metrics_json;
};

namespace {

thread_local std::string g_last_error;

grcl_status status_for(grcl::Errc code) {
  switch (code) {
    case grcl::Errc::dimension: return GRCL_ERR_DIMENSION;
    case grcl::Errc::degenerate_input: return GRCL_ERR_DEGENERATE_INPUT;
    case grcl::Errc::contract_violation: return GRCL_ERR_CONTRACT;
    case grcl::Errc::missing_entry: return GRCL_ERR_MISSING_ENTRY;
    case grcl::Errc::insufficient_negatives: return GRCL_ERR_INSUFFICIENT_NEGATIVES;
    case grcl::Errc::numeric: return GRCL_ERR_NUMERIC;
    case grcl::Errc::invalid_config: return GRCL_ERR_CONFIG;
    case grcl::Errc::io: return GRCL_ERR_IO;
  }
  return GRCL_ERR_INTERNAL;
}

grcl_status set_error(grcl_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
grcl_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return GRCL_OK;
  } catch (const grcl::Error& e) {
    return set_error(status_for(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(GRCL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(GRCL_ERR_INTERNAL, e.what());
  }
}

#define GRCL_REQUIRE_ARG(cond)                                                   \
  do {                                                                           \
    if (!(cond)) return set_error(GRCL_ERR_INVALID_ARGUMENT, "null or invalid argument: " #cond); \
  } while (0)

grcl_config_t wrap_config(grcl::RunConfig cfg) {
  auto* h = new grcl_config_s{std::move(cfg), {}, {}};
  h->json = grcl::run_config_to_json(h->cfg);
  h->output_dir = grcl::resolve_output_dir(h->cfg);
  return h;
}

}  // namespace

extern "C" {

const char* grcl_version(void) { return grcl::library_version(); }

const char* grcl_last_error(void) { return g_last_error.c_str(); }

const char* grcl_status_name(grcl_status status) {
  switch (status) {
    case GRCL_OK: return "ok";
    case GRCL_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case GRCL_ERR_CONFIG: return "config";
    case GRCL_ERR_DIMENSION: return "dimension";
    case GRCL_ERR_DEGENERATE_INPUT: return "degenerate_input";
    case GRCL_ERR_CONTRACT: return "contract_violation";
    case GRCL_ERR_MISSING_ENTRY: return "missing_entry";
    case GRCL_ERR_INSUFFICIENT_NEGATIVES: return "insufficient_negatives";
    case GRCL_ERR_NUMERIC: return "numeric";
    case GRCL_ERR_IO: return "io";
    case GRCL_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

grcl_status grcl_config_load(const char* path, grcl_config_t* out) {
  GRCL_REQUIRE_ARG(path && out);
  *out = nullptr;
  return guarded([&] { *out = wrap_config(grcl::load_run_config(path)); });
}

grcl_status grcl_config_parse(const char* json_text, grcl_config_t* out) {
  GRCL_REQUIRE_ARG(json_text && out);
  *out = nullptr;
  return guarded([&] { *out = wrap_config(grcl::parse_run_config(json_text)); });
}

grcl_status grcl_config_json(grcl_config_t cfg, const char** out) {
  GRCL_REQUIRE_ARG(cfg && out);
  *out = cfg->json.c_str();
  return GRCL_OK;
}

grcl_status grcl_config_set_seed(grcl_config_t cfg, uint64_t seed) {
  GRCL_REQUIRE_ARG(cfg);
  return guarded([&] {
    cfg->cfg.plan.seed = seed;
    cfg->cfg.seeds = {seed};
    cfg->json = grcl::run_config_to_json(cfg->cfg);
  });
}

grcl_status grcl_config_output_dir(grcl_config_t cfg, const char** out) {
  GRCL_REQUIRE_ARG(cfg && out);
  *out = cfg->output_dir.c_str();
  return GRCL_OK;
}

void grcl_config_free(grcl_config_t cfg) { delete cfg; }

grcl_status grcl_run(grcl_config_t cfg, grcl_result_t* out) {
  GRCL_REQUIRE_ARG(cfg && out);
  *out = nullptr;
  return guarded([&] {
    auto* h = new grcl_result_s{cfg->cfg, grcl::execute_run(cfg->cfg), {}};
    h->metrics_json = grcl::metrics_json(h->cfg, h->result);
    *out = h;
  });
}

grcl_status grcl_result_write(grcl_result_t result, const char* out_dir) {
  GRCL_REQUIRE_ARG(result && out_dir);
  return guarded([&] { grcl::write_run_artifacts(result->cfg, result->result, out_dir); });
}

grcl_status grcl_result_metrics(grcl_result_t result, double* acc, double* acc_mean,
                                double* bwt, int* has_bwt) {
  GRCL_REQUIRE_ARG(result);
  const grcl::Metrics& m = result->result.metrics;
  if (acc) *acc = m.acc;
  if (acc_mean) *acc_mean = m.acc_mean;
  if (bwt) *bwt = m.bwt.value_or(0.0);
  if (has_bwt) *has_bwt = m.bwt.has_value() ? 1 : 0;
  return GRCL_OK;
}

grcl_status grcl_result_num_targets(grcl_result_t result, size_t* out) {
  GRCL_REQUIRE_ARG(result && out);
  *out = result->result.r.num_targets();
  return GRCL_OK;
}

grcl_status grcl_result_accuracy(grcl_result_t result, size_t t, size_t j, double* out) {
  GRCL_REQUIRE_ARG(result && out);
  if (!result->result.r.has(t, j)) {
    return set_error(GRCL_ERR_INVALID_ARGUMENT, "accuracy entry was not evaluated");
  }
  *out = result->result.r.at(t, j);
  return GRCL_OK;
}

grcl_status grcl_result_constraints(grcl_result_t result, size_t* checks, size_t* violations) {
  GRCL_REQUIRE_ARG(result);
  if (checks) *checks = result->result.constraint_checks;
  if (violations) *violations = result->result.constraint_violations;
  return GRCL_OK;
}

grcl_status grcl_result_metrics_json(grcl_result_t result, const char** out) {
  GRCL_REQUIRE_ARG(result && out);
  *out = result->metrics_json.c_str();
  return GRCL_OK;
}

void grcl_result_free(grcl_result_t result) { delete result; }

grcl_status grcl_compare(const grcl_config_t* configs, size_t count, const char* out_csv) {
  GRCL_REQUIRE_ARG(configs && out_csv);
  for (size_t i = 0; i < count; ++i) GRCL_REQUIRE_ARG(configs[i]);
  return guarded([&] {
    std::vector<grcl::RunConfig> cfgs;
    for (size_t i = 0; i < count; ++i) cfgs.push_back(configs[i]->cfg);
    const std::vector<grcl::CompareRow> rows = grcl::compare(cfgs);
    std::ofstream out(out_csv);
    if (!out) grcl::fail(grcl::Errc::io, std::string("cannot write ") + out_csv);
    grcl::write_compare_csv(out, rows);
  });
}

grcl_status grcl_generate_preset(const char* preset, uint64_t seed, const char* out_csv) {
  GRCL_REQUIRE_ARG(preset && out_csv);
  return guarded([&] {
    const grcl::DomainSequence seq = grcl::generate_sequence(grcl::preset_specs(preset, seed));
    std::ofstream out(out_csv);
    if (!out) grcl::fail(grcl::Errc::io, std::string("cannot write ") + out_csv);
    grcl::write_dataset_csv(out, seq);
  });
}

grcl_status grcl_project_two(const double* g_t, const double* g_s, const double* g_dm, size_t p,
                             double* w_out, double* u_out, grcl_case* case_out) {
  GRCL_REQUIRE_ARG(g_t && g_s && g_dm && w_out && u_out);
  return guarded([&] {
    grcl::GradientSet g{{g_t, g_t + p}, {g_s, g_s + p}, {g_dm, g_dm + p}};
    const grcl::ProjectionResult r = grcl::project_two(g);
    std::copy(r.w.begin(), r.w.end(), w_out);
    u_out[0] = r.u_star[0];
    u_out[1] = r.u_star[1];
    if (case_out) *case_out = static_cast<grcl_case>(r.tag);
  });
}

grcl_status grcl_project_n(const double* g_t, const double* constraints, size_t n, size_t p,
                           double* w_out, double* u_out) {
  GRCL_REQUIRE_ARG(g_t && w_out && (constraints || n == 0));
  return guarded([&] {
    std::vector<grcl::Vector> cs;
    for (size_t i = 0; i < n; ++i) cs.emplace_back(constraints + i * p, constraints + (i + 1) * p);
    const grcl::ProjectionResult r = grcl::project_n({g_t, p}, cs);
    std::copy(r.w.begin(), r.w.end(), w_out);
    if (u_out) std::copy(r.u_star.begin(), r.u_star.end(), u_out);
  });
}

grcl_status grcl_evaluate_checkpoint(const char* checkpoint_path, const char* dataset_csv,
                                     double* acc_out, size_t capacity, size_t* count_out) {
  GRCL_REQUIRE_ARG(checkpoint_path && dataset_csv && count_out && (acc_out || capacity == 0));
  return guarded([&] {
    const grcl::ModelParams params = grcl::load_checkpoint(checkpoint_path);
    std::ifstream in(dataset_csv);
    if (!in) grcl::fail(grcl::Errc::io, std::string("cannot open ") + dataset_csv);
    const grcl::DomainSequence seq = grcl::read_dataset_csv(in);
    *count_out = seq.domains.size();
    for (size_t j = 0; j < seq.domains.size() && j < capacity; ++j) {
      acc_out[j] = grcl::accuracy(params, seq.domains[j].test);
    }
  });
}

}  // extern "C"
