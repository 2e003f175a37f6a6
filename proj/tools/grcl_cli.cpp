// grcl: command-line front end over the C API.
//
//   grcl generate --preset rot-blobs-5 --seed 7 --out data.csv
//   grcl run config.json [--seed N] [--out DIR]
//   grcl compare a.json b.json ... --out compare.csv
//   grcl evaluate --checkpoint model.ckpt --dataset data.csv
//
// Exit codes: 0 ok, 1 other failure, 2 invalid config, 3 numeric failure.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "grcl/grcl.h"

namespace {

int exit_code(grcl_status s) {
  switch (s) {
    case GRCL_OK: return 0;
    case GRCL_ERR_CONFIG: return 2;
    case GRCL_ERR_NUMERIC:
    case GRCL_ERR_DEGENERATE_INPUT: return 3;
    default: return 1;
  }
}

int report(grcl_status s, const char* what) {
  if (s == GRCL_OK) return 0;
  std::fprintf(stderr, "grcl: %s: %s (%s)\n", what, grcl_last_error(), grcl_status_name(s));
  return exit_code(s);
}

struct ConfigHandle {
  grcl_config_t h = nullptr;
  ~ConfigHandle() { grcl_config_free(h); }
};

int cmd_generate(const std::string& preset, uint64_t seed, const std::string& out) {
  return report(grcl_generate_preset(preset.c_str(), seed, out.c_str()), "generate");
}

int cmd_run(const std::string& path, const uint64_t* seed, const std::string& out_override) {
  ConfigHandle cfg;
  if (int rc = report(grcl_config_load(path.c_str(), &cfg.h), path.c_str())) return rc;
  if (seed) {
    if (int rc = report(grcl_config_set_seed(cfg.h, *seed), "seed")) return rc;
  }
  const char* dir = nullptr;
  grcl_config_output_dir(cfg.h, &dir);
  const std::string out_dir = out_override.empty() ? dir : out_override;

  grcl_result_t result = nullptr;
  if (int rc = report(grcl_run(cfg.h, &result), "run")) return rc;
  int rc = report(grcl_result_write(result, out_dir.c_str()), "write");
  if (rc == 0) {
    double acc = 0, acc_mean = 0, bwt = 0;
    int has_bwt = 0;
    size_t checks = 0, violations = 0;
    grcl_result_metrics(result, &acc, &acc_mean, &bwt, &has_bwt);
    grcl_result_constraints(result, &checks, &violations);
    std::printf("ACC %.4f  ACC(mean) %.4f  BWT ", acc, acc_mean);
    if (has_bwt) std::printf("%+.4f", bwt); else std::printf("n/a");
    std::printf("  constraint violations %zu/%zu\n", violations, checks);
    std::printf("artifacts in %s\n", out_dir.c_str());
  }
  grcl_result_free(result);
  return rc;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& out) {
  std::vector<ConfigHandle> cfgs(paths.size());
  std::vector<grcl_config_t> raw;
  for (size_t i = 0; i < paths.size(); ++i) {
    if (int rc = report(grcl_config_load(paths[i].c_str(), &cfgs[i].h), paths[i].c_str())) {
      return rc;
    }
    raw.push_back(cfgs[i].h);
  }
  if (int rc = report(grcl_compare(raw.data(), raw.size(), out.c_str()), "compare")) return rc;
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_evaluate(const std::string& ckpt, const std::string& dataset) {
  std::vector<double> acc(64);
  size_t count = 0;
  if (int rc = report(grcl_evaluate_checkpoint(ckpt.c_str(), dataset.c_str(), acc.data(),
                                               acc.size(), &count),
                      "evaluate")) {
    return rc;
  }
  std::printf("domain,accuracy\n");
  for (size_t j = 0; j < count && j < acc.size(); ++j) std::printf("%zu,%.6f\n", j, acc[j]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continual domain adaptation with gradient-regularized contrastive learning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", grcl_version());

  std::string preset = "rot-blobs-5", gen_out = "dataset.csv";
  uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("generate", "write a preset dataset as CSV");
  gen->add_option("--preset", preset, "rot-blobs-5, rot-blobs-4, moons-4 or grid-4")
      ->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--out", gen_out)->capture_default_str();

  std::string run_config, run_out;
  uint64_t run_seed = 0;
  auto* run = app.add_subcommand("run", "train and evaluate one config");
  run->add_option("config", run_config, "JSON config file")->required();
  auto* seed_opt = run->add_option("--seed", run_seed, "override the config seed");
  run->add_option("--out", run_out, "output directory (overrides config and GRCL_OUTPUT_DIR)");

  std::vector<std::string> cmp_configs;
  std::string cmp_out = "compare.csv";
  auto* cmp = app.add_subcommand("compare", "ACC/BWT table over strategies and seeds");
  cmp->add_option("configs", cmp_configs, "JSON config files")->required()->expected(2, -1);
  cmp->add_option("--out", cmp_out)->capture_default_str();

  std::string ckpt, dataset;
  auto* eval = app.add_subcommand("evaluate", "accuracy of a checkpoint on each test split");
  eval->add_option("--checkpoint", ckpt)->required();
  eval->add_option("--dataset", dataset, "dataset CSV from `generate`")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (gen->parsed()) return cmd_generate(preset, gen_seed, gen_out);
  if (run->parsed()) return cmd_run(run_config, seed_opt->count() ? &run_seed : nullptr, run_out);
  if (cmp->parsed()) return cmd_compare(cmp_configs, cmp_out);
  if (eval->parsed()) return cmd_evaluate(ckpt, dataset);
  return 1;
}
