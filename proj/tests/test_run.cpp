#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "grcl/error.hpp"
#include "grcl/run.hpp"
#include "json.hpp"

using namespace grcl;
namespace fs = std::filesystem;

namespace {

const char* kQuick = R"({
  "strategy": "GRCL", "seed": 4, "preset": "rot-blobs-4",
  "pretrain_epochs": 3, "epochs_per_domain": 1, "memory_capacity": 32
})";

std::string config_error_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_config);
    return e.what();
  }
  FAIL("config accepted: " << text);
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("grcl_test_run_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("required fields are named when missing") {
  CHECK(config_error_of(R"({"seed": 1, "preset": "rot-blobs-5"})").find("'strategy'") !=
        std::string::npos);
  CHECK(config_error_of(R"({"strategy": "GRCL", "preset": "rot-blobs-5"})").find("'seed'") !=
        std::string::npos);
  CHECK(config_error_of(R"({"strategy": "GRCL", "seed": 1})").find("'preset'") !=
        std::string::npos);
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK(config_error_of(R"({"strategy": "GRCL", "seed": 1, "preset": "rot-blobs-5", "lamda": 1})")
            .find("lamda") != std::string::npos);
  CHECK(config_error_of(R"({"strategy": "GRCL", "seed": 1, "preset": "rot-blobs-5",
                            "batch_ratio": {"source": 0.5, "memory": 0.0, "tgt": 0.5}})")
            .find("tgt") != std::string::npos);
  config_error_of(R"({"strategy": "GEM", "seed": 1, "preset": "rot-blobs-5"})");
  config_error_of(R"({"strategy": "GRCL", "seed": -1, "preset": "rot-blobs-5"})");
  config_error_of(R"({"strategy": "GRCL", "seed": 1, "preset": "nope"})");
  config_error_of(R"({"strategy": "GRCL", "seed": 1, "preset": "rot-blobs-5", "lr": "fast"})");
  config_error_of(R"({"strategy": "GRCL", "seed": 1, "preset": "rot-blobs-5", "lr": 0})");
  config_error_of(R"({"strategy": "GRCL", "seed": 1, "preset": "rot-blobs-5",
                      "dataset": "x.csv"})");
  config_error_of("[1, 2]");
  config_error_of("{not json");
}

TEST_CASE("resolved config parses back to itself") {
  const RunConfig cfg = parse_run_config(kQuick);
  CHECK(cfg.plan.strategy == Strategy::grcl);
  CHECK(cfg.plan.pretrain_epochs == 3);
  CHECK(cfg.label == "GRCL");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4});
  const std::string text = run_config_to_json(cfg);
  CHECK(run_config_to_json(parse_run_config(text)) == text);
}

TEST_CASE("output directory override") {
  const RunConfig cfg = parse_run_config(kQuick);
  ::unsetenv("GRCL_OUTPUT_DIR");
  CHECK(resolve_output_dir(cfg) == "grcl-run");
  ::setenv("GRCL_OUTPUT_DIR", "/tmp/elsewhere", 1);
  CHECK(resolve_output_dir(cfg) == "/tmp/elsewhere");
  ::unsetenv("GRCL_OUTPUT_DIR");
}

TEST_CASE("artifacts are written and reproducible") {
  RunConfig cfg = parse_run_config(kQuick);
  cfg.diagnostics = DiagnosticsLevel::full;
  const fs::path a = scratch("a"), b = scratch("b");
  write_run_artifacts(cfg, execute_run(cfg), a.string());
  write_run_artifacts(cfg, execute_run(cfg), b.string());
  for (const char* name : {"accuracy_matrix.csv", "metrics.json", "manifest.json", "model.ckpt",
                           "memory.csv", "diagnostics.csv", "bank.csv"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  const auto metrics = nlohmann::json::parse(slurp(a / "metrics.json"));
  CHECK(metrics["constraint_violations"] == 0);
  CHECK(metrics["num_targets"] == 3);

  // The manifest's config reproduces the run.
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  RunConfig replay = parse_run_config(manifest["config"].dump());
  replay.diagnostics = DiagnosticsLevel::full;
  const fs::path c = scratch("c");
  write_run_artifacts(replay, execute_run(replay), c.string());
  CHECK(slurp(a / "metrics.json") == slurp(c / "metrics.json"));
  CHECK(slurp(a / "accuracy_matrix.csv") == slurp(c / "accuracy_matrix.csv"));
  for (const fs::path& p : {a, b, c}) fs::remove_all(p);
}

TEST_CASE("source-only metrics report zero BWT") {
  RunConfig cfg = parse_run_config(kQuick);
  cfg.plan.strategy = Strategy::src_only;
  const auto j = nlohmann::json::parse(metrics_json(cfg, execute_run(cfg)));
  CHECK(j["bwt"] == 0.0);
}

TEST_CASE("sample standard deviation") {
  const std::vector<double> v{0.61, 0.64, 0.58, 0.70, 0.62};
  // mean 0.63; squared deviations sum to 0.0080
  CHECK(mean_of(v) == doctest::Approx(0.63));
  CHECK(sample_std(v) == doctest::Approx(std::sqrt(0.0080 / 4.0)));
  CHECK(sample_std(std::vector<double>{1.0}) == 0.0);
}

TEST_CASE("compare rows") {
  RunConfig cfg = parse_run_config(kQuick);
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.plan.pretrain_epochs = 2;
  const std::vector<CompareRow> rows = compare({cfg, cfg});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].runs == 5);
  CHECK(rows[0].acc == rows[1].acc);
  CHECK(rows[0].acc_std == rows[1].acc_std);
  CHECK(*rows[0].bwt == *rows[1].bwt);

  // std over the five per-seed values
  std::vector<double> accs;
  for (std::uint64_t s : cfg.seeds) {
    RunConfig one = cfg;
    one.plan.seed = s;
    accs.push_back(execute_run(one).metrics.acc);
  }
  double m = 0.0;
  for (double a : accs) m += a / 5.0;
  double ss = 0.0;
  for (double a : accs) ss += (a - m) * (a - m);
  CHECK(rows[0].acc == doctest::Approx(m).epsilon(1e-14));
  CHECK(rows[0].acc_std == doctest::Approx(std::sqrt(ss / 4.0)).epsilon(1e-12));

  std::ostringstream out;
  write_compare_csv(out, rows);
  CHECK(out.str().rfind("label,strategy,lambda_source,lambda_memory,dataset,runs,acc,", 0) == 0);
}

TEST_CASE("compare rejects mismatched datasets and single configs") {
  RunConfig a = parse_run_config(kQuick);
  RunConfig b = a;
  b.preset = "moons-4";
  try {
    compare({a, b});
    FAIL("mismatched presets accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_config);
  }
  CHECK_THROWS_AS(compare({a}), Error);
}
