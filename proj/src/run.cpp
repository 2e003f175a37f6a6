#include "grcl/run.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "grcl/error.hpp"
#include "json.hpp"

namespace grcl {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

[[noreturn]] void config_error(const std::string& what) { fail(Errc::invalid_config, what); }

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    config_error("config: key '" + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    config_error("config: key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::uint64_t get_seed(const json& v, const std::string& key) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<long long>() < 0)) {
    config_error("config: key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

const char* to_string(DiagnosticsLevel level) {
  switch (level) {
    case DiagnosticsLevel::none: return "none";
    case DiagnosticsLevel::iterations: return "iterations";
    case DiagnosticsLevel::full: return "full";
  }
  return "none";
}

DiagnosticsLevel diagnostics_from_string(const std::string& s) {
  if (s == "none") return DiagnosticsLevel::none;
  if (s == "iterations") return DiagnosticsLevel::iterations;
  if (s == "full") return DiagnosticsLevel::full;
  config_error("config: diagnostics must be none, iterations or full");
}

const char* to_string(MemoryConstraint m) {
  return m == MemoryConstraint::pooled ? "pooled" : "per_domain";
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) config_error("config: unknown key '" + where + key + "'");
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const char* library_version() { return kVersion; }

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) config_error("config: top level must be a JSON object");
  check_keys(root, "",
             {"strategy", "preset", "dataset", "seed", "seeds", "label", "lambda_source",
              "lambda_memory", "pretrain_epochs", "epochs_per_domain", "batch_size",
              "batch_ratio", "lr", "cosine_decay", "bank_momentum", "temperature", "negatives",
              "full_bank_negatives", "memory_capacity", "kmeans_max_iter", "kmeans_restarts",
              "memory_constraint",
              "exclude_classifier", "model", "output_dir", "diagnostics"});

  for (const char* required : {"strategy", "seed"}) {
    if (!root.contains(required)) {
      config_error(std::string("config: missing required field '") + required + "'");
    }
  }
  if (root.contains("preset") == root.contains("dataset")) {
    config_error("config: missing required field 'preset' (or 'dataset'); exactly one must be set");
  }

  RunConfig cfg;
  AdaptationPlan& p = cfg.plan;
  p.strategy = strategy_from_string(get_as<std::string>(root["strategy"], "strategy"));
  p.seed = get_seed(root["seed"], "seed");
  if (root.contains("preset")) cfg.preset = get_as<std::string>(root["preset"], "preset");
  if (root.contains("dataset")) cfg.dataset_path = get_as<std::string>(root["dataset"], "dataset");
  if (!cfg.preset.empty()) preset_specs(cfg.preset);  // rejects unknown names

  const std::map<std::string, std::function<void(const json&)>> setters{
      {"label", [&](const json& v) { cfg.label = get_as<std::string>(v, "label"); }},
      {"lambda_source", [&](const json& v) { p.lambda_source = get_as<double>(v, "lambda_source"); }},
      {"lambda_memory", [&](const json& v) { p.lambda_memory = get_as<double>(v, "lambda_memory"); }},
      {"pretrain_epochs", [&](const json& v) { p.pretrain_epochs = get_count(v, "pretrain_epochs"); }},
      {"epochs_per_domain",
       [&](const json& v) { p.epochs_per_domain = get_count(v, "epochs_per_domain"); }},
      {"batch_size", [&](const json& v) { p.batch_size = get_count(v, "batch_size"); }},
      {"lr", [&](const json& v) { p.lr = get_as<double>(v, "lr"); }},
      {"cosine_decay", [&](const json& v) { p.cosine_decay = get_as<bool>(v, "cosine_decay"); }},
      {"bank_momentum", [&](const json& v) { p.bank_momentum = get_as<double>(v, "bank_momentum"); }},
      {"temperature",
       [&](const json& v) { p.contrastive.temperature = get_as<double>(v, "temperature"); }},
      {"negatives", [&](const json& v) { p.contrastive.negatives = get_count(v, "negatives"); }},
      {"full_bank_negatives",
       [&](const json& v) { p.contrastive.full_bank = get_as<bool>(v, "full_bank_negatives"); }},
      {"memory_capacity", [&](const json& v) { p.memory_capacity = get_count(v, "memory_capacity"); }},
      {"kmeans_max_iter", [&](const json& v) { p.kmeans_max_iter = get_count(v, "kmeans_max_iter"); }},
      {"kmeans_restarts", [&](const json& v) { p.kmeans_restarts = get_count(v, "kmeans_restarts"); }},
      {"memory_constraint",
       [&](const json& v) {
         const auto s = get_as<std::string>(v, "memory_constraint");
         if (s == "pooled") p.memory_constraint = MemoryConstraint::pooled;
         else if (s == "per_domain") p.memory_constraint = MemoryConstraint::per_domain;
         else config_error("config: memory_constraint must be pooled or per_domain");
       }},
      {"exclude_classifier",
       [&](const json& v) { p.exclude_classifier = get_as<bool>(v, "exclude_classifier"); }},
      {"output_dir", [&](const json& v) { cfg.output_dir = get_as<std::string>(v, "output_dir"); }},
      {"diagnostics",
       [&](const json& v) {
         cfg.diagnostics = diagnostics_from_string(get_as<std::string>(v, "diagnostics"));
       }},
      {"seeds",
       [&](const json& v) {
         if (!v.is_array() || v.empty()) config_error("config: 'seeds' must be a non-empty array");
         for (const json& s : v) cfg.seeds.push_back(get_seed(s, "seeds"));
       }},
      {"batch_ratio",
       [&](const json& v) {
         if (!v.is_object()) config_error("config: 'batch_ratio' must be an object");
         check_keys(v, "batch_ratio.", {"source", "memory", "target"});
         if (v.contains("source")) p.ratio.source = get_as<double>(v["source"], "batch_ratio.source");
         if (v.contains("memory")) p.ratio.memory = get_as<double>(v["memory"], "batch_ratio.memory");
         if (v.contains("target")) p.ratio.target = get_as<double>(v["target"], "batch_ratio.target");
       }},
      {"model",
       [&](const json& v) {
         if (!v.is_object()) config_error("config: 'model' must be an object");
         check_keys(v, "model.", {"encoder_hidden", "projector_hidden", "embed_dim"});
         if (v.contains("encoder_hidden")) {
           const json& h = v["encoder_hidden"];
           if (!h.is_array() || h.empty()) {
             config_error("config: 'model.encoder_hidden' must be a non-empty array");
           }
           p.model.encoder_hidden.clear();
           for (const json& x : h) p.model.encoder_hidden.push_back(get_count(x, "model.encoder_hidden"));
         }
         if (v.contains("projector_hidden")) {
           p.model.projector_hidden = get_count(v["projector_hidden"], "model.projector_hidden");
         }
         if (v.contains("embed_dim")) p.model.embed_dim = get_count(v["embed_dim"], "model.embed_dim");
       }},
  };
  for (const auto& [key, value] : root.items()) {
    if (auto it = setters.find(key); it != setters.end()) it->second(value);
  }

  if (cfg.seeds.empty()) cfg.seeds.push_back(p.seed);
  if (cfg.label.empty()) cfg.label = to_string(p.strategy);
  if (!cfg.preset.empty()) {
    const std::vector<DomainSpec> specs = preset_specs(cfg.preset);
    p.model.input_dim = 2;
    p.model.num_classes = specs.front().num_classes;
  }
  p.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::invalid_config, "config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
  const AdaptationPlan& p = cfg.plan;
  ordered_json j;
  j["strategy"] = to_string(p.strategy);
  if (!cfg.preset.empty()) j["preset"] = cfg.preset;
  if (!cfg.dataset_path.empty()) j["dataset"] = cfg.dataset_path;
  j["seed"] = p.seed;
  j["seeds"] = cfg.seeds;
  j["label"] = cfg.label;
  j["lambda_source"] = p.lambda_source;
  j["lambda_memory"] = p.lambda_memory;
  j["pretrain_epochs"] = p.pretrain_epochs;
  j["epochs_per_domain"] = p.epochs_per_domain;
  j["batch_size"] = p.batch_size;
  j["batch_ratio"] = {{"source", p.ratio.source}, {"memory", p.ratio.memory},
                      {"target", p.ratio.target}};
  j["lr"] = p.lr;
  j["cosine_decay"] = p.cosine_decay;
  j["bank_momentum"] = p.bank_momentum;
  j["temperature"] = p.contrastive.temperature;
  j["negatives"] = p.contrastive.negatives;
  j["full_bank_negatives"] = p.contrastive.full_bank;
  j["memory_capacity"] = p.memory_capacity;
  j["kmeans_max_iter"] = p.kmeans_max_iter;
  j["kmeans_restarts"] = p.kmeans_restarts;
  j["memory_constraint"] = to_string(p.memory_constraint);
  j["exclude_classifier"] = p.exclude_classifier;
  j["model"] = {{"encoder_hidden", p.model.encoder_hidden},
                {"projector_hidden", p.model.projector_hidden},
                {"embed_dim", p.model.embed_dim}};
  j["output_dir"] = cfg.output_dir;
  j["diagnostics"] = to_string(cfg.diagnostics);
  return j.dump(2);
}

DomainSequence load_dataset(const RunConfig& cfg, std::uint64_t seed) {
  if (!cfg.preset.empty()) {
    return generate_sequence(preset_specs(cfg.preset, derive_seed(seed, 0xda7a)));
  }
  std::ifstream in(cfg.dataset_path);
  if (!in) fail(Errc::invalid_config, "config: cannot open dataset " + cfg.dataset_path);
  return read_dataset_csv(in);
}

RunResult execute_run(const RunConfig& cfg) {
  const DomainSequence data = load_dataset(cfg, cfg.plan.seed);
  AdaptationPlan plan = cfg.plan;
  plan.model.input_dim = data.input_dim;
  plan.model.num_classes = data.num_classes;
  return run_adaptation(plan, data);
}

std::string resolve_output_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("GRCL_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return cfg.output_dir;
}

std::string metrics_json(const RunConfig& cfg, const RunResult& result) {
  ordered_json j;
  j["strategy"] = to_string(cfg.plan.strategy);
  j["label"] = cfg.label;
  j["seed"] = cfg.plan.seed;
  j["num_targets"] = result.r.num_targets();
  j["acc"] = result.metrics.acc;
  j["acc_mean"] = result.metrics.acc_mean;
  j["bwt"] = result.metrics.bwt ? ordered_json(*result.metrics.bwt) : ordered_json(nullptr);
  j["constraint_checks"] = result.constraint_checks;
  j["constraint_violations"] = result.constraint_violations;
  ordered_json mem = ordered_json::array();
  for (const MemoryReport& m : result.memory_reports) {
    mem.push_back({{"domain", m.domain},
                   {"size", m.size},
                   {"pseudo_label_accuracy", m.pseudo_label_accuracy}});
  }
  j["memories"] = mem;
  return j.dump(2) + "\n";
}

void write_run_artifacts(const RunConfig& cfg, const RunResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::io, "cannot create output directory " + dir + ": " + ec.message());

  auto open = [&](const char* name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) fail(Errc::io, "cannot write " + (fs::path(dir) / name).string());
    return out;
  };
  {
    auto out = open("accuracy_matrix.csv");
    result.r.write_csv(out);
  }
  {
    auto out = open("metrics.json");
    out << metrics_json(cfg, result);
  }
  {
    ordered_json manifest;
    manifest["config"] = ordered_json::parse(run_config_to_json(cfg));
    manifest["seed"] = cfg.plan.seed;
    manifest["versions"] = {{"grcl", kVersion},
                            {"checkpoint_format", 1},
#if defined(__VERSION__)
                            {"compiler", __VERSION__},
#endif
                            {"cxx_standard", static_cast<long>(__cplusplus)}};
    auto out = open("manifest.json");
    out << manifest.dump(2) << '\n';
  }
  save_checkpoint((fs::path(dir) / "model.ckpt").string(), result.final_params);
  {
    auto out = open("memory.csv");
    bool header = true;
    for (const EpisodicMemory& m : result.memories) {
      m.export_csv(out, result.final_params, header);
      header = false;
    }
    if (header) out << "domain,sample_id,label,confidence\n";
  }
  if (cfg.diagnostics != DiagnosticsLevel::none) {
    auto out = open("diagnostics.csv");
    write_diagnostics_csv(out, result.diagnostics);
  }
  if (cfg.diagnostics == DiagnosticsLevel::full) {
    auto out = open("bank.csv");
    result.final_bank.export_csv(out);
  }
}

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size() - 1));
}

std::vector<CompareRow> compare(const std::vector<RunConfig>& configs) {
  if (configs.size() < 2) config_error("compare: need at least two configs");
  auto dataset_of = [](const RunConfig& c) {
    return c.preset.empty() ? "file:" + c.dataset_path : c.preset;
  };
  for (const RunConfig& c : configs) {
    if (dataset_of(c) != dataset_of(configs.front())) {
      config_error("compare: configs use different datasets (" + dataset_of(configs.front()) +
                   " vs " + dataset_of(c) + ")");
    }
  }
  std::vector<CompareRow> rows;
  for (const RunConfig& base : configs) {
    std::vector<double> accs, accs_all, bwts;
    for (std::uint64_t seed : base.seeds) {
      RunConfig cfg = base;
      cfg.plan.seed = seed;
      const RunResult r = execute_run(cfg);
      accs.push_back(r.metrics.acc);
      accs_all.push_back(r.metrics.acc_mean);
      if (r.metrics.bwt) bwts.push_back(*r.metrics.bwt);
    }
    CompareRow row;
    row.label = base.label;
    row.strategy = to_string(base.plan.strategy);
    row.lambda_source = base.plan.lambda_source;
    row.lambda_memory = base.plan.lambda_memory;
    row.dataset = dataset_of(base);
    row.runs = base.seeds.size();
    row.acc = mean_of(accs);
    row.acc_std = sample_std(accs);
    row.acc_over_domains = mean_of(accs_all);
    row.acc_over_domains_std = sample_std(accs_all);
    if (bwts.size() == accs.size()) {
      row.bwt = mean_of(bwts);
      row.bwt_std = sample_std(bwts);
    }
    rows.push_back(row);
  }
  return rows;
}

void write_compare_csv(std::ostream& out, std::span<const CompareRow> rows) {
  out << "label,strategy,lambda_source,lambda_memory,dataset,runs,acc,acc_std,"
         "acc_over_domains,acc_over_domains_std,bwt,bwt_std\n";
  for (const CompareRow& r : rows) {
    out << r.label << ',' << r.strategy << ',' << format_double(r.lambda_source) << ','
        << format_double(r.lambda_memory) << ',' << r.dataset << ',' << r.runs << ','
        << format_double(r.acc) << ',' << format_double(r.acc_std) << ','
        << format_double(r.acc_over_domains) << ',' << format_double(r.acc_over_domains_std)
        << ',' << (r.bwt ? format_double(*r.bwt) : "") << ','
        << (r.bwt_std ? format_double(*r.bwt_std) : "") << '\n';
  }
}

}  // namespace grcl
