#include "grcl/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "grcl/error.hpp"
#include "grcl/random.hpp"

namespace grcl {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTrainFraction = 0.8;

Vector sample_base(const DomainSpec& spec, std::size_t label, Rng& rng) {
  const auto k = static_cast<double>(spec.num_classes);
  switch (spec.kind) {
    case GeneratorKind::gaussian_blobs: {
      const double angle = 2.0 * kPi * static_cast<double>(label) / k;
      constexpr double radius = 2.0;
      const double x = radius * std::cos(angle) + spec.noise * standard_normal(rng);
      const double y = radius * std::sin(angle) + spec.noise * standard_normal(rng);
      return {x, y};
    }
    case GeneratorKind::two_moons: {
      const double t = kPi * uniform01(rng);
      double x = std::cos(t);
      double y = std::sin(t);
      if (label == 1) {
        x = 1.0 - x;
        y = 0.5 - y;
      }
      // Centre the pair of moons on the origin so rotations act symmetrically.
      return {x - 0.5 + spec.noise * standard_normal(rng),
              y - 0.25 + spec.noise * standard_normal(rng)};
    }
    case GeneratorKind::rotated_grid: {
      // 4x4 checkerboard on [-2, 2]^2; cell (i, j) has class (i + 2j) mod K.
      constexpr std::size_t cells = 4;
      std::vector<std::pair<std::size_t, std::size_t>> owned;
      for (std::size_t j = 0; j < cells; ++j) {
        for (std::size_t i = 0; i < cells; ++i) {
          if ((i + 2 * j) % spec.num_classes == label) owned.emplace_back(i, j);
        }
      }
      const auto [ci, cj] = owned[uniform_index(rng, owned.size())];
      const double margin = std::clamp(spec.noise, 0.0, 0.45);
      const double u = margin + (1.0 - 2.0 * margin) * uniform01(rng);
      const double v = margin + (1.0 - 2.0 * margin) * uniform01(rng);
      return {-2.0 + static_cast<double>(ci) + u, -2.0 + static_cast<double>(cj) + v};
    }
  }
  return {};
}

Vector transform(const DomainSpec& spec, const Vector& p) {
  const double a = spec.rotation_deg * kPi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  return {spec.scale * (c * p[0] - s * p[1]) + spec.translation[0],
          spec.scale * (s * p[0] + c * p[1]) + spec.translation[1]};
}

}  // namespace

const char* to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::gaussian_blobs: return "gaussian-blobs";
    case GeneratorKind::two_moons: return "two-moons";
    case GeneratorKind::rotated_grid: return "rotated-grid";
  }
  return "unknown";
}

GeneratorKind generator_kind_from_string(const std::string& name) {
  if (name == "gaussian-blobs") return GeneratorKind::gaussian_blobs;
  if (name == "two-moons") return GeneratorKind::two_moons;
  if (name == "rotated-grid") return GeneratorKind::rotated_grid;
  fail(Errc::invalid_config, "unknown generator kind '" + name + "'");
}

void DomainSpec::validate() const {
  require(per_class >= 1, Errc::contract_violation, "domain spec: per_class must be >= 1");
  require(num_classes >= 1, Errc::contract_violation, "domain spec: num_classes must be >= 1");
  require(kind != GeneratorKind::two_moons || num_classes == 2, Errc::contract_violation,
          "domain spec: two-moons has exactly 2 classes");
  require(kind != GeneratorKind::rotated_grid || num_classes <= 8, Errc::contract_violation,
          "domain spec: rotated-grid supports at most 8 classes");
  require(translation.size() == 2, Errc::dimension, "domain spec: translation must be 2-D");
  require(std::isfinite(rotation_deg) && std::isfinite(scale) && std::isfinite(noise) &&
              std::isfinite(translation[0]) && std::isfinite(translation[1]),
          Errc::contract_violation, "domain spec: shift parameters must be finite");
}

Domain generate_domain(const DomainSpec& spec, int index) {
  spec.validate();
  Rng rng = make_rng(spec.seed, SeedStream::data);
  LabeledSet all;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      all.inputs.push_back(transform(spec, sample_base(spec, c, rng)));
      all.labels.push_back(static_cast<int>(c));
    }
  }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = make_rng(spec.seed, SeedStream::data, 1);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(split_rng, i)]);
  }
  const auto n_train = static_cast<std::size_t>(
      std::llround(kTrainFraction * static_cast<double>(all.size())));
  Domain d;
  d.index = index;
  for (std::size_t r = 0; r < order.size(); ++r) {
    LabeledSet& dst = r < n_train ? d.train : d.test;
    dst.inputs.push_back(all.inputs[order[r]]);
    dst.labels.push_back(all.labels[order[r]]);
  }
  return d;
}

DomainSequence generate_sequence(const std::vector<DomainSpec>& specs) {
  require(specs.size() >= 2, Errc::contract_violation,
          "generate_sequence: need a source and at least one target");
  DomainSequence seq;
  seq.num_classes = specs.front().num_classes;
  seq.input_dim = 2;
  for (std::size_t j = 0; j < specs.size(); ++j) {
    if (specs[j].num_classes != seq.num_classes) {
      fail(Errc::contract_violation, "generate_sequence: domain " + std::to_string(j) +
                                         " has a different label space");
    }
    seq.domains.push_back(generate_domain(specs[j], static_cast<int>(j)));
  }
  return seq;
}

std::vector<std::string> preset_names() {
  return {"rot-blobs-5", "rot-blobs-4", "moons-4", "grid-4"};
}

std::vector<DomainSpec> preset_specs(const std::string& name, std::uint64_t seed) {
  std::vector<DomainSpec> specs;
  auto add = [&](GeneratorKind kind, std::size_t classes, std::size_t per_class,
                 double rotation, double noise) {
    DomainSpec s;
    s.kind = kind;
    s.num_classes = classes;
    s.per_class = per_class;
    s.rotation_deg = rotation;
    s.noise = noise;
    s.seed = derive_seed(seed, 1000 + specs.size());
    specs.push_back(s);
  };
  if (name == "rot-blobs-5") {
    for (double r : {0.0, 10.0, 20.0, 30.0, 40.0}) add(GeneratorKind::gaussian_blobs, 4, 500, r, 0.35);
  } else if (name == "rot-blobs-4") {
    for (double r : {0.0, 30.0, 60.0, 90.0}) add(GeneratorKind::gaussian_blobs, 4, 250, r, 0.35);
  } else if (name == "moons-4") {
    for (double r : {0.0, 15.0, 30.0, 45.0}) add(GeneratorKind::two_moons, 2, 500, r, 0.1);
  } else if (name == "grid-4") {
    for (double r : {0.0, 10.0, 20.0, 30.0}) add(GeneratorKind::rotated_grid, 4, 400, r, 0.1);
  } else {
    fail(Errc::invalid_config, "unknown preset '" + name + "'");
  }
  return specs;
}

void write_dataset_csv(std::ostream& out, const DomainSequence& seq) {
  out << "domain,split,label";
  for (std::size_t d = 0; d < seq.input_dim; ++d) out << ",x_" << d + 1;
  out << '\n';
  char buf[32];
  for (const Domain& d : seq.domains) {
    for (const auto& [split, set] : {std::pair<const char*, const LabeledSet*>{"train", &d.train},
                                     {"test", &d.test}}) {
      for (std::size_t i = 0; i < set->size(); ++i) {
        out << d.index << ',' << split << ',' << set->labels[i];
        for (double v : set->inputs[i]) {
          std::snprintf(buf, sizeof buf, ",%.17g", v);
          out << buf;
        }
        out << '\n';
      }
    }
  }
}

DomainSequence read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(Errc::io, "dataset csv: empty input");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 4 || header[0] != "domain" || header[1] != "split" || header[2] != "label") {
    fail(Errc::io, "dataset csv: header must start with domain,split,label,x_1");
  }
  DomainSequence seq;
  seq.input_dim = header.size() - 3;
  std::map<int, Domain> domains;
  int max_label = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) {
      fail(Errc::io, "dataset csv: wrong column count on line " + std::to_string(line_no));
    }
    try {
      const int dom = std::stoi(cells[0]);
      const int label = std::stoi(cells[2]);
      Vector x;
      for (std::size_t c = 3; c < cells.size(); ++c) x.push_back(std::stod(cells[c]));
      Domain& d = domains[dom];
      d.index = dom;
      LabeledSet* dst = nullptr;
      if (cells[1] == "train") dst = &d.train;
      else if (cells[1] == "test") dst = &d.test;
      else fail(Errc::io, "dataset csv: unknown split '" + cells[1] + "'");
      dst->inputs.push_back(std::move(x));
      dst->labels.push_back(label);
      max_label = std::max(max_label, label);
    } catch (const std::logic_error&) {
      fail(Errc::io, "dataset csv: malformed number on line " + std::to_string(line_no));
    }
  }
  int expected = 0;
  for (auto& [index, d] : domains) {
    if (index != expected++) fail(Errc::io, "dataset csv: domains must be numbered 0..N");
    seq.domains.push_back(std::move(d));
  }
  require(seq.domains.size() >= 2, Errc::io, "dataset csv: need a source and a target domain");
  seq.num_classes = static_cast<std::size_t>(max_label + 1);
  return seq;
}

}  // namespace grcl
