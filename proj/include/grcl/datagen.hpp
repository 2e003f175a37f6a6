#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "grcl/numerics.hpp"

namespace grcl {

enum class GeneratorKind { gaussian_blobs, two_moons, rotated_grid };

const char* to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& name);

/// One domain: a base distribution followed by x -> scale * R(rotation) x + translation.
/// Inputs are 2-D.
struct DomainSpec {
  GeneratorKind kind = GeneratorKind::gaussian_blobs;
  std::size_t num_classes = 4;
  std::size_t per_class = 500;
  double rotation_deg = 0.0;
  Vector translation{0.0, 0.0};
  double scale = 1.0;
  double noise = 0.35;          // within-class spread of the base distribution
  std::uint64_t seed = 0;       // base-distribution seed; equal seeds give equal base samples

  void validate() const;
};

struct LabeledSet {
  std::vector<Vector> inputs;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
};

struct Domain {
  int index = 0;  // 0 = source
  LabeledSet train;
  LabeledSet test;  // target train labels are kept for diagnostics only
};

struct DomainSequence {
  std::size_t num_classes = 0;
  std::size_t input_dim = 0;
  std::vector<Domain> domains;  // domains[0] is the source

  std::size_t num_targets() const { return domains.size() - 1; }
};

/// Samples one domain: exact class balance, then a seeded 80/20 train/test split.
Domain generate_domain(const DomainSpec& spec, int index);

/// Domain j is generated from specs[j]; specs[0] is the source.
DomainSequence generate_sequence(const std::vector<DomainSpec>& specs);

std::vector<std::string> preset_names();
/// Named reference suites; `seed` shifts every base-distribution seed.
std::vector<DomainSpec> preset_specs(const std::string& name, std::uint64_t seed = 0);

/// CSV with header "domain,split,label,x_1,...,x_d".
void write_dataset_csv(std::ostream& out, const DomainSequence& seq);
DomainSequence read_dataset_csv(std::istream& in);

}  // namespace grcl
