#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "grcl/numerics.hpp"
#include "grcl/random.hpp"

namespace grcl {

// ---------------------------------------------------------------------------
// Samples and batches
// ---------------------------------------------------------------------------

using SampleId = std::uint64_t;

/// Domain 0 is the source; targets are numbered from 1.
constexpr SampleId make_sample_id(int domain, std::size_t index) {
  return (static_cast<SampleId>(domain) << 32) | static_cast<SampleId>(index);
}
constexpr int sample_domain(SampleId id) { return static_cast<int>(id >> 32); }
constexpr std::size_t sample_index(SampleId id) { return id & 0xffffffffULL; }

struct Origin {
  enum class Kind : std::uint8_t { source, memory, target };
  Kind kind = Kind::source;
  int domain = 0;  // memory(i) and target(i) carry the domain index

  static Origin source() { return {Kind::source, 0}; }
  static Origin memory(int i) { return {Kind::memory, i}; }
  static Origin target(int i) { return {Kind::target, i}; }

  bool operator==(const Origin&) const = default;
};

std::string to_string(const Origin& origin);

constexpr int kNoLabel = -1;

/// A mini-batch. Source- and memory-tagged samples carry labels, target-tagged
/// samples carry kNoLabel.
struct Batch {
  std::vector<Vector> inputs;
  std::vector<int> labels;
  std::vector<Origin> origins;
  std::vector<SampleId> ids;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
  void add(Vector x, int label, Origin origin, SampleId id);
  void validate() const;
};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct ModelShape {
  std::size_t input_dim = 2;
  std::vector<std::size_t> encoder_hidden{64, 64};
  std::size_t projector_hidden = 64;
  std::size_t embed_dim = 16;
  std::size_t num_classes = 4;

  std::size_t feature_dim() const { return encoder_hidden.back(); }
  void validate() const;
  bool operator==(const ModelShape&) const = default;
};

enum class Block : std::uint8_t { encoder, projector, classifier };

/// Dense layer view into the flat parameter vector. Weights are row-major
/// [out][in], followed immediately by the bias.
struct DenseLayer {
  Block block;
  std::size_t in;
  std::size_t out;
  std::size_t offset;

  std::size_t weight_offset() const { return offset; }
  std::size_t bias_offset() const { return offset + in * out; }
  std::size_t size() const { return in * out + out; }
};

/// Encoder, projector and classifier parameters living in one flat vector of
/// length P. Layer order in the flat vector: encoder layers, projector hidden,
/// projector output, classifier.
class ModelParams {
 public:
  ModelParams() = default;
  /// All parameters zero.
  explicit ModelParams(ModelShape shape);

  /// Weights uniform in [-a, a], a = sqrt(6 / (fan_in + fan_out)); biases zero.
  static ModelParams glorot(ModelShape shape, Rng& rng);
  static ModelParams unflatten(const ModelShape& shape, std::span<const double> flat);

  const ModelShape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::span<const double> flat() const { return values_; }
  std::span<double> flat() { return values_; }
  Vector flatten() const { return values_; }

  /// [begin, end) offsets of a block inside the flat vector.
  std::pair<std::size_t, std::size_t> block_range(Block block) const;

  std::size_t encoder_layer_count() const { return shape_.encoder_hidden.size(); }
  const DenseLayer& projector_hidden_layer() const { return layers_[encoder_layer_count()]; }
  const DenseLayer& projector_output_layer() const { return layers_[encoder_layer_count() + 1]; }
  const DenseLayer& classifier_layer() const { return layers_.back(); }

 private:
  ModelShape shape_;
  std::vector<DenseLayer> layers_;
  Vector values_;
};

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

/// Encoder features f(x).
Vector encode(const ModelParams& params, std::span<const double> x);
/// Projector output before normalization.
Vector projector_output(const ModelParams& params, std::span<const double> x);
/// Unit-norm embedding q(f(x)).
Vector encode_project(const ModelParams& params, std::span<const double> x);
/// Class logits from the classifier head on f(x).
Vector classify(const ModelParams& params, std::span<const double> x);
/// Argmax of classify(); ties go to the lowest index.
int predict(const ModelParams& params, std::span<const double> x);

// Intermediate values kept for the analytic backward passes.
struct ForwardTrace {
  std::vector<Vector> encoder;  // [x, h1, ..., f]
  Vector projector_hidden;
  Vector projector_out;

  const Vector& features() const { return encoder.back(); }
};

ForwardTrace trace_encoder(const ModelParams& params, std::span<const double> x);
void trace_projector(const ModelParams& params, ForwardTrace& trace);

/// Accumulates encoder gradients given dL/df.
void backprop_encoder(const ModelParams& params, const ForwardTrace& trace,
                      std::span<const double> grad_features, std::span<double> grad);
/// Accumulates projector gradients given dL/dz and returns dL/df.
Vector backprop_projector(const ModelParams& params, const ForwardTrace& trace,
                          std::span<const double> grad_out, std::span<double> grad);
/// Accumulates classifier gradients given dL/dlogits and returns dL/df.
Vector backprop_classifier(const ModelParams& params, std::span<const double> features,
                           std::span<const double> grad_logits, std::span<double> grad);

// ---------------------------------------------------------------------------
// Losses and updates
// ---------------------------------------------------------------------------

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

/// Mean softmax cross-entropy over the batch and its gradient over all P
/// parameters. Projector entries of the gradient are exactly zero.
LossGrad ce_loss_and_grad(const ModelParams& params, const Batch& batch);

/// params - lr * w
ModelParams sgd_step(const ModelParams& params, std::span<const double> w, double lr);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void write_checkpoint(std::ostream& out, const ModelParams& params);
ModelParams read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace grcl
