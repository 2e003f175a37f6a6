#include "grcl/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "grcl/error.hpp"

namespace grcl {

std::string to_string(const Origin& origin) {
  switch (origin.kind) {
    case Origin::Kind::source: return "source";
    case Origin::Kind::memory: return "memory(" + std::to_string(origin.domain) + ")";
    case Origin::Kind::target: return "target(" + std::to_string(origin.domain) + ")";
  }
  return "unknown";
}

void Batch::add(Vector x, int label, Origin origin, SampleId id) {
  inputs.push_back(std::move(x));
  labels.push_back(label);
  origins.push_back(origin);
  ids.push_back(id);
}

void Batch::validate() const {
  require(labels.size() == inputs.size() && origins.size() == inputs.size() &&
              ids.size() == inputs.size(),
          Errc::dimension, "batch: field lengths differ");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const bool labelled = labels[i] != kNoLabel;
    const bool wants_label = origins[i].kind != Origin::Kind::target;
    require(labelled == wants_label, Errc::contract_violation,
            "batch: labels must be present exactly for source and memory samples");
  }
}

void ModelShape::validate() const {
  require(input_dim > 0 && !encoder_hidden.empty() && projector_hidden > 0 &&
              embed_dim > 0 && num_classes > 0,
          Errc::invalid_config, "model shape: all dimensions must be positive");
  for (std::size_t h : encoder_hidden) {
    require(h > 0, Errc::invalid_config, "model shape: empty encoder layer");
  }
}

ModelParams::ModelParams(ModelShape shape) : shape_(std::move(shape)) {
  shape_.validate();
  std::size_t offset = 0;
  auto push = [&](Block block, std::size_t in, std::size_t out) {
    layers_.push_back({block, in, out, offset});
    offset += layers_.back().size();
  };
  std::size_t in = shape_.input_dim;
  for (std::size_t h : shape_.encoder_hidden) {
    push(Block::encoder, in, h);
    in = h;
  }
  push(Block::projector, in, shape_.projector_hidden);
  push(Block::projector, shape_.projector_hidden, shape_.embed_dim);
  push(Block::classifier, in, shape_.num_classes);
  values_.assign(offset, 0.0);
}

ModelParams ModelParams::glorot(ModelShape shape, Rng& rng) {
  ModelParams params(std::move(shape));
  for (const DenseLayer& layer : params.layers_) {
    const double a = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (std::size_t i = 0; i < layer.in * layer.out; ++i) {
      params.values_[layer.weight_offset() + i] = a * (2.0 * uniform01(rng) - 1.0);
    }
  }
  return params;
}

ModelParams ModelParams::unflatten(const ModelShape& shape, std::span<const double> flat) {
  ModelParams params(shape);
  require(flat.size() == params.size(), Errc::dimension,
          "unflatten: vector length does not match the model shape");
  std::copy(flat.begin(), flat.end(), params.values_.begin());
  return params;
}

std::pair<std::size_t, std::size_t> ModelParams::block_range(Block block) const {
  std::size_t begin = values_.size();
  std::size_t end = 0;
  for (const DenseLayer& layer : layers_) {
    if (layer.block != block) continue;
    begin = std::min(begin, layer.offset);
    end = std::max(end, layer.offset + layer.size());
  }
  return {begin, end};
}

namespace {

// out = W in + b
Vector dense(std::span<const double> values, const DenseLayer& layer,
             std::span<const double> in) {
  Vector out(layer.out);
  const double* w = values.data() + layer.weight_offset();
  const double* b = values.data() + layer.bias_offset();
  for (std::size_t o = 0; o < layer.out; ++o) {
    double s = b[o];
    const double* row = w + o * layer.in;
    for (std::size_t i = 0; i < layer.in; ++i) s += row[i] * in[i];
    out[o] = s;
  }
  return out;
}

void tanh_inplace(Vector& v) {
  for (double& x : v) x = std::tanh(x);
}

// Accumulates dW += dout * in^T, db += dout and returns W^T dout.
Vector dense_backward(std::span<const double> values, const DenseLayer& layer,
                      std::span<const double> in, std::span<const double> dout,
                      std::span<double> grad) {
  const double* w = values.data() + layer.weight_offset();
  double* gw = grad.data() + layer.weight_offset();
  double* gb = grad.data() + layer.bias_offset();
  Vector din(layer.in, 0.0);
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double d = dout[o];
    gb[o] += d;
    if (d == 0.0) continue;
    const double* row = w + o * layer.in;
    double* grow = gw + o * layer.in;
    for (std::size_t i = 0; i < layer.in; ++i) {
      grow[i] += d * in[i];
      din[i] += row[i] * d;
    }
  }
  return din;
}

void check_input(const ModelParams& params, std::span<const double> x) {
  if (x.size() != params.shape().input_dim) {
    fail(Errc::dimension, "model: input has " + std::to_string(x.size()) +
                              " features, expected " +
                              std::to_string(params.shape().input_dim));
  }
}

}  // namespace

ForwardTrace trace_encoder(const ModelParams& params, std::span<const double> x) {
  check_input(params, x);
  ForwardTrace trace;
  trace.encoder.reserve(params.encoder_layer_count() + 1);
  trace.encoder.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < params.encoder_layer_count(); ++l) {
    Vector h = dense(params.flat(), params.layers()[l], trace.encoder.back());
    tanh_inplace(h);
    trace.encoder.push_back(std::move(h));
  }
  return trace;
}

void trace_projector(const ModelParams& params, ForwardTrace& trace) {
  trace.projector_hidden = dense(params.flat(), params.projector_hidden_layer(), trace.features());
  tanh_inplace(trace.projector_hidden);
  trace.projector_out = dense(params.flat(), params.projector_output_layer(), trace.projector_hidden);
}

void backprop_encoder(const ModelParams& params, const ForwardTrace& trace,
                      std::span<const double> grad_features, std::span<double> grad) {
  Vector delta(grad_features.begin(), grad_features.end());
  for (std::size_t l = params.encoder_layer_count(); l-- > 0;) {
    const Vector& out = trace.encoder[l + 1];
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= 1.0 - out[i] * out[i];
    delta = dense_backward(params.flat(), params.layers()[l], trace.encoder[l], delta, grad);
  }
}

Vector backprop_projector(const ModelParams& params, const ForwardTrace& trace,
                          std::span<const double> grad_out, std::span<double> grad) {
  Vector dh = dense_backward(params.flat(), params.projector_output_layer(),
                             trace.projector_hidden, grad_out, grad);
  for (std::size_t i = 0; i < dh.size(); ++i) {
    const double h = trace.projector_hidden[i];
    dh[i] *= 1.0 - h * h;
  }
  return dense_backward(params.flat(), params.projector_hidden_layer(), trace.features(), dh,
                        grad);
}

Vector backprop_classifier(const ModelParams& params, std::span<const double> features,
                           std::span<const double> grad_logits, std::span<double> grad) {
  return dense_backward(params.flat(), params.classifier_layer(), features, grad_logits, grad);
}

Vector encode(const ModelParams& params, std::span<const double> x) {
  return trace_encoder(params, x).features();
}

Vector projector_output(const ModelParams& params, std::span<const double> x) {
  ForwardTrace trace = trace_encoder(params, x);
  trace_projector(params, trace);
  return trace.projector_out;
}

Vector encode_project(const ModelParams& params, std::span<const double> x) {
  return l2_normalize(projector_output(params, x));
}

Vector classify(const ModelParams& params, std::span<const double> x) {
  return dense(params.flat(), params.classifier_layer(), encode(params, x));
}

int predict(const ModelParams& params, std::span<const double> x) {
  const Vector logits = classify(params, x);
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return static_cast<int>(best);
}

LossGrad ce_loss_and_grad(const ModelParams& params, const Batch& batch) {
  require(batch.labels.size() == batch.size(), Errc::dimension,
          "ce_loss_and_grad: labels and inputs differ in length");
  LossGrad out;
  out.grad.assign(params.size(), 0.0);
  if (batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const auto num_classes = static_cast<int>(params.shape().num_classes);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const int y = batch.labels[s];
    if (y == kNoLabel) {
      fail(Errc::contract_violation, "ce_loss_and_grad: unlabeled sample in batch");
    }
    require(y >= 0 && y < num_classes, Errc::contract_violation,
            "ce_loss_and_grad: label outside the class range");
    const ForwardTrace trace = trace_encoder(params, batch.inputs[s]);
    const Vector logits = dense(params.flat(), params.classifier_layer(), trace.features());
    const Vector logp = log_softmax(logits);
    out.loss += -logp[static_cast<std::size_t>(y)] * inv_n;

    Vector dlogits(logp.size());
    for (std::size_t c = 0; c < logp.size(); ++c) dlogits[c] = std::exp(logp[c]) * inv_n;
    dlogits[static_cast<std::size_t>(y)] -= inv_n;
    const Vector df = backprop_classifier(params, trace.features(), dlogits, out.grad);
    backprop_encoder(params, trace, df, out.grad);
  }
  return out;
}

ModelParams sgd_step(const ModelParams& params, std::span<const double> w, double lr) {
  require(w.size() == params.size(), Errc::dimension, "sgd_step: update length differs from P");
  require(lr >= 0.0 && std::isfinite(lr), Errc::contract_violation,
          "sgd_step: learning rate must be finite and non-negative");
  ModelParams next = params;
  axpy(-lr, w, next.flat());
  return next;
}

// ---------------------------------------------------------------------------
// Checkpoint text format, version 1:
//
//   grcl-checkpoint 1
//   input_dim <n>
//   encoder_hidden <count> <h1> ... <hk>
//   projector_hidden <n>
//   embed_dim <n>
//   num_classes <n>
//   parameters <P>
//   <P lines, one C99 hexadecimal float each>
//   end
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kMagic = "grcl-checkpoint";
constexpr int kVersion = 1;

void expect_key(std::istream& in, const char* key) {
  std::string token;
  if (!(in >> token) || token != key) {
    fail(Errc::io, std::string("checkpoint: expected '") + key + "'");
  }
}

std::size_t read_count(std::istream& in, const char* key) {
  expect_key(in, key);
  std::size_t n = 0;
  if (!(in >> n)) fail(Errc::io, std::string("checkpoint: bad value for ") + key);
  return n;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams& params) {
  const ModelShape& s = params.shape();
  out << kMagic << ' ' << kVersion << '\n';
  out << "input_dim " << s.input_dim << '\n';
  out << "encoder_hidden " << s.encoder_hidden.size();
  for (std::size_t h : s.encoder_hidden) out << ' ' << h;
  out << '\n';
  out << "projector_hidden " << s.projector_hidden << '\n';
  out << "embed_dim " << s.embed_dim << '\n';
  out << "num_classes " << s.num_classes << '\n';
  out << "parameters " << params.size() << '\n';
  char buf[64];
  for (double v : params.flat()) {
    std::snprintf(buf, sizeof buf, "%a\n", v);
    out << buf;
  }
  out << "end\n";
}

ModelParams read_checkpoint(std::istream& in) {
  expect_key(in, kMagic);
  int version = 0;
  if (!(in >> version) || version != kVersion) {
    fail(Errc::io, "checkpoint: unsupported version");
  }
  ModelShape shape;
  shape.input_dim = read_count(in, "input_dim");
  shape.encoder_hidden.resize(read_count(in, "encoder_hidden"));
  for (std::size_t& h : shape.encoder_hidden) {
    if (!(in >> h)) fail(Errc::io, "checkpoint: bad encoder layer width");
  }
  shape.projector_hidden = read_count(in, "projector_hidden");
  shape.embed_dim = read_count(in, "embed_dim");
  shape.num_classes = read_count(in, "num_classes");
  const std::size_t p = read_count(in, "parameters");
  Vector flat(p);
  std::string token;
  for (double& v : flat) {
    if (!(in >> token)) fail(Errc::io, "checkpoint: truncated parameter list");
    char* end = nullptr;
    v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') fail(Errc::io, "checkpoint: bad number " + token);
  }
  expect_key(in, "end");
  return ModelParams::unflatten(shape, flat);
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
  std::ofstream out(path);
  if (!out) fail(Errc::io, "cannot open " + path + " for writing");
  write_checkpoint(out, params);
  if (!out) fail(Errc::io, "failed writing " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace grcl
