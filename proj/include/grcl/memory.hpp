#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "grcl/model.hpp"
#include "grcl/numerics.hpp"
#include "grcl/random.hpp"

namespace grcl {

struct ClusterModel {
  std::vector<Vector> centroids;
  std::vector<std::size_t> assignment;  // cluster of each input point
  std::vector<double> inertia_history;  // after each Lloyd iteration
  std::size_t iterations = 0;

  double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }
};

/// Lloyd's algorithm with k-means++ seeding. Stops at an assignment fixpoint
/// or after max_iter iterations. An empty cluster is re-seeded at the point
/// farthest from its current centroid.
ClusterModel kmeans(std::span<const Vector> points, std::size_t k, Rng& rng,
                    std::size_t max_iter = 100);

/// Best of `restarts` independent kmeans runs by final inertia; the first
/// run with the lowest inertia wins.
ClusterModel kmeans_best_of(std::span<const Vector> points, std::size_t k, Rng& rng,
                            std::size_t max_iter, std::size_t restarts);

/// Sum of squared distances from each point to its nearest centroid.
double kmeans_inertia(std::span<const Vector> points, std::span<const Vector> centroids);

/// A domain sample to be pseudo-labelled.
struct DomainSample {
  SampleId id;
  Vector input;
};

struct PseudoLabeled {
  SampleId id;
  Vector input;
  int label;
  double confidence;
};

/// Maps every cluster to the class whose source mean embedding is nearest.
std::vector<int> align_clusters(const ClusterModel& cluster, const ModelParams& params,
                                std::span<const Vector> source_inputs,
                                std::span<const int> source_labels);

/// Label = aligned class of the nearest centroid;
/// confidence = (d2 - d1) / (d2 + 1e-12) with d1 <= d2 the two nearest
/// centroid distances in embedding space.
std::vector<PseudoLabeled> pseudo_label(const ModelParams& params,
                                        std::span<const DomainSample> samples,
                                        const ClusterModel& cluster,
                                        std::span<const int> label_align);

struct EpisodicMemory {
  int domain = 0;
  std::size_t capacity = 0;
  std::vector<PseudoLabeled> samples;  // confidence non-increasing

  std::size_t size() const { return samples.size(); }

  /// Writes "domain,sample_id,label,confidence,e_1..e_d" rows using the
  /// embeddings of `params`.
  void export_csv(std::ostream& out, const ModelParams& params, bool header = true) const;
};

/// Keeps at most `capacity` samples: classes take turns contributing their
/// next most confident sample until the capacity is reached.
EpisodicMemory build_memory(std::span<const PseudoLabeled> labeled, std::size_t capacity,
                            int domain = 0);

}  // namespace grcl
