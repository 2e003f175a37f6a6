#include "grcl/memory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

#include "grcl/error.hpp"

namespace grcl {

namespace {

std::size_t nearest(std::span<const double> p, std::span<const Vector> centroids,
                    double* dist2 = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

// k-means++: first centre uniform, the rest proportional to D(x)^2.
std::vector<Vector> seed_plus_plus(std::span<const Vector> points, std::size_t k, Rng& rng) {
  std::vector<Vector> centroids;
  centroids.push_back(points[uniform_index(rng, points.size())]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = squared_distance(points[i], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = uniform01(rng) * total;
      for (pick = 0; pick + 1 < points.size(); ++pick) {
        r -= d2[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = uniform_index(rng, points.size());
    }
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
    }
  }
  return centroids;
}

}  // namespace

double kmeans_inertia(std::span<const Vector> points, std::span<const Vector> centroids) {
  double total = 0.0;
  for (const Vector& p : points) {
    double d = 0.0;
    nearest(p, centroids, &d);
    total += d;
  }
  return total;
}

ClusterModel kmeans(std::span<const Vector> points, std::size_t k, Rng& rng,
                    std::size_t max_iter) {
  require(k >= 1, Errc::degenerate_input, "kmeans: k must be at least 1");
  if (points.size() < k) {
    fail(Errc::degenerate_input, "kmeans: " + std::to_string(points.size()) +
                                     " points cannot form " + std::to_string(k) + " clusters");
  }
  const std::size_t dim = points.front().size();
  for (const Vector& p : points) {
    require(p.size() == dim, Errc::dimension, "kmeans: points differ in dimension");
  }

  ClusterModel model;
  model.centroids = seed_plus_plus(points, k, rng);
  model.assignment.assign(points.size(), k);  // k marks "unassigned"

  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::size_t c = nearest(points[i], model.centroids);
      if (c != model.assignment[i]) {
        model.assignment[i] = c;
        changed = true;
      }
    }
    if (!changed) break;

    std::vector<Vector> sums(k, Vector(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      axpy(1.0, points[i], sums[model.assignment[i]]);
      ++counts[model.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      scale(1.0 / static_cast<double>(counts[c]), sums[c]);
      model.centroids[c] = std::move(sums[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      // Re-seed at the point farthest from its own centroid; it moves to the
      // new cluster, which can only lower the inertia.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (counts[model.assignment[i]] <= 1) continue;
        const double d = squared_distance(points[i], model.centroids[model.assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far_d < 0.0) continue;
      --counts[model.assignment[far]];
      model.centroids[c] = points[far];
      model.assignment[far] = c;
      counts[c] = 1;
    }
    model.inertia_history.push_back(kmeans_inertia(points, model.centroids));
    ++model.iterations;
  }
  if (model.inertia_history.empty()) {
    model.inertia_history.push_back(kmeans_inertia(points, model.centroids));
  }
  return model;
}

ClusterModel kmeans_best_of(std::span<const Vector> points, std::size_t k, Rng& rng,
                            std::size_t max_iter, std::size_t restarts) {
  require(restarts >= 1, Errc::degenerate_input, "kmeans: restarts must be at least 1");
  ClusterModel best = kmeans(points, k, rng, max_iter);
  for (std::size_t r = 1; r < restarts; ++r) {
    ClusterModel next = kmeans(points, k, rng, max_iter);
    if (next.inertia() < best.inertia()) best = std::move(next);
  }
  return best;
}

std::vector<int> align_clusters(const ClusterModel& cluster, const ModelParams& params,
                                std::span<const Vector> source_inputs,
                                std::span<const int> source_labels) {
  require(source_inputs.size() == source_labels.size(), Errc::dimension,
          "align_clusters: inputs and labels differ in length");
  require(!source_inputs.empty(), Errc::degenerate_input, "align_clusters: no source samples");
  std::map<int, std::pair<Vector, std::size_t>> sums;
  for (std::size_t i = 0; i < source_inputs.size(); ++i) {
    const Vector e = encode_project(params, source_inputs[i]);
    auto& [sum, count] = sums[source_labels[i]];
    if (sum.empty()) sum.assign(e.size(), 0.0);
    axpy(1.0, e, sum);
    ++count;
  }
  std::vector<int> classes;
  std::vector<Vector> means;
  for (auto& [label, entry] : sums) {
    scale(1.0 / static_cast<double>(entry.second), entry.first);
    classes.push_back(label);
    means.push_back(entry.first);
  }
  std::vector<int> mapping;
  for (const Vector& c : cluster.centroids) {
    require(c.size() == means.front().size(), Errc::dimension,
            "align_clusters: centroid and embedding dimensions differ");
    mapping.push_back(classes[nearest(c, means)]);
  }
  return mapping;
}

std::vector<PseudoLabeled> pseudo_label(const ModelParams& params,
                                        std::span<const DomainSample> samples,
                                        const ClusterModel& cluster,
                                        std::span<const int> label_align) {
  require(label_align.size() == cluster.centroids.size(), Errc::contract_violation,
          "pseudo_label: every cluster needs an aligned class");
  const auto num_classes = static_cast<int>(params.shape().num_classes);
  for (int c : label_align) {
    require(c >= 0 && c < num_classes, Errc::contract_violation,
            "pseudo_label: aligned class outside the label space");
  }
  std::vector<PseudoLabeled> out;
  out.reserve(samples.size());
  for (const DomainSample& s : samples) {
    const Vector e = encode_project(params, s.input);
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t c = 0; c < cluster.centroids.size(); ++c) {
      const double d = std::sqrt(squared_distance(e, cluster.centroids[c]));
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = c;
      } else if (d < d2) {
        d2 = d;
      }
    }
    const double confidence = std::isinf(d2) ? 1.0 : (d2 - d1) / (d2 + 1e-12);
    out.push_back({s.id, s.input, label_align[best], confidence});
  }
  return out;
}

EpisodicMemory build_memory(std::span<const PseudoLabeled> labeled, std::size_t capacity,
                            int domain) {
  require(!labeled.empty(), Errc::degenerate_input, "build_memory: no labelled samples");
  // Per-class queues ordered by confidence (ties by original position).
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labeled.size(); ++i) by_class[labeled[i].label].push_back(i);
  for (auto& [label, idx] : by_class) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return labeled[a].confidence > labeled[b].confidence;
    });
  }
  std::vector<std::size_t> chosen;
  for (std::size_t rank = 0; chosen.size() < capacity; ++rank) {
    bool any = false;
    for (auto& [label, idx] : by_class) {
      if (rank >= idx.size() || chosen.size() >= capacity) continue;
      chosen.push_back(idx[rank]);
      any = true;
    }
    if (!any) break;
  }
  EpisodicMemory mem;
  mem.domain = domain;
  mem.capacity = capacity;
  for (std::size_t i : chosen) mem.samples.push_back(labeled[i]);
  std::stable_sort(mem.samples.begin(), mem.samples.end(),
                   [](const PseudoLabeled& a, const PseudoLabeled& b) {
                     return a.confidence > b.confidence;
                   });
  return mem;
}

void EpisodicMemory::export_csv(std::ostream& out, const ModelParams& params, bool header) const {
  if (header) {
    out << "domain,sample_id,label,confidence";
    for (std::size_t d = 0; d < params.shape().embed_dim; ++d) out << ",e_" << d + 1;
    out << '\n';
  }
  char buf[32];
  for (const PseudoLabeled& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g", s.confidence);
    out << domain << ',' << s.id << ',' << s.label << ',' << buf;
    for (double v : encode_project(params, s.input)) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace grcl
