#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "pccnmf/dataset.hpp"
#include "pccnmf/nmf.hpp"
#include "pccnmf/prob_model.hpp"

namespace pccnmf {

struct ClusterMember {
  int image = 0;
  double p_image_given_basis = 0.0;  // p(i|b)
  double p_image = 0.0;              // p(i)
};

struct Cluster {
  /// Column of the factorization's B (original index, before any drop).
  int basis = 0;
  double prior = 0.0;  // p(b)
  std::vector<ClusterMember> members;
  bool truncated = false;
};

struct ClusterReport {
  std::vector<Cluster> clusters;  // by decreasing p(b), index breaks ties
  int k = 5;
  bool require_positive = true;

  nlohmann::ordered_json to_json() const;
};

/// Groups images under the basis that causes them: for each basis the top-k
/// images by p(i|b), keeping only p(i|b) > p(i) when require_positive.
/// p(i) is the model marginal sum_b p(b,i). Differences within the relative
/// tie tolerance of the rank scan are treated as zero. Clusters may overlap.
ClusterReport natural_clusters(const PccModel& pcc, int k = 5,
                               bool require_positive = true);

/// Writes cluster_NNN.pgm strips (basis image followed by its members, each
/// panel scaled to 0..255) and index.json. Needs the pixel shape.
void export_cluster_montage(const ClusterReport& report, const DataMatrix& m,
                            const Factorization& f,
                            const std::filesystem::path& dir);

}  // namespace pccnmf
