#include "pccnmf/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "pccnmf/error.hpp"
#include "pccnmf/rank_scan.hpp"
#include "pccnmf/report.hpp"

namespace pccnmf {

ClusterReport natural_clusters(const PccModel& pcc, int k, bool require_positive) {
  if (k < 1) throw ParameterError("cluster size k must be >= 1");
  ClusterReport report;
  report.k = k;
  report.require_positive = require_positive;

  const Eigen::Index r = pcc.rank();
  const Eigen::Index m = pcc.joint_basis_image.cols();
  const Vector p_image = pcc.joint_basis_image.colwise().sum().transpose();

  std::vector<Eigen::Index> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return pcc.basis_prior(a) > pcc.basis_prior(b);
  });

  for (const Eigen::Index b : order) {
    Cluster c;
    c.basis = pcc.kept_bases[b];
    c.prior = pcc.basis_prior(b);
    std::vector<Eigen::Index> images(m);
    std::iota(images.begin(), images.end(), 0);
    std::stable_sort(images.begin(), images.end(), [&](Eigen::Index x, Eigen::Index y) {
      return pcc.cond_image_given_basis(b, x) > pcc.cond_image_given_basis(b, y);
    });
    for (const Eigen::Index i : images) {
      if (static_cast<int>(c.members.size()) == k) break;
      const double given = pcc.cond_image_given_basis(b, i);
      const double marginal = p_image(i);
      if (require_positive && !(given - marginal > kTieTolerance * marginal)) {
        break;  // sorted, so nothing further qualifies
      }
      c.members.push_back({static_cast<int>(i), given, marginal});
    }
    if (static_cast<int>(c.members.size()) < k) {
      c.truncated = true;
      std::ostringstream os;
      os << "cluster for basis " << c.basis << " has " << c.members.size()
         << " of " << k << " requested members";
      warn(os.str());
    }
    report.clusters.push_back(std::move(c));
  }
  return report;
}

nlohmann::ordered_json ClusterReport::to_json() const {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["require_positive"] = require_positive;
  auto& arr = j["clusters"] = nlohmann::ordered_json::array();
  for (const auto& c : clusters) {
    nlohmann::ordered_json cj;
    cj["basis"] = c.basis;
    cj["p_b"] = c.prior;
    cj["truncated"] = c.truncated;
    auto& mem = cj["members"] = nlohmann::ordered_json::array();
    for (const auto& mbr : c.members) {
      mem.push_back({{"image", mbr.image},
                     {"p_i_given_b", mbr.p_image_given_basis},
                     {"p_i", mbr.p_image}});
    }
    arr.push_back(std::move(cj));
  }
  return j;
}

namespace {

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

}  // namespace

void export_cluster_montage(const ClusterReport& report, const DataMatrix& m,
                            const Factorization& f,
                            const std::filesystem::path& dir) {
  if (!m.pixel_shape()) {
    throw ParameterError("cluster montage needs the image pixel shape");
  }
  if (f.basis.rows() != m.rows() || f.weights.cols() != m.cols()) {
    throw ParameterError("factorization does not match the data matrix");
  }
  const int h = m.pixel_shape()->height;
  const int w = m.pixel_shape()->width;
  const double image_scale = m.scale() == Scale::unit ? 255.0 : 1.0;
  std::filesystem::create_directories(dir);

  nlohmann::ordered_json index = report.to_json();
  for (std::size_t c = 0; c < report.clusters.size(); ++c) {
    const Cluster& cl = report.clusters[c];
    const int panels = 1 + static_cast<int>(cl.members.size());
    const int width = panels * w;
    std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * h, 0);

    const auto blit = [&](int panel, const Eigen::Ref<const Vector>& col,
                          double scale) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          px[static_cast<std::size_t>(y) * width + panel * w + x] =
              quantize(col(y * w + x) * scale);
        }
      }
    };
    const double bmax = f.basis.col(cl.basis).maxCoeff();
    blit(0, f.basis.col(cl.basis), bmax > 0.0 ? 255.0 / bmax : 0.0);
    for (std::size_t k = 0; k < cl.members.size(); ++k) {
      blit(static_cast<int>(k) + 1, m.values().col(cl.members[k].image),
           image_scale);
    }
    char name[32];
    std::snprintf(name, sizeof name, "cluster_%03zu.pgm", c);
    write_pgm(dir / name, width, h, px);
    index["clusters"][c]["file"] = name;
  }
  write_json(dir / "index.json", index);
}

}  // namespace pccnmf
