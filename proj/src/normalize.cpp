#include "fedlogit/normalize.hpp"

#include <algorithm>
#include <cmath>

namespace fedlogit {
namespace {

// Two-pass mean / population variance over a row range. Exact and
// summation-order stable for the data sizes this library targets.
FeatureStats two_pass_stats(const std::vector<const Participant*>& rows,
                            std::size_t dimension) {
  FeatureStats stats;
  stats.mean.assign(dimension, 0.0);
  stats.variance.assign(dimension, 0.0);
  stats.sample_count = rows.size();
  const double n = static_cast<double>(rows.size());
  for (const Participant* p : rows)
    for (std::size_t j = 0; j < dimension; ++j) stats.mean[j] += p->features[j];
  for (std::size_t j = 0; j < dimension; ++j) stats.mean[j] /= n;
  for (const Participant* p : rows) {
    for (std::size_t j = 0; j < dimension; ++j) {
      const double d = p->features[j] - stats.mean[j];
      stats.variance[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < dimension; ++j) stats.variance[j] /= n;
  return stats;
}

void check_same_dimension(const std::vector<FeatureStats>& stats) {
  for (const FeatureStats& s : stats) {
    if (s.dimension() != stats.front().dimension())
      throw ShapeError("site statistics disagree on dimension (" +
                       std::to_string(s.dimension()) + " vs " +
                       std::to_string(stats.front().dimension()) + ")");
    if (s.variance.size() != s.mean.size())
      throw ShapeError("statistics mean/variance size mismatch");
  }
}

}  // namespace

const char* normalization_mode_name(NormalizationMode mode) {
  switch (mode) {
    case NormalizationMode::PerSite: return "per-site";
    case NormalizationMode::CentralizedGlobal: return "centralized-global";
    case NormalizationMode::FederatedSimple: return "federated-simple";
    case NormalizationMode::FederatedDecomposed: return "federated-decomposed";
    case NormalizationMode::Neighborhood: return "neighborhood";
  }
  return "unknown";
}

FeatureStats site_stats(const SiteDataset& site) {
  std::vector<const Participant*> rows;
  rows.reserve(site.size());
  for (const Participant& p : site.participants()) rows.push_back(&p);
  FeatureStats stats = two_pass_stats(rows, site.dimension());
  stats.scope = StatsScope::Site;
  stats.origin = site.site_id();
  return stats;
}

FeatureStats pooled_stats(const Cohort& cohort) {
  std::vector<const Participant*> rows;
  rows.reserve(cohort.total_size());
  for (const SiteDataset& s : cohort.sites())
    for (const Participant& p : s.participants()) rows.push_back(&p);
  FeatureStats stats = two_pass_stats(rows, cohort.dimension());
  stats.scope = StatsScope::Global;
  stats.origin.clear();
  return stats;
}

FeatureStats federated_stats(const std::vector<FeatureStats>& site_stats,
                             NormalizationMode mode) {
  if (mode != NormalizationMode::FederatedSimple &&
      mode != NormalizationMode::FederatedDecomposed)
    throw ConfigError(std::string("federated_stats expects federated-simple or "
                                  "federated-decomposed, got ") +
                      normalization_mode_name(mode));
  if (site_stats.empty())
    throw ConfigError("federated_stats requires at least one site's statistics");
  check_same_dimension(site_stats);

  const std::size_t d = site_stats.front().dimension();
  const double k = static_cast<double>(site_stats.size());
  FeatureStats out;
  out.mean.assign(d, 0.0);
  out.variance.assign(d, 0.0);
  out.scope = StatsScope::Global;
  for (const FeatureStats& s : site_stats) {
    out.sample_count += s.sample_count;
    for (std::size_t j = 0; j < d; ++j) {
      out.mean[j] += s.mean[j];
      out.variance[j] += s.variance[j];
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    out.mean[j] /= k;
    out.variance[j] /= k;
  }
  if (mode == NormalizationMode::FederatedDecomposed) {
    for (std::size_t j = 0; j < d; ++j) {
      double between = 0.0;
      for (const FeatureStats& s : site_stats) {
        const double dm = s.mean[j] - out.mean[j];
        between += dm * dm;
      }
      out.variance[j] += between / k;
    }
  }
  return out;
}

FeatureStats neighborhood_stats(
    const std::string& site_id, const EmpiricalGraph& graph,
    const std::unordered_map<std::string, FeatureStats>& all_stats) {
  if (!graph.has_node(site_id))
    throw LookupError("site '" + site_id + "' is not a node of the graph");
  std::vector<std::string> members;
  members.push_back(site_id);
  for (const auto& [nb, w] : graph.neighbors(site_id)) {
    (void)w;
    members.push_back(nb);
  }
  std::sort(members.begin(), members.end());
  std::vector<FeatureStats> stats;
  stats.reserve(members.size());
  for (const std::string& m : members) {
    auto it = all_stats.find(m);
    if (it == all_stats.end())
      throw LookupError("no statistics available for neighborhood member '" + m + "'");
    stats.push_back(it->second);
  }
  FeatureStats out = federated_stats(stats, NormalizationMode::FederatedSimple);
  out.scope = StatsScope::Neighborhood;
  out.origin = site_id;
  return out;
}

SiteDataset apply_zscore(const SiteDataset& site, const FeatureStats& stats,
                         double epsilon) {
  if (stats.dimension() != site.dimension())
    throw ShapeError("statistics dimension " + std::to_string(stats.dimension()) +
                     " does not match site dimension " +
                     std::to_string(site.dimension()));
  std::vector<double> divisor(stats.dimension());
  for (std::size_t j = 0; j < divisor.size(); ++j)
    divisor[j] = std::max(std::sqrt(stats.variance[j]), epsilon);
  std::vector<Participant> rows = site.participants();
  for (Participant& p : rows)
    for (std::size_t j = 0; j < p.features.size(); ++j)
      p.features[j] = (p.features[j] - stats.mean[j]) / divisor[j];
  return SiteDataset(site.site_id(), std::move(rows));
}

}  // namespace fedlogit
