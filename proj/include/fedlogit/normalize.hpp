// Feature statistics and z-score normalization under the regimes a
// federation can realize: per-site, pooled, federated aggregates (with or
// without the between-site mean correction), and graph-neighborhood pooling.
#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "fedlogit/cohort.hpp"
#include "fedlogit/topology.hpp"

namespace fedlogit {

enum class NormalizationMode {
  PerSite,              // each site uses its own mean/variance
  CentralizedGlobal,    // exact pooled statistics (requires raw data sharing)
  FederatedSimple,      // mean of site means, mean of site variances
  FederatedDecomposed,  // adds the between-site spread of means to the variance
  Neighborhood,         // average over the closed graph neighborhood of a site
};

const char* normalization_mode_name(NormalizationMode mode);

enum class StatsScope { Site, Global, Neighborhood };

// Per-feature mean and population variance (1/n), with provenance.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> variance;
  StatsScope scope = StatsScope::Site;
  std::string origin;       // site id ("" for Global)
  std::size_t sample_count = 0;

  std::size_t dimension() const { return mean.size(); }
};

// Divisor floor: features with stddev below this are divided by it instead,
// so constant features map to 0 rather than NaN.
inline constexpr double kZscoreEpsilon = 1e-8;

// Two-pass mean and population variance of one site's features.
FeatureStats site_stats(const SiteDataset& site);

// Exact statistics of all rows pooled across the cohort.
FeatureStats pooled_stats(const Cohort& cohort);

// Aggregates per-site statistics without sharing raw data.
// FederatedSimple:      mean_k(mu_k), mean_k(var_k).
// FederatedDecomposed:  mean_k(mu_k), mean_k(var_k) + mean_k((mu_k - mu)^2).
// Any other mode is a ConfigError. Site weights are uniform, matching an
// unweighted federation. With one site both modes return that site's stats.
FeatureStats federated_stats(const std::vector<FeatureStats>& site_stats,
                             NormalizationMode mode);

// FederatedSimple aggregate over the closed neighborhood {site} + N(site)
// in the given graph. Isolated sites fall back to their own statistics.
// `all_stats` must contain every member of the neighborhood.
FeatureStats neighborhood_stats(
    const std::string& site_id, const EmpiricalGraph& graph,
    const std::unordered_map<std::string, FeatureStats>& all_stats);

// Returns a copy of `site` with features replaced by (x - mean) / max(sd, eps).
SiteDataset apply_zscore(const SiteDataset& site, const FeatureStats& stats,
                         double epsilon = kZscoreEpsilon);

}  // namespace fedlogit
