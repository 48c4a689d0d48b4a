#include "fedlogit/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fedlogit/rng.hpp"

namespace fedlogit {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && !cell.empty();
}

}  // namespace

SiteDataset::SiteDataset(std::string site_id, std::vector<Participant> participants)
    : site_id_(std::move(site_id)), participants_(std::move(participants)) {
  if (site_id_.empty()) throw IntegrityError("site id must be non-empty");
  if (participants_.empty())
    throw IntegrityError("site '" + site_id_ + "' has no participants");
  dimension_ = participants_.front().features.size();
  std::unordered_set<std::string> seen;
  seen.reserve(participants_.size());
  for (const Participant& p : participants_) {
    if (p.id.empty())
      throw IntegrityError("site '" + site_id_ + "' has a participant with empty id");
    if (!seen.insert(p.id).second)
      throw IntegrityError("duplicate participant id '" + p.id + "' in site '" +
                           site_id_ + "'");
    if (p.features.size() != dimension_)
      throw ShapeError("site '" + site_id_ + "': participant '" + p.id +
                       "' has dimension " + std::to_string(p.features.size()) +
                       ", expected " + std::to_string(dimension_));
    for (double x : p.features) {
      if (!std::isfinite(x))
        throw IntegrityError("site '" + site_id_ + "': participant '" + p.id +
                             "' has a non-finite feature");
    }
    if (p.label != 0 && p.label != 1)
      throw IntegrityError("site '" + site_id_ + "': participant '" + p.id +
                           "' has label " + std::to_string(p.label) +
                           "; labels must be 0 or 1");
    positives_ += static_cast<std::size_t>(p.label);
  }
}

Cohort::Cohort(std::vector<SiteDataset> sites) : sites_(std::move(sites)) {
  if (sites_.empty()) throw IntegrityError("cohort requires at least one site");
  dimension_ = sites_.front().dimension();
  std::unordered_set<std::string> site_ids;
  std::unordered_set<std::string> participant_ids;
  for (const SiteDataset& s : sites_) {
    if (!site_ids.insert(s.site_id()).second)
      throw IntegrityError("duplicate site id '" + s.site_id() + "'");
    if (s.dimension() != dimension_)
      throw ShapeError("site '" + s.site_id() + "' has dimension " +
                       std::to_string(s.dimension()) + ", expected " +
                       std::to_string(dimension_));
    for (const Participant& p : s.participants()) {
      if (!participant_ids.insert(p.id).second)
        throw IntegrityError("participant id '" + p.id +
                             "' appears in more than one site");
    }
    total_size_ += s.size();
    total_positives_ += s.positives();
  }
}

std::vector<std::string> Cohort::site_ids() const {
  std::vector<std::string> ids;
  ids.reserve(sites_.size());
  for (const SiteDataset& s : sites_) ids.push_back(s.site_id());
  return ids;
}

bool Cohort::has_site(const std::string& site_id) const {
  for (const SiteDataset& s : sites_)
    if (s.site_id() == site_id) return true;
  return false;
}

const SiteDataset& Cohort::site(const std::string& site_id) const {
  for (const SiteDataset& s : sites_)
    if (s.site_id() == site_id) return s;
  throw LookupError("unknown site '" + site_id + "'");
}

SiteDataset Cohort::pooled(const std::string& pooled_id) const {
  std::vector<Participant> all;
  all.reserve(total_size_);
  for (const SiteDataset& s : sites_)
    all.insert(all.end(), s.participants().begin(), s.participants().end());
  return SiteDataset(pooled_id, std::move(all));
}

std::string Cohort::summary_json() const {
  nlohmann::json j;
  j["site_count"] = site_count();
  j["dimension"] = dimension();
  j["total_size"] = total_size();
  j["total_positives"] = total_positives();
  j["sites"] = nlohmann::json::array();
  for (const SiteDataset& s : sites_) {
    j["sites"].push_back({{"site_id", s.site_id()},
                          {"size", s.size()},
                          {"positives", s.positives()}});
  }
  return j.dump(2);
}

CsvSchema default_schema(std::size_t dimension) {
  CsvSchema schema;
  schema.feature_columns.reserve(dimension);
  for (std::size_t j = 1; j <= dimension; ++j)
    schema.feature_columns.push_back("f" + std::to_string(j));
  return schema;
}

Cohort ingest_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.empty()) throw SchemaError("'" + path + "' is empty");

  const std::vector<std::string> header = split_csv_line(lines.front());
  std::unordered_map<std::string, std::size_t> column_index;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!column_index.emplace(header[i], i).second)
      throw SchemaError("duplicate column '" + header[i] + "' in header");
  }
  std::vector<std::string> required = {schema.id_column, schema.site_column,
                                       schema.label_column};
  required.insert(required.end(), schema.feature_columns.begin(),
                  schema.feature_columns.end());
  std::vector<std::string> missing;
  for (const std::string& name : required)
    if (!column_index.count(name)) missing.push_back(name);
  if (!missing.empty()) {
    std::string msg = "header is missing required column(s):";
    for (const std::string& name : missing) msg += " '" + name + "'";
    throw SchemaError(msg);
  }
  const std::size_t id_col = column_index.at(schema.id_column);
  const std::size_t site_col = column_index.at(schema.site_column);
  const std::size_t label_col = column_index.at(schema.label_column);
  std::vector<std::size_t> feature_cols;
  for (const std::string& name : schema.feature_columns)
    feature_cols.push_back(column_index.at(name));

  std::vector<std::string> site_order;
  std::unordered_map<std::string, std::vector<Participant>> by_site;
  std::unordered_map<std::string, std::size_t> seen_ids;  // id -> line
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;  // 1-based, header is line 1
    if (trim(lines[li]).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(lines[li]);
    if (cells.size() != header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    Participant p;
    p.id = cells[id_col];
    if (p.id.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty participant id");
    const std::string site_id = cells[site_col];
    if (site_id.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty site id");
    const std::string& label_cell = cells[label_col];
    if (label_cell == "0") {
      p.label = 0;
    } else if (label_cell == "1") {
      p.label = 1;
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": label must be 0 or 1, got '" +
                       label_cell + "'");
    }
    p.features.reserve(feature_cols.size());
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      double v = 0.0;
      if (!parse_double(cells[feature_cols[j]], v) || !std::isfinite(v))
        throw ParseError("line " + std::to_string(line_no) + ": column '" +
                         schema.feature_columns[j] + "' is not a finite number ('" +
                         cells[feature_cols[j]] + "')");
      p.features.push_back(v);
    }
    auto dup = seen_ids.find(p.id);
    if (dup != seen_ids.end())
      throw IntegrityError("duplicate participant id '" + p.id + "' at line " +
                           std::to_string(line_no) + " (first seen at line " +
                           std::to_string(dup->second) + ")");
    seen_ids.emplace(p.id, line_no);
    auto it = by_site.find(site_id);
    if (it == by_site.end()) {
      site_order.push_back(site_id);
      it = by_site.emplace(site_id, std::vector<Participant>{}).first;
    }
    it->second.push_back(std::move(p));
  }
  if (site_order.empty()) throw IntegrityError("'" + path + "' contains no data rows");

  std::vector<SiteDataset> sites;
  sites.reserve(site_order.size());
  for (const std::string& sid : site_order)
    sites.emplace_back(sid, std::move(by_site.at(sid)));
  return Cohort(std::move(sites));
}

void emit_csv(const Cohort& cohort, const std::string& path, const CsvSchema& schema) {
  if (schema.feature_columns.size() != cohort.dimension())
    throw ShapeError("schema has " + std::to_string(schema.feature_columns.size()) +
                     " feature columns, cohort dimension is " +
                     std::to_string(cohort.dimension()));
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << schema.id_column << ',' << schema.site_column << ',' << schema.label_column;
  for (const std::string& name : schema.feature_columns) out << ',' << name;
  out << '\n';
  for (const SiteDataset& s : cohort.sites()) {
    for (const Participant& p : s.participants()) {
      out << p.id << ',' << s.site_id() << ',' << p.label;
      for (double x : p.features) out << ',' << format_double(x);
      out << '\n';
    }
  }
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

MergeResult merge_small_sites(const Cohort& cohort, std::size_t min_size) {
  if (min_size == 0) return MergeResult{cohort, false, {}};

  std::vector<SiteDataset> kept;
  std::vector<const SiteDataset*> small;
  for (const SiteDataset& s : cohort.sites()) {
    if (s.size() < min_size) {
      small.push_back(&s);
    } else {
      kept.push_back(s);
    }
  }
  std::sort(small.begin(), small.end(), [](const SiteDataset* a, const SiteDataset* b) {
    return a->site_id() < b->site_id();
  });

  std::unordered_set<std::string> taken;
  for (const SiteDataset& s : kept) taken.insert(s.site_id());

  MergeResult result{cohort, false, {}};
  std::vector<SiteDataset> pools;
  std::vector<Participant> pending;
  std::size_t pool_counter = 0;
  auto seal_pool = [&]() {
    std::string pool_id;
    do {
      pool_id = "merged-" + std::to_string(pool_counter++);
    } while (taken.count(pool_id));
    taken.insert(pool_id);
    pools.emplace_back(pool_id, std::move(pending));
    pending.clear();
    result.merged_site_ids.push_back(pool_id);
  };
  for (const SiteDataset* s : small) {
    pending.insert(pending.end(), s->participants().begin(), s->participants().end());
    if (pending.size() >= min_size) seal_pool();
  }
  if (!pending.empty()) {
    result.residual_below_min = true;
    seal_pool();
  }

  if (pools.empty()) return result;  // nothing was below min_size
  kept.insert(kept.end(), std::make_move_iterator(pools.begin()),
              std::make_move_iterator(pools.end()));
  result.cohort = Cohort(std::move(kept));
  return result;
}

namespace {

void validate_spec(const SyntheticCohortSpec& spec) {
  auto fail = [](const std::string& what) { throw ConfigError("synthetic cohort: " + what); };
  if (spec.site_count < 1) fail("site_count must be >= 1");
  if (spec.dimension < 1) fail("dimension must be >= 1");
  if (spec.min_site_size < 1) fail("min_site_size must be >= 1");
  if (spec.max_site_size < spec.min_site_size)
    fail("max_site_size must be >= min_site_size");
  if (!(spec.size_shape > 0.0) || !std::isfinite(spec.size_shape))
    fail("size_shape must be a positive finite number");
  if (!(spec.positive_rate_min >= 0.0) || !(spec.positive_rate_max <= 1.0) ||
      !(spec.positive_rate_min <= spec.positive_rate_max))
    fail("positive rates must satisfy 0 <= rate_min <= rate_max <= 1");
  if (!(spec.class_separation >= 0.0) || !std::isfinite(spec.class_separation))
    fail("class_separation must be a non-negative finite number");
  if (!(spec.site_shift_scale >= 0.0) || !std::isfinite(spec.site_shift_scale))
    fail("site_shift_scale must be a non-negative finite number");
}

std::string site_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "site-%03zu", k);
  return buf;
}

}  // namespace

Cohort generate_synthetic(const SyntheticCohortSpec& spec) {
  validate_spec(spec);
  if (spec.positive_rate_max == 0.0)
    throw GenerationError("positive rate range [0, 0] cannot produce any positive labels");
  if (spec.positive_rate_min == 1.0)
    throw GenerationError("positive rate range [1, 1] cannot produce any negative labels");

  std::mt19937_64 engine = make_engine(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // Class-mean direction first, so cohorts with equal seeds share geometry
  // even when site layout parameters differ.
  std::vector<double> direction(spec.dimension);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& c : direction) {
      c = normal(engine);
      norm += c * c;
    }
    norm = std::sqrt(norm);
  } while (norm == 0.0);
  for (double& c : direction) c /= norm;

  // Long-tailed site sizes: truncated Pareto with scale = min_site_size.
  std::vector<std::size_t> sizes(spec.site_count);
  for (std::size_t& n : sizes) {
    const double u = u01(engine);
    const double raw =
        static_cast<double>(spec.min_site_size) * std::pow(1.0 - u, -1.0 / spec.size_shape);
    const double clamped = std::min(raw, static_cast<double>(spec.max_site_size));
    n = std::max(spec.min_site_size,
                 static_cast<std::size_t>(std::floor(clamped)));
    n = std::min(n, spec.max_site_size);
  }

  std::uniform_real_distribution<double> rate_dist(spec.positive_rate_min,
                                                   spec.positive_rate_max);
  std::vector<double> rates(spec.site_count);
  for (double& r : rates) r = rate_dist(engine);

  std::vector<std::vector<double>> shifts(spec.site_count,
                                          std::vector<double>(spec.dimension, 0.0));
  for (auto& shift : shifts)
    for (double& c : shift) c = spec.site_shift_scale * normal(engine);

  std::vector<SiteDataset> sites;
  sites.reserve(spec.site_count);
  std::size_t total_pos = 0;
  std::size_t total = 0;
  for (std::size_t k = 0; k < spec.site_count; ++k) {
    const std::size_t n = sizes[k];
    std::size_t n_pos = static_cast<std::size_t>(
        std::llround(rates[k] * static_cast<double>(n)));
    n_pos = std::min(n_pos, n);
    std::vector<int> labels(n, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
    std::shuffle(labels.begin(), labels.end(), engine);

    const std::string sid = site_name(k);
    std::vector<Participant> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Participant p;
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%s-r%04zu", sid.c_str(), i);
      p.id = buf;
      p.label = labels[i];
      const double sign = labels[i] == 1 ? 0.5 : -0.5;
      p.features.resize(spec.dimension);
      for (std::size_t j = 0; j < spec.dimension; ++j) {
        p.features[j] = shifts[k][j] + sign * spec.class_separation * direction[j] +
                        normal(engine);
      }
      rows.push_back(std::move(p));
    }
    total_pos += n_pos;
    total += n;
    sites.emplace_back(sid, std::move(rows));
  }
  if (total_pos == 0 || total_pos == total)
    throw GenerationError(
        "generated cohort is single-class (rounded per-site positive counts gave " +
        std::to_string(total_pos) + " positives of " + std::to_string(total) +
        "); widen the positive rate range or enlarge sites");
  return Cohort(std::move(sites));
}

}  // namespace fedlogit
