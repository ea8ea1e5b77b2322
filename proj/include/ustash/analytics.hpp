#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ustash/io.hpp"
#include "ustash/workload.hpp"

// Spatio-temporal correlation metrics over request sets: Jaccard similarity
// between groups (buses, routes, days) and the normalized entropy of a
// content's request sources.
namespace ustash::analytics {

struct RequestSet {
  std::string label;
  std::set<std::string> ids;
};

struct SourceCounts {
  std::vector<std::pair<std::string, double>> counts;  // (source label, alpha)
  std::size_t n = 1;                                    // declared number of sources
};

struct JaccardResult {
  double value = 0.0;
  bool degenerate = false;  // both sets empty
};

inline JaccardResult jaccard_checked(const RequestSet& a, const RequestSet& b) {
  if (a.ids.empty() && b.ids.empty()) return {1.0, true};
  const auto& small = a.ids.size() <= b.ids.size() ? a.ids : b.ids;
  const auto& large = a.ids.size() <= b.ids.size() ? b.ids : a.ids;
  std::size_t inter = 0;
  for (const auto& id : small) inter += large.count(id);
  const std::size_t uni = a.ids.size() + b.ids.size() - inter;
  return {static_cast<double>(inter) / static_cast<double>(uni), false};
}

inline double jaccard(const RequestSet& a, const RequestSet& b) {
  return jaccard_checked(a, b).value;
}

// Shannon entropy of the source distribution in nats. Debug companion to
// source_entropy; the normalized value does not depend on the log base.
inline double source_entropy_nats(const SourceCounts& sc) {
  double total = 0.0;
  for (const auto& [label, c] : sc.counts) {
    if (c < 0.0) throw std::domain_error("source count must be >= 0");
    total += c;
  }
  if (!(total > 0.0)) throw std::domain_error("source counts must not all be zero");
  double h = 0.0;
  for (const auto& [label, c] : sc.counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log(p);
    }
  }
  return h;
}

// E_S = -sum P log P / log n. With observed_sources, n is the number of
// sources with a non-zero count instead of the declared n. n = 1 gives 0.
inline double source_entropy(const SourceCounts& sc, bool observed_sources = false) {
  const double h = source_entropy_nats(sc);
  std::size_t n = sc.n;
  if (observed_sources) {
    n = static_cast<std::size_t>(std::count_if(sc.counts.begin(), sc.counts.end(),
                                               [](const auto& e) { return e.second > 0.0; }));
  } else if (sc.n < 1) {
    throw std::domain_error("number of sources must be >= 1");
  }
  if (n <= 1) return 0.0;
  return std::clamp(h / std::log(static_cast<double>(n)), 0.0, 1.0);
}

using Matrix = std::vector<std::vector<double>>;

inline Matrix similarity_matrix(const std::vector<RequestSet>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("similarity_matrix needs >= 2 groups");
  const std::size_t g = groups.size();
  Matrix m(g, std::vector<double>(g, 1.0));
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = i + 1; j < g; ++j) {
      m[i][j] = m[j][i] = jaccard(groups[i], groups[j]);
    }
  }
  return m;
}

// Empirical CDF of per-content entropy: one (value, fraction <= value) point
// per distinct entropy value.
inline std::vector<std::pair<double, double>> entropy_cdf(const std::vector<SourceCounts>& contents,
                                                          bool observed_sources = false) {
  if (contents.empty()) throw std::invalid_argument("entropy_cdf needs a non-empty collection");
  std::vector<double> e;
  e.reserve(contents.size());
  for (const auto& sc : contents) e.push_back(source_entropy(sc, observed_sources));
  std::sort(e.begin(), e.end());
  std::vector<std::pair<double, double>> cdf;
  const double n = static_cast<double>(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i + 1 < e.size() && e[i + 1] == e[i]) continue;
    cdf.emplace_back(e[i], static_cast<double>(i + 1) / n);
  }
  return cdf;
}

// ---------------------------------------------------------------------------
// Grouped request records
// ---------------------------------------------------------------------------

struct LabeledRequest {
  std::string label;
  std::string content_id;
};

// Reads `label,content_id` CSV (header required).
inline std::vector<LabeledRequest> read_labeled_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw io::IoError("empty request-set file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "label,content_id") throw io::IoError("expected header 'label,content_id'");
  std::vector<LabeledRequest> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = io::split_csv(line);
    if (f.size() != 2) throw io::IoError("line " + std::to_string(lineno) + ": expected 2 fields");
    out.push_back({std::string(f[0]), std::string(f[1])});
  }
  return out;
}

// Groups records into request sets, ordered by label.
inline std::vector<RequestSet> group_sets(const std::vector<LabeledRequest>& rows) {
  std::map<std::string, std::set<std::string>> by_label;
  for (const auto& r : rows) by_label[r.label].insert(r.content_id);
  std::vector<RequestSet> out;
  for (auto& [label, ids] : by_label) out.push_back({label, std::move(ids)});
  return out;
}

// Per-content source counts; n is the number of distinct labels.
inline std::vector<SourceCounts> source_counts(const std::vector<LabeledRequest>& rows) {
  std::set<std::string> labels;
  std::map<std::string, std::map<std::string, double>> per_content;
  for (const auto& r : rows) {
    labels.insert(r.label);
    per_content[r.content_id][r.label] += 1.0;
  }
  std::vector<SourceCounts> out;
  out.reserve(per_content.size());
  for (auto& [id, m] : per_content) {
    SourceCounts sc;
    sc.n = labels.size();
    for (auto& [label, c] : m) sc.counts.emplace_back(label, c);
    out.push_back(std::move(sc));
  }
  return out;
}

// Splits a trace into `groups` consecutive labeled chunks ("g0", "g1", ...),
// a stand-in for per-bus or per-day partitions of a synthetic workload.
inline std::vector<LabeledRequest> label_trace_chunks(const Trace& t, std::size_t groups) {
  if (groups < 1) throw std::invalid_argument("groups must be >= 1");
  std::vector<LabeledRequest> out;
  out.reserve(t.size());
  const std::size_t per = (t.size() + groups - 1) / groups;
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.push_back({"g" + std::to_string(per == 0 ? 0 : i / per),
                   t.requests[i].content_id.to_string()});
  }
  return out;
}

inline void write_matrix_csv(std::ostream& os, const std::vector<RequestSet>& groups,
                             const Matrix& m) {
  os << "label";
  for (const auto& g : groups) os << ',' << g.label;
  os << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << groups[i].label;
    for (double v : m[i]) os << ',' << io::format_double(v);
    os << '\n';
  }
}

inline void write_cdf_csv(std::ostream& os, const std::vector<std::pair<double, double>>& cdf) {
  os << "entropy,cumulative_fraction\n";
  for (auto [e, f] : cdf) os << io::format_double(e) << ',' << io::format_double(f) << '\n';
}

}  // namespace ustash::analytics
