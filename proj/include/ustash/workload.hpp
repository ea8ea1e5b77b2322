#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ustash/io.hpp"

namespace ustash {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Content identity
// ---------------------------------------------------------------------------

enum class ContentClass : std::uint8_t { NonVideo = 0, Video = 1 };

inline constexpr std::array<ContentClass, 2> kContentClasses{ContentClass::NonVideo,
                                                             ContentClass::Video};

inline std::string_view to_string(ContentClass c) {
  return c == ContentClass::Video ? "video" : "nonvideo";
}

inline ContentClass parse_content_class(std::string_view s) {
  if (s == "video" || s == "v") return ContentClass::Video;
  if (s == "nonvideo" || s == "nv") return ContentClass::NonVideo;
  throw std::invalid_argument("unknown content class '" + std::string(s) + "'");
}

inline std::size_t class_index(ContentClass c) { return static_cast<std::size_t>(c); }

// Opaque content identifier. Packs (class, rank) so identifiers are stable
// across catalog sizes; textual form is "nv:<rank>" or "v:<rank>".
class ContentId {
 public:
  constexpr ContentId() = default;
  constexpr ContentId(ContentClass cls, std::uint32_t rank)
      : value_((static_cast<std::uint64_t>(cls) << 32) | rank) {}

  constexpr ContentClass content_class() const {
    return static_cast<ContentClass>(value_ >> 32);
  }
  constexpr std::uint32_t rank() const { return static_cast<std::uint32_t>(value_); }
  constexpr std::uint64_t value() const { return value_; }

  std::string to_string() const {
    return (content_class() == ContentClass::Video ? "v:" : "nv:") + std::to_string(rank());
  }

  static ContentId parse(std::string_view s) {
    auto colon = s.find(':');
    if (colon == std::string_view::npos) {
      throw std::invalid_argument("bad content id '" + std::string(s) + "'");
    }
    auto cls = parse_content_class(s.substr(0, colon));
    auto rank = io::parse_u64(s.substr(colon + 1));
    if (rank == 0 || rank > 0xffffffffULL) {
      throw std::invalid_argument("bad content rank in '" + std::string(s) + "'");
    }
    return ContentId(cls, static_cast<std::uint32_t>(rank));
  }

  friend constexpr auto operator<=>(ContentId, ContentId) = default;

 private:
  std::uint64_t value_ = 0;
};

struct ContentIdHash {
  std::size_t operator()(ContentId id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value());
  }
};

struct ContentItem {
  ContentId id;
  ContentClass content_class = ContentClass::NonVideo;
  std::uint32_t rank = 1;
  double size_mb = 0.0;
};

// ---------------------------------------------------------------------------
// Distribution parameters
// ---------------------------------------------------------------------------

struct ZipfParams {
  double s = 0.716;
  std::uint64_t m = 1;

  void validate() const {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::domain_error("zipf exponent must be >= 0");
    if (m < 1) throw std::domain_error("catalog size must be >= 1");
    if (m > 0xffffffffULL) throw std::domain_error("catalog size exceeds 2^32-1");
  }
};

// Gamma(shape, scale) content sizes; fixed_mb overrides with a constant size.
struct SizeParams {
  double shape = 1.0;
  double scale_mb = 1.0;
  std::optional<double> fixed_mb;

  double mean_mb() const { return fixed_mb ? *fixed_mb : shape * scale_mb; }

  void validate() const {
    if (fixed_mb) {
      if (!(*fixed_mb > 0.0)) throw std::domain_error("fixed size must be > 0");
      return;
    }
    if (!(shape > 0.0)) throw std::domain_error("size shape must be > 0");
    if (!(scale_mb > 0.0)) throw std::domain_error("size scale must be > 0");
  }
};

struct ViewParams {
  double lambda_e = 1.0;

  void validate() const {
    if (!(lambda_e > 0.0) || !std::isfinite(lambda_e)) {
      throw std::domain_error("view-ratio rate lambda_e must be > 0");
    }
  }
};

// Lower clamp for exponential view ratios.
inline constexpr double kMinViewRatio = 1e-6;
// Gamma draws with tiny shapes underflow; sizes are floored at one byte.
inline constexpr double kMinSizeMb = 1e-6;

// ---------------------------------------------------------------------------
// Zipf popularity
// ---------------------------------------------------------------------------

// Generalized harmonic number J_{M,s}, summed smallest-term first.
inline double harmonic_number(const ZipfParams& p) {
  p.validate();
  double sum = 0.0;
  for (std::uint64_t k = p.m; k >= 1; --k) {
    sum += std::pow(static_cast<double>(k), -p.s);
  }
  return sum;
}

inline double zipf_pmf(std::uint64_t k, const ZipfParams& p) {
  p.validate();
  if (k < 1 || k > p.m) throw std::domain_error("zipf rank out of range");
  return std::pow(static_cast<double>(k), -p.s) / harmonic_number(p);
}

// Probability that an item with popularity pk appears at least once in n draws.
inline double requested_at_least_once(double pk, double n) {
  if (n <= 0.0) return 0.0;
  if (pk >= 1.0) return 1.0;
  return -std::expm1(n * std::log1p(-pk));
}

// E(Y) = sum_k 1 - (1 - p_k)^N, the expected number of distinct items.
inline double expected_unique(const ZipfParams& p, double n) {
  if (n < 0.0) throw std::domain_error("request count must be >= 0");
  const double norm = harmonic_number(p);
  double sum = 0.0;
  for (std::uint64_t k = p.m; k >= 1; --k) {
    sum += requested_at_least_once(std::pow(static_cast<double>(k), -p.s) / norm, n);
  }
  return sum;
}

// E(Y) as a function of N for a fixed popularity model; caches log(1 - p_k)
// so that evaluating many N is one pass over the catalog each.
class ExpectedUniqueCurve {
 public:
  // weight scales every p_k, for a class that receives only part of the requests.
  explicit ExpectedUniqueCurve(const ZipfParams& p, double weight = 1.0) {
    const double norm = harmonic_number(p) / weight;
    log_miss_.reserve(p.m);
    for (std::uint64_t k = p.m; k >= 1; --k) {
      log_miss_.push_back(weight > 0.0 ? std::log1p(-std::pow(static_cast<double>(k), -p.s) / norm) : 0.0);
    }
  }

  double operator()(double n) const {
    if (n <= 0.0) return 0.0;
    double sum = 0.0;
    for (double lm : log_miss_) sum += std::isinf(lm) ? 1.0 : -std::expm1(n * lm);
    return sum;
  }

 private:
  std::vector<double> log_miss_;
};

// Inverse-CDF sampler over a precomputed cumulative table.
class ZipfSampler {
 public:
  explicit ZipfSampler(const ZipfParams& p) : params_(p) {
    p.validate();
    cdf_.resize(p.m);
    const double norm = harmonic_number(p);
    double acc = 0.0;
    for (std::uint64_t k = 1; k <= p.m; ++k) {
      acc += std::pow(static_cast<double>(k), -p.s) / norm;
      cdf_[k - 1] = acc;
    }
    cdf_.back() = 1.0;
  }

  const ZipfParams& params() const { return params_; }

  double pmf(std::uint64_t k) const {
    if (k < 1 || k > params_.m) throw std::domain_error("zipf rank out of range");
    return k == 1 ? cdf_[0] : cdf_[k - 1] - cdf_[k - 2];
  }

  template <class URng>
  std::uint64_t operator()(URng& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<std::uint64_t>(it - cdf_.begin()) + 1;
  }

 private:
  ZipfParams params_;
  std::vector<double> cdf_;
};

template <class URng>
std::uint64_t sample_rank(const ZipfSampler& sampler, URng& rng) {
  return sampler(rng);
}

template <class URng>
double sample_size(const SizeParams& sp, URng& rng) {
  if (sp.fixed_mb) return *sp.fixed_mb;
  const double x = std::gamma_distribution<double>(sp.shape, sp.scale_mb)(rng);
  return std::max(x, kMinSizeMb);
}

// Non-video content is always consumed whole. Video view ratios are
// Exp(lambda_e) clamped into [kMinViewRatio, 1].
template <class URng>
double sample_view_ratio(const ViewParams& vp, ContentClass cls, URng& rng) {
  if (cls == ContentClass::NonVideo) return 1.0;
  const double x = std::exponential_distribution<double>(vp.lambda_e)(rng);
  return std::clamp(x, kMinViewRatio, 1.0);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ClassWorkload {
  ZipfParams zipf;
  SizeParams size;
  ViewParams view;
};

struct WorkloadConfig {
  ClassWorkload nonvideo;
  ClassWorkload video;
  double r_v = 80.0;                 // non-video requests per video request
  std::uint64_t n_requests = 122045;  // N_nv + N_v of the reference bus
  std::uint64_t seed = 1;

  const ClassWorkload& of(ContentClass c) const {
    return c == ContentClass::Video ? video : nonvideo;
  }
  ClassWorkload& of(ContentClass c) { return c == ContentClass::Video ? video : nonvideo; }

  double video_fraction() const { return 1.0 / (1.0 + r_v); }

  void validate() const {
    for (auto c : kContentClasses) {
      of(c).zipf.validate();
      of(c).size.validate();
      of(c).view.validate();
    }
    if (!(r_v > 0.0)) throw std::domain_error("r_v must be > 0");
    if (n_requests < 1) throw std::domain_error("n_requests must be >= 1");
  }

  // Reference bus parameters; sizes are in KB in the source table and are
  // converted to MB here. Catalog sizes are calibrated, see README.
  static WorkloadConfig defaults() {
    WorkloadConfig cfg;
    cfg.nonvideo.zipf = {0.716, 2'000'000};
    cfg.nonvideo.size = {0.0006, 2.102, std::nullopt};
    cfg.nonvideo.view = {1.0};
    cfg.video.zipf = {0.716, 1'000'000};
    cfg.video.size = {0.64, 194.061, std::nullopt};
    cfg.video.view = {2.77};
    return cfg;
  }
};

inline nlohmann::json to_json(const WorkloadConfig& cfg) {
  auto cls = [](const ClassWorkload& w) {
    nlohmann::json j{{"zipf_s", w.zipf.s},
                     {"catalog_size", w.zipf.m},
                     {"size_shape", w.size.shape},
                     {"size_scale_mb", w.size.scale_mb},
                     {"lambda_e", w.view.lambda_e}};
    j["size_fixed_mb"] = w.size.fixed_mb ? nlohmann::json(*w.size.fixed_mb) : nlohmann::json();
    return j;
  };
  return {{"nonvideo", cls(cfg.nonvideo)},
          {"video", cls(cfg.video)},
          {"r_v", cfg.r_v},
          {"n_requests", cfg.n_requests},
          {"seed", cfg.seed}};
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

// Universe of content, stored densely per class by rank. Sizes are fixed
// attributes of items, drawn once when the catalog is built.
class ContentCatalog {
 public:
  ContentCatalog() = default;

  static ContentCatalog build(const WorkloadConfig& cfg) {
    cfg.validate();
    ContentCatalog cat;
    for (auto c : kContentClasses) {
      // Independent stream per class so the catalog does not depend on r_v.
      std::seed_seq seq{cfg.seed, std::uint64_t{0xCA7A106}, std::uint64_t{class_index(c)}};
      Rng rng(seq);
      const auto& w = cfg.of(c);
      auto& sizes = cat.sizes_[class_index(c)];
      sizes.resize(w.zipf.m);
      for (auto& s : sizes) s = sample_size(w.size, rng);
    }
    return cat;
  }

  // Builds a catalog from explicit items (e.g. a trace read back from CSV).
  // Ranks never observed are filled with the mean observed size of the class.
  static ContentCatalog from_items(const std::vector<ContentItem>& items) {
    ContentCatalog cat;
    std::array<double, 2> sum{0.0, 0.0};
    std::array<std::size_t, 2> seen{0, 0};
    for (const auto& it : items) {
      if (!(it.size_mb > 0.0)) throw std::domain_error("content size must be > 0");
      auto& sizes = cat.sizes_[class_index(it.content_class)];
      if (sizes.size() < it.rank) sizes.resize(it.rank, 0.0);
      if (sizes[it.rank - 1] == 0.0) {
        sum[class_index(it.content_class)] += it.size_mb;
        ++seen[class_index(it.content_class)];
      }
      sizes[it.rank - 1] = it.size_mb;
    }
    for (auto c : kContentClasses) {
      auto i = class_index(c);
      if (seen[i] == 0) continue;
      const double fill = sum[i] / static_cast<double>(seen[i]);
      for (auto& s : cat.sizes_[i]) {
        if (s == 0.0) s = fill;
      }
    }
    return cat;
  }

  std::uint64_t count(ContentClass c) const { return sizes_[class_index(c)].size(); }
  std::uint64_t size() const { return sizes_[0].size() + sizes_[1].size(); }

  bool contains(ContentId id) const {
    return id.rank() >= 1 && id.rank() <= count(id.content_class());
  }

  double size_mb(ContentId id) const {
    if (!contains(id)) throw std::out_of_range("content " + id.to_string() + " not in catalog");
    return sizes_[class_index(id.content_class())][id.rank() - 1];
  }

  ContentItem item(ContentId id) const {
    return {id, id.content_class(), id.rank(), size_mb(id)};
  }

  double mean_size_mb(ContentClass c) const {
    const auto& v = sizes_[class_index(c)];
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }

 private:
  std::array<std::vector<double>, 2> sizes_;
};

// ---------------------------------------------------------------------------
// Requests and traces
// ---------------------------------------------------------------------------

struct Request {
  std::uint64_t index = 0;
  ContentId content_id;
  double view_ratio = 1.0;
};

struct Trace {
  std::vector<Request> requests;
  std::shared_ptr<const ContentCatalog> catalog;
  std::optional<WorkloadConfig> config;  // set when generated, absent when loaded

  std::size_t size() const { return requests.size(); }

  std::size_t unique_count() const {
    std::unordered_set<ContentId, ContentIdHash> ids;
    ids.reserve(requests.size());
    for (const auto& r : requests) ids.insert(r.content_id);
    return ids.size();
  }

  std::size_t count(ContentClass c) const {
    return static_cast<std::size_t>(std::count_if(requests.begin(), requests.end(),
        [c](const Request& r) { return r.content_id.content_class() == c; }));
  }
};

// Samplers for both classes, built once and reusable across traces drawn
// from the same popularity model.
struct WorkloadSamplers {
  ZipfSampler nonvideo;
  ZipfSampler video;

  explicit WorkloadSamplers(const WorkloadConfig& cfg)
      : nonvideo(cfg.nonvideo.zipf), video(cfg.video.zipf) {}

  const ZipfSampler& of(ContentClass c) const {
    return c == ContentClass::Video ? video : nonvideo;
  }
};

// Draws requests against an existing catalog: class by Bernoulli(1/(1+R_v)),
// rank by Zipf within the class, view ratio by class.
template <class URng>
std::vector<Request> draw_requests(const WorkloadConfig& cfg, const WorkloadSamplers& samplers,
                                   URng& rng) {
  std::vector<Request> out;
  out.reserve(cfg.n_requests);
  std::bernoulli_distribution is_video(cfg.video_fraction());
  for (std::uint64_t i = 0; i < cfg.n_requests; ++i) {
    const auto cls = is_video(rng) ? ContentClass::Video : ContentClass::NonVideo;
    const auto rank = sample_rank(samplers.of(cls), rng);
    const double v = sample_view_ratio(cfg.of(cls).view, cls, rng);
    out.push_back({i, ContentId(cls, static_cast<std::uint32_t>(rank)), v});
  }
  return out;
}

template <class URng>
Trace generate_trace(const WorkloadConfig& cfg, URng& rng) {
  cfg.validate();
  Trace t;
  t.catalog = std::make_shared<const ContentCatalog>(ContentCatalog::build(cfg));
  t.requests = draw_requests(cfg, WorkloadSamplers(cfg), rng);
  t.config = cfg;
  return t;
}

// Seeds the request stream from cfg.seed.
inline Trace generate_trace(const WorkloadConfig& cfg) {
  std::seed_seq seq{cfg.seed, std::uint64_t{0x7EACE}};
  Rng rng(seq);
  return generate_trace(cfg, rng);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline constexpr std::string_view kTraceCsvHeader = "index,content_id,class,rank,size_mb,view_ratio";

inline void write_trace_csv(std::ostream& os, const Trace& t) {
  os << kTraceCsvHeader << '\n';
  for (const auto& r : t.requests) {
    os << r.index << ',' << r.content_id.to_string() << ','
       << to_string(r.content_id.content_class()) << ',' << r.content_id.rank() << ','
       << io::format_double(t.catalog->size_mb(r.content_id)) << ','
       << io::format_double(r.view_ratio) << '\n';
  }
}

inline Trace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw io::IoError("empty trace file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader) throw io::IoError("unexpected trace header '" + line + "'");
  Trace t;
  std::vector<ContentItem> items;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = io::split_csv(line);
    if (f.size() != 6) throw io::IoError("line " + std::to_string(lineno) + ": expected 6 fields");
    try {
      Request r;
      r.index = io::parse_u64(f[0]);
      r.content_id = ContentId::parse(f[1]);
      if (parse_content_class(f[2]) != r.content_id.content_class() ||
          io::parse_u64(f[3]) != r.content_id.rank()) {
        throw io::IoError("class/rank disagree with content_id");
      }
      r.view_ratio = io::parse_double(f[5]);
      if (!(r.view_ratio > 0.0 && r.view_ratio <= 1.0)) throw io::IoError("view_ratio out of (0,1]");
      const double size = io::parse_double(f[4]);
      if (!(size > 0.0)) throw io::IoError("size_mb must be > 0");
      items.push_back({r.content_id, r.content_id.content_class(), r.content_id.rank(), size});
      t.requests.push_back(r);
    } catch (const std::exception& e) {
      throw io::IoError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  t.catalog = std::make_shared<const ContentCatalog>(ContentCatalog::from_items(items));
  return t;
}

inline nlohmann::json trace_to_json(const Trace& t) {
  nlohmann::json reqs = nlohmann::json::array();
  for (const auto& r : t.requests) {
    reqs.push_back({{"index", r.index},
                    {"content_id", r.content_id.to_string()},
                    {"class", to_string(r.content_id.content_class())},
                    {"rank", r.content_id.rank()},
                    {"size_mb", t.catalog->size_mb(r.content_id)},
                    {"view_ratio", r.view_ratio}});
  }
  nlohmann::json j;
  j["config"] = t.config ? to_json(*t.config) : nlohmann::json();
  j["seed"] = t.config ? nlohmann::json(t.config->seed) : nlohmann::json();
  j["requests"] = std::move(reqs);
  return j;
}

}  // namespace ustash
