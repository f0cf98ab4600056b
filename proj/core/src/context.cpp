#include "nftproj/context.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "nftproj/errors.hpp"

namespace nftproj {

namespace {

std::string format_double(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    raise(Errc::parse_error, where + ": malformed number \"" + s + "\"");
  }
  return v;
}

}  // namespace

std::array<double, kTokenVectorDim> token_vector(const TokenSeries& ts) {
  if (ts.start_day != 0 || ts.points.size() < kQ1Days) {
    raise(Errc::shape_mismatch,
          "token " + std::to_string(ts.token_id) + " does not cover the 91 first-quarter days");
  }
  std::array<double, kTokenVectorDim> v;
  for (std::size_t d = 0; d < kQ1Days; ++d) {
    v[2 * d] = to_eth(ts.points[d].value);
    v[2 * d + 1] = double(ts.points[d].count);
  }
  return v;
}

PcaModel fit_pca(const std::vector<CollectionSeries>& training_q1) {
  std::vector<std::array<double, kTokenVectorDim>> rows;
  for (const CollectionSeries& cs : training_q1) {
    for (const TokenSeries& ts : cs.tokens) rows.push_back(token_vector(ts));
  }
  const std::size_t n = rows.size();
  if (n < kContextDim + 1) {
    raise(Errc::rank_deficient, "need at least 7 token vectors, got " + std::to_string(n));
  }

  std::vector<double> mean(kTokenVectorDim, 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < kTokenVectorDim; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= double(n);

  for (auto& r : rows) {
    for (std::size_t j = 0; j < kTokenVectorDim; ++j) r[j] -= mean[j];
  }

  Mat cov(kTokenVectorDim, kTokenVectorDim);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < kTokenVectorDim; ++i) {
      if (r[i] == 0.0) continue;
      double* row = cov.row(i);
      for (std::size_t j = i; j < kTokenVectorDim; ++j) row[j] += r[i] * r[j];
    }
  }
  const double denom = double(n - 1);
  for (std::size_t i = 0; i < kTokenVectorDim; ++i) {
    for (std::size_t j = i; j < kTokenVectorDim; ++j) {
      double c = cov.at(i, j) / denom;
      cov.at(i, j) = c;
      cov.at(j, i) = c;
    }
  }

  SymEigenResult eig = sym_eigen(cov);

  double top = std::max(eig.values[0], 0.0);
  double tol = top * 1e-10 + 1e-12;
  if (eig.values[kContextDim - 1] <= tol) {
    raise(Errc::rank_deficient,
          "covariance rank < 6 (eigenvalue " + format_double(eig.values[kContextDim - 1]) + ")");
  }

  PcaModel model;
  model.mean = std::move(mean);
  model.components = Mat(kContextDim, kTokenVectorDim);
  for (std::size_t k = 0; k < kContextDim; ++k) {
    const double* src = eig.vectors.row(k);
    double* dst = model.components.row(k);
    std::copy(src, src + kTokenVectorDim, dst);
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t j = 0; j < kTokenVectorDim; ++j) {
      if (std::abs(dst[j]) > best) {
        best = std::abs(dst[j]);
        arg = j;
      }
    }
    if (dst[arg] < 0.0) {
      for (std::size_t j = 0; j < kTokenVectorDim; ++j) dst[j] = -dst[j];
    }
    model.explained_variance[k] = std::max(eig.values[k], 0.0);
  }
  return model;
}

std::array<double, kContextDim> collection_context_raw(const PcaModel& pca,
                                                       const CollectionSeries& q1) {
  if (q1.tokens.empty()) {
    raise(Errc::empty_collection, "collection " + q1.collection_id + " has no tokens");
  }
  std::array<double, kContextDim> acc{};
  std::array<double, kTokenVectorDim> centered;
  for (const TokenSeries& ts : q1.tokens) {
    auto v = token_vector(ts);
    for (std::size_t j = 0; j < kTokenVectorDim; ++j) centered[j] = v[j] - pca.mean[j];
    for (std::size_t k = 0; k < kContextDim; ++k) {
      const double* comp = pca.components.row(k);
      double dot = 0.0;
      for (std::size_t j = 0; j < kTokenVectorDim; ++j) dot += comp[j] * centered[j];
      acc[k] += dot;
    }
  }
  for (double& x : acc) x /= double(q1.tokens.size());
  return acc;
}

double apply_normalization(const NormalizationParams& p, double raw) noexcept {
  double offset = raw + p.abs_min_offset;
  return (offset - p.global_min) / (p.global_max - p.global_min) * (p.b - p.a) + p.a;
}

std::pair<ContextTable, NormalizationParams> normalize_contexts(const RawContextTable& raw) {
  if (raw.empty()) raise(Errc::degenerate_range, "no raw contexts to normalize");

  double raw_min = std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& [id, vec] : raw) {
    for (double x : vec) {
      if (!std::isfinite(x)) raise(Errc::non_finite, "raw context of " + id + " is not finite");
      raw_min = std::min(raw_min, x);
    }
  }
  NormalizationParams params;
  params.abs_min_offset = std::abs(raw_min);
  for (const auto& [id, vec] : raw) {
    for (double x : vec) {
      double y = x + params.abs_min_offset;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  }
  if (hi <= lo) {
    raise(Errc::degenerate_range, "all raw context values are equal; min-max scale undefined");
  }
  params.global_min = lo;
  params.global_max = hi;

  ContextTable table;
  for (const auto& [id, vec] : raw) {
    ContextVector cv;
    for (std::size_t k = 0; k < kContextDim; ++k) {
      cv.values[k] = apply_normalization(params, vec[k]);
    }
    table.emplace(id, cv);
  }
  return {std::move(table), params};
}

ContextVector embed_new(const PcaModel& pca, const NormalizationParams& params,
                        const CollectionSeries& q1) {
  auto raw = collection_context_raw(pca, q1);
  ContextVector cv;
  for (std::size_t k = 0; k < kContextDim; ++k) {
    cv.values[k] = std::clamp(apply_normalization(params, raw[k]), params.a, params.b);
  }
  return cv;
}

double euclidean_distance(const ContextVector& x, const ContextVector& y) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < kContextDim; ++k) {
    double d = x.values[k] - y.values[k];
    s += d * d;
  }
  return std::sqrt(s);
}

DistanceResult context_distance(const ContextVector& ctx, const ContextTable& table) {
  if (table.empty()) raise(Errc::empty_collection, "context table is empty");
  DistanceResult best;
  best.min_distance = std::numeric_limits<double>::infinity();
  for (const auto& [id, cv] : table) {
    double d = euclidean_distance(ctx, cv);
    if (d < best.min_distance) {
      best.min_distance = d;
      best.nearest = id;
    }
  }
  return best;
}

double max_pairwise_distance(const ContextTable& table) {
  double best = 0.0;
  for (auto i = table.begin(); i != table.end(); ++i) {
    for (auto j = std::next(i); j != table.end(); ++j) {
      best = std::max(best, euclidean_distance(i->second, j->second));
    }
  }
  return best;
}

void write_context_csv(const ContextTable& table, std::ostream& out) {
  out << "collection_id,c1,c2,c3,c4,c5,c6\n";
  for (const auto& [id, cv] : table) {
    out << id;
    for (double v : cv.values) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_context_csv(const ContextTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_error, "cannot open for writing: " + path);
  write_context_csv(table, out);
  if (!out) raise(Errc::io_error, "write failed: " + path);
}

ContextTable read_context_csv(std::istream& in, const std::string& origin) {
  ContextTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == "collection_id,c1,c2,c3,c4,c5,c6") continue;
    std::string where = origin + ":" + std::to_string(line_no);

    std::vector<std::string> field;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        field.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (field.size() != 1 + kContextDim) {
      raise(Errc::parse_error, where + ": expected 7 fields");
    }
    ContextVector cv;
    for (std::size_t k = 0; k < kContextDim; ++k) {
      cv.values[k] = parse_double(field[k + 1], where);
    }
    if (!table.emplace(field[0], cv).second) {
      raise(Errc::parse_error, where + ": duplicate collection \"" + field[0] + "\"");
    }
  }
  return table;
}

ContextTable read_context_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "cannot open: " + path);
  return read_context_csv(in, path);
}

}  // namespace nftproj
