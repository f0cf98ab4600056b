#include <doctest.h>

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <nftproj/context.hpp>
#include <nftproj/errors.hpp>
#include <nftproj/rng.hpp>
#include <nftproj/series.hpp>
#include <nftproj/wei.hpp>

#include "test_util.hpp"

using namespace nftproj;
using testutil::Plateau;

namespace {

// Collections documented in the reference material: five training contexts
// and four test contexts, all normalized onto [1,3].
const std::array<double, 6> kC1{2.06, 2.33, 1.72, 1.81, 1.92, 1.90};
const std::array<double, 6> kC2{3.00, 1.74, 1.93, 1.89, 1.85, 1.82};
const std::array<double, 6> kC3{1.16, 1.70, 1.90, 1.88, 1.84, 1.88};
const std::array<double, 6> kC4{1.00, 1.70, 1.90, 1.88, 1.84, 1.88};
const std::array<double, 6> kC5{1.00, 1.70, 1.90, 1.88, 1.84, 1.88};
const std::array<double, 6> kC6{1.50, 1.66, 1.88, 1.89, 1.85, 1.85};
const std::array<double, 6> kC7{1.24, 1.70, 1.89, 1.87, 1.86, 1.88};
const std::array<double, 6> kC8{2.84, 1.80, 1.88, 1.84, 1.89, 1.82};
const std::array<double, 6> kC9{2.45, 2.25, 1.78, 1.79, 1.93, 1.85};

ContextVector ctx(const std::array<double, 6>& v) { return ContextVector{v}; }

CollectionSeries random_q1(const std::string& id, std::size_t n_tokens, double scale, Rng& rng) {
  std::vector<std::vector<Plateau>> tokens;
  for (std::size_t t = 0; t < n_tokens; ++t) {
    std::vector<Plateau> plateaus;
    std::uint32_t count = 0;
    std::size_t day = rng.uniform_int(20);
    while (day < 91 && plateaus.size() < 8) {
      count += 1 + std::uint32_t(rng.uniform_int(3));
      plateaus.push_back({day, scale * (0.1 + rng.uniform()), count});
      day += 5 + std::size_t(rng.uniform_int(25));
    }
    tokens.push_back(std::move(plateaus));
  }
  return testutil::make_collection(id, 91, tokens);
}

struct Pooled {
  Eigen::MatrixXd x;  // n × 182, uncentered
};

Pooled pool_vectors(const std::vector<CollectionSeries>& sets) {
  std::vector<std::array<double, kTokenVectorDim>> rows;
  for (const auto& cs : sets)
    for (const auto& ts : cs.tokens) rows.push_back(token_vector(ts));
  Pooled p;
  p.x.resize(Eigen::Index(rows.size()), kTokenVectorDim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < kTokenVectorDim; ++j)
      p.x(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
  return p;
}

// Largest-magnitude loading positive, first index winning ties; mirrors the
// fitted components' documented sign convention.
void sign_normalize_row(Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < v.size(); ++j)
    if (std::abs(v(j)) > std::abs(v(best))) best = j;
  if (v(best) < 0) v = -v;
}

}  // namespace

TEST_CASE("token_vector flattens day-major (value, count) pairs") {
  auto ts = testutil::make_token(0, 91, {{0, 2.0, 1}, {1, 6.0, 3}, {2, 1.5, 4}});
  auto v = token_vector(ts);
  CHECK(v[0] == 2.0);
  CHECK(v[1] == 1.0);
  CHECK(v[2] == 6.0);
  CHECK(v[3] == 3.0);
  CHECK(v[4] == 1.5);
  CHECK(v[5] == 4.0);
  // Carried forward to the end of the quarter.
  CHECK(v[180] == 1.5);
  CHECK(v[181] == 4.0);

  auto short_ts = testutil::make_token(0, 90, {});
  CHECK_THROWS_AS(token_vector(short_ts), Error);
  auto shifted = testutil::make_token(0, 91, {});
  shifted.start_day = 1;
  CHECK_THROWS_AS(token_vector(shifted), Error);
}

TEST_CASE("fit_pca matches the dense covariance oracle") {
  Rng rng(500);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<CollectionSeries> sets{random_q1("a", 12, 1.0 + trial, rng),
                                       random_q1("b", 11, 5.0, rng),
                                       random_q1("c", 9, 0.5, rng)};
    auto pca = fit_pca(sets);

    auto pooled = pool_vectors(sets);
    const auto n = pooled.x.rows();
    Eigen::RowVectorXd mean = pooled.x.colwise().mean();
    Eigen::MatrixXd centered = pooled.x.rowwise() - mean;
    Eigen::MatrixXd cov = centered.transpose() * centered / double(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(cov);
    REQUIRE(oracle.info() == Eigen::Success);

    for (std::size_t j = 0; j < kTokenVectorDim; ++j) {
      CHECK(std::abs(pca.mean[j] - mean(Eigen::Index(j))) < 1e-9);
    }
    for (std::size_t k = 0; k < kContextDim; ++k) {
      // Oracle eigenvalues ascend: top-k is column 181-k.
      Eigen::Index col = Eigen::Index(kTokenVectorDim - 1 - k);
      CHECK(std::abs(pca.explained_variance[k] - oracle.eigenvalues()(col)) < 1e-8);
      Eigen::VectorXd expect = oracle.eigenvectors().col(col);
      sign_normalize_row(expect);
      for (std::size_t j = 0; j < kTokenVectorDim; ++j) {
        CHECK(std::abs(pca.components.at(k, j) - expect(Eigen::Index(j))) < 1e-8);
      }
    }
    // Components are orthonormal.
    for (std::size_t p = 0; p < kContextDim; ++p) {
      for (std::size_t q = p; q < kContextDim; ++q) {
        double dot = 0.0;
        for (std::size_t j = 0; j < kTokenVectorDim; ++j)
          dot += pca.components.at(p, j) * pca.components.at(q, j);
        CHECK(std::abs(dot - (p == q ? 1.0 : 0.0)) < 1e-10);
      }
    }
  }
}

TEST_CASE("fit_pca rejects rank-deficient inputs") {
  // Too few tokens in total.
  Rng rng(501);
  try {
    fit_pca({random_q1("a", 6, 1.0, rng)});
    FAIL("expected rank_deficient");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::rank_deficient);
  }
  // Plenty of tokens but every one identical: covariance rank 0.
  std::vector<std::vector<Plateau>> same(12, {{3, 2.0, 1}, {40, 5.0, 2}});
  auto degenerate = testutil::make_collection("d", 91, same);
  CHECK_THROWS_AS(fit_pca({degenerate}), Error);
}

TEST_CASE("top-6 subspace beats random frames at reconstruction") {
  Rng rng(502);
  std::vector<CollectionSeries> sets{random_q1("a", 15, 1.0, rng), random_q1("b", 15, 3.0, rng)};
  auto pca = fit_pca(sets);
  auto pooled = pool_vectors(sets);
  Eigen::RowVectorXd mean = pooled.x.colwise().mean();
  Eigen::MatrixXd centered = pooled.x.rowwise() - mean;

  Eigen::MatrixXd p(kContextDim, kTokenVectorDim);
  for (std::size_t k = 0; k < kContextDim; ++k)
    for (std::size_t j = 0; j < kTokenVectorDim; ++j)
      p(Eigen::Index(k), Eigen::Index(j)) = pca.components.at(k, j);
  double fitted_err = (centered - centered * p.transpose() * p).squaredNorm();

  for (int foil = 0; foil < 20; ++foil) {
    // Random orthonormal 6-frame via Gram-Schmidt.
    Eigen::MatrixXd q(kContextDim, kTokenVectorDim);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      Eigen::VectorXd v(kTokenVectorDim);
      for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = rng.normal();
      for (Eigen::Index k = 0; k < i; ++k) v -= q.row(k).dot(v.transpose()) * q.row(k).transpose();
      q.row(i) = v.normalized();
    }
    double foil_err = (centered - centered * q.transpose() * q).squaredNorm();
    CHECK(fitted_err < foil_err);
  }
}

TEST_CASE("collection_context_raw averages projected token vectors") {
  PcaModel pca;
  pca.mean.assign(kTokenVectorDim, 0.0);
  for (std::size_t i = 0; i < kContextDim; ++i) pca.mean[i] = 0.5;
  pca.components = Mat(kContextDim, kTokenVectorDim);
  for (std::size_t k = 0; k < kContextDim; ++k) pca.components.at(k, k) = 1.0;

  auto cs = testutil::make_collection(
      "c", 91,
      {{{0, 2.0, 1}},
       {{0, 4.0, 1}, {1, 6.0, 3}, {2, 1.0, 4}}});
  auto raw = collection_context_raw(pca, cs);
  // Token vectors start (2,1,2,1,2,1) and (4,1,6,3,1,4); the mean offsets
  // the first six slots by 0.5.
  CHECK(raw[0] == doctest::Approx(3.0 - 0.5).epsilon(1e-12));
  CHECK(raw[1] == doctest::Approx(1.0 - 0.5).epsilon(1e-12));
  CHECK(raw[2] == doctest::Approx(4.0 - 0.5).epsilon(1e-12));
  CHECK(raw[3] == doctest::Approx(2.0 - 0.5).epsilon(1e-12));
  CHECK(raw[4] == doctest::Approx(1.5 - 0.5).epsilon(1e-12));
  CHECK(raw[5] == doctest::Approx(2.5 - 0.5).epsilon(1e-12));

  CollectionSeries empty;
  empty.collection_id = "e";
  try {
    collection_context_raw(pca, empty);
    FAIL("expected empty_collection");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_collection);
  }
}

TEST_CASE("normalization maps {-1,0,1} onto {1,2,3}") {
  RawContextTable raw;
  raw["A"] = {-1, -1, -1, -1, -1, -1};
  raw["B"] = {0, 0, 0, 0, 0, 0};
  raw["C"] = {1, 1, 1, 1, 1, 1};
  auto [table, params] = normalize_contexts(raw);
  for (std::size_t i = 0; i < kContextDim; ++i) {
    CHECK(table["A"].values[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(table["B"].values[i] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(table["C"].values[i] == doctest::Approx(3.0).epsilon(1e-12));
  }
  CHECK(params.abs_min_offset == doctest::Approx(1.0));
  CHECK(params.b == 3.0);
}

TEST_CASE("normalization uses one global min-max across components") {
  RawContextTable raw;
  raw["A"] = {-2, -1, 0, 0, 0, 0};
  raw["B"] = {2, 1, 0, 0, 0, 0};
  auto [table, params] = normalize_contexts(raw);
  CHECK(table["A"].values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(table["A"].values[1] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(table["A"].values[2] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(table["B"].values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(table["B"].values[1] == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(table["B"].values[2] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(params.abs_min_offset == doctest::Approx(2.0));
  CHECK(apply_normalization(params, -2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(apply_normalization(params, 2.0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("normalization endpoints and monotonicity on random tables") {
  Rng rng(503);
  for (int trial = 0; trial < 50; ++trial) {
    RawContextTable raw;
    int n = 2 + int(rng.uniform_int(6));
    for (int i = 0; i < n; ++i) {
      std::array<double, kContextDim> v;
      for (auto& x : v) x = rng.uniform(-100.0, 100.0);
      raw["c" + std::to_string(i)] = v;
    }
    auto [table, params] = normalize_contexts(raw);
    double lo = 1e300, hi = -1e300;
    for (const auto& [id, cv] : table) {
      for (std::size_t i = 0; i < kContextDim; ++i) {
        double norm = cv.values[i];
        CHECK(norm >= 1.0 - 1e-12);
        CHECK(norm <= 3.0 + 1e-12);
        lo = std::min(lo, norm);
        hi = std::max(hi, norm);
        // Order preservation against every other entry.
        double r = raw[id][i];
        for (const auto& [jd, jv] : raw) {
          for (std::size_t k = 0; k < kContextDim; ++k) {
            if (r < jv[k]) CHECK(norm <= table[jd].values[k] + 1e-12);
          }
        }
      }
    }
    CHECK(lo == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hi == doctest::Approx(3.0).epsilon(1e-12));
  }

  RawContextTable flat;
  flat["A"] = {1, 1, 1, 1, 1, 1};
  flat["B"] = {1, 1, 1, 1, 1, 1};
  try {
    normalize_contexts(flat);
    FAIL("expected degenerate_range");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_range);
  }
}

TEST_CASE("embed_new reproduces training entries and clamps outliers") {
  Rng rng(504);
  std::vector<CollectionSeries> sets{random_q1("a", 12, 1.0, rng), random_q1("b", 12, 4.0, rng),
                                     random_q1("c", 12, 0.2, rng)};
  auto pca = fit_pca(sets);
  RawContextTable raw;
  for (const auto& cs : sets) raw[cs.collection_id] = collection_context_raw(pca, cs);
  auto [table, params] = normalize_contexts(raw);

  for (const auto& cs : sets) {
    auto embedded = embed_new(pca, params, cs);
    for (std::size_t i = 0; i < kContextDim; ++i) {
      CHECK(embedded.values[i] == doctest::Approx(table[cs.collection_id].values[i]).epsilon(1e-9));
    }
  }

  // A far-out collection clamps to the rails exactly.
  auto outlier = random_q1("z", 12, 500.0, rng);
  auto embedded = embed_new(pca, params, outlier);
  bool railed = false;
  for (std::size_t i = 0; i < kContextDim; ++i) {
    CHECK(embedded.values[i] >= 1.0);
    CHECK(embedded.values[i] <= 3.0);
    if (embedded.values[i] == 1.0 || embedded.values[i] == 3.0) railed = true;
  }
  CHECK(railed);
}

TEST_CASE("documented context vectors: distances and nearest neighbors") {
  ContextTable train;
  train["C1"] = ctx(kC1);
  train["C2"] = ctx(kC2);
  train["C3"] = ctx(kC3);
  train["C4"] = ctx(kC4);
  train["C5"] = ctx(kC5);

  CHECK(euclidean_distance(ctx(kC4), ctx(kC5)) == 0.0);
  CHECK(euclidean_distance(ctx(kC2), ctx(kC4)) ==
        doctest::Approx(std::sqrt(4.0063)).epsilon(1e-12));

  // The ninth collection's closest training context is the first.
  auto near9 = context_distance(ctx(kC9), train);
  CHECK(near9.nearest == "C1");
  CHECK(near9.min_distance == doctest::Approx(std::sqrt(0.1651)).epsilon(1e-12));

  // The widest training pair sets the default warning threshold; every
  // test-collection context sits inside it.
  double threshold = max_pairwise_distance(train);
  CHECK(threshold == doctest::Approx(std::sqrt(4.0063)).epsilon(1e-12));
  for (const auto& probe : {kC6, kC7, kC8, kC9}) {
    CHECK(context_distance(ctx(probe), train).min_distance < threshold);
  }
}

TEST_CASE("context csv round-trip") {
  ContextTable table;
  table["alpha"] = ctx({1.0, 2.0, 3.0, 1.25, 2.875, 1.0000001});
  table["beta"] = ctx(kC9);
  std::ostringstream out;
  write_context_csv(table, out);
  std::string header = out.str().substr(0, out.str().find('\n'));
  CHECK(header == "collection_id,c1,c2,c3,c4,c5,c6");
  std::istringstream in(out.str());
  auto rt = read_context_csv(in, "ctx.csv");
  CHECK(rt == table);
}
