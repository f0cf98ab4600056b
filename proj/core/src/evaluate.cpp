#include "nftproj/evaluate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <ostream>
#include <utility>

#include "nftproj/errors.hpp"
#include "nftproj/rng.hpp"
#include "nftproj/transform.hpp"
#include "nftproj/wei.hpp"

namespace nftproj {

namespace {

constexpr std::size_t kHorizon = kYearDays - kQ1Days;

std::vector<double> q1_tail_window(const TokenSeries& tok, std::size_t window) {
  std::vector<double> feats(window * kSeriesFeatures);
  for (std::size_t d = 0; d < window; ++d) {
    const DailyPoint& p = tok.points[kQ1Days - window + d];
    feats[d * kSeriesFeatures] = to_eth(p.value);
    feats[d * kSeriesFeatures + 1] = double(p.count);
  }
  return feats;
}

std::vector<Tensor> generate_tokens(const ModelParams& model, const ContextVector& ctx,
                                    const CollectionSeries& test, std::size_t window) {
  std::vector<Tensor> out;
  out.reserve(test.tokens.size());
  for (const TokenSeries& tok : test.tokens) {
    out.push_back(generate(model, ctx, q1_tail_window(tok, window), kHorizon));
  }
  return out;
}

ReportRow score_raw(std::string collection_id, std::string label, const CollectionSeries& actual,
                    const std::vector<Tensor>& gen, const std::array<double, 4>& actual_caps) {
  std::vector<double> a;
  std::vector<double> p;
  a.reserve(actual.tokens.size() * kHorizon);
  p.reserve(actual.tokens.size() * kHorizon);
  for (std::size_t t = 0; t < actual.tokens.size(); ++t) {
    const TokenSeries& tok = actual.tokens[t];
    for (std::size_t d = kQ1Days; d < kYearDays; ++d) {
      a.push_back(to_eth(tok.points[d].value));
      p.push_back(gen[t].at(d - kQ1Days, 0));
    }
  }

  ReportRow row;
  row.collection_id = std::move(collection_id);
  row.model = std::move(label);
  row.stats = regression_stats(a, p);
  for (int qi = 1; qi < 4; ++qi) {
    DayRange range = quarter_range(QuarterId(qi));
    std::size_t final_day = range.first + range.length - 1;
    double cap = 0.0;
    for (const Tensor& g : gen) cap += g.at(final_day - kQ1Days, 0);
    row.cap_diff[std::size_t(qi)] = abs_diff_pct(actual_caps[std::size_t(qi)], cap);
    // Raw generations can dip below zero; the tier column reads them as an
    // empty market.
    if (qi == 3) row.predicted_tier = tier(std::max(0.0, cap));
  }
  return row;
}

ReportRow score_stepped(std::string collection_id, const CollectionSeries& actual,
                        const CollectionSeries& q1, const std::vector<Tensor>& gen,
                        const std::array<double, 4>& actual_caps) {
  std::vector<std::vector<DailyPoint>> stepped;
  stepped.reserve(gen.size());
  for (std::size_t t = 0; t < gen.size(); ++t) {
    stepped.push_back(step_transform(gen[t], q1.tokens[t].points.back()));
  }
  CollectionSeries projected = assemble_projection(q1, stepped);

  ReportRow row;
  row.collection_id = std::move(collection_id);
  row.model = "NFT ContextPred";
  row.stats = regression_stats(actual, projected, {QuarterId::q2, QuarterId::q3, QuarterId::q4});
  for (int qi = 1; qi < 4; ++qi) {
    QuarterStats qs = quarter_stats(projected, {}, QuarterId(qi));
    row.cap_diff[std::size_t(qi)] = abs_diff_pct(actual_caps[std::size_t(qi)], qs.market_cap);
    if (qi == 3) row.predicted_tier = tier(qs.market_cap);
  }
  return row;
}

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, ptr};
}

}  // namespace

EvalReport run_evaluation(std::span<const ConditionedSeries> train_set,
                          std::span<const CollectionSeries> test_set, const PcaModel& pca,
                          const NormalizationParams& norm, const EvalConfig& config,
                          const ModelParams* context_model) {
  if (train_set.empty()) raise(Errc::invalid_spec, "evaluation needs a training collection");
  if (test_set.empty()) raise(Errc::invalid_spec, "evaluation needs a test collection");
  if (config.train.window == 0 || config.train.window > kQ1Days) {
    raise(Errc::invalid_spec, "window must lie in [1, 91] to seed generation from Q1");
  }
  for (const ConditionedSeries& cs : train_set) {
    if (cs.series == nullptr) raise(Errc::invalid_spec, "null training series");
  }
  for (const CollectionSeries& cs : test_set) validate_series(cs, true);

  const std::size_t m = train_set.size();

  ContextTable table;
  for (const ConditionedSeries& cs : train_set) table[cs.series->collection_id] = cs.context;
  const double threshold = config.distance_threshold >= 0.0 ? config.distance_threshold
                                                            : max_pairwise_distance(table);

  std::vector<ConditionedSeries> zeroed(train_set.begin(), train_set.end());
  for (ConditionedSeries& cs : zeroed) cs.context = ContextVector{};

  // Jobs: [0] contextual (skipped when pretrained), [1] M_X, [2+i] M_i.
  struct Job {
    TrainingSet data;
    std::uint64_t seed = 0;
    bool run = true;
  };
  std::vector<Job> jobs(m + 2);
  jobs[0].run = context_model == nullptr;
  if (jobs[0].run) {
    jobs[0].data = make_training_set(train_set, config.train.window, config.train.window_stride);
  }
  jobs[1].data = make_training_set(zeroed, config.train.window, config.train.window_stride);
  for (std::size_t i = 0; i < m; ++i) {
    jobs[2 + i].data =
        make_training_set({&zeroed[i], 1}, config.train.window, config.train.window_stride);
  }
  for (std::size_t j = 0; j < jobs.size(); ++j) jobs[j].seed = derive_seed(config.train.seed, j);

  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (jobs[j].run) order.push_back(j);
  }

  auto run_job = [&](std::size_t j) {
    TrainConfig tc = config.train;
    tc.seed = jobs[j].seed;
    return train(tc, jobs[j].data).model;
  };

  std::vector<ModelParams> models(jobs.size());
  const std::size_t stride = std::max<std::size_t>(1, config.parallel_models);
  for (std::size_t base = 0; base < order.size(); base += stride) {
    const std::size_t end = std::min(base + stride, order.size());
    if (stride == 1) {
      models[order[base]] = run_job(order[base]);
      continue;
    }
    std::vector<std::future<ModelParams>> futures;
    futures.reserve(end - base);
    for (std::size_t k = base; k < end; ++k) {
      futures.push_back(std::async(std::launch::async, run_job, order[k]));
    }
    for (std::size_t k = base; k < end; ++k) models[order[k]] = futures[k - base].get();
  }
  const ModelParams& contextual = context_model != nullptr ? *context_model : models[0];

  EvalReport report;
  report.distance_threshold = threshold;
  for (std::size_t i = 0; i < m; ++i) report.model_labels.push_back("M_" + std::to_string(i + 1));
  report.model_labels.emplace_back("M_X");
  report.model_labels.emplace_back("ContextPred");
  report.model_labels.emplace_back("NFT ContextPred");

  const ContextVector zero_ctx{};
  for (const CollectionSeries& test : test_set) {
    CollectionDiagnostic diag;
    diag.collection_id = test.collection_id;
    diag.context = embed_new(pca, norm, test);
    DistanceResult dist = context_distance(diag.context, table);
    diag.min_distance = dist.min_distance;
    diag.nearest = dist.nearest;
    diag.warn = dist.min_distance > threshold;
    for (int qi = 0; qi < 4; ++qi) {
      diag.actual_caps[std::size_t(qi)] = quarter_stats(test, {}, QuarterId(qi)).market_cap;
    }
    diag.actual_tier = tier(diag.actual_caps[3]);

    for (std::size_t i = 0; i < m; ++i) {
      std::vector<Tensor> gen =
          generate_tokens(models[2 + i], zero_ctx, test, config.train.window);
      report.rows.push_back(score_raw(test.collection_id, report.model_labels[i], test, gen,
                                      diag.actual_caps));
    }
    {
      std::vector<Tensor> gen = generate_tokens(models[1], zero_ctx, test, config.train.window);
      report.rows.push_back(score_raw(test.collection_id, "M_X", test, gen, diag.actual_caps));
    }
    {
      std::vector<Tensor> gen =
          generate_tokens(contextual, diag.context, test, config.train.window);
      report.rows.push_back(
          score_raw(test.collection_id, "ContextPred", test, gen, diag.actual_caps));
      CollectionSeries q1 = slice_quarter(test, QuarterId::q1);
      report.rows.push_back(
          score_stepped(test.collection_id, test, q1, gen, diag.actual_caps));
    }
    report.diagnostics.push_back(std::move(diag));
  }
  return report;
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "collection,model,mae,mse,rmse,r2,q1,q2,q3,q4,tier\n";
  for (const ReportRow& row : report.rows) {
    out << row.collection_id << ',' << row.model << ',' << fmt(row.stats.mae) << ','
        << fmt(row.stats.mse) << ',' << fmt(row.stats.rmse) << ',' << fmt(row.stats.r2);
    for (double d : row.cap_diff) out << ',' << fmt(d);
    out << ',' << int(row.predicted_tier) << '\n';
  }
}

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_error, "cannot open for writing: " + path);
  write_report_csv(report, out);
  if (!out) raise(Errc::io_error, "write failed: " + path);
}

void write_diagnostics_csv(const EvalReport& report, std::ostream& out) {
  out << "collection,min_distance,nearest,threshold,warn,actual_tier\n";
  for (const CollectionDiagnostic& diag : report.diagnostics) {
    out << diag.collection_id << ',' << fmt(diag.min_distance) << ',' << diag.nearest << ','
        << fmt(report.distance_threshold) << ',' << (diag.warn ? 1 : 0) << ','
        << int(diag.actual_tier) << '\n';
  }
}

void write_diagnostics_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_error, "cannot open for writing: " + path);
  write_diagnostics_csv(report, out);
  if (!out) raise(Errc::io_error, "write failed: " + path);
}

}  // namespace nftproj
