#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nftproj/checkpoint.hpp"
#include "nftproj/context.hpp"
#include "nftproj/errors.hpp"
#include "nftproj/evaluate.hpp"
#include "nftproj/ingest.hpp"
#include "nftproj/lstm.hpp"
#include "nftproj/series.hpp"
#include "nftproj/synth.hpp"
#include "nftproj/train.hpp"
#include "nftproj/transform.hpp"
#include "nftproj/wei.hpp"

namespace {

using namespace nftproj;
namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, ptr};
}

std::string stem_of(const std::string& path) {
  std::string name = fs::path(path).filename().string();
  std::string stem = name.substr(0, name.find('.'));
  if (stem.empty()) raise(Errc::config_error, "cannot derive a collection id from: " + path);
  return stem;
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::config_error, "cannot open config: " + path);
  nlohmann::json cfg;
  try {
    in >> cfg;
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::config_error, "config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) raise(Errc::config_error, "config root must be a JSON object: " + path);
  return cfg;
}

/// Fills `value` from the config when the flag was not passed on the
/// command line (flags override config, config overrides defaults).
template <typename T>
void fallback(const nlohmann::json& cfg, const char* key, const CLI::Option* opt, T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (!cfg.is_object() || !cfg.contains(key)) return;
  try {
    value = cfg.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::config_error, std::string("config key '") + key + "': " + e.what());
  }
}

/// TrainConfig flags shared by `train` and `evaluate`. The seed has no
/// default: it must come from --seed or the config's train.seed.
struct TrainOpts {
  TrainConfig tc;
  CLI::Option* o_epochs = nullptr;
  CLI::Option* o_batch = nullptr;
  CLI::Option* o_window = nullptr;
  CLI::Option* o_hidden = nullptr;
  CLI::Option* o_dropout = nullptr;
  CLI::Option* o_lr = nullptr;
  CLI::Option* o_beta1 = nullptr;
  CLI::Option* o_beta2 = nullptr;
  CLI::Option* o_eps = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_stride = nullptr;
  CLI::Option* o_threads = nullptr;

  void attach(CLI::App& cmd) {
    o_epochs = cmd.add_option("--epochs", tc.epochs, "Training epochs");
    o_batch = cmd.add_option("--batch-size", tc.batch_size, "Examples per optimizer step");
    o_window = cmd.add_option("--window", tc.window, "Sliding-window length in days");
    o_hidden = cmd.add_option("--hidden", tc.hidden, "Hidden units per recurrent layer");
    o_dropout = cmd.add_option("--dropout", tc.dropout_rate, "Inter-layer dropout rate");
    o_lr = cmd.add_option("--lr", tc.lr, "Adam learning rate");
    o_beta1 = cmd.add_option("--beta1", tc.beta1, "Adam first-moment decay");
    o_beta2 = cmd.add_option("--beta2", tc.beta2, "Adam second-moment decay");
    o_eps = cmd.add_option("--eps", tc.eps, "Adam epsilon");
    o_seed = cmd.add_option("--seed", tc.seed,
                            "Base seed; every random draw derives from it (required)");
    o_stride = cmd.add_option("--stride", tc.window_stride, "Window stride in days");
    o_threads = cmd.add_option("--threads", tc.threads, "Gradient worker threads");
  }

  void resolve(const nlohmann::json& cfg) {
    const nlohmann::json train_cfg =
        cfg.is_object() && cfg.contains("train") ? cfg.at("train") : nlohmann::json::object();
    fallback(train_cfg, "epochs", o_epochs, tc.epochs);
    fallback(train_cfg, "batch_size", o_batch, tc.batch_size);
    fallback(train_cfg, "window", o_window, tc.window);
    fallback(train_cfg, "hidden", o_hidden, tc.hidden);
    fallback(train_cfg, "dropout", o_dropout, tc.dropout_rate);
    fallback(train_cfg, "lr", o_lr, tc.lr);
    fallback(train_cfg, "beta1", o_beta1, tc.beta1);
    fallback(train_cfg, "beta2", o_beta2, tc.beta2);
    fallback(train_cfg, "eps", o_eps, tc.eps);
    fallback(train_cfg, "stride", o_stride, tc.window_stride);
    fallback(train_cfg, "threads", o_threads, tc.threads);
    if (o_seed->count() == 0) {
      if (!train_cfg.contains("seed")) {
        raise(Errc::config_error, "seed required: pass --seed or set train.seed in the config");
      }
      fallback(train_cfg, "seed", o_seed, tc.seed);
    }
  }
};

std::vector<std::uint64_t> parse_token_range(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    raise(Errc::config_error, "token range must be LO:HI, got: " + text);
  }
  auto parse = [&](const std::string& part) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      raise(Errc::config_error, "bad token id in range: " + part);
    }
    return v;
  };
  std::uint64_t lo = parse(text.substr(0, colon));
  std::uint64_t hi = parse(text.substr(colon + 1));
  if (hi < lo) raise(Errc::config_error, "token range is empty: " + text);
  if (hi - lo >= 10'000'000) raise(Errc::config_error, "token range too large: " + text);
  std::vector<std::uint64_t> ids(hi - lo + 1);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = lo + i;
  return ids;
}

EventFormat format_for(const std::string& path, const std::string& explicit_format) {
  if (explicit_format == "csv") return EventFormat::csv;
  if (explicit_format == "jsonl") return EventFormat::jsonl;
  if (!explicit_format.empty()) {
    raise(Errc::config_error, "unknown event format: " + explicit_format);
  }
  return fs::path(path).extension() == ".jsonl" ? EventFormat::jsonl : EventFormat::csv;
}

Checkpoint load_checkpoint_checked(const std::string& path) {
  if (!fs::exists(path)) raise(Errc::io_error, "missing checkpoint: " + path);
  return load_checkpoint(path);
}

const PcaModel& require_pca(const Checkpoint& cp, const std::string& path) {
  if (!cp.pca) raise(Errc::schema_error, "checkpoint has no PCA section: " + path);
  return *cp.pca;
}

const NormalizationParams& require_norm(const Checkpoint& cp, const std::string& path) {
  if (!cp.norm) raise(Errc::schema_error, "checkpoint has no normalization section: " + path);
  return *cp.norm;
}

/// Loads one collection per path, deriving the collection id from the file
/// stem. Duplicate stems are rejected.
std::vector<CollectionSeries> load_series_files(const std::vector<std::string>& paths,
                                                std::int64_t inception_ts) {
  std::vector<CollectionSeries> out;
  out.reserve(paths.size());
  for (const std::string& path : paths) {
    std::string id = stem_of(path);
    for (const CollectionSeries& prev : out) {
      if (prev.collection_id == id) {
        raise(Errc::config_error, "duplicate collection id '" + id + "' from: " + path);
      }
    }
    out.push_back(read_series_csv(path, id, inception_ts));
  }
  return out;
}

double resolve_threshold(const nlohmann::json& cfg, const CLI::Option* opt, double flag_value,
                         const ContextTable& table) {
  double threshold = flag_value;
  fallback(cfg, "distance_threshold", opt, threshold);
  if (threshold < 0.0) threshold = max_pairwise_distance(table);
  return threshold;
}

// ---------------------------------------------------------------- ingest

struct IngestOpts {
  std::string in_path;
  std::string format;
  std::string out_path;
  std::string fetch_url;
  std::string contract;
  std::string api_key;
  std::int64_t from_block = 0;
  std::int64_t to_block = 99'999'999;
  int page_size = 100;
  int max_retries = 3;
  int backoff_ms = 100;
};

int cmd_ingest(const IngestOpts& o) {
  std::vector<SaleEvent> events;
  if (!o.in_path.empty()) {
    events = load_events(o.in_path, format_for(o.in_path, o.format));
  } else if (!o.fetch_url.empty()) {
    if (o.contract.empty()) raise(Errc::config_error, "--fetch-url requires --contract");
    FetchConfig fc;
    fc.base_url = o.fetch_url;
    fc.api_key = o.api_key;
    fc.page_size = o.page_size;
    fc.max_retries = o.max_retries;
    fc.backoff_ms = o.backoff_ms;
    events = fetch_events(fc, o.contract, o.from_block, o.to_block);
  } else {
    raise(Errc::config_error, "pass --in FILE or --fetch-url URL");
  }
  write_events_csv(events, o.out_path);
  std::cout << "wrote " << events.size() << " events to " << o.out_path << '\n';
  return 0;
}

// ----------------------------------------------------------------- synth

int cmd_synth(std::uint64_t seed, const std::string& out_dir) {
  fs::create_directories(out_dir);
  BenchmarkSuite suite = make_benchmark_suite(seed);
  write_suite_manifest(suite, (fs::path(out_dir) / "manifest.json").string());
  for (const SynthCorpus& corpus : suite.corpora) {
    fs::path base = fs::path(out_dir) / corpus.collection_id;
    write_events_csv(corpus.events, base.string() + ".events.csv");
    write_series_csv(corpus.truth, base.string() + ".series.csv");
  }
  std::cout << "wrote " << suite.corpora.size() << " collections to " << out_dir << '\n';
  return 0;
}

// ---------------------------------------------------------------- series

struct SeriesOpts {
  std::string in_path;
  std::string format;
  std::string out_path;
  std::string collection;
  std::string token_range;
  std::int64_t inception_ts = 0;
};

int cmd_series(const SeriesOpts& o) {
  std::vector<SaleEvent> events = load_events(o.in_path, format_for(o.in_path, o.format));

  std::string collection = o.collection;
  if (collection.empty()) {
    for (const SaleEvent& ev : events) {
      if (collection.empty()) {
        collection = ev.collection_id;
      } else if (ev.collection_id != collection) {
        raise(Errc::schema_error,
              "events mix multiple collections; pass --collection to pick one");
      }
    }
    if (collection.empty()) raise(Errc::schema_error, "no events in: " + o.in_path);
  } else {
    std::erase_if(events, [&](const SaleEvent& ev) { return ev.collection_id != collection; });
    sort_and_sequence(events);
  }

  std::vector<std::uint64_t> token_ids;
  if (!o.token_range.empty()) {
    token_ids = parse_token_range(o.token_range);
  } else {
    for (const SaleEvent& ev : events) token_ids.push_back(ev.token_id);
    std::sort(token_ids.begin(), token_ids.end());
    token_ids.erase(std::unique(token_ids.begin(), token_ids.end()), token_ids.end());
    if (token_ids.empty()) raise(Errc::schema_error, "no events for collection: " + collection);
  }

  std::size_t dropped = 0;
  CollectionSeries cs = build_series(collection, events, o.inception_ts, token_ids, &dropped);
  if (dropped > 0) {
    std::cerr << "warning: dropped " << dropped << " events past day " << (kYearDays - 1) << '\n';
  }
  write_series_csv(cs, o.out_path);
  std::cout << "wrote " << cs.tokens.size() << " token series to " << o.out_path << '\n';
  return 0;
}

// --------------------------------------------------------------- context

struct ContextFitOpts {
  std::vector<std::string> series_paths;
  std::string out_ckpt;
  std::string contexts_csv;
};

int cmd_context_fit(const ContextFitOpts& o) {
  std::vector<CollectionSeries> training = load_series_files(o.series_paths, 0);
  PcaModel pca = fit_pca(training);
  RawContextTable raw;
  for (const CollectionSeries& cs : training) {
    raw[cs.collection_id] = collection_context_raw(pca, cs);
  }
  auto [contexts, norm] = normalize_contexts(raw);

  Checkpoint cp;
  cp.pca = std::move(pca);
  cp.norm = norm;
  cp.contexts = contexts;
  save_checkpoint(cp, o.out_ckpt);
  if (!o.contexts_csv.empty()) write_context_csv(contexts, o.contexts_csv);
  std::cout << "fitted contexts for " << contexts.size() << " collections into " << o.out_ckpt
            << '\n';
  return 0;
}

struct ContextEmbedOpts {
  std::string ckpt_path;
  std::string series_path;
  std::string out_path;
};

int cmd_context_embed(const ContextEmbedOpts& o) {
  Checkpoint cp = load_checkpoint_checked(o.ckpt_path);
  CollectionSeries cs = read_series_csv(o.series_path, stem_of(o.series_path), 0);
  ContextVector ctx = embed_new(require_pca(cp, o.ckpt_path), require_norm(cp, o.ckpt_path), cs);
  ContextTable one{{cs.collection_id, ctx}};
  if (o.out_path.empty()) {
    write_context_csv(one, std::cout);
  } else {
    write_context_csv(one, o.out_path);
  }
  return 0;
}

struct ContextDistanceOpts {
  std::string ckpt_path;
  std::string series_path;
  double threshold = -1.0;
  CLI::Option* o_threshold = nullptr;
};

int cmd_context_distance(const ContextDistanceOpts& o, const nlohmann::json& cfg) {
  Checkpoint cp = load_checkpoint_checked(o.ckpt_path);
  if (cp.contexts.empty()) {
    raise(Errc::schema_error, "checkpoint has no stored contexts: " + o.ckpt_path);
  }
  CollectionSeries cs = read_series_csv(o.series_path, stem_of(o.series_path), 0);
  ContextVector ctx = embed_new(require_pca(cp, o.ckpt_path), require_norm(cp, o.ckpt_path), cs);
  DistanceResult dist = context_distance(ctx, cp.contexts);
  double threshold = resolve_threshold(cfg, o.o_threshold, o.threshold, cp.contexts);

  std::cout << "collection,min_distance,nearest,threshold,warn\n"
            << cs.collection_id << ',' << fmt(dist.min_distance) << ',' << dist.nearest << ','
            << fmt(threshold) << ',' << (dist.min_distance > threshold ? 1 : 0) << '\n';
  if (dist.min_distance > threshold) {
    std::cerr << "warning: " << cs.collection_id << ": context distance "
              << fmt(dist.min_distance) << " exceeds threshold " << fmt(threshold)
              << "; nearest training collection is '" << dist.nearest << "'\n";
  }
  return 0;
}

// ----------------------------------------------------------------- train

struct TrainCmdOpts {
  std::string ckpt_in;
  std::vector<std::string> series_paths;
  std::string out_ckpt;
  std::string loss_csv;
  bool unconditional = false;
  TrainOpts train;
};

int cmd_train(const TrainCmdOpts& o) {
  Checkpoint cp = load_checkpoint_checked(o.ckpt_in);
  std::vector<CollectionSeries> series = load_series_files(o.series_paths, 0);

  std::vector<ConditionedSeries> conditioned;
  conditioned.reserve(series.size());
  for (const CollectionSeries& cs : series) {
    ContextVector ctx;
    if (!o.unconditional) {
      auto it = cp.contexts.find(cs.collection_id);
      if (it == cp.contexts.end()) {
        raise(Errc::config_error, "no stored context for collection '" + cs.collection_id +
                                      "'; refit contexts or pass --unconditional");
      }
      ctx = it->second;
    }
    conditioned.push_back({ctx, &cs});
  }

  TrainingSet data =
      make_training_set(conditioned, o.train.tc.window, o.train.tc.window_stride);
  TrainResult result = train(o.train.tc, data);

  cp.model = std::move(result.model);
  cp.config = o.train.tc;
  save_checkpoint(cp, o.out_ckpt);

  if (!o.loss_csv.empty()) {
    std::ofstream out(o.loss_csv, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot open for writing: " + o.loss_csv);
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
      out << (e + 1) << ',' << fmt(result.loss_history[e]) << '\n';
    }
  }
  std::cout << "trained " << data.examples.size() << " examples for " << o.train.tc.epochs
            << " epochs; final loss " << fmt(result.loss_history.back()) << "; saved "
            << o.out_ckpt << '\n';
  return 0;
}

// -------------------------------------------------------------- generate

struct GenerateOpts {
  std::string ckpt_path;
  std::string series_path;
  std::string context_id;
  std::string out_raw;
  std::string out_stepped;
  bool unconditional = false;
  double threshold = -1.0;
  CLI::Option* o_threshold = nullptr;
};

int cmd_generate(const GenerateOpts& o, const nlohmann::json& cfg) {
  if (o.out_raw.empty() && o.out_stepped.empty()) {
    raise(Errc::config_error, "pass --out-raw and/or --out-stepped");
  }
  Checkpoint cp = load_checkpoint_checked(o.ckpt_path);
  if (!cp.model) raise(Errc::schema_error, "checkpoint has no model section: " + o.ckpt_path);
  const std::size_t window = cp.config ? cp.config->window : std::size_t{20};

  CollectionSeries cs = read_series_csv(o.series_path, stem_of(o.series_path), 0);
  CollectionSeries q1;
  q1.collection_id = cs.collection_id;
  q1.inception_ts = cs.inception_ts;
  for (const TokenSeries& tok : cs.tokens) {
    if (tok.start_day != 0 || tok.points.size() < kQ1Days) {
      raise(Errc::series_too_short, "token " + std::to_string(tok.token_id) +
                                        " does not cover the 91 observed days");
    }
    TokenSeries head;
    head.token_id = tok.token_id;
    head.start_day = 0;
    head.points.assign(tok.points.begin(), tok.points.begin() + kQ1Days);
    q1.tokens.push_back(std::move(head));
  }

  ContextVector ctx;
  if (o.unconditional) {
    // zero context, no distance diagnostics
  } else if (!o.context_id.empty()) {
    auto it = cp.contexts.find(o.context_id);
    if (it == cp.contexts.end()) {
      raise(Errc::config_error, "no stored context named '" + o.context_id + "'");
    }
    ctx = it->second;
  } else {
    ctx = embed_new(require_pca(cp, o.ckpt_path), require_norm(cp, o.ckpt_path), cs);
  }
  if (!o.unconditional && !cp.contexts.empty()) {
    DistanceResult dist = context_distance(ctx, cp.contexts);
    double threshold = resolve_threshold(cfg, o.o_threshold, o.threshold, cp.contexts);
    if (dist.min_distance > threshold) {
      std::cerr << "warning: " << cs.collection_id << ": context distance "
                << fmt(dist.min_distance) << " exceeds threshold " << fmt(threshold)
                << "; nearest training collection is '" << dist.nearest
                << "', generations may degrade\n";
    }
  }

  const std::size_t horizon = kYearDays - kQ1Days;
  std::vector<Tensor> raw;
  raw.reserve(q1.tokens.size());
  for (const TokenSeries& tok : q1.tokens) {
    std::vector<double> feats(window * kSeriesFeatures);
    for (std::size_t d = 0; d < window; ++d) {
      const DailyPoint& p = tok.points[kQ1Days - window + d];
      feats[d * kSeriesFeatures] = to_eth(p.value);
      feats[d * kSeriesFeatures + 1] = double(p.count);
    }
    raw.push_back(generate(*cp.model, ctx, feats, horizon));
  }

  if (!o.out_raw.empty()) {
    std::ofstream out(o.out_raw, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot open for writing: " + o.out_raw);
    out << "token_id,day,value,count\n";
    for (std::size_t t = 0; t < raw.size(); ++t) {
      for (std::size_t d = 0; d < horizon; ++d) {
        out << q1.tokens[t].token_id << ',' << (kQ1Days + d) << ',' << fmt(raw[t].at(d, 0))
            << ',' << fmt(raw[t].at(d, 1)) << '\n';
      }
    }
  }
  if (!o.out_stepped.empty()) {
    std::vector<std::vector<DailyPoint>> stepped;
    stepped.reserve(raw.size());
    StepDiagnostics diag;
    for (std::size_t t = 0; t < raw.size(); ++t) {
      stepped.push_back(step_transform(raw[t], q1.tokens[t].points.back(), &diag));
    }
    if (diag.negative_values_clamped > 0) {
      std::cerr << "note: clamped " << diag.negative_values_clamped
                << " negative generated values to 0\n";
    }
    write_series_csv(assemble_projection(q1, stepped), o.out_stepped);
  }
  std::cout << "generated " << horizon << " days for " << q1.tokens.size() << " tokens\n";
  return 0;
}

// -------------------------------------------------------------- evaluate

struct EvaluateOpts {
  std::string ckpt_path;
  std::vector<std::string> train_paths;
  std::vector<std::string> test_paths;
  std::string out_report;
  std::string out_diagnostics;
  double threshold = -1.0;
  std::size_t parallel_models = 1;
  TrainOpts train;
  CLI::Option* o_threshold = nullptr;
};

int cmd_evaluate(const EvaluateOpts& o, const nlohmann::json& cfg) {
  Checkpoint cp = load_checkpoint_checked(o.ckpt_path);
  const PcaModel& pca = require_pca(cp, o.ckpt_path);
  const NormalizationParams& norm = require_norm(cp, o.ckpt_path);

  std::vector<CollectionSeries> train_series = load_series_files(o.train_paths, 0);
  std::vector<CollectionSeries> test_series = load_series_files(o.test_paths, 0);

  std::vector<ConditionedSeries> conditioned;
  conditioned.reserve(train_series.size());
  for (const CollectionSeries& cs : train_series) {
    auto it = cp.contexts.find(cs.collection_id);
    if (it == cp.contexts.end()) {
      raise(Errc::config_error,
            "no stored context for training collection '" + cs.collection_id + "'");
    }
    conditioned.push_back({it->second, &cs});
  }

  EvalConfig ec;
  ec.train = o.train.tc;
  ec.parallel_models = o.parallel_models;
  ec.distance_threshold = o.threshold;
  fallback(cfg, "distance_threshold", o.o_threshold, ec.distance_threshold);

  const ModelParams* pretrained = cp.model ? &*cp.model : nullptr;
  EvalReport report = run_evaluation(conditioned, test_series, pca, norm, ec, pretrained);

  write_report_csv(report, o.out_report);
  if (!o.out_diagnostics.empty()) write_diagnostics_csv(report, o.out_diagnostics);
  for (const CollectionDiagnostic& diag : report.diagnostics) {
    if (diag.warn) {
      std::cerr << "warning: " << diag.collection_id << ": context distance "
                << fmt(diag.min_distance) << " exceeds threshold "
                << fmt(report.distance_threshold) << "; nearest training collection is '"
                << diag.nearest << "'\n";
    }
  }
  std::cout << "wrote " << report.rows.size() << " report rows over "
            << report.diagnostics.size() << " test collections to " << o.out_report << '\n';
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportOpts {
  std::string series_path;
  std::string out_daily;
  std::string out_token;
  std::optional<std::uint64_t> sample_token;
};

int cmd_report(const ReportOpts& o) {
  if (o.out_daily.empty() && o.out_token.empty()) {
    raise(Errc::config_error, "pass --out-daily and/or --out-token");
  }
  CollectionSeries cs = read_series_csv(o.series_path, stem_of(o.series_path), 0);
  validate_series(cs, true);

  if (!o.out_daily.empty()) {
    std::ofstream out(o.out_daily, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot open for writing: " + o.out_daily);
    out << "day,mean_value,var_value,mean_count,var_count\n";
    const double n = double(cs.tokens.size());
    for (std::size_t d = 0; d < kYearDays; ++d) {
      double sv = 0, svv = 0, sc = 0, scc = 0;
      for (const TokenSeries& tok : cs.tokens) {
        double v = to_eth(tok.points[d].value);
        double c = double(tok.points[d].count);
        sv += v;
        svv += v * v;
        sc += c;
        scc += c * c;
      }
      double mv = sv / n;
      double mc = sc / n;
      out << d << ',' << fmt(mv) << ',' << fmt(std::max(0.0, svv / n - mv * mv)) << ','
          << fmt(mc) << ',' << fmt(std::max(0.0, scc / n - mc * mc)) << '\n';
    }
  }
  if (!o.out_token.empty()) {
    if (!o.sample_token) raise(Errc::config_error, "--out-token requires --sample-token");
    const TokenSeries* chosen = nullptr;
    for (const TokenSeries& tok : cs.tokens) {
      if (tok.token_id == *o.sample_token) chosen = &tok;
    }
    if (chosen == nullptr) {
      raise(Errc::unknown_token, "token " + std::to_string(*o.sample_token) + " not in series");
    }
    std::ofstream out(o.out_token, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot open for writing: " + o.out_token);
    out << "day,value_eth,count\n";
    for (std::size_t d = 0; d < chosen->points.size(); ++d) {
      out << (chosen->start_day + std::int64_t(d)) << ','
          << format_eth(chosen->points[d].value) << ',' << chosen->points[d].count << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NFT transaction-series pipeline: ingest sale events, build daily series, fit "
               "collection contexts, train the conditional recurrent model, generate future "
               "quarters, and evaluate against observed markets"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config file; command-line flags override its values");

  IngestOpts ingest_opts;
  CLI::App* c_ingest = app.add_subcommand(
      "ingest", "Load a local event file or fetch an Etherscan-style API into an event CSV");
  c_ingest->add_option("--in", ingest_opts.in_path, "Event file (.csv or .jsonl)");
  c_ingest->add_option("--format", ingest_opts.format, "Input format: csv or jsonl");
  c_ingest->add_option("--out", ingest_opts.out_path, "Output event CSV")->required();
  c_ingest->add_option("--fetch-url", ingest_opts.fetch_url, "API base URL, e.g. http://host:8080");
  c_ingest->add_option("--contract", ingest_opts.contract, "Contract address to fetch");
  c_ingest->add_option("--api-key", ingest_opts.api_key,
                       "API key (default: NFTPROJ_API_KEY environment variable)");
  c_ingest->add_option("--from-block", ingest_opts.from_block, "First block to fetch");
  c_ingest->add_option("--to-block", ingest_opts.to_block, "Last block to fetch");
  c_ingest->add_option("--page-size", ingest_opts.page_size, "Rows per API page");
  c_ingest->add_option("--max-retries", ingest_opts.max_retries, "Retries per page on 429/5xx");
  c_ingest->add_option("--backoff-ms", ingest_opts.backoff_ms, "Initial retry backoff");

  std::uint64_t synth_seed = 0;
  std::string synth_out;
  CLI::App* c_synth = app.add_subcommand(
      "synth", "Write the deterministic synthetic benchmark suite (events, series, manifest)");
  CLI::Option* o_synth_seed = c_synth->add_option("--seed", synth_seed, "Suite seed (required)");
  c_synth->add_option("--out", synth_out, "Output directory")->required();

  SeriesOpts series_opts;
  CLI::App* c_series = app.add_subcommand(
      "series", "Build 365-day per-token (value, count) series from an event file");
  c_series->add_option("--in", series_opts.in_path, "Event file")->required();
  c_series->add_option("--format", series_opts.format, "Input format: csv or jsonl");
  c_series->add_option("--out", series_opts.out_path, "Output series CSV")->required();
  c_series->add_option("--collection", series_opts.collection,
                       "Collection id to keep (default: the file's single id)");
  c_series->add_option("--tokens", series_opts.token_range,
                       "Token id range LO:HI (default: ids present in the events)");
  c_series->add_option("--inception-ts", series_opts.inception_ts,
                       "Unix timestamp of day 0 (required)")
      ->required();

  CLI::App* c_context = app.add_subcommand("context", "Fit, embed, or measure context vectors");
  c_context->require_subcommand(1);

  ContextFitOpts fit_opts;
  CLI::App* c_fit = c_context->add_subcommand(
      "fit", "Fit PCA + normalization over training collections' observed quarters");
  c_fit->add_option("--series", fit_opts.series_paths,
                    "Training series CSVs; the filename up to the first dot names each collection")
      ->required()
      ->expected(-1);
  c_fit->add_option("--out", fit_opts.out_ckpt, "Output context checkpoint")->required();
  c_fit->add_option("--contexts-csv", fit_opts.contexts_csv, "Also write the context table CSV");

  ContextEmbedOpts embed_opts;
  CLI::App* c_embed = c_context->add_subcommand(
      "embed", "Project a new collection into the fitted context space (clamped to [1,3])");
  c_embed->add_option("--checkpoint", embed_opts.ckpt_path, "Context checkpoint")->required();
  c_embed->add_option("--series", embed_opts.series_path, "Series CSV to embed")->required();
  c_embed->add_option("--out", embed_opts.out_path, "Output CSV (default: stdout)");

  ContextDistanceOpts dist_opts;
  CLI::App* c_distance = c_context->add_subcommand(
      "distance", "Distance from a collection's context to the nearest training context");
  c_distance->add_option("--checkpoint", dist_opts.ckpt_path, "Context checkpoint")->required();
  c_distance->add_option("--series", dist_opts.series_path, "Series CSV to embed")->required();
  dist_opts.o_threshold = c_distance->add_option(
      "--threshold", dist_opts.threshold,
      "Warning threshold (default: largest pairwise training distance)");

  TrainCmdOpts train_opts;
  CLI::App* c_train = app.add_subcommand(
      "train", "Train the conditional model on context-labelled collections");
  c_train->add_option("--checkpoint", train_opts.ckpt_in,
                      "Context checkpoint from `context fit`")
      ->required();
  c_train->add_option("--series", train_opts.series_paths, "Training series CSVs")
      ->required()
      ->expected(-1);
  c_train->add_option("--out", train_opts.out_ckpt, "Output model checkpoint")->required();
  c_train->add_option("--loss-csv", train_opts.loss_csv, "Write epoch,loss history CSV");
  c_train->add_flag("--unconditional", train_opts.unconditional,
                    "Zero the context features (baseline models)");
  train_opts.train.attach(*c_train);

  GenerateOpts gen_opts;
  CLI::App* c_generate = app.add_subcommand(
      "generate", "Generate the three future quarters from a collection's observed quarter");
  c_generate->add_option("--checkpoint", gen_opts.ckpt_path, "Model checkpoint")->required();
  c_generate->add_option("--series", gen_opts.series_path, "Series CSV covering days 0..90")
      ->required();
  c_generate->add_option("--context-id", gen_opts.context_id,
                         "Use a stored context instead of embedding the series");
  c_generate->add_flag("--unconditional", gen_opts.unconditional, "Generate with zero context");
  gen_opts.o_threshold = c_generate->add_option(
      "--threshold", gen_opts.threshold,
      "Context-distance warning threshold (default: largest pairwise training distance)");
  c_generate->add_option("--out-raw", gen_opts.out_raw,
                         "Raw generated floats CSV (token_id,day,value,count)");
  c_generate->add_option("--out-stepped", gen_opts.out_stepped,
                         "Step-transformed 365-day series CSV");

  EvaluateOpts eval_opts;
  CLI::App* c_evaluate = app.add_subcommand(
      "evaluate", "Train per-collection, aggregate, and contextual baselines; score test "
                  "collections into a report CSV");
  c_evaluate->add_option("--checkpoint", eval_opts.ckpt_path,
                         "Checkpoint with contexts (its model, if any, is reused)")
      ->required();
  c_evaluate->add_option("--train-series", eval_opts.train_paths, "Training series CSVs")
      ->required()
      ->expected(-1);
  c_evaluate->add_option("--test-series", eval_opts.test_paths, "Test series CSVs")
      ->required()
      ->expected(-1);
  c_evaluate->add_option("--out", eval_opts.out_report, "Report CSV")->required();
  c_evaluate->add_option("--diagnostics", eval_opts.out_diagnostics,
                         "Context-distance diagnostics CSV");
  eval_opts.o_threshold = c_evaluate->add_option(
      "--threshold", eval_opts.threshold,
      "Context-distance warning threshold (default: largest pairwise training distance)");
  c_evaluate->add_option("--parallel-models", eval_opts.parallel_models,
                         "Baseline models trained concurrently");
  eval_opts.train.attach(*c_evaluate);

  ReportOpts report_opts;
  CLI::App* c_report = app.add_subcommand(
      "report", "Plot-ready summaries of a series CSV (per-day mean/variance, token steps)");
  c_report->add_option("--series", report_opts.series_path, "Series CSV")->required();
  c_report->add_option("--out-daily", report_opts.out_daily,
                       "Per-day cross-token mean/population-variance CSV");
  c_report->add_option("--sample-token", report_opts.sample_token, "Token id for --out-token");
  c_report->add_option("--out-token", report_opts.out_token, "One token's day,value,count CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    nlohmann::json cfg =
        config_path.empty() ? nlohmann::json::object() : load_config_file(config_path);
    if (c_ingest->parsed()) return cmd_ingest(ingest_opts);
    if (c_synth->parsed()) {
      if (o_synth_seed->count() == 0) {
        if (!cfg.contains("synth_seed")) {
          raise(Errc::config_error, "seed required: pass --seed or set synth_seed in the config");
        }
        fallback(cfg, "synth_seed", o_synth_seed, synth_seed);
      }
      return cmd_synth(synth_seed, synth_out);
    }
    if (c_series->parsed()) return cmd_series(series_opts);
    if (c_fit->parsed()) return cmd_context_fit(fit_opts);
    if (c_embed->parsed()) return cmd_context_embed(embed_opts);
    if (c_distance->parsed()) return cmd_context_distance(dist_opts, cfg);
    if (c_train->parsed()) {
      train_opts.train.resolve(cfg);
      return cmd_train(train_opts);
    }
    if (c_generate->parsed()) return cmd_generate(gen_opts, cfg);
    if (c_evaluate->parsed()) {
      eval_opts.train.resolve(cfg);
      return cmd_evaluate(eval_opts, cfg);
    }
    if (c_report->parsed()) return cmd_report(report_opts);
    raise(Errc::config_error, "no subcommand selected");
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
