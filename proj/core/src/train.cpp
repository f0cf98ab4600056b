#include "nftproj/train.hpp"

#include <cmath>
#include <future>
#include <numeric>

#include "nftproj/errors.hpp"

namespace nftproj {

TrainingSet make_training_set(std::span<const ConditionedSeries> collections,
                              std::size_t window, std::size_t stride) {
  if (window < 1) raise(Errc::config_error, "window must be >= 1");
  if (stride < 1) raise(Errc::config_error, "stride must be >= 1");
  TrainingSet set;
  set.window = window;
  for (const ConditionedSeries& cond : collections) {
    const CollectionSeries& cs = *cond.series;
    for (const TokenSeries& ts : cs.tokens) {
      if (ts.points.size() < window + 1) {
        raise(Errc::series_too_short,
              "token " + std::to_string(ts.token_id) + " of " + cs.collection_id + " has " +
                  std::to_string(ts.points.size()) + " days; need at least " +
                  std::to_string(window + 1));
      }
      TrainingSet::Entry entry;
      entry.context = cond.context;
      entry.feats.resize(ts.points.size() * kSeriesFeatures);
      for (std::size_t d = 0; d < ts.points.size(); ++d) {
        entry.feats[d * kSeriesFeatures] = to_eth(ts.points[d].value);
        entry.feats[d * kSeriesFeatures + 1] = double(ts.points[d].count);
      }
      auto entry_idx = std::uint32_t(set.entries.size());
      set.entries.push_back(std::move(entry));
      for (std::size_t d = window; d < ts.points.size(); d += stride) {
        set.examples.push_back({entry_idx, std::uint32_t(d)});
      }
    }
  }
  return set;
}

namespace {

struct ChunkResult {
  double sq_err_sum = 0.0;
  ModelParams grads;
};

// Forward + backward over batch positions [begin, end); dy carries the
// 1/batch factor so chunk gradients sum to the batch gradient.
ChunkResult grad_chunk(const ModelParams& model, const TrainingSet& data,
                       std::span<const std::uint32_t> batch, std::size_t begin, std::size_t end,
                       std::uint64_t dropout_seed, double inv_batch) {
  ChunkResult res;
  res.grads = ModelParams::zeros_like(model);
  ForwardTape tape;
  for (std::size_t p = begin; p < end; ++p) {
    const auto& ex = data.examples[batch[p]];
    const auto& entry = data.entries[ex.entry];
    Rng rng(derive_seed(dropout_seed, p));
    auto y = forward(model, entry.context, data.window_of(ex), true, &rng, tape);
    auto target = data.target_of(ex);
    std::array<double, kOutputDim> dy;
    for (std::size_t j = 0; j < kOutputDim; ++j) {
      double delta = y[j] - target[j];
      if (!std::isfinite(delta)) {
        raise(Errc::non_finite, "loss diverged at batch position " + std::to_string(p));
      }
      res.sq_err_sum += delta * delta;
      dy[j] = delta * inv_batch;
    }
    backward(model, tape, dy, res.grads);
  }
  return res;
}

void accumulate(ModelParams& into, const ModelParams& from) {
  std::vector<Tensor*> dst;
  std::vector<const Tensor*> src;
  for_each_tensor(into, [&](Tensor& t) { dst.push_back(&t); });
  for_each_tensor(from, [&](const Tensor& t) { src.push_back(&t); });
  for (std::size_t k = 0; k < dst.size(); ++k) {
    double* d = dst[k]->data();
    const double* s = src[k]->data();
    for (std::size_t i = 0; i < dst[k]->numel(); ++i) d[i] += s[i];
  }
}

}  // namespace

double loss_and_grad(const ModelParams& model, const TrainingSet& data,
                     std::span<const std::uint32_t> batch, std::uint64_t dropout_seed,
                     ModelParams& grads, std::size_t threads) {
  if (batch.empty()) raise(Errc::config_error, "batch must be non-empty");
  const double inv_batch = 1.0 / double(batch.size());

  // Fixed chunking keeps the floating-point summation order independent of
  // the thread count.
  const std::size_t n_chunks = std::min<std::size_t>(8, batch.size());
  const std::size_t per = (batch.size() + n_chunks - 1) / n_chunks;

  struct Range {
    std::size_t begin, end;
  };
  std::vector<Range> ranges;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    std::size_t b = c * per, e = std::min(batch.size(), b + per);
    if (b < e) ranges.push_back({b, e});
  }

  std::vector<ChunkResult> results(ranges.size());
  if (threads <= 1 || ranges.size() == 1) {
    for (std::size_t c = 0; c < ranges.size(); ++c) {
      results[c] = grad_chunk(model, data, batch, ranges[c].begin, ranges[c].end, dropout_seed,
                              inv_batch);
    }
  } else {
    std::vector<std::future<ChunkResult>> futures;
    futures.reserve(ranges.size());
    for (const Range& r : ranges) {
      futures.push_back(std::async(std::launch::async, [&, r] {
        return grad_chunk(model, data, batch, r.begin, r.end, dropout_seed, inv_batch);
      }));
    }
    for (std::size_t c = 0; c < ranges.size(); ++c) results[c] = futures[c].get();
  }

  double sq_err = 0.0;
  for (const ChunkResult& r : results) {
    sq_err += r.sq_err_sum;
    accumulate(grads, r.grads);
  }
  double loss = sq_err * inv_batch / 2.0;
  bool finite = std::isfinite(loss);
  for_each_tensor(grads, [&](Tensor& t) {
    const double* d = t.data();
    for (std::size_t i = 0; i < t.numel() && finite; ++i) finite = std::isfinite(d[i]);
  });
  if (!finite) raise(Errc::non_finite, "loss or gradient is not finite");
  return loss;
}

double loss_and_grad(const ModelParams& model, const TrainingSet& data,
                     std::span<const std::uint32_t> batch, Rng& rng, ModelParams& grads) {
  return loss_and_grad(model, data, batch, rng.next_u64(), grads, 1);
}

void adam_step(ModelParams& model, const ModelParams& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps, std::uint64_t step_index) {
  const double bc1 = 1.0 - std::pow(beta1, double(step_index));
  const double bc2 = 1.0 - std::pow(beta2, double(step_index));

  std::vector<Tensor*> ps, gs, ms, vs;
  for_each_tensor(model, [&](Tensor& t) { ps.push_back(&t); });
  for_each_tensor(const_cast<ModelParams&>(grads), [&](Tensor& t) { gs.push_back(&t); });
  for_each_tensor(state.m, [&](Tensor& t) { ms.push_back(&t); });
  for_each_tensor(state.v, [&](Tensor& t) { vs.push_back(&t); });

  for (std::size_t k = 0; k < ps.size(); ++k) {
    double* p = ps[k]->data();
    const double* g = gs[k]->data();
    double* m = ms[k]->data();
    double* v = vs[k]->data();
    for (std::size_t i = 0; i < ps[k]->numel(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

TrainResult train(const TrainConfig& config, const TrainingSet& data) {
  if (data.examples.empty()) raise(Errc::config_error, "training set is empty");
  if (config.batch_size < 1) raise(Errc::config_error, "batch_size must be >= 1");
  if (data.window != config.window) {
    raise(Errc::shape_mismatch, "training set window does not match config.window");
  }

  TrainResult res;
  res.model = ModelParams::init(config.hidden, config.dropout_rate, config.seed);
  AdamState state = AdamState::init(res.model);
  ModelParams grads = ModelParams::zeros_like(res.model);
  Rng rng(derive_seed(config.seed, 0x7261696e));

  std::vector<std::uint32_t> order(data.examples.size());
  std::iota(order.begin(), order.end(), 0u);

  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_sq = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      std::size_t e = std::min(order.size(), b + config.batch_size);
      std::span<const std::uint32_t> batch(order.data() + b, e - b);
      for_each_tensor(grads, [](Tensor& t) { t.fill(0.0); });
      std::uint64_t dropout_seed = rng.next_u64();
      double loss;
      try {
        loss = loss_and_grad(res.model, data, batch, dropout_seed, grads, config.threads);
      } catch (const Error& err) {
        if (err.code() == Errc::non_finite) {
          raise(Errc::non_finite, "epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(b / config.batch_size) + ": " + err.what());
        }
        throw;
      }
      adam_step(res.model, grads, state, config.lr, config.beta1, config.beta2, config.eps,
                ++step);
      epoch_sq += loss * 2.0 * double(batch.size());  // back to a squared-error sum
    }
    // Epoch-mean loss over all examples, in the same halved-MSE units as
    // loss_and_grad.
    res.loss_history.push_back(epoch_sq / (2.0 * double(order.size())));
  }
  return res;
}

}  // namespace nftproj
