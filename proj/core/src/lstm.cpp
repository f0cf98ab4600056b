#include "nftproj/lstm.hpp"

#include <cmath>

#include "nftproj/errors.hpp"

namespace nftproj {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ModelParams make_zeros(std::size_t hidden, double dropout_rate) {
  ModelParams m;
  m.hidden = hidden;
  m.dropout_rate = dropout_rate;
  m.layer1 = LstmLayerParams::zeros(kModelInputDim, hidden);
  m.layer2 = LstmLayerParams::zeros(hidden, hidden);
  m.head_w = Tensor({kOutputDim, hidden});
  m.head_b = Tensor({kOutputDim});
  return m;
}

// pre = W·z + b for one gate; z = concat(x, h_prev).
void gate_preact(const Tensor& w, const Tensor& b, std::span<const double> x,
                 const std::vector<double>& h_prev, std::vector<double>& pre) {
  const std::size_t hidden = b.numel();
  const std::size_t nx = x.size();
  const std::size_t nz = nx + h_prev.size();
  const double* wd = w.data();
  for (std::size_t k = 0; k < hidden; ++k) {
    const double* row = wd + k * nz;
    double acc = b[k];
    for (std::size_t j = 0; j < nx; ++j) acc += row[j] * x[j];
    const double* rh = row + nx;
    for (std::size_t j = 0; j < h_prev.size(); ++j) acc += rh[j] * h_prev[j];
    pre[k] = acc;
  }
}

}  // namespace

LstmLayerParams LstmLayerParams::zeros(std::size_t input_dim, std::size_t hidden) {
  LstmLayerParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  std::vector<std::size_t> wshape{hidden, input_dim + hidden};
  std::vector<std::size_t> bshape{hidden};
  p.w_i = Tensor(wshape);
  p.w_f = Tensor(wshape);
  p.w_o = Tensor(wshape);
  p.w_c = Tensor(wshape);
  p.b_i = Tensor(bshape);
  p.b_f = Tensor(bshape);
  p.b_o = Tensor(bshape);
  p.b_c = Tensor(bshape);
  return p;
}

ModelParams ModelParams::init(std::size_t hidden, double dropout_rate, std::uint64_t seed) {
  if (hidden == 0) raise(Errc::shape_mismatch, "hidden size must be positive");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    raise(Errc::config_error, "dropout rate must lie in [0, 1)");
  }
  ModelParams m = make_zeros(hidden, dropout_rate);
  Rng rng(seed);
  auto fill_uniform = [&](Tensor& t, double scale) {
    double* d = t.data();
    for (std::size_t i = 0; i < t.numel(); ++i) d[i] = rng.uniform(-scale, scale);
  };
  double s1 = 1.0 / std::sqrt(double(kModelInputDim + hidden));
  double s2 = 1.0 / std::sqrt(double(hidden + hidden));
  double sh = 1.0 / std::sqrt(double(hidden));
  fill_uniform(m.layer1.w_i, s1);
  fill_uniform(m.layer1.w_f, s1);
  fill_uniform(m.layer1.w_o, s1);
  fill_uniform(m.layer1.w_c, s1);
  m.layer1.b_f.fill(1.0);
  fill_uniform(m.layer2.w_i, s2);
  fill_uniform(m.layer2.w_f, s2);
  fill_uniform(m.layer2.w_o, s2);
  fill_uniform(m.layer2.w_c, s2);
  m.layer2.b_f.fill(1.0);
  fill_uniform(m.head_w, sh);
  return m;
}

ModelParams ModelParams::zeros(std::size_t hidden, double dropout_rate) {
  return make_zeros(hidden, dropout_rate);
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  return make_zeros(other.hidden, other.dropout_rate);
}

void lstm_cell_forward(const LstmLayerParams& params, std::span<const double> x_aug,
                       const LstmState& prev, LstmState& out) {
  if (x_aug.size() != params.input_dim) {
    raise(Errc::shape_mismatch, "cell input size does not match layer input_dim");
  }
  if (prev.h.size() != params.hidden || out.h.size() != params.hidden) {
    raise(Errc::shape_mismatch, "cell state size does not match layer hidden size");
  }
  gate_preact(params.w_i, params.b_i, x_aug, prev.h, out.i);
  gate_preact(params.w_f, params.b_f, x_aug, prev.h, out.f);
  gate_preact(params.w_o, params.b_o, x_aug, prev.h, out.o);
  gate_preact(params.w_c, params.b_c, x_aug, prev.h, out.g);
  for (std::size_t k = 0; k < params.hidden; ++k) {
    out.i[k] = sigmoid(out.i[k]);
    out.f[k] = sigmoid(out.f[k]);
    out.o[k] = sigmoid(out.o[k]);
    out.g[k] = std::tanh(out.g[k]);
    out.c[k] = out.f[k] * prev.c[k] + out.i[k] * out.g[k];
    out.h[k] = out.o[k] * std::tanh(out.c[k]);
  }
}

void ForwardTape::resize(std::size_t w, std::size_t h) {
  if (window == w && hidden == h) return;
  window = w;
  hidden = h;
  x.assign(w * kModelInputDim, 0.0);
  std::size_t n = w * h;
  for (auto* v : {&i1, &f1, &o1, &g1, &c1, &tc1, &h1, &m1, &d1,
                  &i2, &f2, &o2, &g2, &c2, &tc2, &h2}) {
    v->assign(n, 0.0);
  }
  mh.assign(h, 0.0);
  dh.assign(h, 0.0);
}

namespace {

// Cell forward writing straight into the tape's row t.
void cell_forward_taped(const LstmLayerParams& p, const double* x, std::size_t nx,
                        const double* h_prev, const double* c_prev, double* gi, double* gf,
                        double* go, double* gg, double* c, double* tc, double* h) {
  const std::size_t hidden = p.hidden;
  const std::size_t nz = nx + hidden;
  const Tensor* ws[4] = {&p.w_i, &p.w_f, &p.w_o, &p.w_c};
  const Tensor* bs[4] = {&p.b_i, &p.b_f, &p.b_o, &p.b_c};
  double* outs[4] = {gi, gf, go, gg};
  for (int g = 0; g < 4; ++g) {
    const double* wd = ws[g]->data();
    const double* bd = bs[g]->data();
    double* out = outs[g];
    for (std::size_t k = 0; k < hidden; ++k) {
      const double* row = wd + k * nz;
      double acc = bd[k];
      for (std::size_t j = 0; j < nx; ++j) acc += row[j] * x[j];
      const double* rh = row + nx;
      for (std::size_t j = 0; j < hidden; ++j) acc += rh[j] * h_prev[j];
      out[k] = acc;
    }
  }
  for (std::size_t k = 0; k < hidden; ++k) {
    gi[k] = sigmoid(gi[k]);
    gf[k] = sigmoid(gf[k]);
    go[k] = sigmoid(go[k]);
    gg[k] = std::tanh(gg[k]);
    c[k] = gf[k] * c_prev[k] + gi[k] * gg[k];
    tc[k] = std::tanh(c[k]);
    h[k] = go[k] * tc[k];
  }
}

}  // namespace

std::array<double, kOutputDim> forward(const ModelParams& model, const ContextVector& context,
                                       std::span<const double> window_feats, bool training,
                                       Rng* rng, ForwardTape& tape) {
  if (window_feats.size() % kSeriesFeatures != 0 || window_feats.empty()) {
    raise(Errc::shape_mismatch, "window must be a day-major (length × 2) array");
  }
  const std::size_t T = window_feats.size() / kSeriesFeatures;
  const std::size_t H = model.hidden;
  tape.resize(T, H);

  const bool drop = training && model.dropout_rate > 0.0;
  if (drop && rng == nullptr) {
    raise(Errc::config_error, "training-mode forward with dropout needs an rng");
  }
  const double keep = 1.0 - model.dropout_rate;
  const double scale = drop ? 1.0 / keep : 1.0;

  std::vector<double> zeros(H, 0.0);
  const double* h1_prev = zeros.data();
  const double* c1_prev = zeros.data();
  const double* h2_prev = zeros.data();
  const double* c2_prev = zeros.data();

  for (std::size_t t = 0; t < T; ++t) {
    double* xt = tape.x.data() + t * kModelInputDim;
    for (std::size_t k = 0; k < kContextDim; ++k) xt[k] = context.values[k];
    xt[kContextDim] = window_feats[t * kSeriesFeatures];
    xt[kContextDim + 1] = window_feats[t * kSeriesFeatures + 1];

    std::size_t off = t * H;
    cell_forward_taped(model.layer1, xt, kModelInputDim, h1_prev, c1_prev,
                       tape.i1.data() + off, tape.f1.data() + off, tape.o1.data() + off,
                       tape.g1.data() + off, tape.c1.data() + off, tape.tc1.data() + off,
                       tape.h1.data() + off);

    double* m = tape.m1.data() + off;
    double* d = tape.d1.data() + off;
    const double* h1 = tape.h1.data() + off;
    if (drop) {
      for (std::size_t k = 0; k < H; ++k) {
        m[k] = rng->uniform() < keep ? scale : 0.0;
        d[k] = h1[k] * m[k];
      }
    } else {
      for (std::size_t k = 0; k < H; ++k) {
        m[k] = 1.0;
        d[k] = h1[k];
      }
    }

    cell_forward_taped(model.layer2, d, H, h2_prev, c2_prev,
                       tape.i2.data() + off, tape.f2.data() + off, tape.o2.data() + off,
                       tape.g2.data() + off, tape.c2.data() + off, tape.tc2.data() + off,
                       tape.h2.data() + off);

    h1_prev = tape.h1.data() + off;
    c1_prev = tape.c1.data() + off;
    h2_prev = tape.h2.data() + off;
    c2_prev = tape.c2.data() + off;
  }

  const double* h2_final = tape.h2.data() + (T - 1) * H;
  if (drop) {
    for (std::size_t k = 0; k < H; ++k) {
      tape.mh[k] = rng->uniform() < keep ? scale : 0.0;
      tape.dh[k] = h2_final[k] * tape.mh[k];
    }
  } else {
    for (std::size_t k = 0; k < H; ++k) {
      tape.mh[k] = 1.0;
      tape.dh[k] = h2_final[k];
    }
  }

  const double* hw = model.head_w.data();
  for (std::size_t j = 0; j < kOutputDim; ++j) {
    double acc = model.head_b[j];
    const double* row = hw + j * H;
    for (std::size_t k = 0; k < H; ++k) acc += row[k] * tape.dh[k];
    tape.y[j] = acc;
  }
  return tape.y;
}

namespace {

// Shared gate-gradient step; accumulates parameter gradients and returns
// the downstream deltas through one cell.
void cell_backward(const LstmLayerParams& p, const double* x, std::size_t nx,
                   const double* h_prev, const double* c_prev, const double* gi,
                   const double* gf, const double* go, const double* gg, const double* tc,
                   const double* dh, double* dc /*in-out*/, LstmLayerParams& grads,
                   double* dx /*nullable*/, double* dh_prev_out, double* dc_prev_out,
                   std::vector<double>& scratch) {
  const std::size_t H = p.hidden;
  const std::size_t nz = nx + H;
  scratch.assign(4 * H, 0.0);
  double* dpi = scratch.data();
  double* dpf = dpi + H;
  double* dpo = dpf + H;
  double* dpg = dpo + H;

  for (std::size_t k = 0; k < H; ++k) {
    double dck = dc[k] + dh[k] * go[k] * (1.0 - tc[k] * tc[k]);
    dpo[k] = dh[k] * tc[k] * go[k] * (1.0 - go[k]);
    dpi[k] = dck * gg[k] * gi[k] * (1.0 - gi[k]);
    dpg[k] = dck * gi[k] * (1.0 - gg[k] * gg[k]);
    dpf[k] = dck * c_prev[k] * gf[k] * (1.0 - gf[k]);
    dc_prev_out[k] = dck * gf[k];
  }

  struct GateRef {
    const Tensor* w;
    Tensor* gw;
    Tensor* gb;
    const double* dp;
  };
  GateRef gates[4] = {
      {&p.w_i, &grads.w_i, &grads.b_i, dpi},
      {&p.w_f, &grads.w_f, &grads.b_f, dpf},
      {&p.w_o, &grads.w_o, &grads.b_o, dpo},
      {&p.w_c, &grads.w_c, &grads.b_c, dpg},
  };

  if (dx) std::fill(dx, dx + nx, 0.0);
  std::fill(dh_prev_out, dh_prev_out + H, 0.0);

  for (auto& gate : gates) {
    const double* wd = gate.w->data();
    double* gwd = gate.gw->data();
    double* gbd = gate.gb->data();
    const double* dp = gate.dp;
    for (std::size_t k = 0; k < H; ++k) {
      double d = dp[k];
      gbd[k] += d;
      if (d == 0.0) continue;
      const double* row = wd + k * nz;
      double* grow = gwd + k * nz;
      for (std::size_t j = 0; j < nx; ++j) grow[j] += d * x[j];
      double* growh = grow + nx;
      for (std::size_t j = 0; j < H; ++j) growh[j] += d * h_prev[j];
      if (dx) {
        for (std::size_t j = 0; j < nx; ++j) dx[j] += d * row[j];
      }
      const double* rowh = row + nx;
      for (std::size_t j = 0; j < H; ++j) dh_prev_out[j] += d * rowh[j];
    }
  }
}

}  // namespace

void backward(const ModelParams& model, const ForwardTape& tape,
              const std::array<double, kOutputDim>& dy, ModelParams& grads) {
  const std::size_t T = tape.window;
  const std::size_t H = tape.hidden;
  if (T == 0 || H != model.hidden) {
    raise(Errc::shape_mismatch, "tape does not match the model");
  }

  std::vector<double> zeros(H, 0.0);
  std::vector<double> dh2(H, 0.0), dc2(H, 0.0), dh2_prev(H, 0.0), dc2_prev(H, 0.0);
  std::vector<double> dh1(H, 0.0), dc1(H, 0.0), dh1_prev(H, 0.0), dc1_prev(H, 0.0);
  std::vector<double> dd1(T * H, 0.0);  // gradient into layer-2 inputs per t
  std::vector<double> scratch;

  // Head.
  {
    double* gw = grads.head_w.data();
    for (std::size_t j = 0; j < kOutputDim; ++j) {
      grads.head_b[j] += dy[j];
      double* grow = gw + j * H;
      for (std::size_t k = 0; k < H; ++k) grow[k] += dy[j] * tape.dh[k];
    }
    const double* hw = model.head_w.data();
    for (std::size_t k = 0; k < H; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < kOutputDim; ++j) acc += hw[j * H + k] * dy[j];
      dh2[k] = acc * tape.mh[k];  // through the head dropout mask
    }
  }

  // Layer 2, back through time.
  for (std::size_t t = T; t-- > 0;) {
    std::size_t off = t * H;
    const double* h_prev = t == 0 ? zeros.data() : tape.h2.data() + off - H;
    const double* c_prev = t == 0 ? zeros.data() : tape.c2.data() + off - H;
    cell_backward(model.layer2, tape.d1.data() + off, H, h_prev, c_prev,
                  tape.i2.data() + off, tape.f2.data() + off, tape.o2.data() + off,
                  tape.g2.data() + off, tape.tc2.data() + off, dh2.data(), dc2.data(),
                  grads.layer2, dd1.data() + off, dh2_prev.data(), dc2_prev.data(), scratch);
    dh2.swap(dh2_prev);
    dc2.swap(dc2_prev);
  }

  // Layer 1: per-timestep gradient arrives through the dropout mask.
  for (std::size_t t = T; t-- > 0;) {
    std::size_t off = t * H;
    const double* m = tape.m1.data() + off;
    for (std::size_t k = 0; k < H; ++k) dh1[k] += dd1[off + k] * m[k];

    const double* h_prev = t == 0 ? zeros.data() : tape.h1.data() + off - H;
    const double* c_prev = t == 0 ? zeros.data() : tape.c1.data() + off - H;
    cell_backward(model.layer1, tape.x.data() + t * kModelInputDim, kModelInputDim, h_prev,
                  c_prev, tape.i1.data() + off, tape.f1.data() + off, tape.o1.data() + off,
                  tape.g1.data() + off, tape.tc1.data() + off, dh1.data(), dc1.data(),
                  grads.layer1, nullptr, dh1_prev.data(), dc1_prev.data(), scratch);
    dh1.swap(dh1_prev);
    dc1.swap(dc1_prev);
  }
}

Tensor generate(const ModelParams& model, const ContextVector& context,
                std::span<const double> seed_window, std::size_t horizon) {
  if (seed_window.empty() || seed_window.size() % kSeriesFeatures != 0) {
    raise(Errc::shape_mismatch, "seed window must be a day-major (length × 2) array");
  }
  Tensor out({horizon, kSeriesFeatures});
  if (horizon == 0) return out;

  std::vector<double> window(seed_window.begin(), seed_window.end());
  ForwardTape tape;
  for (std::size_t step = 0; step < horizon; ++step) {
    auto y = forward(model, context, window, false, nullptr, tape);
    for (std::size_t j = 0; j < kOutputDim; ++j) {
      if (!std::isfinite(y[j])) raise(Errc::non_finite, "generated value diverged");
      out.at(step, j) = y[j];
    }
    // Slide: drop the oldest day, append the prediction.
    window.erase(window.begin(), window.begin() + kSeriesFeatures);
    window.insert(window.end(), y.begin(), y.end());
  }
  return out;
}

}  // namespace nftproj
