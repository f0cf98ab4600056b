#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nftproj/context.hpp"
#include "nftproj/rng.hpp"
#include "nftproj/tensor.hpp"

namespace nftproj {

/// Per-timestep model input: 6 context components concatenated with the
/// day's 2 series features.
inline constexpr std::size_t kModelInputDim = kContextDim + kSeriesFeatures;
inline constexpr std::size_t kOutputDim = kSeriesFeatures;
inline constexpr std::size_t kDefaultHidden = 300;
inline constexpr double kDefaultDropout = 0.2;

/// Gate parameters of one LSTM layer. Each weight matrix is
/// [hidden × (input_dim + hidden)], multiplying concat(x_t, h_prev).
struct LstmLayerParams {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  Tensor w_i, w_f, w_o, w_c;
  Tensor b_i, b_f, b_o, b_c;

  static LstmLayerParams zeros(std::size_t input_dim, std::size_t hidden);

  friend bool operator==(const LstmLayerParams&, const LstmLayerParams&) = default;
};

/// One timestep's state and gate activations; the gate caches feed backprop.
struct LstmState {
  std::vector<double> h, c;
  std::vector<double> i, f, o, g;

  explicit LstmState(std::size_t hidden = 0)
      : h(hidden, 0.0), c(hidden, 0.0), i(hidden, 0.0), f(hidden, 0.0),
        o(hidden, 0.0), g(hidden, 0.0) {}
};

/// Stacked 2-layer conditional LSTM with a linear 2-output head. Dropout
/// (training only) sits between the layers and before the head.
struct ModelParams {
  std::size_t hidden = kDefaultHidden;
  double dropout_rate = kDefaultDropout;
  LstmLayerParams layer1;  // input_dim = kModelInputDim
  LstmLayerParams layer2;  // input_dim = hidden
  Tensor head_w;           // [kOutputDim, hidden]
  Tensor head_b;           // [kOutputDim]

  /// Seeded init: weights uniform in ±1/√(input_dim + hidden) per matrix
  /// (±1/√hidden for the head), forget-gate biases +1, other biases 0.
  /// Tensors are drawn in declaration order, so identical seeds give
  /// identical models.
  static ModelParams init(std::size_t hidden, double dropout_rate, std::uint64_t seed);

  static ModelParams zeros(std::size_t hidden, double dropout_rate);
  static ModelParams zeros_like(const ModelParams& other);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Applies f to every parameter tensor of p, in a fixed order shared by
/// init, Adam, serialization, and the finite-difference tests.
template <typename P, typename F>
void for_each_tensor(P&& p, F&& f) {
  f(p.layer1.w_i); f(p.layer1.w_f); f(p.layer1.w_o); f(p.layer1.w_c);
  f(p.layer1.b_i); f(p.layer1.b_f); f(p.layer1.b_o); f(p.layer1.b_c);
  f(p.layer2.w_i); f(p.layer2.w_f); f(p.layer2.w_o); f(p.layer2.w_c);
  f(p.layer2.b_i); f(p.layer2.b_f); f(p.layer2.b_o); f(p.layer2.b_c);
  f(p.head_w); f(p.head_b);
}

/// One LSTM cell step: i = σ(W_i·[x,h] + b_i), f and o likewise,
/// g = tanh(W_c·[x,h] + b_c), c = f⊙c_prev + i⊙g, h = o⊙tanh(c).
/// Gate values are stored in `out` for backprop.
void lstm_cell_forward(const LstmLayerParams& params, std::span<const double> x_aug,
                       const LstmState& prev, LstmState& out);

/// Activation record of one forward pass, reused across calls to avoid
/// reallocation. Layout: per-timestep arrays of length window × hidden.
struct ForwardTape {
  std::size_t window = 0, hidden = 0;
  std::vector<double> x;                            // window × kModelInputDim
  std::vector<double> i1, f1, o1, g1, c1, tc1, h1;  // layer 1
  std::vector<double> m1;                           // inter-layer dropout masks
  std::vector<double> d1;                           // dropped h1 = layer-2 inputs
  std::vector<double> i2, f2, o2, g2, c2, tc2, h2;  // layer 2
  std::vector<double> mh;                           // head dropout mask (hidden)
  std::vector<double> dh;                           // dropped final h2
  std::array<double, kOutputDim> y{};

  void resize(std::size_t window, std::size_t hidden);
};

/// Full forward pass over one window. `window_feats` is day-major
/// (window × 2). With training = true, rng drives inverted-dropout masks
/// (scale 1/keep); rng may be null when training = false or dropout_rate
/// is 0. Returns the head output; all activations land in the tape.
std::array<double, kOutputDim> forward(const ModelParams& model, const ContextVector& context,
                                       std::span<const double> window_feats, bool training,
                                       Rng* rng, ForwardTape& tape);

/// Backpropagation through both layers and all timesteps of the taped
/// forward pass. dy is ∂loss/∂y; gradients are accumulated (+=) into
/// grads, which must be zeros_like-shaped.
void backward(const ModelParams& model, const ForwardTape& tape,
              const std::array<double, kOutputDim>& dy, ModelParams& grads);

/// Autoregressive generation: predict the next day, slide the window,
/// repeat `horizon` times. Dropout disabled. Returns a [horizon × 2]
/// tensor of raw (value, count) floats.
Tensor generate(const ModelParams& model, const ContextVector& context,
                std::span<const double> seed_window, std::size_t horizon);

}  // namespace nftproj
