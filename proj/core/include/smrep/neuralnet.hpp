#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "smrep/explorer.hpp"
#include "smrep/kinematics.hpp"
#include "smrep/rng.hpp"

namespace smrep {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline constexpr std::size_t kRepresentationDim = 3;

using MotorRepresentation = std::array<double, kRepresentationDim>;

template <typename T>
struct DenseLayer {
  Matrix<T> weights;  // out x in
  Vector<T> bias;

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() && a.weights == b.weights &&
           a.bias.size() == b.bias.size() && a.bias == b.bias;
  }
};

/// Activations recorded by a forward pass, consumed by backward().
template <typename T>
struct ForwardTrace {
  std::vector<Matrix<T>> inputs;       // input to each layer
  std::vector<Matrix<T>> pre_activation;
  std::vector<Matrix<T>> deltas;       // backward scratch, one per layer
};

/// Fully connected network: rectifier on hidden layers, identity output.
/// Batches are column-major: one sample per column.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialised parameters. Throws ShapeError for fewer than two dims or a zero dim.
  explicit Mlp(std::vector<std::size_t> dims);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  std::size_t parameter_count() const;

  std::vector<DenseLayer<T>>& layers() { return layers_; }
  const std::vector<DenseLayer<T>>& layers() const { return layers_; }

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero. Layers are
  /// filled in order, weights row by row; values are drawn in double and rounded to T.
  void init_glorot_uniform(Rng& rng);

  Matrix<T> forward(const Matrix<T>& inputs) const;
  /// Records the pass in `trace`; the returned output lives in the trace.
  const Matrix<T>& forward(const Matrix<T>& inputs, ForwardTrace<T>& trace) const;

  /// Backpropagates d(loss)/d(output) through the traced pass. Parameter gradients are
  /// added into `grads` (same shape as *this). When `d_inputs` is non-null it receives
  /// d(loss)/d(input) for the first `input_rows` input rows only.
  void backward(ForwardTrace<T>& trace, const Matrix<T>& d_output, Mlp& grads, Matrix<T>* d_inputs = nullptr,
                std::size_t input_rows = 0) const;

  bool all_finite() const;
  void set_zero();

  template <typename U>
  Mlp<U> cast() const {
    Mlp<U> out(dims_);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      out.layers()[l].weights = layers_[l].weights.template cast<U>();
      out.layers()[l].bias = layers_[l].bias.template cast<U>();
    }
    return out;
  }

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  void check_input(const Matrix<T>& inputs) const;

  std::vector<std::size_t> dims_;
  std::vector<DenseLayer<T>> layers_;
};

/// The two chained networks: the encoder maps a motor state to its representation;
/// the predictor maps (h_t, h_next, s_t) to a prediction of s_next.
template <typename T>
struct SensorimotorNet {
  Mlp<T> encoder;
  Mlp<T> predictor;

  std::size_t motor_dim() const { return encoder.input_dim(); }
  std::size_t representation_dim() const { return encoder.output_dim(); }
  std::size_t sensory_dim() const { return predictor.output_dim(); }
  std::size_t parameter_count() const { return encoder.parameter_count() + predictor.parameter_count(); }

  /// Throws ShapeError unless predictor input = 2 * representation + sensory dims.
  void validate() const;
  void set_zero();

  template <typename U>
  SensorimotorNet<U> cast() const {
    return {encoder.template cast<U>(), predictor.template cast<U>()};
  }

  friend bool operator==(const SensorimotorNet&, const SensorimotorNet&) = default;
};

/// Every parameter block (weights, then bias, per layer; encoder first) as a flat span.
template <typename T>
std::vector<std::span<T>> parameter_spans(SensorimotorNet<T>& net);

inline const std::vector<std::size_t> kEncoderDims{4, 150, 100, 50, 3};
inline const std::vector<std::size_t> kPredictorDims{774, 200, 150, 100, 768};

/// Networks with the given layer sizes, initialised from `seed` (encoder drawn first).
template <typename T>
SensorimotorNet<T> build_networks(std::uint64_t seed, const std::vector<std::size_t>& encoder_dims = kEncoderDims,
                                  const std::vector<std::size_t>& predictor_dims = kPredictorDims);

/// Representation of a single motor state. Requires a 4 -> 3 encoder.
template <typename T>
MotorRepresentation encode(const Mlp<T>& encoder, const MotorState& m);

/// Sensory prediction from (h_t, h_next, s_t), concatenated in that order. Not clamped.
template <typename T>
std::vector<double> predict(const Mlp<T>& predictor, const MotorRepresentation& h_t, const MotorRepresentation& h_next,
                            std::span<const double> s_t);

/// One batch; column j of each matrix belongs to sample j.
template <typename T>
struct Batch {
  Matrix<T> motor_t;
  Matrix<T> sensory_t;
  Matrix<T> motor_next;
  Matrix<T> sensory_next;

  std::size_t size() const { return static_cast<std::size_t>(motor_t.cols()); }
};

Batch<float> make_batch(const Dataset& data, std::span<const std::size_t> indices);

/// Mean squared error over batch and output components.
template <typename T>
T batch_loss(const SensorimotorNet<T>& net, const Batch<T>& batch);

/// Exact gradient of batch_loss with respect to every parameter, written to `grads`
/// (resized as needed). The encoder receives contributions from both h_t and h_next.
/// Returns the loss. Throws TrainingFault on non-finite loss.
template <typename T>
T loss_and_gradient(const SensorimotorNet<T>& net, const Batch<T>& batch, SensorimotorNet<T>& grads);

template <typename T>
struct AdamState {
  SensorimotorNet<T> first_moment;
  SensorimotorNet<T> second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(const SensorimotorNet<T>& shape, double lr = 1e-3);
};

template <typename T>
void adam_update(SensorimotorNet<T>& params, SensorimotorNet<T>& grads, AdamState<T>& state);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct TrainResult {
  SensorimotorNet<float> net;
  std::vector<double> loss_curve;  // mean training loss per epoch
};

/// Called after each epoch with (epoch index, mean loss).
using EpochCallback = std::function<void(std::size_t, double)>;

/// Joint Adam training of both networks on float32. Initialisation uses
/// config.seed; the per-epoch shuffle uses a stream derived from it. The last
/// partial batch of each epoch is used.
TrainResult train(const Dataset& data, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Loss of the best constant predictor of s_next: mean over sensory components of the
/// per-component variance across the dataset.
double constant_predictor_loss(const Dataset& data);

/// "SMNN" checkpoint (little-endian): u32 version=1, u8 network count=2, then per
/// network (encoder first): u8 k = number of layer sizes, u32 dims x k, then per
/// dense layer the weights row-major as f32 followed by the biases as f32.
void write_checkpoint(std::ostream& out, const SensorimotorNet<float>& net);
SensorimotorNet<float> read_checkpoint(std::istream& in);

}  // namespace smrep
