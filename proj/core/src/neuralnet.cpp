#include "smrep/neuralnet.hpp"

#include <algorithm>
#include <xmmintrin.h>
#include <pmmintrin.h>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "smrep/binary_io.hpp"
#include "smrep/error.hpp"

namespace smrep {

namespace {

constexpr std::uint32_t kCheckpointFormatVersion = 1;

std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace

template <typename T>
Mlp<T>::Mlp(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw ShapeError("an MLP needs at least an input and an output size");
  for (auto d : dims_)
    if (d == 0) throw ShapeError("MLP layer sizes must be positive");
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(dims_[l]);
    const auto out = static_cast<Eigen::Index>(dims_[l + 1]);
    layers_.push_back({Matrix<T>::Zero(out, in), Vector<T>::Zero(out)});
  }
}

template <typename T>
std::size_t Mlp<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  return n;
}

template <typename T>
void Mlp<T>::init_glorot_uniform(Rng& rng) {
  for (auto& layer : layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        layer.weights(r, c) = static_cast<T>(rng.uniform(-limit, limit));
    layer.bias.setZero();
  }
}

template <typename T>
void Mlp<T>::check_input(const Matrix<T>& inputs) const {
  if (layers_.empty()) throw ShapeError("MLP has no layers");
  if (static_cast<std::size_t>(inputs.rows()) != input_dim())
    throw ShapeError("MLP expects " + std::to_string(input_dim()) + " input rows, got " +
                     shape_string(inputs.rows(), inputs.cols()));
}

template <typename T>
Matrix<T> Mlp<T>::forward(const Matrix<T>& inputs) const {
  check_input(inputs);
  Matrix<T> a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix<T> z = layers_[l].weights * a;
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) z = z.cwiseMax(T(0));
    a = std::move(z);
  }
  return a;
}

template <typename T>
const Matrix<T>& Mlp<T>::forward(const Matrix<T>& inputs, ForwardTrace<T>& trace) const {
  check_input(inputs);
  trace.inputs.resize(layers_.size());
  trace.pre_activation.resize(layers_.size());
  trace.inputs[0] = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix<T>& z = trace.pre_activation[l];
    z.noalias() = layers_[l].weights * trace.inputs[l];
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) trace.inputs[l + 1] = z.cwiseMax(T(0));
  }
  return trace.pre_activation.back();
}

template <typename T>
void Mlp<T>::backward(ForwardTrace<T>& trace, const Matrix<T>& d_output, Mlp& grads, Matrix<T>* d_inputs,
                      std::size_t input_rows) const {
  if (trace.pre_activation.size() != layers_.size()) throw ShapeError("forward trace does not match the network");
  if (grads.dims_ != dims_) throw ShapeError("gradient buffer shape does not match the network");
  if (d_output.rows() != trace.pre_activation.back().rows() || d_output.cols() != trace.pre_activation.back().cols())
    throw ShapeError("output gradient is " + shape_string(d_output.rows(), d_output.cols()) + ", expected " +
                     shape_string(trace.pre_activation.back().rows(), trace.pre_activation.back().cols()));

  auto& deltas = trace.deltas;
  deltas.resize(layers_.size());
  deltas.back() = d_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Matrix<T>& delta = deltas[l];
    grads.layers_[l].weights.noalias() += delta * trace.inputs[l].transpose();
    grads.layers_[l].bias += delta.rowwise().sum();
    if (l > 0) {
      Matrix<T>& up = deltas[l - 1];
      up.noalias() = layers_[l].weights.transpose() * delta;
      up.array() *= (trace.pre_activation[l - 1].array() > T(0)).template cast<T>();
    } else if (d_inputs != nullptr) {
      const auto rows = static_cast<Eigen::Index>(input_rows);
      if (rows > layers_[0].weights.cols()) throw ShapeError("requested more input-gradient rows than inputs");
      d_inputs->noalias() = layers_[0].weights.leftCols(rows).transpose() * delta;
    }
  }
}

template <typename T>
bool Mlp<T>::all_finite() const {
  for (const auto& layer : layers_)
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
  return true;
}

template <typename T>
void Mlp<T>::set_zero() {
  for (auto& layer : layers_) {
    layer.weights.setZero();
    layer.bias.setZero();
  }
}

template <typename T>
void SensorimotorNet<T>::validate() const {
  if (predictor.input_dim() != 2 * encoder.output_dim() + predictor.output_dim())
    throw ShapeError("predictor input must be 2 x representation + sensory = " +
                     std::to_string(2 * encoder.output_dim() + predictor.output_dim()) + ", got " +
                     std::to_string(predictor.input_dim()));
}

template <typename T>
void SensorimotorNet<T>::set_zero() {
  encoder.set_zero();
  predictor.set_zero();
}

template <typename T>
std::vector<std::span<T>> parameter_spans(SensorimotorNet<T>& net) {
  std::vector<std::span<T>> spans;
  for (auto* mlp : {&net.encoder, &net.predictor}) {
    for (auto& layer : mlp->layers()) {
      spans.emplace_back(layer.weights.data(), static_cast<std::size_t>(layer.weights.size()));
      spans.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
    }
  }
  return spans;
}

template <typename T>
SensorimotorNet<T> build_networks(std::uint64_t seed, const std::vector<std::size_t>& encoder_dims,
                                  const std::vector<std::size_t>& predictor_dims) {
  SensorimotorNet<T> net{Mlp<T>(encoder_dims), Mlp<T>(predictor_dims)};
  net.validate();
  Rng rng(seed);
  net.encoder.init_glorot_uniform(rng);
  net.predictor.init_glorot_uniform(rng);
  return net;
}

template <typename T>
MotorRepresentation encode(const Mlp<T>& encoder, const MotorState& m) {
  if (encoder.input_dim() != kMotorDim || encoder.output_dim() != kRepresentationDim)
    throw ShapeError("encoder must map 4 motor values to a 3-vector");
  Matrix<T> x(static_cast<Eigen::Index>(kMotorDim), 1);
  for (std::size_t i = 0; i < kMotorDim; ++i) x(static_cast<Eigen::Index>(i), 0) = static_cast<T>(m[i]);
  const Matrix<T> h = encoder.forward(x);
  return {static_cast<double>(h(0, 0)), static_cast<double>(h(1, 0)), static_cast<double>(h(2, 0))};
}

template <typename T>
std::vector<double> predict(const Mlp<T>& predictor, const MotorRepresentation& h_t, const MotorRepresentation& h_next,
                            std::span<const double> s_t) {
  const std::size_t in = 2 * kRepresentationDim + s_t.size();
  if (predictor.input_dim() != in)
    throw ShapeError("predictor expects " + std::to_string(predictor.input_dim()) + " inputs, got " +
                     std::to_string(in));
  if (predictor.output_dim() != s_t.size()) throw ShapeError("predictor output size must equal the sensory size");
  Matrix<T> x(static_cast<Eigen::Index>(in), 1);
  Eigen::Index r = 0;
  for (double v : h_t) x(r++, 0) = static_cast<T>(v);
  for (double v : h_next) x(r++, 0) = static_cast<T>(v);
  for (double v : s_t) x(r++, 0) = static_cast<T>(v);
  const Matrix<T> y = predictor.forward(x);
  std::vector<double> out(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(y(i, 0));
  return out;
}

namespace {

template <typename T>
void check_batch(const SensorimotorNet<T>& net, const Batch<T>& batch) {
  net.validate();
  const auto b = batch.motor_t.cols();
  if (b == 0) throw ShapeError("batch is empty");
  const auto md = static_cast<Eigen::Index>(net.motor_dim());
  const auto sd = static_cast<Eigen::Index>(net.sensory_dim());
  if (batch.motor_t.rows() != md || batch.motor_next.rows() != md || batch.motor_next.cols() != b)
    throw ShapeError("motor batch must be " + shape_string(md, b));
  if (batch.sensory_t.rows() != sd || batch.sensory_next.rows() != sd || batch.sensory_t.cols() != b ||
      batch.sensory_next.cols() != b)
    throw ShapeError("sensory batch must be " + shape_string(sd, b));
}

/// Encoder input [m_t | m_next] side by side, so one pass serves both.
template <typename T>
Matrix<T> stacked_motors(const Batch<T>& batch) {
  Matrix<T> m(batch.motor_t.rows(), 2 * batch.motor_t.cols());
  m << batch.motor_t, batch.motor_next;
  return m;
}

template <typename T>
Matrix<T> predictor_input(const Matrix<T>& h, const Batch<T>& batch) {
  const auto b = batch.motor_t.cols();
  const auto hd = h.rows();
  Matrix<T> x(2 * hd + batch.sensory_t.rows(), b);
  x.topRows(hd) = h.leftCols(b);
  x.middleRows(hd, hd) = h.rightCols(b);
  x.bottomRows(batch.sensory_t.rows()) = batch.sensory_t;
  return x;
}

}  // namespace

template <typename T>
T batch_loss(const SensorimotorNet<T>& net, const Batch<T>& batch) {
  check_batch(net, batch);
  const Matrix<T> h = net.encoder.forward(stacked_motors(batch));
  const Matrix<T> y = net.predictor.forward(predictor_input(h, batch));
  return (y - batch.sensory_next).squaredNorm() / static_cast<T>(y.size());
}

namespace {

/// Buffers reused across training steps.
template <typename T>
struct GradientWorkspace {
  ForwardTrace<T> encoder;
  ForwardTrace<T> predictor;
  Matrix<T> motors;
  Matrix<T> inputs;
  Matrix<T> residual;
  Matrix<T> d_x;
  Matrix<T> d_h;
};

template <typename T>
T loss_and_gradient(const SensorimotorNet<T>& net, const Batch<T>& batch, SensorimotorNet<T>& grads,
                    GradientWorkspace<T>& ws) {
  check_batch(net, batch);
  if (grads.encoder.dims() != net.encoder.dims() || grads.predictor.dims() != net.predictor.dims())
    grads = SensorimotorNet<T>{Mlp<T>(net.encoder.dims()), Mlp<T>(net.predictor.dims())};
  else
    grads.set_zero();

  const auto b = batch.motor_t.cols();
  ws.motors.resize(batch.motor_t.rows(), 2 * b);
  ws.motors << batch.motor_t, batch.motor_next;
  net.encoder.forward(ws.motors, ws.encoder);
  const Matrix<T>& h = ws.encoder.pre_activation.back();
  const auto hd = h.rows();
  ws.inputs.resize(2 * hd + batch.sensory_t.rows(), b);
  ws.inputs << h.leftCols(b), h.rightCols(b), batch.sensory_t;
  net.predictor.forward(ws.inputs, ws.predictor);

  ws.residual = ws.predictor.pre_activation.back() - batch.sensory_next;
  const T loss = ws.residual.squaredNorm() / static_cast<T>(ws.residual.size());
  if (!std::isfinite(static_cast<double>(loss))) throw TrainingFault("non-finite loss");

  ws.residual *= T(2) / static_cast<T>(ws.residual.size());
  net.predictor.backward(ws.predictor, ws.residual, grads.predictor, &ws.d_x, static_cast<std::size_t>(2 * hd));

  ws.d_h.resize(hd, 2 * b);
  ws.d_h << ws.d_x.topRows(hd), ws.d_x.bottomRows(hd);
  net.encoder.backward(ws.encoder, ws.d_h, grads.encoder);
  return loss;
}

/// Flushes float denormals to zero while alive.
class FlushDenormals {
 public:
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | _MM_FLUSH_ZERO_ON | _MM_DENORMALS_ZERO_ON); }
  ~FlushDenormals() { _mm_setcsr(saved_); }
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;

 private:
  unsigned saved_;
};

void fill_batch(const Dataset& data, std::span<const std::size_t> indices, Batch<float>& batch) {
  const auto b = static_cast<Eigen::Index>(indices.size());
  batch.motor_t.resize(static_cast<Eigen::Index>(kMotorDim), b);
  batch.motor_next.resize(static_cast<Eigen::Index>(kMotorDim), b);
  batch.sensory_t.resize(static_cast<Eigen::Index>(kSensoryDim), b);
  batch.sensory_next.resize(static_cast<Eigen::Index>(kSensoryDim), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto t = data.transition(indices[static_cast<std::size_t>(j)]);
    std::copy(t.motor_t.begin(), t.motor_t.end(), batch.motor_t.col(j).data());
    std::copy(t.sensory_t.begin(), t.sensory_t.end(), batch.sensory_t.col(j).data());
    std::copy(t.motor_next.begin(), t.motor_next.end(), batch.motor_next.col(j).data());
    std::copy(t.sensory_next.begin(), t.sensory_next.end(), batch.sensory_next.col(j).data());
  }
}

}  // namespace

Batch<float> make_batch(const Dataset& data, std::span<const std::size_t> indices) {
  Batch<float> batch;
  fill_batch(data, indices, batch);
  return batch;
}

template <typename T>
T loss_and_gradient(const SensorimotorNet<T>& net, const Batch<T>& batch, SensorimotorNet<T>& grads) {
  GradientWorkspace<T> ws;
  return loss_and_gradient(net, batch, grads, ws);
}

template <typename T>
AdamState<T>::AdamState(const SensorimotorNet<T>& shape, double lr)
    : first_moment{Mlp<T>(shape.encoder.dims()), Mlp<T>(shape.predictor.dims())},
      second_moment{Mlp<T>(shape.encoder.dims()), Mlp<T>(shape.predictor.dims())},
      learning_rate(lr) {}

template <typename T>
void adam_update(SensorimotorNet<T>& params, SensorimotorNet<T>& grads, AdamState<T>& state) {
  auto p = parameter_spans(params);
  auto g = parameter_spans(grads);
  auto m = parameter_spans(state.first_moment);
  auto v = parameter_spans(state.second_moment);
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size())
    throw ShapeError("optimizer state does not match the parameters");

  ++state.step;
  const auto b1 = static_cast<T>(state.beta1);
  const auto b2 = static_cast<T>(state.beta2);
  const auto step = static_cast<double>(state.step);
  const auto lr_t = static_cast<T>(state.learning_rate * std::sqrt(1.0 - std::pow(state.beta2, step)) /
                                   (1.0 - std::pow(state.beta1, step)));
  const auto eps_t = static_cast<T>(state.epsilon * std::sqrt(1.0 - std::pow(state.beta2, step)));

  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].size() != g[k].size()) throw ShapeError("gradient block size mismatch");
    using Map = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
    const auto n = static_cast<Eigen::Index>(p[k].size());
    Map pk(p[k].data(), n), gk(g[k].data(), n), mk(m[k].data(), n), vk(v[k].data(), n);
    mk = b1 * mk + (T(1) - b1) * gk;
    vk = b2 * vk + (T(1) - b2) * gk.square();
    pk -= lr_t * mk / (vk.sqrt() + eps_t);
  }
}

TrainResult train(const Dataset& data, const TrainConfig& config, const EpochCallback& on_epoch) {
  if (data.empty()) throw DomainError("training dataset is empty");
  if (config.batch_size == 0) throw DomainError("batch size must be positive");
  if (!(config.learning_rate > 0.0)) throw DomainError("learning rate must be positive");

  const FlushDenormals flush;
  TrainResult result{build_networks<float>(config.seed), {}};
  auto& net = result.net;
  AdamState<float> adam(net, config.learning_rate);
  SensorimotorNet<float> grads;
  GradientWorkspace<float> workspace;
  Batch<float> batch;

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(config.seed, 1));

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      fill_batch(data, std::span<const std::size_t>(order).subspan(start, stop - start), batch);
      float loss = 0.0f;
      try {
        loss = loss_and_gradient(net, batch, grads, workspace);
      } catch (const TrainingFault& fault) {
        throw TrainingFault(std::string(fault.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      adam_update(net, grads, adam);
      loss_sum += static_cast<double>(loss) * static_cast<double>(stop - start);
    }
    if (!net.encoder.all_finite() || !net.predictor.all_finite())
      throw TrainingFault("non-finite parameters after epoch " + std::to_string(epoch));
    const double mean = loss_sum / static_cast<double>(n);
    result.loss_curve.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

double constant_predictor_loss(const Dataset& data) {
  if (data.empty()) throw DomainError("dataset is empty");
  std::vector<double> mean(kSensoryDim, 0.0);
  std::vector<double> sq(kSensoryDim, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto s = data.transition(i).sensory_next;
    for (std::size_t c = 0; c < kSensoryDim; ++c) {
      const double v = s[c];
      mean[c] += v;
      sq[c] += v * v;
    }
  }
  const auto n = static_cast<double>(data.size());
  double total = 0.0;
  for (std::size_t c = 0; c < kSensoryDim; ++c) {
    const double m = mean[c] / n;
    total += std::max(0.0, sq[c] / n - m * m);
  }
  return total / static_cast<double>(kSensoryDim);
}

void write_checkpoint(std::ostream& out, const SensorimotorNet<float>& net) {
  net.validate();
  io::BinaryWriter w(out);
  w.magic("SMNN");
  w.u32(kCheckpointFormatVersion);
  w.u8(2);
  for (const auto* mlp : {&net.encoder, &net.predictor}) {
    w.u8(static_cast<std::uint8_t>(mlp->dims().size()));
    for (auto d : mlp->dims()) w.u32(static_cast<std::uint32_t>(d));
    for (const auto& layer : mlp->layers()) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.f32(layer.weights(r, c));
      w.f32_array(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
    }
  }
}

SensorimotorNet<float> read_checkpoint(std::istream& in) {
  io::BinaryReader r(in, "checkpoint file");
  r.expect_magic("SMNN");
  r.expect_u32(kCheckpointFormatVersion, "version");
  const auto count_at = r.offset();
  if (r.u8() != 2) r.fail(count_at, "network count must be 2");

  std::array<Mlp<float>, 2> nets;
  for (auto& mlp : nets) {
    const auto k_at = r.offset();
    const std::uint8_t k = r.u8();
    if (k < 2) r.fail(k_at, "a network needs at least two layer sizes");
    std::vector<std::size_t> dims;
    for (std::uint8_t i = 0; i < k; ++i) {
      const auto at = r.offset();
      const std::uint32_t d = r.u32();
      if (d == 0) r.fail(at, "zero layer size");
      dims.push_back(d);
    }
    mlp = Mlp<float>(dims);
    for (auto& layer : mlp.layers()) {
      for (Eigen::Index row = 0; row < layer.weights.rows(); ++row)
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(row, c) = r.f32();
      r.f32_array(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
    }
  }
  r.expect_end();
  SensorimotorNet<float> net{std::move(nets[0]), std::move(nets[1])};
  try {
    net.validate();
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint file: ") + e.what());
  }
  return net;
}

#define SMREP_INSTANTIATE(T)                                                                                    \
  template class Mlp<T>;                                                                                        \
  template struct SensorimotorNet<T>;                                                                           \
  template struct AdamState<T>;                                                                                 \
  template std::vector<std::span<T>> parameter_spans(SensorimotorNet<T>&);                                      \
  template SensorimotorNet<T> build_networks<T>(std::uint64_t, const std::vector<std::size_t>&,                 \
                                                const std::vector<std::size_t>&);                               \
  template MotorRepresentation encode(const Mlp<T>&, const MotorState&);                                        \
  template std::vector<double> predict(const Mlp<T>&, const MotorRepresentation&, const MotorRepresentation&,   \
                                       std::span<const double>);                                                \
  template T batch_loss(const SensorimotorNet<T>&, const Batch<T>&);                                            \
  template T loss_and_gradient(const SensorimotorNet<T>&, const Batch<T>&, SensorimotorNet<T>&);                \
  template void adam_update(SensorimotorNet<T>&, SensorimotorNet<T>&, AdamState<T>&);

SMREP_INSTANTIATE(float)
SMREP_INSTANTIATE(double)

#undef SMREP_INSTANTIATE

}  // namespace smrep
