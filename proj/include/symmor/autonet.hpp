#pragma once

// Weakly symplectic deep convolutional autoencoder.
//
// Activations are stored as blocks: one row per (sample, lane), one column per
// tensor entry in channel-major order (entry c * length + l). Lane 0 of each
// sample carries the primal value, lanes 1..T carry forward-mode tangents.
// Every layer maps a block to a block, so a single pass yields outputs and
// Jacobian-vector products, and the recorded reverse pass differentiates any
// scalar function of both with respect to the parameters.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "symmor/numerics.hpp"

namespace symmor {

enum class LayerKind { split, flat, scale, scale_inverse, conv1d, convT1d, full, elu };
std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct LayerSpec {
  LayerKind kind = LayerKind::elu;
  Index channels = 0;        // split: channel count; conv/convT: output channels
  Index kernel = 0;          // conv/convT
  Index stride = 1;          // conv/convT
  Index padding = 0;         // conv/convT
  Index output_padding = 0;  // convT
  Index features = 0;        // full: output neurons

  static LayerSpec split(Index channels);
  static LayerSpec flat();
  static LayerSpec scale();
  static LayerSpec scale_inverse();
  static LayerSpec conv(Index out_channels, Index kernel, Index stride, Index padding);
  static LayerSpec conv_transpose(Index out_channels, Index kernel, Index stride, Index padding,
                                  Index output_padding);
  static LayerSpec full(Index features);
  static LayerSpec elu();

  bool operator==(const LayerSpec&) const = default;
};

struct Shape {
  Index channels = 1;
  Index length = 0;
  Index size() const { return channels * length; }
  bool operator==(const Shape&) const = default;
};

// A spec resolved against its input shape, with its slice of the parameter
// vector. Weights come first, then biases.
struct Layer {
  LayerSpec spec;
  Shape in;
  Shape out;
  Index offset = 0;
  Index weight_count = 0;
  Index bias_count = 0;
  Index param_count() const { return weight_count + bias_count; }
};

// Output length of conv1d: floor((l_in + 2 pad - kernel) / stride) + 1.
Index conv_output_length(Index l_in, Index kernel, Index stride, Index padding);
// Output length of convT1d: (l_in - 1) stride - 2 pad + kernel + output_padding.
Index conv_transpose_output_length(Index l_in, Index kernel, Index stride, Index padding,
                                   Index output_padding);

// Throws DimensionError when the spec cannot consume the input shape.
Layer resolve_layer(const LayerSpec& spec, Shape in);

// Per-channel affine map into [0, 1]: y = (x - shift) * scale.
struct Scaler {
  Vector shift;
  Vector scale;
  Index channels() const { return shift.size(); }
  static Scaler identity(Index channels);
};

// Fits per-channel min/max over data laid out as [channel 0; channel 1; ...]
// in each column. Constant channels get scale 1.
Scaler fit_scaler(const Matrix& data, Index channels = 2);

struct ParamSlice {
  std::string name;
  Index offset = 0;
  Index size = 0;
};

struct NetworkParams {
  Vector theta;
  std::vector<ParamSlice> layout;
  Index size() const { return theta.size(); }
};

enum class InitScheme { kaiming_normal, xavier_uniform };
std::string to_string(InitScheme scheme);
InitScheme init_scheme_from_string(const std::string& name);

struct Autoencoder {
  std::vector<Layer> encoder;
  std::vector<Layer> decoder;
  NetworkParams params;
  Scaler scaler;
  Index full_dim = 0;
  Index reduced_dim = 0;

  std::vector<LayerSpec> encoder_specs() const;
  std::vector<LayerSpec> decoder_specs() const;
};

// Convolutional encoder with a mirrored decoder. channels and lengths list
// the conv tensor sizes starting with the 2 x N input; strides has one entry
// per conv layer; hidden_full lists fully connected widths between the
// flattened conv output and the reduced dimension. Kernels are
// kernel_factor * stride with the smallest consistent padding.
struct ArchitectureSpec {
  std::vector<Index> channels;
  std::vector<Index> lengths;
  std::vector<Index> strides;
  std::vector<Index> hidden_full;
  Index kernel_factor = 2;

  static ArchitectureSpec desk();
  static ArchitectureSpec full_scale();
};

std::pair<std::vector<LayerSpec>, std::vector<LayerSpec>> mirrored_specs(const ArchitectureSpec& arch,
                                                                       Index full_dim,
                                                                       Index reduced_dim);

Autoencoder build_autoencoder(const std::vector<LayerSpec>& encoder, const std::vector<LayerSpec>& decoder,
                              Index full_dim, Index reduced_dim, InitScheme init, std::uint64_t seed);

double elu(double x);
double elu_derivative(double x);
double elu_second_derivative(double x);

Vector encode(const Autoencoder& ae, const Vector& x);
Vector decode(const Autoencoder& ae, const Vector& x_r);
// Columns are samples.
Matrix encode_batch(const Autoencoder& ae, const Matrix& x);
Matrix decode_batch(const Autoencoder& ae, const Matrix& x_r);

// Jacobian of the decoder, one forward pass with 2n tangents.
Matrix decoder_jacobian(const Autoencoder& ae, const Vector& x_r);
Vector decoder_jvp(const Autoencoder& ae, const Vector& x_r, const Vector& v);
Vector decoder_vjp(const Autoencoder& ae, const Vector& x_r, const Vector& w);

// Normalization of the data loss: the half-dimension N or the full 2N.
enum class DataNorm { half_dim, full_dim };

struct LossOptions {
  DataNorm norm = DataNorm::half_dim;
};

struct LossValues {
  double data = 0.0;
  double sympl = 0.0;
  double total = 0.0;
};

// Batches hold one sample per column.
double loss_data(const Autoencoder& ae, const Matrix& batch, const LossOptions& opts = {});
double loss_sympl(const Autoencoder& ae, const Matrix& batch);
double loss_total(const Autoencoder& ae, const Matrix& batch, double alpha, const LossOptions& opts = {});
LossValues evaluate_losses(const Autoencoder& ae, const Matrix& batch, double alpha,
                           const LossOptions& opts = {});

struct LossGradient {
  LossValues loss;
  Vector gradient;
};

// Gradient of alpha * L_data + (1 - alpha) * L_sympl with respect to theta.
LossGradient grad_total(const Autoencoder& ae, const Matrix& batch, double alpha,
                        const LossOptions& opts = {});

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;
  static AdamState zeros(Index n) { return {Vector::Zero(n), Vector::Zero(n), 0}; }
};

void adam_step(Vector& theta, const Vector& grad, AdamState& state, double lr,
               const AdamOptions& opts = {});

struct TrainConfig {
  double alpha = 0.9;
  double learning_rate = 4.43e-4;
  Index batch_size = 15;
  int epochs = 200;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
  InitScheme init = InitScheme::kaiming_normal;
  LossOptions loss;

  void validate() const;
};

// Epoch 0 holds the losses of the initial parameters on the full splits.
// Later train entries average the mini-batch losses seen during the epoch
// (weighted by batch size); validation entries are full evaluations.
struct EpochRecord {
  int epoch = 0;
  LossValues train;
  LossValues val;
};

struct TrainResult {
  Autoencoder ae;  // parameters of the best validation epoch
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  std::vector<Index> train_indices;
  std::vector<Index> val_indices;
};

// Splits the columns of data per snapshot, fits the scaler on the training
// part, then runs mini-batch ADAM. Throws NumericalError on a non-finite loss.
TrainResult train(const Matrix& data, Autoencoder initial, const TrainConfig& cfg);

void save_checkpoint(const Autoencoder& ae, const std::string& path);
Autoencoder load_checkpoint(const std::string& path);
// FNV-1a 64-bit over the file bytes, as 16 hex digits.
std::string checkpoint_digest(const std::string& path);

namespace detail {

// Recorded forward pass: acts[0] is the input block, acts[i + 1] the output
// of layer i.
struct Tape {
  std::vector<Matrix> acts;
  Index lanes = 1;
};

void forward(const std::vector<Layer>& layers, const Vector& theta, const Scaler& scaler, Matrix input,
             Index lanes, Tape& tape);
// Returns the adjoint of the input block; accumulates parameter adjoints
// into grad when it is non-null.
Matrix backward(const std::vector<Layer>& layers, const Vector& theta, const Scaler& scaler,
                const Tape& tape, Matrix out_bar, Vector* grad);

void layer_forward(const Layer& layer, const double* theta, const Scaler& scaler, const Matrix& in,
                   Index lanes, Matrix& out);
void layer_backward(const Layer& layer, const double* theta, const Scaler& scaler, const Matrix& in,
                    Index lanes, const Matrix& out_bar, Matrix& in_bar, double* grad);

}  // namespace detail

}  // namespace symmor
