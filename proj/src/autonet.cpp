#include "symmor/autonet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "symmor/symplectic.hpp"

namespace symmor {

std::string to_string(InitScheme scheme) {
  return scheme == InitScheme::kaiming_normal ? "kaiming_normal" : "xavier_uniform";
}

InitScheme init_scheme_from_string(const std::string& name) {
  if (name == "kaiming_normal") return InitScheme::kaiming_normal;
  if (name == "xavier_uniform") return InitScheme::xavier_uniform;
  throw ParseError("unknown init scheme '" + name + "'");
}

Scaler fit_scaler(const Matrix& data, Index channels) {
  if (channels < 1 || data.rows() % channels != 0) throw DimensionError("fit_scaler: rows not divisible by channels");
  if (data.cols() < 1) throw DimensionError("fit_scaler: empty data");
  const Index len = data.rows() / channels;
  Scaler s{Vector(channels), Vector(channels)};
  for (Index c = 0; c < channels; ++c) {
    const auto block = data.middleRows(c * len, len);
    const double lo = block.minCoeff();
    const double hi = block.maxCoeff();
    s.shift(c) = lo;
    s.scale(c) = hi > lo ? 1.0 / (hi - lo) : 1.0;
  }
  return s;
}

std::vector<LayerSpec> Autoencoder::encoder_specs() const {
  std::vector<LayerSpec> out;
  for (const Layer& l : encoder) out.push_back(l.spec);
  return out;
}

std::vector<LayerSpec> Autoencoder::decoder_specs() const {
  std::vector<LayerSpec> out;
  for (const Layer& l : decoder) out.push_back(l.spec);
  return out;
}

ArchitectureSpec ArchitectureSpec::desk() {
  ArchitectureSpec a;
  a.channels = {2, 4, 8};
  a.lengths = {256, 64, 16};
  a.strides = {4, 4};
  a.hidden_full = {32};
  return a;
}

ArchitectureSpec ArchitectureSpec::full_scale() {
  ArchitectureSpec a;
  a.channels = {2, 2, 4, 8, 16, 32, 64};
  a.lengths = {2048, 512, 256, 128, 64, 16, 2};
  a.strides = {4, 2, 2, 2, 4, 8};
  return a;
}

std::pair<std::vector<LayerSpec>, std::vector<LayerSpec>> mirrored_specs(const ArchitectureSpec& arch,
                                                                       Index full_dim, Index reduced_dim) {
  const std::size_t nconv = arch.strides.size();
  if (arch.channels.size() != nconv + 1 || arch.lengths.size() != nconv + 1) {
    throw DimensionError("mirrored_specs: channels and lengths need one entry more than strides");
  }
  if (full_dim % 2 != 0 || arch.channels[0] != 2 || arch.lengths[0] * 2 != full_dim) {
    throw DimensionError("mirrored_specs: the input tensor must be 2 x N with 2N = full_dim");
  }
  if (reduced_dim < 1) throw DimensionError("mirrored_specs: reduced_dim must be >= 1");

  std::vector<Index> kernels(nconv), pads(nconv), out_pads(nconv);
  for (std::size_t i = 0; i < nconv; ++i) {
    const Index s = arch.strides[i];
    const Index k = arch.kernel_factor * s;
    Index pad = -1;
    for (Index p = 0; p <= k; ++p) {
      if (conv_output_length(arch.lengths[i], k, s, p) == arch.lengths[i + 1]) {
        pad = p;
        break;
      }
    }
    if (pad < 0) {
      throw DimensionError("mirrored_specs: no padding maps length " + std::to_string(arch.lengths[i]) + " to " +
                           std::to_string(arch.lengths[i + 1]) + " with stride " + std::to_string(s));
    }
    const Index op = arch.lengths[i] - conv_transpose_output_length(arch.lengths[i + 1], k, s, pad, 0);
    if (op < 0 || op >= s) throw DimensionError("mirrored_specs: transposed convolution cannot mirror layer");
    kernels[i] = k;
    pads[i] = pad;
    out_pads[i] = op;
  }

  std::vector<LayerSpec> enc{LayerSpec::split(2), LayerSpec::scale()};
  for (std::size_t i = 0; i < nconv; ++i) {
    enc.push_back(LayerSpec::conv(arch.channels[i + 1], kernels[i], arch.strides[i], pads[i]));
    enc.push_back(LayerSpec::elu());
  }
  enc.push_back(LayerSpec::flat());
  std::vector<Index> widths = arch.hidden_full;
  widths.push_back(reduced_dim);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    enc.push_back(LayerSpec::full(widths[i]));
    if (i + 1 < widths.size()) enc.push_back(LayerSpec::elu());
  }

  const Index flat_size = arch.channels.back() * arch.lengths.back();
  std::vector<Index> dwidths(arch.hidden_full.rbegin(), arch.hidden_full.rend());
  dwidths.push_back(flat_size);
  std::vector<LayerSpec> dec;
  for (std::size_t i = 0; i < dwidths.size(); ++i) {
    dec.push_back(LayerSpec::full(dwidths[i]));
    if (i + 1 < dwidths.size() || nconv > 0) dec.push_back(LayerSpec::elu());
  }
  dec.push_back(LayerSpec::split(arch.channels.back()));
  for (std::size_t j = nconv; j-- > 0;) {
    dec.push_back(LayerSpec::conv_transpose(arch.channels[j], kernels[j], arch.strides[j], pads[j], out_pads[j]));
    if (j > 0) dec.push_back(LayerSpec::elu());
  }
  dec.push_back(LayerSpec::scale_inverse());
  dec.push_back(LayerSpec::flat());
  return {enc, dec};
}

namespace {

std::vector<Layer> resolve_chain(const std::vector<LayerSpec>& specs, Shape in, Index& offset,
                                 std::vector<ParamSlice>& layout, const std::string& prefix) {
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Layer l = resolve_layer(specs[i], in);
    l.offset = offset;
    if (l.param_count() > 0) {
      layout.push_back({prefix + std::to_string(i) + "." + to_string(l.spec.kind) + ".weight", offset, l.weight_count});
      layout.push_back({prefix + std::to_string(i) + "." + to_string(l.spec.kind) + ".bias",
                        offset + l.weight_count, l.bias_count});
    }
    offset += l.param_count();
    in = l.out;
    layers.push_back(l);
  }
  return layers;
}

// Scale layers need a channel count; the network's channel structure comes
// from the first split of the encoder.
Index scaler_channels(const std::vector<Layer>& encoder) {
  for (const Layer& l : encoder) {
    if (l.spec.kind == LayerKind::scale || l.spec.kind == LayerKind::scale_inverse) return l.in.channels;
  }
  return 2;
}

void init_weights(const Layer& l, Vector& theta, InitScheme init, std::mt19937_64& rng) {
  if (l.weight_count == 0) return;
  Index fan_in = 0;
  Index fan_out = 0;
  switch (l.spec.kind) {
    case LayerKind::conv1d:
      fan_in = l.in.channels * l.spec.kernel;
      fan_out = l.out.channels * l.spec.kernel;
      break;
    case LayerKind::convT1d:
      // Weight shape (c_in, c_out, k); fans follow its second and first axes.
      fan_in = l.out.channels * l.spec.kernel;
      fan_out = l.in.channels * l.spec.kernel;
      break;
    default:
      fan_in = l.in.size();
      fan_out = l.out.size();
      break;
  }
  if (init == InitScheme::kaiming_normal) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (Index i = 0; i < l.weight_count; ++i) theta(l.offset + i) = dist(rng);
  } else {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index i = 0; i < l.weight_count; ++i) theta(l.offset + i) = dist(rng);
  }
}

}  // namespace

Autoencoder build_autoencoder(const std::vector<LayerSpec>& encoder, const std::vector<LayerSpec>& decoder,
                              Index full_dim, Index reduced_dim, InitScheme init, std::uint64_t seed) {
  if (full_dim < 2 || reduced_dim < 1) throw DimensionError("build_autoencoder: invalid dimensions");
  Autoencoder ae;
  ae.full_dim = full_dim;
  ae.reduced_dim = reduced_dim;
  Index offset = 0;
  ae.encoder = resolve_chain(encoder, Shape{1, full_dim}, offset, ae.params.layout, "encoder.");
  if (ae.encoder.empty() || ae.encoder.back().out != Shape{1, reduced_dim}) {
    throw DimensionError("build_autoencoder: encoder must end in a flat tensor of length 2n");
  }
  ae.decoder = resolve_chain(decoder, Shape{1, reduced_dim}, offset, ae.params.layout, "decoder.");
  if (ae.decoder.empty() || ae.decoder.back().out != Shape{1, full_dim}) {
    throw DimensionError("build_autoencoder: decoder must end in a flat tensor of length 2N");
  }
  ae.params.theta = Vector::Zero(offset);
  std::mt19937_64 rng(seed);
  for (const auto* net : {&ae.encoder, &ae.decoder}) {
    for (const Layer& l : *net) init_weights(l, ae.params.theta, init, rng);
  }
  ae.scaler = Scaler::identity(scaler_channels(ae.encoder));
  return ae;
}

Matrix encode_batch(const Autoencoder& ae, const Matrix& x) {
  if (x.rows() != ae.full_dim) throw DimensionError("encode: expected length " + std::to_string(ae.full_dim));
  detail::Tape tape;
  detail::forward(ae.encoder, ae.params.theta, ae.scaler, x.transpose(), 1, tape);
  return tape.acts.back().transpose();
}

Matrix decode_batch(const Autoencoder& ae, const Matrix& x_r) {
  if (x_r.rows() != ae.reduced_dim) throw DimensionError("decode: expected length " + std::to_string(ae.reduced_dim));
  detail::Tape tape;
  detail::forward(ae.decoder, ae.params.theta, ae.scaler, x_r.transpose(), 1, tape);
  return tape.acts.back().transpose();
}

Vector encode(const Autoencoder& ae, const Vector& x) { return encode_batch(ae, x); }
Vector decode(const Autoencoder& ae, const Vector& x_r) { return decode_batch(ae, x_r); }

namespace {

// Decoder input block for the given reduced points (columns) with tangent
// directions given by the columns of dirs.
Matrix dual_input(const Matrix& z, const Matrix& dirs) {
  const Index lanes = 1 + dirs.cols();
  Matrix in(z.cols() * lanes, z.rows());
  for (Index b = 0; b < z.cols(); ++b) {
    in.row(b * lanes) = z.col(b).transpose();
    in.middleRows(b * lanes + 1, dirs.cols()) = dirs.transpose();
  }
  return in;
}

}  // namespace

Matrix decoder_jacobian(const Autoencoder& ae, const Vector& x_r) {
  if (x_r.size() != ae.reduced_dim) throw DimensionError("decoder_jacobian: length mismatch");
  const Index r = ae.reduced_dim;
  detail::Tape tape;
  detail::forward(ae.decoder, ae.params.theta, ae.scaler, dual_input(x_r, Matrix::Identity(r, r)), 1 + r, tape);
  return tape.acts.back().bottomRows(r).transpose();
}

Vector decoder_jvp(const Autoencoder& ae, const Vector& x_r, const Vector& v) {
  if (x_r.size() != ae.reduced_dim || v.size() != ae.reduced_dim) throw DimensionError("decoder_jvp: length mismatch");
  detail::Tape tape;
  detail::forward(ae.decoder, ae.params.theta, ae.scaler, dual_input(x_r, v), 2, tape);
  return tape.acts.back().row(1).transpose();
}

Vector decoder_vjp(const Autoencoder& ae, const Vector& x_r, const Vector& w) {
  if (x_r.size() != ae.reduced_dim || w.size() != ae.full_dim) throw DimensionError("decoder_vjp: length mismatch");
  detail::Tape tape;
  detail::forward(ae.decoder, ae.params.theta, ae.scaler, x_r.transpose(), 1, tape);
  const Matrix in_bar = detail::backward(ae.decoder, ae.params.theta, ae.scaler, tape, w.transpose(), nullptr);
  return in_bar.row(0).transpose();
}

namespace {

double data_normalizer(const Autoencoder& ae, const LossOptions& opts) {
  return opts.norm == DataNorm::half_dim ? static_cast<double>(ae.full_dim / 2) : static_cast<double>(ae.full_dim);
}

// Losses (and optionally their theta-gradient) for one batch. With
// tangents = false the symplecticity term is skipped.
LossGradient run_losses(const Autoencoder& ae, const Matrix& batch, double alpha, const LossOptions& opts,
                        bool tangents, bool want_grad) {
  if (batch.rows() != ae.full_dim) throw DimensionError("loss: batch rows must equal 2N");
  const Index B = batch.cols();
  if (B < 1) throw DimensionError("loss: empty batch");
  const Index r = ae.reduced_dim;
  const Index N = ae.full_dim / 2;
  const Index n = r / 2;
  if (tangents && r % 2 != 0) throw DimensionError("loss_sympl: reduced dimension must be even");
  const Vector& theta = ae.params.theta;

  detail::Tape enc;
  detail::forward(ae.encoder, theta, ae.scaler, batch.transpose(), 1, enc);
  const Matrix z = enc.acts.back().transpose();  // r x B

  const Index lanes = tangents ? 1 + r : 1;
  detail::Tape dec;
  detail::forward(ae.decoder, theta, ae.scaler, tangents ? dual_input(z, Matrix::Identity(r, r)) : Matrix(z.transpose()),
                  lanes, dec);
  const Matrix& y = dec.acts.back();

  LossGradient out;
  const double nd = data_normalizer(ae, opts);
  Matrix out_bar = Matrix::Zero(y.rows(), y.cols());
  double data_sum = 0.0;
  double sympl_sum = 0.0;
  const double defect_scale = 1.0 / static_cast<double>(r * r);
  const Matrix jr = tangents ? poisson_matrix(n) : Matrix();
  for (Index b = 0; b < B; ++b) {
    const Eigen::RowVectorXd diff = y.row(b * lanes) - batch.col(b).transpose();
    data_sum += diff.squaredNorm();
    if (want_grad) out_bar.row(b * lanes) = (alpha * 2.0 / (nd * static_cast<double>(B))) * diff;
    if (tangents) {
      const Matrix m = y.middleRows(b * lanes + 1, r).transpose();  // 2N x 2n
      const Matrix jm = poisson_apply(N, m);
      const Matrix e = m.transpose() * jm - jr;
      sympl_sum += defect_scale * e.squaredNorm();
      if (want_grad) {
        // d/dM ||M^T J M - J_r||_F^2 = 2 (J M E^T + J^T M E).
        const Matrix g = 2.0 * (poisson_apply(N, Matrix(m * e.transpose())) - poisson_apply(N, Matrix(m * e)));
        out_bar.middleRows(b * lanes + 1, r) = ((1.0 - alpha) * defect_scale / static_cast<double>(B)) * g.transpose();
      }
    }
  }
  out.loss.data = data_sum / (nd * static_cast<double>(B));
  out.loss.sympl = tangents ? sympl_sum / static_cast<double>(B) : 0.0;
  out.loss.total = alpha * out.loss.data + (1.0 - alpha) * out.loss.sympl;
  if (!want_grad) return out;

  out.gradient = Vector::Zero(theta.size());
  const Matrix z_block_bar = detail::backward(ae.decoder, theta, ae.scaler, dec, std::move(out_bar), &out.gradient);
  Matrix z_bar(B, r);
  for (Index b = 0; b < B; ++b) z_bar.row(b) = z_block_bar.row(b * lanes);
  detail::backward(ae.encoder, theta, ae.scaler, enc, std::move(z_bar), &out.gradient);
  return out;
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DimensionError("loss: alpha must lie in [0, 1]");
}

}  // namespace

double loss_data(const Autoencoder& ae, const Matrix& batch, const LossOptions& opts) {
  return run_losses(ae, batch, 1.0, opts, false, false).loss.data;
}

double loss_sympl(const Autoencoder& ae, const Matrix& batch) {
  return run_losses(ae, batch, 0.0, {}, true, false).loss.sympl;
}

LossValues evaluate_losses(const Autoencoder& ae, const Matrix& batch, double alpha, const LossOptions& opts) {
  check_alpha(alpha);
  return run_losses(ae, batch, alpha, opts, ae.reduced_dim % 2 == 0, false).loss;
}

double loss_total(const Autoencoder& ae, const Matrix& batch, double alpha, const LossOptions& opts) {
  check_alpha(alpha);
  if (alpha == 1.0) return loss_data(ae, batch, opts);
  return run_losses(ae, batch, alpha, opts, true, false).loss.total;
}

LossGradient grad_total(const Autoencoder& ae, const Matrix& batch, double alpha, const LossOptions& opts) {
  check_alpha(alpha);
  return run_losses(ae, batch, alpha, opts, alpha < 1.0, true);
}

void adam_step(Vector& theta, const Vector& grad, AdamState& state, double lr, const AdamOptions& opts) {
  if (grad.size() != theta.size() || state.m.size() != theta.size() || state.v.size() != theta.size()) {
    throw DimensionError("adam_step: size mismatch");
  }
  ++state.step;
  state.m = opts.beta1 * state.m + (1.0 - opts.beta1) * grad;
  state.v = opts.beta2 * state.v + (1.0 - opts.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  theta.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + opts.eps);
}

void TrainConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("train: alpha must lie in (0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("train: val_fraction must lie in (0, 1)");
}

namespace {

constexpr Index kEvalChunk = 64;

Matrix gather(const Matrix& data, const std::vector<Index>& idx, std::size_t begin, std::size_t end) {
  Matrix out(data.rows(), static_cast<Index>(end - begin));
  for (std::size_t i = begin; i < end; ++i) out.col(static_cast<Index>(i - begin)) = data.col(idx[i]);
  return out;
}

// Sample-weighted losses over a whole split, evaluated in fixed chunks.
LossValues evaluate_split(const Autoencoder& ae, const Matrix& data, const std::vector<Index>& idx, double alpha,
                          const LossOptions& opts) {
  LossValues acc;
  for (std::size_t begin = 0; begin < idx.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(idx.size(), begin + kEvalChunk);
    const LossValues v = evaluate_losses(ae, gather(data, idx, begin, end), alpha, opts);
    const double w = static_cast<double>(end - begin);
    acc.data += w * v.data;
    acc.sympl += w * v.sympl;
    acc.total += w * v.total;
  }
  const double n = static_cast<double>(idx.size());
  return {acc.data / n, acc.sympl / n, acc.total / n};
}

void require_finite(const LossValues& v, int epoch) {
  if (!std::isfinite(v.data) || !std::isfinite(v.sympl) || !std::isfinite(v.total)) {
    throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch));
  }
}

}  // namespace

TrainResult train(const Matrix& data, Autoencoder initial, const TrainConfig& cfg) {
  cfg.validate();
  if (data.rows() != initial.full_dim) throw DimensionError("train: data rows must equal 2N");
  const Index m = data.cols();
  const Index n_val = std::max<Index>(1, static_cast<Index>(std::llround(cfg.val_fraction * static_cast<double>(m))));
  if (m - n_val < cfg.batch_size) throw DimensionError("train: training split smaller than one batch");

  TrainResult res;
  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 split_rng(derive_seed(cfg.seed, "split"));
  std::shuffle(order.begin(), order.end(), split_rng);
  res.val_indices.assign(order.begin(), order.begin() + n_val);
  res.train_indices.assign(order.begin() + n_val, order.end());
  std::sort(res.val_indices.begin(), res.val_indices.end());
  std::sort(res.train_indices.begin(), res.train_indices.end());

  Autoencoder ae = std::move(initial);
  ae.scaler = fit_scaler(gather(data, res.train_indices, 0, res.train_indices.size()), ae.scaler.channels());

  EpochRecord rec0{0, evaluate_split(ae, data, res.train_indices, cfg.alpha, cfg.loss),
                   evaluate_split(ae, data, res.val_indices, cfg.alpha, cfg.loss)};
  require_finite(rec0.train, 0);
  require_finite(rec0.val, 0);
  res.history.push_back(rec0);
  Vector best_theta = ae.params.theta;
  double best_val = rec0.val.total;

  AdamState adam = AdamState::zeros(ae.params.size());
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<Index> perm = res.train_indices;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);
    LossValues acc;
    for (std::size_t begin = 0; begin < perm.size(); begin += bs) {
      const std::size_t end = std::min(perm.size(), begin + bs);
      const LossGradient g = grad_total(ae, gather(data, perm, begin, end), cfg.alpha, cfg.loss);
      require_finite(g.loss, epoch);
      if (!g.gradient.allFinite()) throw NumericalError("train: non-finite gradient at epoch " + std::to_string(epoch));
      const double w = static_cast<double>(end - begin);
      acc.data += w * g.loss.data;
      acc.sympl += w * g.loss.sympl;
      acc.total += w * g.loss.total;
      adam_step(ae.params.theta, g.gradient, adam, cfg.learning_rate);
    }
    const double n = static_cast<double>(perm.size());
    EpochRecord rec{epoch, {acc.data / n, acc.sympl / n, acc.total / n},
                    evaluate_split(ae, data, res.val_indices, cfg.alpha, cfg.loss)};
    require_finite(rec.val, epoch);
    res.history.push_back(rec);
    if (rec.val.total < best_val) {
      best_val = rec.val.total;
      best_theta = ae.params.theta;
      res.best_epoch = epoch;
    }
  }
  ae.params.theta = best_theta;
  res.ae = std::move(ae);
  return res;
}

namespace {

std::string spec_fields(const LayerSpec& s) {
  std::ostringstream os;
  switch (s.kind) {
    case LayerKind::split:
      os << " channels=" << s.channels;
      break;
    case LayerKind::conv1d:
    case LayerKind::convT1d:
      os << " channels=" << s.channels << " kernel=" << s.kernel << " stride=" << s.stride << " padding=" << s.padding;
      if (s.kind == LayerKind::convT1d) os << " output_padding=" << s.output_padding;
      break;
    case LayerKind::full:
      os << " features=" << s.features;
      break;
    default:
      break;
  }
  return os.str();
}

Index parse_index(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw ParseError("");
    return static_cast<Index>(v);
  } catch (const std::exception&) {
    throw ParseError("checkpoint: bad integer for " + what + ": '" + text + "'");
  }
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw ParseError("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("checkpoint: bad real for " + what + ": '" + text + "'");
  }
}

}  // namespace

void save_checkpoint(const Autoencoder& ae, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os << "symmor-autoencoder 1\n";
  os << "dims " << ae.full_dim << " " << ae.reduced_dim << "\n";
  Index idx = 0;
  for (const auto& [net, name] : {std::pair{&ae.encoder, "encoder"}, std::pair{&ae.decoder, "decoder"}}) {
    for (const Layer& l : *net) {
      os << "layer " << idx++ << " " << to_string(l.spec.kind) << " net=" << name << spec_fields(l.spec) << "\n";
    }
  }
  for (Index c = 0; c < ae.scaler.channels(); ++c) {
    os << "scaler " << c << " " << format_real(ae.scaler.shift(c)) << " " << format_real(ae.scaler.scale(c)) << "\n";
  }
  os << "params " << ae.params.size() << "\n\n";
  for (Index i = 0; i < ae.params.size(); ++i) os << format_real(ae.params.theta(i)) << "\n";
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Autoencoder load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("load_checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "symmor-autoencoder 1") throw ParseError("checkpoint: missing magic line");
  Index full_dim = -1, reduced_dim = -1, n_params = -1;
  std::vector<LayerSpec> enc, dec;
  std::vector<std::pair<double, double>> scaler;
  while (std::getline(is, line)) {
    if (line.empty()) break;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "dims") {
      std::string a, b, extra;
      ls >> a >> b;
      if (b.empty() || (ls >> extra)) throw ParseError("checkpoint: malformed dims line");
      full_dim = parse_index(a, "dims");
      reduced_dim = parse_index(b, "dims");
    } else if (tag == "layer") {
      std::string index, kind;
      ls >> index >> kind;
      if (parse_index(index, "layer index") != static_cast<Index>(enc.size() + dec.size())) {
        throw ParseError("checkpoint: layer indices out of order");
      }
      LayerSpec s;
      s.kind = layer_kind_from_string(kind);
      std::string net;
      std::string kv;
      while (ls >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ParseError("checkpoint: expected key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        if (key == "net") net = val;
        else if (key == "channels") s.channels = parse_index(val, key);
        else if (key == "kernel") s.kernel = parse_index(val, key);
        else if (key == "stride") s.stride = parse_index(val, key);
        else if (key == "padding") s.padding = parse_index(val, key);
        else if (key == "output_padding") s.output_padding = parse_index(val, key);
        else if (key == "features") s.features = parse_index(val, key);
        else throw ParseError("checkpoint: unknown layer field '" + key + "'");
      }
      if (net == "encoder") {
        if (!dec.empty()) throw ParseError("checkpoint: encoder layer after decoder layers");
        enc.push_back(s);
      } else if (net == "decoder") {
        dec.push_back(s);
      } else {
        throw ParseError("checkpoint: layer without net=encoder|decoder");
      }
    } else if (tag == "scaler") {
      std::string c, shift, scale;
      ls >> c >> shift >> scale;
      if (parse_index(c, "scaler channel") != static_cast<Index>(scaler.size())) {
        throw ParseError("checkpoint: scaler channels out of order");
      }
      scaler.emplace_back(parse_double(shift, "scaler shift"), parse_double(scale, "scaler scale"));
    } else if (tag == "params") {
      std::string count;
      ls >> count;
      n_params = parse_index(count, "params");
    } else {
      throw ParseError("checkpoint: unknown header line '" + line + "'");
    }
  }
  if (full_dim < 0 || reduced_dim < 0 || n_params < 0) throw ParseError("checkpoint: incomplete header");
  Autoencoder ae;
  try {
    ae = build_autoencoder(enc, dec, full_dim, reduced_dim, InitScheme::kaiming_normal, 0);
  } catch (const DimensionError& e) {
    throw ParseError(std::string("checkpoint: inconsistent layers: ") + e.what());
  }
  if (ae.params.size() != n_params) throw ParseError("checkpoint: parameter count does not match layers");
  if (static_cast<Index>(scaler.size()) != ae.scaler.channels()) throw ParseError("checkpoint: scaler channel count");
  for (std::size_t c = 0; c < scaler.size(); ++c) {
    ae.scaler.shift(static_cast<Index>(c)) = scaler[c].first;
    ae.scaler.scale(static_cast<Index>(c)) = scaler[c].second;
  }
  for (Index i = 0; i < n_params; ++i) {
    if (!std::getline(is, line)) throw ParseError("checkpoint: truncated parameter list");
    ae.params.theta(i) = parse_double(line, "parameter");
  }
  while (std::getline(is, line)) {
    if (!line.empty()) throw ParseError("checkpoint: trailing data after parameters");
  }
  return ae;
}

std::string checkpoint_digest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("checkpoint_digest: cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(ss.str())));
  return buf;
}

}  // namespace symmor
