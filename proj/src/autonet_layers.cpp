#include <cmath>

#include "symmor/autonet.hpp"

namespace symmor {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::split: return "split";
    case LayerKind::flat: return "flat";
    case LayerKind::scale: return "scale";
    case LayerKind::scale_inverse: return "scale_inverse";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::convT1d: return "convT1d";
    case LayerKind::full: return "full";
    case LayerKind::elu: return "elu";
  }
  return "elu";
}

LayerKind layer_kind_from_string(const std::string& name) {
  for (LayerKind k : {LayerKind::split, LayerKind::flat, LayerKind::scale, LayerKind::scale_inverse,
                      LayerKind::conv1d, LayerKind::convT1d, LayerKind::full, LayerKind::elu}) {
    if (to_string(k) == name) return k;
  }
  throw ParseError("unknown layer kind '" + name + "'");
}

LayerSpec LayerSpec::split(Index channels) {
  LayerSpec s;
  s.kind = LayerKind::split;
  s.channels = channels;
  return s;
}

LayerSpec LayerSpec::flat() {
  LayerSpec s;
  s.kind = LayerKind::flat;
  return s;
}

LayerSpec LayerSpec::scale() {
  LayerSpec s;
  s.kind = LayerKind::scale;
  return s;
}

LayerSpec LayerSpec::scale_inverse() {
  LayerSpec s;
  s.kind = LayerKind::scale_inverse;
  return s;
}

LayerSpec LayerSpec::conv(Index out_channels, Index kernel, Index stride, Index padding) {
  LayerSpec s;
  s.kind = LayerKind::conv1d;
  s.channels = out_channels;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::conv_transpose(Index out_channels, Index kernel, Index stride, Index padding,
                                    Index output_padding) {
  LayerSpec s = conv(out_channels, kernel, stride, padding);
  s.kind = LayerKind::convT1d;
  s.output_padding = output_padding;
  return s;
}

LayerSpec LayerSpec::full(Index features) {
  LayerSpec s;
  s.kind = LayerKind::full;
  s.features = features;
  return s;
}

LayerSpec LayerSpec::elu() { return LayerSpec{}; }

Index conv_output_length(Index l_in, Index kernel, Index stride, Index padding) {
  const Index span = l_in + 2 * padding - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

Index conv_transpose_output_length(Index l_in, Index kernel, Index stride, Index padding,
                                   Index output_padding) {
  return (l_in - 1) * stride - 2 * padding + kernel + output_padding;
}

Layer resolve_layer(const LayerSpec& spec, Shape in) {
  auto fail = [&](const std::string& why) {
    throw DimensionError("layer " + to_string(spec.kind) + " on input " + std::to_string(in.channels) + "x" +
                         std::to_string(in.length) + ": " + why);
  };
  if (in.size() < 1) fail("empty input");
  Layer layer;
  layer.spec = spec;
  layer.in = in;
  switch (spec.kind) {
    case LayerKind::split:
      if (in.channels != 1) fail("split expects a flat input");
      if (spec.channels < 1 || in.length % spec.channels != 0) fail("length not divisible by channels");
      layer.out = {spec.channels, in.length / spec.channels};
      break;
    case LayerKind::flat:
      layer.out = {1, in.size()};
      break;
    case LayerKind::scale:
    case LayerKind::scale_inverse:
    case LayerKind::elu:
      layer.out = in;
      break;
    case LayerKind::conv1d:
    case LayerKind::convT1d: {
      if (spec.channels < 1 || spec.kernel < 1 || spec.stride < 1 || spec.padding < 0 || spec.output_padding < 0) {
        fail("invalid hyperparameters");
      }
      if (spec.kind == LayerKind::conv1d && spec.output_padding != 0) fail("output_padding only applies to convT1d");
      if (spec.kind == LayerKind::convT1d && spec.output_padding >= spec.stride) fail("output_padding must be < stride");
      const Index len = spec.kind == LayerKind::conv1d
                            ? conv_output_length(in.length, spec.kernel, spec.stride, spec.padding)
                            : conv_transpose_output_length(in.length, spec.kernel, spec.stride, spec.padding,
                                                           spec.output_padding);
      if (len < 1) fail("non-positive output length");
      layer.out = {spec.channels, len};
      layer.weight_count = in.channels * spec.channels * spec.kernel;
      layer.bias_count = spec.channels;
      break;
    }
    case LayerKind::full:
      if (in.channels != 1) fail("full expects a flat input");
      if (spec.features < 1) fail("features must be >= 1");
      layer.out = {1, spec.features};
      layer.weight_count = spec.features * in.length;
      layer.bias_count = spec.features;
      break;
  }
  return layer;
}

Scaler Scaler::identity(Index channels) {
  return Scaler{Vector::Zero(channels), Vector::Ones(channels)};
}

double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }
double elu_derivative(double x) { return x >= 0.0 ? 1.0 : std::exp(x); }
double elu_second_derivative(double x) { return x >= 0.0 ? 0.0 : std::exp(x); }

namespace detail {

namespace {

using StridedRow = Eigen::Map<Vector, 0, Eigen::InnerStride<>>;
using ConstStridedRow = Eigen::Map<const Vector, 0, Eigen::InnerStride<>>;
using LaneView = Eigen::Map<Matrix>;
using ConstLaneView = Eigen::Map<const Matrix>;

// Primal rows of one column: every lanes-th entry.
StridedRow primal(Matrix& m, Index col, Index lanes) {
  return StridedRow(m.col(col).data(), m.rows() / lanes, Eigen::InnerStride<>(lanes));
}
ConstStridedRow primal(const Matrix& m, Index col, Index lanes) {
  return ConstStridedRow(m.col(col).data(), m.rows() / lanes, Eigen::InnerStride<>(lanes));
}

void add_bias(Matrix& out, const double* bias, Index channels, Index length, Index lanes) {
  for (Index c = 0; c < channels; ++c) {
    for (Index l = 0; l < length; ++l) primal(out, c * length + l, lanes).array() += bias[c];
  }
}

void accumulate_bias(const Matrix& out_bar, double* gbias, Index channels, Index length, Index lanes) {
  for (Index c = 0; c < channels; ++c) {
    double s = 0.0;
    for (Index l = 0; l < length; ++l) s += primal(out_bar, c * length + l, lanes).sum();
    gbias[c] += s;
  }
}

// Index of the conv1d input tap feeding output position lo through kernel
// entry k, or -1 when it falls into the zero padding.
inline Index conv_tap(Index lo, Index k, const Layer& layer) {
  const Index li = lo * layer.spec.stride + k - layer.spec.padding;
  return (li >= 0 && li < layer.in.length) ? li : -1;
}

// Output position reached from convT1d input position li through kernel k.
inline Index convt_tap(Index li, Index k, const Layer& layer) {
  const Index lo = li * layer.spec.stride + k - layer.spec.padding;
  return (lo >= 0 && lo < layer.out.length) ? lo : -1;
}

}  // namespace

void layer_forward(const Layer& layer, const double* theta, const Scaler& scaler, const Matrix& in,
                   Index lanes, Matrix& out) {
  const Index rows = in.rows();
  const double* w = theta + layer.offset;
  const double* bias = w + layer.weight_count;
  switch (layer.spec.kind) {
    case LayerKind::split:
    case LayerKind::flat:
      out = in;
      return;
    case LayerKind::scale:
    case LayerKind::scale_inverse: {
      if (scaler.channels() != layer.in.channels) throw DimensionError("scale: scaler channel count mismatch");
      out.resize(rows, in.cols());
      const Index len = layer.in.length;
      const bool inverse = layer.spec.kind == LayerKind::scale_inverse;
      for (Index c = 0; c < layer.in.channels; ++c) {
        const double f = inverse ? 1.0 / scaler.scale(c) : scaler.scale(c);
        const double offset = inverse ? scaler.shift(c) : -scaler.shift(c) * scaler.scale(c);
        out.middleCols(c * len, len) = f * in.middleCols(c * len, len);
        for (Index l = 0; l < len; ++l) primal(out, c * len + l, lanes).array() += offset;
      }
      return;
    }
    case LayerKind::elu: {
      out.resize(rows, in.cols());
      const Index batch = rows / lanes;
      for (Index j = 0; j < in.cols(); ++j) {
        ConstLaneView x(in.col(j).data(), lanes, batch);
        LaneView y(out.col(j).data(), lanes, batch);
        for (Index b = 0; b < batch; ++b) {
          const double u = x(0, b);
          y(0, b) = elu(u);
          if (lanes > 1) y.col(b).tail(lanes - 1) = elu_derivative(u) * x.col(b).tail(lanes - 1);
        }
      }
      return;
    }
    case LayerKind::full: {
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> wm(
          w, layer.out.length, layer.in.length);
      out.noalias() = in * wm.transpose();
      add_bias(out, bias, layer.out.length, 1, lanes);
      return;
    }
    case LayerKind::conv1d: {
      out.setZero(rows, layer.out.size());
      const Index ci_n = layer.in.channels;
      const Index kn = layer.spec.kernel;
      for (Index co = 0; co < layer.out.channels; ++co) {
        for (Index ci = 0; ci < ci_n; ++ci) {
          const double* wk = w + (co * ci_n + ci) * kn;
          for (Index k = 0; k < kn; ++k) {
            for (Index lo = 0; lo < layer.out.length; ++lo) {
              const Index li = conv_tap(lo, k, layer);
              if (li >= 0) out.col(co * layer.out.length + lo) += wk[k] * in.col(ci * layer.in.length + li);
            }
          }
        }
      }
      add_bias(out, bias, layer.out.channels, layer.out.length, lanes);
      return;
    }
    case LayerKind::convT1d: {
      out.setZero(rows, layer.out.size());
      const Index co_n = layer.out.channels;
      const Index kn = layer.spec.kernel;
      for (Index ci = 0; ci < layer.in.channels; ++ci) {
        for (Index co = 0; co < co_n; ++co) {
          const double* wk = w + (ci * co_n + co) * kn;
          for (Index k = 0; k < kn; ++k) {
            for (Index li = 0; li < layer.in.length; ++li) {
              const Index lo = convt_tap(li, k, layer);
              if (lo >= 0) out.col(co * layer.out.length + lo) += wk[k] * in.col(ci * layer.in.length + li);
            }
          }
        }
      }
      add_bias(out, bias, layer.out.channels, layer.out.length, lanes);
      return;
    }
  }
}

void layer_backward(const Layer& layer, const double* theta, const Scaler& scaler, const Matrix& in,
                    Index lanes, const Matrix& out_bar, Matrix& in_bar, double* grad) {
  const Index rows = in.rows();
  const double* w = theta + layer.offset;
  double* gw = grad ? grad + layer.offset : nullptr;
  double* gb = gw ? gw + layer.weight_count : nullptr;
  switch (layer.spec.kind) {
    case LayerKind::split:
    case LayerKind::flat:
      in_bar = out_bar;
      return;
    case LayerKind::scale:
    case LayerKind::scale_inverse: {
      in_bar.resize(rows, in.cols());
      const Index len = layer.in.length;
      for (Index c = 0; c < layer.in.channels; ++c) {
        const double f = layer.spec.kind == LayerKind::scale ? scaler.scale(c) : 1.0 / scaler.scale(c);
        in_bar.middleCols(c * len, len) = f * out_bar.middleCols(c * len, len);
      }
      return;
    }
    case LayerKind::elu: {
      in_bar.resize(rows, in.cols());
      const Index batch = rows / lanes;
      for (Index j = 0; j < in.cols(); ++j) {
        ConstLaneView x(in.col(j).data(), lanes, batch);
        ConstLaneView yb(out_bar.col(j).data(), lanes, batch);
        LaneView xb(in_bar.col(j).data(), lanes, batch);
        for (Index b = 0; b < batch; ++b) {
          const double u = x(0, b);
          const double d1 = elu_derivative(u);
          double acc = d1 * yb(0, b);
          if (lanes > 1) {
            const double d2 = elu_second_derivative(u);
            if (d2 != 0.0) acc += d2 * yb.col(b).tail(lanes - 1).dot(x.col(b).tail(lanes - 1));
            xb.col(b).tail(lanes - 1) = d1 * yb.col(b).tail(lanes - 1);
          }
          xb(0, b) = acc;
        }
      }
      return;
    }
    case LayerKind::full: {
      using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
      Eigen::Map<const RowMajor> wm(w, layer.out.length, layer.in.length);
      in_bar.noalias() = out_bar * wm;
      if (gw) {
        Eigen::Map<RowMajor> gwm(gw, layer.out.length, layer.in.length);
        gwm.noalias() += out_bar.transpose() * in;
        accumulate_bias(out_bar, gb, layer.out.length, 1, lanes);
      }
      return;
    }
    case LayerKind::conv1d: {
      in_bar.setZero(rows, layer.in.size());
      const Index ci_n = layer.in.channels;
      const Index kn = layer.spec.kernel;
      for (Index co = 0; co < layer.out.channels; ++co) {
        for (Index ci = 0; ci < ci_n; ++ci) {
          const Index base = (co * ci_n + ci) * kn;
          for (Index k = 0; k < kn; ++k) {
            double g = 0.0;
            for (Index lo = 0; lo < layer.out.length; ++lo) {
              const Index li = conv_tap(lo, k, layer);
              if (li < 0) continue;
              const auto ob = out_bar.col(co * layer.out.length + lo);
              in_bar.col(ci * layer.in.length + li) += w[base + k] * ob;
              if (gw) g += ob.dot(in.col(ci * layer.in.length + li));
            }
            if (gw) gw[base + k] += g;
          }
        }
      }
      if (gb) accumulate_bias(out_bar, gb, layer.out.channels, layer.out.length, lanes);
      return;
    }
    case LayerKind::convT1d: {
      in_bar.setZero(rows, layer.in.size());
      const Index co_n = layer.out.channels;
      const Index kn = layer.spec.kernel;
      for (Index ci = 0; ci < layer.in.channels; ++ci) {
        for (Index co = 0; co < co_n; ++co) {
          const Index base = (ci * co_n + co) * kn;
          for (Index k = 0; k < kn; ++k) {
            double g = 0.0;
            for (Index li = 0; li < layer.in.length; ++li) {
              const Index lo = convt_tap(li, k, layer);
              if (lo < 0) continue;
              const auto ob = out_bar.col(co * layer.out.length + lo);
              in_bar.col(ci * layer.in.length + li) += w[base + k] * ob;
              if (gw) g += ob.dot(in.col(ci * layer.in.length + li));
            }
            if (gw) gw[base + k] += g;
          }
        }
      }
      if (gb) accumulate_bias(out_bar, gb, layer.out.channels, layer.out.length, lanes);
      return;
    }
  }
}

void forward(const std::vector<Layer>& layers, const Vector& theta, const Scaler& scaler, Matrix input,
             Index lanes, Tape& tape) {
  if (layers.empty()) throw DimensionError("forward: empty network");
  if (input.cols() != layers.front().in.size()) throw DimensionError("forward: input size mismatch");
  if (lanes < 1 || input.rows() % lanes != 0) throw DimensionError("forward: rows must be a multiple of lanes");
  tape.lanes = lanes;
  tape.acts.resize(layers.size() + 1);
  tape.acts[0] = std::move(input);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layer_forward(layers[i], theta.data(), scaler, tape.acts[i], lanes, tape.acts[i + 1]);
  }
}

Matrix backward(const std::vector<Layer>& layers, const Vector& theta, const Scaler& scaler, const Tape& tape,
                Matrix out_bar, Vector* grad) {
  if (tape.acts.size() != layers.size() + 1) throw DimensionError("backward: tape does not match network");
  Matrix in_bar;
  for (std::size_t i = layers.size(); i-- > 0;) {
    layer_backward(layers[i], theta.data(), scaler, tape.acts[i], tape.lanes, out_bar, in_bar,
                   grad ? grad->data() : nullptr);
    std::swap(out_bar, in_bar);
  }
  return out_bar;
}

}  // namespace detail

}  // namespace symmor
