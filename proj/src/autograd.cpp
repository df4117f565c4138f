// Copyright 2026 The enaet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "enaet/autograd.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace enaet {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

bool tracking(Tape* tape, std::initializer_list<const Var*> inputs) {
  if (tape == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Var* v) { return (*v)->requires_grad; });
}

Var make_output(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

void note_params(Tape* tape, std::initializer_list<const Var*> inputs) {
  if (tape == nullptr) return;
  for (const Var* v : inputs)
    if ((*v)->is_parameter) tape->note_parameter(v->get());
}

void require_rank(const Var& v, int rank, const char* op) {
  if (v->value.rank() != rank)
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) +
                                " input, got " + v->value.shape_string());
}

double scalar_grad(const Var& out) { return out->grad.empty() ? 0.0 : out->grad[0]; }

}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.empty() && !value.empty()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var make_constant(Tensor value) { return make_output(std::move(value), false); }

Var make_parameter(Tensor value) {
  auto n = make_output(std::move(value), true);
  n->is_parameter = true;
  return n;
}

void Tape::record(std::function<void()> backward) { ops_.push_back(std::move(backward)); }

void Tape::note_parameter(const Node* p) {
  if (std::find(params_used_.begin(), params_used_.end(), p) == params_used_.end())
    params_used_.push_back(p);
}

void Tape::backward(const Var& output) {
  if (output->value.size() != 1) throw std::invalid_argument("backward needs a scalar output");
  output->grad_buffer()[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

void Tape::clear() {
  ops_.clear();
  params_used_.clear();
}

namespace ops {

Var conv2d(Tape* tape, const Var& x, const Var& w, int stride, int pad) {
  require_rank(x, 4, "conv2d");
  require_rank(w, 4, "conv2d");
  const int n = x->value.dim(0), c = x->value.dim(1), h = x->value.dim(2), wd = x->value.dim(3);
  const int o = w->value.dim(0), k = w->value.dim(2);
  if (w->value.dim(1) != c || w->value.dim(3) != k)
    throw std::invalid_argument("conv2d: weight " + w->value.shape_string() +
                                " does not match input " + x->value.shape_string());
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (wd + 2 * pad - k) / stride + 1;
  const int plane = ho * wo;
  const int rows = c * k * k;
  const int cols = n * plane;

  auto col = std::make_shared<Tensor>(std::vector<int>{rows, cols});
  const double* xv = x->value.data();
  double* cv = col->data();
  for (int ci = 0; ci < c; ++ci)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        double* row = cv + static_cast<std::size_t>((ci * k + ki) * k + kj) * cols;
        for (int b = 0; b < n; ++b) {
          const double* src = xv + (static_cast<std::size_t>(b) * c + ci) * h * wd;
          for (int oi = 0; oi < ho; ++oi) {
            const int yi = oi * stride - pad + ki;
            double* dst = row + b * plane + oi * wo;
            if (yi < 0 || yi >= h) {
              std::fill(dst, dst + wo, 0.0);
              continue;
            }
            for (int oj = 0; oj < wo; ++oj) {
              const int xj = oj * stride - pad + kj;
              dst[oj] = (xj < 0 || xj >= wd) ? 0.0 : src[yi * wd + xj];
            }
          }
        }
      }

  const ConstMatrixMap wm(w->value.data(), o, rows);
  const ConstMatrixMap cm(col->data(), rows, cols);
  RowMatrix y = wm * cm;

  Tensor out({n, o, ho, wo});
  for (int b = 0; b < n; ++b)
    for (int oc = 0; oc < o; ++oc)
      std::copy_n(y.data() + static_cast<std::size_t>(oc) * cols + b * plane, plane,
                  out.data() + (static_cast<std::size_t>(b) * o + oc) * plane);

  note_params(tape, {&w});
  const bool track = tracking(tape, {&x, &w});
  Var result = make_output(std::move(out), track);
  if (track) {
    tape->record([x, w, result, col, n, c, h, wd, o, k, ho, wo, stride, pad, rows, cols, plane] {
      if (result->grad.empty()) return;
      RowMatrix dy(o, cols);
      const double* g = result->grad.data();
      for (int b = 0; b < n; ++b)
        for (int oc = 0; oc < o; ++oc)
          std::copy_n(g + (static_cast<std::size_t>(b) * o + oc) * plane, plane,
                      dy.data() + static_cast<std::size_t>(oc) * cols + b * plane);
      const ConstMatrixMap cm(col->data(), rows, cols);
      if (w->requires_grad) {
        MatrixMap dw(w->grad_buffer().data(), o, rows);
        dw.noalias() += dy * cm.transpose();
      }
      if (x->requires_grad) {
        const ConstMatrixMap wm(w->value.data(), o, rows);
        RowMatrix dcol = wm.transpose() * dy;
        double* dx = x->grad_buffer().data();
        for (int ci = 0; ci < c; ++ci)
          for (int ki = 0; ki < k; ++ki)
            for (int kj = 0; kj < k; ++kj) {
              const double* row =
                  dcol.data() + static_cast<std::size_t>((ci * k + ki) * k + kj) * cols;
              for (int b = 0; b < n; ++b) {
                double* dst = dx + (static_cast<std::size_t>(b) * c + ci) * h * wd;
                for (int oi = 0; oi < ho; ++oi) {
                  const int yi = oi * stride - pad + ki;
                  if (yi < 0 || yi >= h) continue;
                  const double* src = row + b * plane + oi * wo;
                  for (int oj = 0; oj < wo; ++oj) {
                    const int xj = oj * stride - pad + kj;
                    if (xj >= 0 && xj < wd) dst[yi * wd + xj] += src[oj];
                  }
                }
              }
            }
      }
    });
  }
  return result;
}

Var batch_norm(Tape* tape, const Var& x, const Var& gamma, const Var& beta, RunningStats& stats,
               NormMode mode, double momentum, double eps) {
  require_rank(x, 4, "batch_norm");
  const int n = x->value.dim(0), c = x->value.dim(1);
  const int plane = x->value.dim(2) * x->value.dim(3);
  const double count = static_cast<double>(n) * plane;
  if (static_cast<int>(gamma->value.size()) != c || static_cast<int>(beta->value.size()) != c)
    throw std::invalid_argument("batch_norm: channel count mismatch");

  std::vector<double> mean(c), invstd(c);
  const double* xv = x->value.data();
  if (mode == NormMode::kEval) {
    for (int ch = 0; ch < c; ++ch) {
      mean[ch] = stats.mean[ch];
      invstd[ch] = 1.0 / std::sqrt(stats.var[ch] + eps);
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (int b = 0; b < n; ++b) {
        const double* p = xv + (static_cast<std::size_t>(b) * c + ch) * plane;
        for (int i = 0; i < plane; ++i) s += p[i];
      }
      const double m = s / count;
      double ss = 0.0;
      for (int b = 0; b < n; ++b) {
        const double* p = xv + (static_cast<std::size_t>(b) * c + ch) * plane;
        for (int i = 0; i < plane; ++i) ss += (p[i] - m) * (p[i] - m);
      }
      const double var = ss / count;
      mean[ch] = m;
      invstd[ch] = 1.0 / std::sqrt(var + eps);
      if (mode == NormMode::kTrain) {
        const double unbiased = count > 1 ? ss / (count - 1.0) : var;
        stats.mean[ch] = momentum * stats.mean[ch] + (1.0 - momentum) * m;
        stats.var[ch] = momentum * stats.var[ch] + (1.0 - momentum) * unbiased;
      }
    }
  }

  auto xhat = std::make_shared<Tensor>(x->value.shape());
  Tensor out(x->value.shape());
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
      for (int i = 0; i < plane; ++i) {
        const double xh = (xv[off + i] - mean[ch]) * invstd[ch];
        (*xhat)[off + i] = xh;
        out[off + i] = gamma->value[ch] * xh + beta->value[ch];
      }
    }

  note_params(tape, {&gamma, &beta});
  const bool track = tracking(tape, {&x, &gamma, &beta});
  Var result = make_output(std::move(out), track);
  if (track) {
    const bool batch_stats = mode != NormMode::kEval;
    tape->record([x, gamma, beta, result, xhat, invstd, n, c, plane, count, batch_stats] {
      if (result->grad.empty()) return;
      const double* g = result->grad.data();
      for (int ch = 0; ch < c; ++ch) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int b = 0; b < n; ++b) {
          const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
          for (int i = 0; i < plane; ++i) {
            sum_dy += g[off + i];
            sum_dy_xhat += g[off + i] * (*xhat)[off + i];
          }
        }
        if (gamma->requires_grad) gamma->grad_buffer()[ch] += sum_dy_xhat;
        if (beta->requires_grad) beta->grad_buffer()[ch] += sum_dy;
        if (!x->requires_grad) continue;
        double* dx = x->grad_buffer().data();
        const double scale = gamma->value[ch] * invstd[ch];
        for (int b = 0; b < n; ++b) {
          const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
          for (int i = 0; i < plane; ++i) {
            if (batch_stats) {
              dx[off + i] +=
                  scale * (g[off + i] - sum_dy / count - (*xhat)[off + i] * sum_dy_xhat / count);
            } else {
              dx[off + i] += scale * g[off + i];
            }
          }
        }
      }
    });
  }
  return result;
}

Var leaky_relu(Tape* tape, const Var& x, double slope) {
  Tensor out = x->value;
  for (double& v : out.values())
    if (v < 0.0) v *= slope;
  const bool track = tracking(tape, {&x});
  Var result = make_output(std::move(out), track);
  if (track) {
    tape->record([x, result, slope] {
      if (result->grad.empty()) return;
      double* dx = x->grad_buffer().data();
      const double* g = result->grad.data();
      const double* xv = x->value.data();
      for (std::size_t i = 0; i < x->value.size(); ++i) dx[i] += xv[i] < 0.0 ? slope * g[i] : g[i];
    });
  }
  return result;
}

Var channel_affine(Tape* tape, const Var& x, const Tensor& shift, const Tensor& scale) {
  require_rank(x, 4, "channel_affine");
  const int n = x->value.dim(0), c = x->value.dim(1);
  const int plane = x->value.dim(2) * x->value.dim(3);
  if (static_cast<int>(shift.size()) != c || static_cast<int>(scale.size()) != c)
    throw std::invalid_argument("channel_affine: channel count mismatch");
  Tensor out(x->value.shape());
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
      for (int i = 0; i < plane; ++i) out[off + i] = (x->value[off + i] - shift[ch]) / scale[ch];
    }
  const bool track = tracking(tape, {&x});
  Var result = make_output(std::move(out), track);
  if (track) {
    tape->record([x, result, scale, n, c, plane] {
      if (result->grad.empty()) return;
      double* dx = x->grad_buffer().data();
      for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch) {
          const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
          for (int i = 0; i < plane; ++i) dx[off + i] += result->grad[off + i] / scale[ch];
        }
    });
  }
  return result;
}

Var global_avg_pool(Tape* tape, const Var& x) {
  require_rank(x, 4, "global_avg_pool");
  const int n = x->value.dim(0), c = x->value.dim(1);
  const int plane = x->value.dim(2) * x->value.dim(3);
  Tensor out({n, c});
  for (int i = 0; i < n * c; ++i) {
    double s = 0.0;
    for (int p = 0; p < plane; ++p) s += x->value[static_cast<std::size_t>(i) * plane + p];
    out[i] = s / plane;
  }
  const bool track = tracking(tape, {&x});
  Var result = make_output(std::move(out), track);
  if (track) {
    tape->record([x, result, n, c, plane] {
      if (result->grad.empty()) return;
      double* dx = x->grad_buffer().data();
      for (int i = 0; i < n * c; ++i) {
        const double g = result->grad[i] / plane;
        for (int p = 0; p < plane; ++p) dx[static_cast<std::size_t>(i) * plane + p] += g;
      }
    });
  }
  return result;
}

Var linear(Tape* tape, const Var& x, const Var& w, const Var& b) {
  require_rank(x, 2, "linear");
  const int n = x->value.dim(0), d = x->value.dim(1), o = w->value.dim(0);
  if (w->value.dim(1) != d || static_cast<int>(b->value.size()) != o)
    throw std::invalid_argument("linear: weight " + w->value.shape_string() +
                                " does not match input " + x->value.shape_string());
  Tensor out({n, o});
  MatrixMap om(out.data(), n, o);
  const ConstMatrixMap xm(x->value.data(), n, d);
  const ConstMatrixMap wm(w->value.data(), o, d);
  om.noalias() = xm * wm.transpose();
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < o; ++j) om(r, j) += b->value[j];

  note_params(tape, {&w, &b});
  const bool track = tracking(tape, {&x, &w, &b});
  Var result = make_output(std::move(out), track);
  if (track) {
    tape->record([x, w, b, result, n, d, o] {
      if (result->grad.empty()) return;
      const ConstMatrixMap g(result->grad.data(), n, o);
      if (x->requires_grad) {
        MatrixMap dx(x->grad_buffer().data(), n, d);
        const ConstMatrixMap wm(w->value.data(), o, d);
        dx.noalias() += g * wm;
      }
      if (w->requires_grad) {
        MatrixMap dw(w->grad_buffer().data(), o, d);
        const ConstMatrixMap xm(x->value.data(), n, d);
        dw.noalias() += g.transpose() * xm;
      }
      if (b->requires_grad) {
        Tensor& db = b->grad_buffer();
        for (int r = 0; r < n; ++r)
          for (int j = 0; j < o; ++j) db[j] += g(r, j);
      }
    });
  }
  return result;
}

Var concat_channels(Tape* tape, const Var& a, const Var& b) {
  require_rank(a, 4, "concat_channels");
  require_rank(b, 4, "concat_channels");
  const int n = a->value.dim(0), ca = a->value.dim(1), cb = b->value.dim(1);
  const int h = a->value.dim(2), w = a->value.dim(3);
  if (b->value.dim(0) != n || b->value.dim(2) != h || b->value.dim(3) != w)
    throw std::invalid_argument("concat_channels: shape mismatch " + a->value.shape_string() +
                                " vs " + b->value.shape_string());
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t sa = ca * plane, sb = cb * plane;
  Tensor out({n, ca + cb, h, w});
  for (int i = 0; i < n; ++i) {
    std::copy_n(a->value.data() + i * sa, sa, out.data() + i * (sa + sb));
    std::copy_n(b->value.data() + i * sb, sb, out.data() + i * (sa + sb) + sa);
  }
  const bool track = tracking(tape, {&a, &b});
  Var result = make_output(std::move(out), track);
  if (track) {
    tape->record([a, b, result, n, sa, sb] {
      if (result->grad.empty()) return;
      const double* g = result->grad.data();
      for (int i = 0; i < n; ++i) {
        if (a->requires_grad) {
          double* da = a->grad_buffer().data() + i * sa;
          for (std::size_t j = 0; j < sa; ++j) da[j] += g[i * (sa + sb) + j];
        }
        if (b->requires_grad) {
          double* db = b->grad_buffer().data() + i * sb;
          for (std::size_t j = 0; j < sb; ++j) db[j] += g[i * (sa + sb) + sa + j];
        }
      }
    });
  }
  return result;
}

Var concat_rows(Tape* tape, const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  std::vector<int> shape = parts[0]->value.shape();
  int rows = 0;
  bool any_grad = false;
  for (const Var& p : parts) {
    auto s = p->value.shape();
    if (s.size() != shape.size() || !std::equal(s.begin() + 1, s.end(), shape.begin() + 1))
      throw std::invalid_argument("concat_rows: trailing shapes differ");
    rows += s[0];
    any_grad = any_grad || p->requires_grad;
  }
  shape[0] = rows;
  Tensor out(shape);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy_n(p->value.data(), p->value.size(), out.data() + offset);
    offset += p->value.size();
  }
  const bool track = tape != nullptr && any_grad;
  Var result = make_output(std::move(out), track);
  if (track) {
    tape->record([parts, result] {
      if (result->grad.empty()) return;
      std::size_t offset = 0;
      for (const Var& p : parts) {
        if (p->requires_grad) {
          double* dp = p->grad_buffer().data();
          for (std::size_t j = 0; j < p->value.size(); ++j) dp[j] += result->grad[offset + j];
        }
        offset += p->value.size();
      }
    });
  }
  return result;
}

Var slice_rows(Tape* tape, const Var& x, int begin, int count) {
  if (x->value.rank() < 1 || begin < 0 || count < 0 || begin + count > x->value.dim(0))
    throw std::out_of_range("slice_rows: range outside " + x->value.shape_string());
  std::vector<int> shape = x->value.shape();
  shape[0] = count;
  const std::size_t stride = x->value.row_size();
  Tensor out(shape);
  std::copy_n(x->value.data() + begin * stride, count * stride, out.data());
  const bool track = tracking(tape, {&x});
  Var result = make_output(std::move(out), track);
  if (track) {
    tape->record([x, result, begin, stride] {
      if (result->grad.empty()) return;
      double* dx = x->grad_buffer().data() + begin * stride;
      for (std::size_t j = 0; j < result->value.size(); ++j) dx[j] += result->grad[j];
    });
  }
  return result;
}

Var softmax(Tape* tape, const Var& logits) {
  require_rank(logits, 2, "softmax");
  const int n = logits->value.dim(0), k = logits->value.dim(1);
  Tensor out({n, k});
  for (int r = 0; r < n; ++r) {
    const double* z = logits->value.data() + static_cast<std::size_t>(r) * k;
    double* p = out.data() + static_cast<std::size_t>(r) * k;
    const double mx = *std::max_element(z, z + k);
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += (p[j] = std::exp(z[j] - mx));
    for (int j = 0; j < k; ++j) p[j] /= s;
  }
  const bool track = tracking(tape, {&logits});
  Var result = make_output(std::move(out), track);
  if (track) {
    tape->record([logits, result, n, k] {
      if (result->grad.empty()) return;
      double* dz = logits->grad_buffer().data();
      for (int r = 0; r < n; ++r) {
        const double* p = result->value.data() + static_cast<std::size_t>(r) * k;
        const double* g = result->grad.data() + static_cast<std::size_t>(r) * k;
        double dot = 0.0;
        for (int j = 0; j < k; ++j) dot += p[j] * g[j];
        for (int j = 0; j < k; ++j) dz[static_cast<std::size_t>(r) * k + j] += p[j] * (g[j] - dot);
      }
    });
  }
  return result;
}

Var soft_cross_entropy(Tape* tape, const Var& logits, const Tensor& targets) {
  require_rank(logits, 2, "soft_cross_entropy");
  if (!logits->value.same_shape(targets))
    throw std::invalid_argument("soft_cross_entropy: target shape mismatch");
  const int n = logits->value.dim(0), k = logits->value.dim(1);
  auto probs = std::make_shared<Tensor>(logits->value.shape());
  double total = 0.0;
  for (int r = 0; r < n; ++r) {
    const double* z = logits->value.data() + static_cast<std::size_t>(r) * k;
    const double* t = targets.data() + static_cast<std::size_t>(r) * k;
    const double mx = *std::max_element(z, z + k);
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += std::exp(z[j] - mx);
    const double log_s = std::log(s);
    for (int j = 0; j < k; ++j) {
      const double log_p = z[j] - mx - log_s;
      (*probs)[static_cast<std::size_t>(r) * k + j] = std::exp(log_p);
      total -= t[j] * log_p;
    }
  }
  const bool track = tracking(tape, {&logits});
  Var result = make_output(Tensor({1}, n > 0 ? total / n : 0.0), track);
  if (track) {
    tape->record([logits, result, probs, targets, n, k] {
      const double g = scalar_grad(result) / n;
      if (result->grad.empty()) return;
      double* dz = logits->grad_buffer().data();
      for (int r = 0; r < n; ++r) {
        const std::size_t off = static_cast<std::size_t>(r) * k;
        double tsum = 0.0;
        for (int j = 0; j < k; ++j) tsum += targets[off + j];
        for (int j = 0; j < k; ++j) dz[off + j] += g * ((*probs)[off + j] * tsum - targets[off + j]);
      }
    });
  }
  return result;
}

Var squared_l2_rows(Tape* tape, const Var& probs, const Tensor& targets) {
  if (!probs->value.same_shape(targets))
    throw std::invalid_argument("squared_l2_rows: target shape mismatch");
  const int n = probs->value.dim(0);
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double d = probs->value[i] - targets[i];
    total += d * d;
  }
  const bool track = tracking(tape, {&probs});
  Var result = make_output(Tensor({1}, n > 0 ? total / n : 0.0), track);
  if (track) {
    tape->record([probs, result, targets, n] {
      if (result->grad.empty()) return;
      const double g = 2.0 * result->grad[0] / n;
      double* dp = probs->grad_buffer().data();
      for (std::size_t i = 0; i < targets.size(); ++i) dp[i] += g * (probs->value[i] - targets[i]);
    });
  }
  return result;
}

Var mean_squared_error(Tape* tape, const Var& pred, const Tensor& target) {
  if (pred->value.size() != target.size())
    throw std::invalid_argument("mean_squared_error: size mismatch");
  const double m = static_cast<double>(target.size());
  double total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = pred->value[i] - target[i];
    total += d * d;
  }
  const bool track = tracking(tape, {&pred});
  Var result = make_output(Tensor({1}, m > 0 ? total / m : 0.0), track);
  if (track) {
    tape->record([pred, result, target, m] {
      if (result->grad.empty()) return;
      const double g = 2.0 * result->grad[0] / m;
      double* dp = pred->grad_buffer().data();
      for (std::size_t i = 0; i < target.size(); ++i) dp[i] += g * (pred->value[i] - target[i]);
    });
  }
  return result;
}

Var kl_divergence(Tape* tape, const Tensor& target, const Var& probs, double floor) {
  if (!probs->value.same_shape(target))
    throw std::invalid_argument("kl_divergence: target shape mismatch");
  const int n = probs->value.dim(0);
  double total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double t = target[i];
    if (t <= 0.0) continue;
    total += t * (std::log(t) - std::log(std::max(probs->value[i], floor)));
  }
  const bool track = tracking(tape, {&probs});
  Var result = make_output(Tensor({1}, n > 0 ? total / n : 0.0), track);
  if (track) {
    tape->record([probs, result, target, n, floor] {
      if (result->grad.empty()) return;
      const double g = result->grad[0] / n;
      double* dp = probs->grad_buffer().data();
      for (std::size_t i = 0; i < target.size(); ++i) {
        const double q = probs->value[i];
        if (target[i] > 0.0 && q > floor) dp[i] -= g * target[i] / q;
      }
    });
  }
  return result;
}

Var weighted_sum(Tape* tape, const std::vector<Var>& terms, const std::vector<double>& weights) {
  if (terms.size() != weights.size())
    throw std::invalid_argument("weighted_sum: terms and weights differ in length");
  double total = 0.0;
  bool any_grad = false;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i]->value.size() != 1) throw std::invalid_argument("weighted_sum: non-scalar term");
    total += weights[i] * terms[i]->value[0];
    any_grad = any_grad || terms[i]->requires_grad;
  }
  const bool track = tape != nullptr && any_grad;
  Var result = make_output(Tensor({1}, total), track);
  if (track) {
    tape->record([terms, weights, result] {
      if (result->grad.empty()) return;
      for (std::size_t i = 0; i < terms.size(); ++i)
        if (terms[i]->requires_grad) terms[i]->grad_buffer()[0] += weights[i] * result->grad[0];
    });
  }
  return result;
}

}  // namespace ops

}  // namespace enaet
