#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mrms/common.hpp"
#include "mrms/tensor.hpp"

namespace mrms {

namespace detail {

inline void check_dim(int got, int want, const std::string& where) {
    if (got != want)
        throw std::invalid_argument(where + ": expected " + std::to_string(want) + ", got " +
                                    std::to_string(got));
}

}  // namespace detail

// 1-D convolution, stride 1, "same" zero padding. input B x Cin x L,
// weight Cout x Cin x k (k odd), bias Cout -> B x Cout x L.
inline Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    require(input.ndim() == 3, "conv1d: input must be B x Cin x L");
    require(weight.ndim() == 3, "conv1d: weight must be Cout x Cin x k");
    require(bias.ndim() == 1, "conv1d: bias must be Cout");
    const int B = input.dim(0), Cin = input.dim(1), L = input.dim(2);
    const int Cout = weight.dim(0), k = weight.dim(2);
    detail::check_dim(weight.dim(1), Cin, "conv1d: weight input-channel dim");
    detail::check_dim(bias.dim(0), Cout, "conv1d: bias dim");
    require(k % 2 == 1, "conv1d: kernel size must be odd");
    require(k <= L, "conv1d: kernel size exceeds series length");
    const int pad = (k - 1) / 2;

    std::vector<double> out(static_cast<std::size_t>(B) * Cout * L);
    const double* in = input.data().data();
    const double* w = weight.data().data();
    const double* bs = bias.data().data();
    for (int b = 0; b < B; ++b) {
        for (int o = 0; o < Cout; ++o) {
            double* orow = out.data() + (static_cast<std::size_t>(b) * Cout + o) * L;
            std::fill(orow, orow + L, bs[o]);
            for (int c = 0; c < Cin; ++c) {
                const double* irow = in + (static_cast<std::size_t>(b) * Cin + c) * L;
                const double* wrow = w + (static_cast<std::size_t>(o) * Cin + c) * k;
                for (int j = 0; j < k; ++j) {
                    const int off = j - pad;
                    const int t0 = std::max(0, -off);
                    const int t1 = std::min(L, L - off);
                    const double wj = wrow[j];
                    for (int t = t0; t < t1; ++t) orow[t] += wj * irow[t + off];
                }
            }
        }
    }

    Tensor in_t = input, w_t = weight, b_t = bias;
    return detail::make_op(
        {B, Cout, L}, std::move(out), {input, weight, bias},
        [in_t, w_t, b_t, B, Cin, L, Cout, k, pad](const detail::TensorNode& self) mutable {
            const double* go = self.grad.data();
            const double* in = in_t.data().data();
            const double* w = w_t.data().data();
            if (b_t.requires_grad()) {
                double* gb = b_t.grad().data();
                for (int b = 0; b < B; ++b)
                    for (int o = 0; o < Cout; ++o) {
                        const double* grow = go + (static_cast<std::size_t>(b) * Cout + o) * L;
                        double s = 0.0;
                        for (int t = 0; t < L; ++t) s += grow[t];
                        gb[o] += s;
                    }
            }
            if (w_t.requires_grad()) {
                double* gw = w_t.grad().data();
                for (int b = 0; b < B; ++b)
                    for (int o = 0; o < Cout; ++o) {
                        const double* grow = go + (static_cast<std::size_t>(b) * Cout + o) * L;
                        for (int c = 0; c < Cin; ++c) {
                            const double* irow = in + (static_cast<std::size_t>(b) * Cin + c) * L;
                            double* gwrow = gw + (static_cast<std::size_t>(o) * Cin + c) * k;
                            for (int j = 0; j < k; ++j) {
                                const int off = j - pad;
                                const int t0 = std::max(0, -off);
                                const int t1 = std::min(L, L - off);
                                double s = 0.0;
                                for (int t = t0; t < t1; ++t) s += grow[t] * irow[t + off];
                                gwrow[j] += s;
                            }
                        }
                    }
            }
            if (in_t.requires_grad()) {
                double* gi = in_t.grad().data();
                for (int b = 0; b < B; ++b)
                    for (int o = 0; o < Cout; ++o) {
                        const double* grow = go + (static_cast<std::size_t>(b) * Cout + o) * L;
                        for (int c = 0; c < Cin; ++c) {
                            double* girow = gi + (static_cast<std::size_t>(b) * Cin + c) * L;
                            const double* wrow = w + (static_cast<std::size_t>(o) * Cin + c) * k;
                            for (int j = 0; j < k; ++j) {
                                const int off = j - pad;
                                const int t0 = std::max(0, -off);
                                const int t1 = std::min(L, L - off);
                                const double wj = wrow[j];
                                for (int t = t0; t < t1; ++t) girow[t + off] += wj * grow[t];
                            }
                        }
                    }
            }
        });
}

// Trainable affine + running statistics for one batch-norm layer. The
// running stats are non-trainable tensors so they serialize and snapshot
// through the same machinery as the parameters.
struct BatchNorm1d {
    Tensor gamma;  // C
    Tensor beta;   // C
    Tensor running_mean;
    Tensor running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    explicit BatchNorm1d(int channels = 0) { reset(channels); }

    void reset(int channels) {
        if (channels <= 0) return;
        gamma = Tensor::from_data({channels}, std::vector<double>(channels, 1.0), true);
        beta = Tensor::zeros({channels}, true);
        running_mean = Tensor::zeros({channels});
        running_var = Tensor::from_data({channels}, std::vector<double>(channels, 1.0));
    }

    int channels() const { return gamma.valid() ? gamma.dim(0) : 0; }
};

// Per-channel normalization over (B, L). Train/EvalFrozen use batch
// statistics; only Train updates the running stats (unbiased variance, as is
// conventional for the running estimate). Infer is a pure affine map.
inline Tensor batch_norm(const Tensor& input, BatchNorm1d& bn, Mode mode) {
    require(input.ndim() == 3, "batch_norm: input must be B x C x L");
    const int B = input.dim(0), C = input.dim(1), L = input.dim(2);
    detail::check_dim(C, bn.channels(), "batch_norm: channel dim");
    const std::size_t n_per_c = static_cast<std::size_t>(B) * L;
    const bool use_batch_stats = (mode != Mode::Infer);
    require(!use_batch_stats || n_per_c >= 2, "batch_norm: train mode needs B*L >= 2");

    std::vector<double> mean(C), invstd(C);
    if (use_batch_stats) {
        for (int c = 0; c < C; ++c) {
            double m = 0.0;
            for (int b = 0; b < B; ++b) {
                const double* row = input.data().data() + (static_cast<std::size_t>(b) * C + c) * L;
                for (int t = 0; t < L; ++t) m += row[t];
            }
            m /= static_cast<double>(n_per_c);
            double v = 0.0;
            for (int b = 0; b < B; ++b) {
                const double* row = input.data().data() + (static_cast<std::size_t>(b) * C + c) * L;
                for (int t = 0; t < L; ++t) v += (row[t] - m) * (row[t] - m);
            }
            v /= static_cast<double>(n_per_c);
            mean[c] = m;
            invstd[c] = 1.0 / std::sqrt(v + bn.eps);
            if (mode == Mode::Train) {
                const double unbiased =
                    n_per_c > 1 ? v * static_cast<double>(n_per_c) / static_cast<double>(n_per_c - 1)
                                : v;
                auto& rm = bn.running_mean.data();
                auto& rv = bn.running_var.data();
                rm[c] = (1.0 - bn.momentum) * rm[c] + bn.momentum * m;
                rv[c] = (1.0 - bn.momentum) * rv[c] + bn.momentum * unbiased;
            }
        }
    } else {
        for (int c = 0; c < C; ++c) {
            mean[c] = bn.running_mean.data()[c];
            invstd[c] = 1.0 / std::sqrt(bn.running_var.data()[c] + bn.eps);
        }
    }

    auto xhat = std::make_shared<std::vector<double>>(input.size());
    std::vector<double> out(input.size());
    const double* g = bn.gamma.data().data();
    const double* be = bn.beta.data().data();
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
            const std::size_t base = (static_cast<std::size_t>(b) * C + c) * L;
            for (int t = 0; t < L; ++t) {
                const double xh = (input.data()[base + t] - mean[c]) * invstd[c];
                (*xhat)[base + t] = xh;
                out[base + t] = g[c] * xh + be[c];
            }
        }

    Tensor in_t = input, gamma_t = bn.gamma, beta_t = bn.beta;
    return detail::make_op(
        {B, C, L}, std::move(out), {input, bn.gamma, bn.beta},
        [in_t, gamma_t, beta_t, xhat, invstd, B, C, L, n_per_c,
         use_batch_stats](const detail::TensorNode& self) mutable {
            const double* go = self.grad.data();
            const double* g = gamma_t.data().data();
            // per-channel reductions shared by all three gradients
            std::vector<double> sum_go(C, 0.0), sum_go_xhat(C, 0.0);
            for (int b = 0; b < B; ++b)
                for (int c = 0; c < C; ++c) {
                    const std::size_t base = (static_cast<std::size_t>(b) * C + c) * L;
                    for (int t = 0; t < L; ++t) {
                        sum_go[c] += go[base + t];
                        sum_go_xhat[c] += go[base + t] * (*xhat)[base + t];
                    }
                }
            if (gamma_t.requires_grad()) {
                double* gg = gamma_t.grad().data();
                for (int c = 0; c < C; ++c) gg[c] += sum_go_xhat[c];
            }
            if (beta_t.requires_grad()) {
                double* gb = beta_t.grad().data();
                for (int c = 0; c < C; ++c) gb[c] += sum_go[c];
            }
            if (in_t.requires_grad()) {
                double* gi = in_t.grad().data();
                const double n = static_cast<double>(n_per_c);
                for (int b = 0; b < B; ++b)
                    for (int c = 0; c < C; ++c) {
                        const std::size_t base = (static_cast<std::size_t>(b) * C + c) * L;
                        for (int t = 0; t < L; ++t) {
                            const double dxhat = go[base + t] * g[c];
                            if (use_batch_stats) {
                                gi[base + t] +=
                                    invstd[c] * (dxhat - (g[c] / n) * sum_go[c] -
                                                 (*xhat)[base + t] * (g[c] / n) * sum_go_xhat[c]);
                            } else {
                                gi[base + t] += dxhat * invstd[c];
                            }
                        }
                    }
            }
        });
}

inline Tensor relu(const Tensor& input) {
    std::vector<double> out(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = std::max(0.0, input.data()[i]);
    Tensor in_t = input;
    return detail::make_op(input.shape(), std::move(out), {input},
                           [in_t](const detail::TensorNode& self) mutable {
                               if (!in_t.requires_grad()) return;
                               double* gi = in_t.grad().data();
                               const double* x = in_t.data().data();
                               for (std::size_t i = 0; i < self.size(); ++i)
                                   if (x[i] > 0.0) gi[i] += self.grad[i];
                           });
}

// Inverted dropout: active only in Train mode, scaling kept values by
// 1/(1-rate) so inference is the identity.
inline Tensor dropout(const Tensor& input, double rate, Mode mode, Rng& rng) {
    require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
    if (mode != Mode::Train || rate == 0.0) return input;
    const double scale = 1.0 / (1.0 - rate);
    auto mask = std::make_shared<std::vector<double>>(input.size());
    std::vector<double> out(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        (*mask)[i] = rng.bernoulli(rate) ? 0.0 : scale;
        out[i] = input.data()[i] * (*mask)[i];
    }
    Tensor in_t = input;
    return detail::make_op(input.shape(), std::move(out), {input},
                           [in_t, mask](const detail::TensorNode& self) mutable {
                               if (!in_t.requires_grad()) return;
                               double* gi = in_t.grad().data();
                               for (std::size_t i = 0; i < self.size(); ++i)
                                   gi[i] += self.grad[i] * (*mask)[i];
                           });
}

// B x C x L -> B x C temporal mean.
inline Tensor global_avg_pool(const Tensor& input) {
    require(input.ndim() == 3, "global_avg_pool: input must be B x C x L");
    const int B = input.dim(0), C = input.dim(1), L = input.dim(2);
    std::vector<double> out(static_cast<std::size_t>(B) * C);
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
            const double* row = input.data().data() + (static_cast<std::size_t>(b) * C + c) * L;
            double s = 0.0;
            for (int t = 0; t < L; ++t) s += row[t];
            out[static_cast<std::size_t>(b) * C + c] = s / L;
        }
    Tensor in_t = input;
    return detail::make_op({B, C}, std::move(out), {input},
                           [in_t, B, C, L](const detail::TensorNode& self) mutable {
                               if (!in_t.requires_grad()) return;
                               double* gi = in_t.grad().data();
                               for (int b = 0; b < B; ++b)
                                   for (int c = 0; c < C; ++c) {
                                       const double gshare =
                                           self.grad[static_cast<std::size_t>(b) * C + c] / L;
                                       double* girow =
                                           gi + (static_cast<std::size_t>(b) * C + c) * L;
                                       for (int t = 0; t < L; ++t) girow[t] += gshare;
                                   }
                           });
}

// Fully connected map B x F -> B x G with weight G x F plus bias.
inline Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    require(input.ndim() == 2, "dense: input must be B x F");
    require(weight.ndim() == 2, "dense: weight must be G x F");
    const int B = input.dim(0), F = input.dim(1), G = weight.dim(0);
    detail::check_dim(weight.dim(1), F, "dense: weight feature dim");
    detail::check_dim(bias.dim(0), G, "dense: bias dim");

    std::vector<double> out(static_cast<std::size_t>(B) * G);
    for (int b = 0; b < B; ++b) {
        const double* xrow = input.data().data() + static_cast<std::size_t>(b) * F;
        for (int g = 0; g < G; ++g) {
            const double* wrow = weight.data().data() + static_cast<std::size_t>(g) * F;
            double s = bias.data()[g];
            for (int f = 0; f < F; ++f) s += xrow[f] * wrow[f];
            out[static_cast<std::size_t>(b) * G + g] = s;
        }
    }
    Tensor in_t = input, w_t = weight, b_t = bias;
    return detail::make_op(
        {B, G}, std::move(out), {input, weight, bias},
        [in_t, w_t, b_t, B, F, G](const detail::TensorNode& self) mutable {
            const double* go = self.grad.data();
            if (b_t.requires_grad()) {
                double* gb = b_t.grad().data();
                for (int b = 0; b < B; ++b)
                    for (int g = 0; g < G; ++g) gb[g] += go[static_cast<std::size_t>(b) * G + g];
            }
            if (w_t.requires_grad()) {
                double* gw = w_t.grad().data();
                const double* x = in_t.data().data();
                for (int b = 0; b < B; ++b)
                    for (int g = 0; g < G; ++g) {
                        const double gv = go[static_cast<std::size_t>(b) * G + g];
                        const double* xrow = x + static_cast<std::size_t>(b) * F;
                        double* gwrow = gw + static_cast<std::size_t>(g) * F;
                        for (int f = 0; f < F; ++f) gwrow[f] += gv * xrow[f];
                    }
            }
            if (in_t.requires_grad()) {
                double* gi = in_t.grad().data();
                const double* w = w_t.data().data();
                for (int b = 0; b < B; ++b)
                    for (int g = 0; g < G; ++g) {
                        const double gv = go[static_cast<std::size_t>(b) * G + g];
                        const double* wrow = w + static_cast<std::size_t>(g) * F;
                        double* girow = gi + static_cast<std::size_t>(b) * F;
                        for (int f = 0; f < F; ++f) girow[f] += gv * wrow[f];
                    }
            }
        });
}

// Concatenate along the channel axis: inputs B x Ci x L -> B x sum(Ci) x L.
inline Tensor concat_channels(const std::vector<Tensor>& inputs) {
    require(!inputs.empty(), "concat_channels: no inputs");
    const int B = inputs[0].dim(0), L = inputs[0].dim(2);
    int Ctot = 0;
    for (const auto& t : inputs) {
        require(t.ndim() == 3, "concat_channels: inputs must be B x C x L");
        detail::check_dim(t.dim(0), B, "concat_channels: batch dim");
        detail::check_dim(t.dim(2), L, "concat_channels: length dim");
        Ctot += t.dim(1);
    }
    std::vector<double> out(static_cast<std::size_t>(B) * Ctot * L);
    for (int b = 0; b < B; ++b) {
        int coff = 0;
        for (const auto& t : inputs) {
            const int C = t.dim(1);
            const double* src = t.data().data() + static_cast<std::size_t>(b) * C * L;
            double* dst = out.data() + (static_cast<std::size_t>(b) * Ctot + coff) * L;
            std::copy(src, src + static_cast<std::size_t>(C) * L, dst);
            coff += C;
        }
    }
    std::vector<Tensor> ins = inputs;
    return detail::make_op({B, Ctot, L}, std::move(out), inputs,
                           [ins, B, Ctot, L](const detail::TensorNode& self) mutable {
                               const double* go = self.grad.data();
                               for (int b = 0; b < B; ++b) {
                                   int coff = 0;
                                   for (auto& t : ins) {
                                       const int C = t.dim(1);
                                       if (t.requires_grad()) {
                                           double* gi = t.grad().data() +
                                                        static_cast<std::size_t>(b) * C * L;
                                           const double* src =
                                               go + (static_cast<std::size_t>(b) * Ctot + coff) * L;
                                           for (std::size_t i = 0;
                                                i < static_cast<std::size_t>(C) * L; ++i)
                                               gi[i] += src[i];
                                       }
                                       coff += C;
                                   }
                               }
                           });
}

// Row-wise softmax of a B x C matrix, max-subtracted. Plain values, no graph.
inline std::vector<double> softmax_rows(const std::vector<double>& logits, int B, int C) {
    std::vector<double> probs(logits.size());
    for (int b = 0; b < B; ++b) {
        const double* row = logits.data() + static_cast<std::size_t>(b) * C;
        double* prow = probs.data() + static_cast<std::size_t>(b) * C;
        double mx = row[0];
        for (int c = 1; c < C; ++c) mx = std::max(mx, row[c]);
        double z = 0.0;
        for (int c = 0; c < C; ++c) {
            prow[c] = std::exp(row[c] - mx);
            z += prow[c];
        }
        for (int c = 0; c < C; ++c) prow[c] /= z;
    }
    return probs;
}

// Mean over the batch of -log softmax(logits)[label]. Backward emits the
// standard (softmax - onehot) / B.
inline Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    require(logits.ndim() == 2, "softmax_cross_entropy: logits must be B x C");
    const int B = logits.dim(0), C = logits.dim(1);
    require(C >= 2, "softmax_cross_entropy: need at least 2 classes");
    detail::check_dim(static_cast<int>(labels.size()), B, "softmax_cross_entropy: label count");
    for (int b = 0; b < B; ++b)
        require(labels[b] >= 0 && labels[b] < C,
                "softmax_cross_entropy: label out of range at row " + std::to_string(b));

    auto probs = std::make_shared<std::vector<double>>(softmax_rows(logits.data(), B, C));
    double loss = 0.0;
    for (int b = 0; b < B; ++b) {
        const double* row = logits.data().data() + static_cast<std::size_t>(b) * C;
        double mx = row[0];
        for (int c = 1; c < C; ++c) mx = std::max(mx, row[c]);
        double z = 0.0;
        for (int c = 0; c < C; ++c) z += std::exp(row[c] - mx);
        loss += -(row[labels[b]] - mx - std::log(z));
    }
    loss /= B;

    Tensor logits_t = logits;
    return detail::make_op({1}, {loss}, {logits},
                           [logits_t, probs, labels, B, C](const detail::TensorNode& self) mutable {
                               if (!logits_t.requires_grad()) return;
                               const double g = self.grad[0];
                               double* gl = logits_t.grad().data();
                               for (int b = 0; b < B; ++b)
                                   for (int c = 0; c < C; ++c) {
                                       const std::size_t i = static_cast<std::size_t>(b) * C + c;
                                       const double onehot = (labels[b] == c) ? 1.0 : 0.0;
                                       gl[i] += g * ((*probs)[i] - onehot) / B;
                                   }
                           });
}

}  // namespace mrms
