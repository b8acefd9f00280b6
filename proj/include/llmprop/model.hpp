// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "llmprop/common.hpp"
#include "llmprop/tokenizer.hpp"

namespace llmprop {

struct EncoderConfig {
    std::size_t vocab_size = 0;
    std::size_t hidden_size = 64;
    std::size_t num_layers = 2;
    std::size_t num_heads = 2;
    std::size_t ffn_size = 0; // 0 means 4 * hidden_size
    double dropout = 0.2;
    std::size_t max_positions = 1024;

    std::size_t ffn() const { return ffn_size ? ffn_size : 4 * hidden_size; }
    std::size_t head_dim() const { return hidden_size / num_heads; }
    void validate() const;
    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

enum class HeadKind { regression, classification };
enum class Pooling { cls, mean };

std::string_view to_string(HeadKind k);
std::string_view to_string(Pooling p);
Pooling parse_pooling(std::string_view s);
inline HeadKind head_kind_for(Task t) { return is_regression(t) ? HeadKind::regression : HeadKind::classification; }

/// Parameters of encoder + linear head.
std::size_t parameter_count(const EncoderConfig& cfg, bool include_head = true);
/// Same dimensions as a full encoder-decoder: shared token embeddings, one
/// positional table per stack, decoder layers with self- and cross-attention.
std::size_t seq2seq_parameter_count(const EncoderConfig& cfg);

// Offsets of each tensor inside the flat parameter vector.
struct ParameterLayout {
    struct Layer {
        Eigen::Index norm1, wq, wk, wv, wo, norm2, w1, w2;
    };
    Eigen::Index tok_emb = 0, pos_emb = 0, final_norm = 0, head_w = 0, head_b = 0;
    std::vector<Layer> layers;
    Eigen::Index encoder_size = 0; // head starts here
    Eigen::Index total = 0;

    static ParameterLayout make(const EncoderConfig& cfg);
};

template <typename Scalar>
inline Scalar logistic(Scalar z) {
    return z >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-z)) : std::exp(z) / (Scalar(1) + std::exp(z));
}

// Encoder-only transformer (pre-RMSNorm blocks, bias-free projections, ReLU
// feed-forward, learned absolute positions) with one linear output unit read
// from the pooled representation. The decoder does not exist.
template <typename Scalar>
class EncoderModel {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
    using MatrixMap = Eigen::Map<Matrix>;
    using ConstMatrixMap = Eigen::Map<const Matrix>;

    enum class Mode { eval, train };

    static constexpr Scalar kNormEps = Scalar(1e-6);

    struct LayerCache {
        Matrix x_in, n1, q, k, v, concat, drop1, x_mid, n2, h_pre, h_act, drop2;
        Vector inv_r1, inv_r2;
        std::vector<Matrix> probs; // one (T x T) attention matrix per head
    };

    struct SequenceCache {
        std::vector<char> valid;
        Matrix drop0;
        std::vector<LayerCache> layers;
        Matrix x_last;
        Vector inv_rf;
        Matrix out;
        Vector pooled;
    };

    EncoderModel() = default;
    EncoderModel(EncoderConfig cfg, HeadKind head, Pooling pooling)
        : cfg_(cfg), head_(head), pooling_(pooling), layout_(ParameterLayout::make(cfg)) {
        cfg_.validate();
        cfg_.ffn_size = cfg_.ffn();
        params_.setZero(layout_.total);
    }

    const EncoderConfig& config() const { return cfg_; }
    HeadKind head_kind() const { return head_; }
    Pooling pooling() const { return pooling_; }
    void set_head_kind(HeadKind k) { head_ = k; }
    void set_pooling(Pooling p) { pooling_ = p; }
    const ParameterLayout& layout() const { return layout_; }

    Vector& parameters() { return params_; }
    const Vector& parameters() const { return params_; }
    Eigen::Index size() const { return layout_.total; }
    Eigen::Index encoder_size() const { return layout_.encoder_size; }

    MatrixMap tensor(Eigen::Index off, Eigen::Index rows, Eigen::Index cols) {
        return MatrixMap(params_.data() + off, rows, cols);
    }
    ConstMatrixMap tensor(Eigen::Index off, Eigen::Index rows, Eigen::Index cols) const {
        return ConstMatrixMap(params_.data() + off, rows, cols);
    }

    auto head_weight() const { return params_.segment(layout_.head_w, H()); }
    auto head_weight() { return params_.segment(layout_.head_w, H()); }
    Scalar head_bias() const { return params_(layout_.head_b); }
    Scalar& head_bias() { return params_(layout_.head_b); }

    /// Encoder weights: uniform(+-sqrt(3/fan_in)) projections, unit norm gains,
    /// uniform(+-1) embeddings. The head is initialized by init_head.
    void init_random(std::uint64_t seed) {
        Rng rng(seed);
        auto fill = [&](Eigen::Index off, Eigen::Index count, double bound) {
            for (Eigen::Index i = 0; i < count; ++i) params_(off + i) = Scalar(uniform_real(rng, -bound, bound));
        };
        const auto h = H(), f = F();
        fill(layout_.tok_emb, V() * h, 1.0);
        fill(layout_.pos_emb, P() * h, 1.0);
        const double b_h = std::sqrt(3.0 / static_cast<double>(h));
        const double b_f = std::sqrt(3.0 / static_cast<double>(f));
        for (const auto& l : layout_.layers) {
            params_.segment(l.norm1, h).setOnes();
            params_.segment(l.norm2, h).setOnes();
            fill(l.wq, h * h, b_h);
            fill(l.wk, h * h, b_h);
            fill(l.wv, h * h, b_h);
            fill(l.wo, h * h, b_h);
            fill(l.w1, h * f, b_h);
            fill(l.w2, f * h, b_f);
        }
        params_.segment(layout_.final_norm, h).setOnes();
        init_head(derive_seed(seed, 0x4ead));
    }

    /// Zero bias, weights uniform in [-0.02, 0.02].
    void init_head(std::uint64_t seed) {
        Rng rng(seed);
        for (Eigen::Index i = 0; i < H(); ++i) params_(layout_.head_w + i) = Scalar(uniform_real(rng, -0.02, 0.02));
        params_(layout_.head_b) = Scalar(0);
    }

    /// Raw head outputs (affine in the pooled vector), one per batch row.
    /// In train mode with dropout > 0, rng must be provided.
    Vector forward(const Batch& batch, Mode mode, Rng* rng, std::vector<SequenceCache>* caches) const {
        check_batch(batch);
        const Eigen::Index B = batch.rows();
        Vector z(B);
        if (caches) caches->assign(static_cast<std::size_t>(B), SequenceCache{});
        for (Eigen::Index b = 0; b < B; ++b) {
            SequenceCache local;
            SequenceCache& c = caches ? (*caches)[static_cast<std::size_t>(b)] : local;
            run_sequence(batch, b, mode, rng, c);
            z(b) = c.pooled.dot(head_weight()) + head_bias();
        }
        return z;
    }

    /// Final hidden states, one (length x hidden) matrix per batch row.
    std::vector<Matrix> encode(const Batch& batch) const {
        check_batch(batch);
        std::vector<Matrix> states;
        for (Eigen::Index b = 0; b < batch.rows(); ++b) {
            SequenceCache c;
            run_sequence(batch, b, Mode::eval, nullptr, c);
            states.push_back(std::move(c.out));
        }
        return states;
    }

    /// Regression: affine output in scaled-label space. Classification: logistic of it.
    Vector predict(const Batch& batch) const {
        Vector z = forward(batch, Mode::eval, nullptr, nullptr);
        if (head_ == HeadKind::classification) z = z.unaryExpr([](Scalar v) { return logistic(v); });
        return z;
    }

    /// Gradient of sum_b d_z(b) * z(b) with respect to all parameters.
    Vector backward(const Batch& batch, const std::vector<SequenceCache>& caches, const Vector& d_z) const {
        Vector grad = Vector::Zero(layout_.total);
        for (Eigen::Index b = 0; b < batch.rows(); ++b)
            backward_sequence(batch, b, caches[static_cast<std::size_t>(b)], d_z(b), grad);
        return grad;
    }

private:
    Eigen::Index H() const { return static_cast<Eigen::Index>(cfg_.hidden_size); }
    Eigen::Index F() const { return static_cast<Eigen::Index>(cfg_.ffn()); }
    Eigen::Index V() const { return static_cast<Eigen::Index>(cfg_.vocab_size); }
    Eigen::Index P() const { return static_cast<Eigen::Index>(cfg_.max_positions); }
    Eigen::Index NH() const { return static_cast<Eigen::Index>(cfg_.num_heads); }
    Eigen::Index DH() const { return static_cast<Eigen::Index>(cfg_.head_dim()); }

    void check_batch(const Batch& batch) const {
        if (batch.ids.rows() != batch.mask.rows() || batch.ids.cols() != batch.mask.cols())
            throw DataError("ids and mask shapes differ");
        if (batch.cols() > P())
            throw DataError("sequence length " + std::to_string(batch.cols()) + " exceeds max_positions " +
                            std::to_string(P()));
        for (Eigen::Index i = 0; i < batch.ids.size(); ++i) {
            const auto id = batch.ids.data()[i];
            if (id < 0 || id >= V()) throw DataError("token id " + std::to_string(id) + " outside vocabulary");
        }
    }

    Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, Rng* rng) const {
        if (!rng) throw ConfigError("dropout in train mode needs a random source");
        const double p = cfg_.dropout;
        Matrix m(rows, cols);
        const Scalar keep_scale = Scalar(1.0 / (1.0 - p));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform_unit(*rng) < p ? Scalar(0) : keep_scale;
        return m;
    }

    static void rms_forward(const Matrix& x, const Eigen::Ref<const Vector>& gain, Matrix& y, Vector& inv_r) {
        const Scalar h = Scalar(x.cols());
        inv_r = ((x.rowwise().squaredNorm() / h).array() + kNormEps).rsqrt().matrix();
        y = inv_r.asDiagonal() * x * gain.asDiagonal();
    }

    static Matrix rms_backward(const Matrix& dy, const Matrix& x, const Eigen::Ref<const Vector>& gain,
                               const Vector& inv_r, Eigen::Ref<Vector> d_gain) {
        const Matrix xhat = inv_r.asDiagonal() * x;
        d_gain += (dy.array() * xhat.array()).colwise().sum().transpose().matrix();
        const Matrix dxhat = dy * gain.asDiagonal();
        const Vector proj = (dxhat.array() * xhat.array()).rowwise().sum().matrix() / Scalar(x.cols());
        return inv_r.asDiagonal() * (dxhat - proj.asDiagonal() * xhat);
    }

    void run_sequence(const Batch& batch, Eigen::Index b, Mode mode, Rng* rng, SequenceCache& c) const {
        const Eigen::Index T = batch.cols(), h = H();
        const bool drop = mode == Mode::train && cfg_.dropout > 0;
        if (drop && !rng) throw ConfigError("dropout in train mode needs a random source");

        c.valid.resize(static_cast<std::size_t>(T));
        for (Eigen::Index t = 0; t < T; ++t) c.valid[static_cast<std::size_t>(t)] = batch.mask(b, t) != 0;

        const auto tok = tensor(layout_.tok_emb, V(), h);
        const auto pos = tensor(layout_.pos_emb, P(), h);
        Matrix x(T, h);
        for (Eigen::Index t = 0; t < T; ++t) x.row(t) = tok.row(batch.ids(b, t)) + pos.row(t);
        if (drop) {
            c.drop0 = dropout_mask(T, h, rng);
            x = x.cwiseProduct(c.drop0);
        }

        const Scalar scale = Scalar(1) / std::sqrt(Scalar(DH()));
        c.layers.resize(layout_.layers.size());
        for (std::size_t li = 0; li < layout_.layers.size(); ++li) {
            const auto& L = layout_.layers[li];
            auto& lc = c.layers[li];
            lc.x_in = x;
            rms_forward(x, params_.segment(L.norm1, h), lc.n1, lc.inv_r1);
            lc.q.noalias() = lc.n1 * tensor(L.wq, h, h);
            lc.k.noalias() = lc.n1 * tensor(L.wk, h, h);
            lc.v.noalias() = lc.n1 * tensor(L.wv, h, h);
            lc.concat.setZero(T, h);
            lc.probs.resize(static_cast<std::size_t>(NH()));
            for (Eigen::Index hd = 0; hd < NH(); ++hd) {
                const auto cols = Eigen::seqN(hd * DH(), DH());
                Matrix s = (lc.q(Eigen::all, cols) * lc.k(Eigen::all, cols).transpose()) * scale;
                masked_softmax_rows(s, c.valid);
                lc.concat(Eigen::all, cols).noalias() = s * lc.v(Eigen::all, cols);
                lc.probs[static_cast<std::size_t>(hd)] = std::move(s);
            }
            Matrix a = lc.concat * tensor(L.wo, h, h);
            if (drop) {
                lc.drop1 = dropout_mask(T, h, rng);
                a = a.cwiseProduct(lc.drop1);
            }
            x += a;
            lc.x_mid = x;
            rms_forward(x, params_.segment(L.norm2, h), lc.n2, lc.inv_r2);
            lc.h_pre.noalias() = lc.n2 * tensor(L.w1, h, F());
            lc.h_act = lc.h_pre.cwiseMax(Scalar(0));
            Matrix f = lc.h_act * tensor(L.w2, F(), h);
            if (drop) {
                lc.drop2 = dropout_mask(T, h, rng);
                f = f.cwiseProduct(lc.drop2);
            }
            x += f;
        }
        c.x_last = x;
        rms_forward(x, params_.segment(layout_.final_norm, h), c.out, c.inv_rf);
        c.pooled = pool(c.out, c.valid);
    }

    // Softmax over valid keys only; rows with no valid key become zero.
    static void masked_softmax_rows(Matrix& s, const std::vector<char>& valid) {
        const Eigen::Index T = s.cols();
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            Scalar mx = -std::numeric_limits<Scalar>::infinity();
            for (Eigen::Index j = 0; j < T; ++j)
                if (valid[static_cast<std::size_t>(j)]) mx = std::max(mx, s(i, j));
            Scalar sum = 0;
            for (Eigen::Index j = 0; j < T; ++j) {
                if (valid[static_cast<std::size_t>(j)]) {
                    s(i, j) = std::exp(s(i, j) - mx);
                    sum += s(i, j);
                } else {
                    s(i, j) = 0;
                }
            }
            if (sum > 0) s.row(i) /= sum;
        }
    }

    Vector pool(const Matrix& out, const std::vector<char>& valid) const {
        if (pooling_ == Pooling::cls) {
            if (out.rows() == 0) return Vector::Zero(H());
            return out.row(0).transpose();
        }
        Vector acc = Vector::Zero(H());
        Scalar n = 0;
        for (Eigen::Index t = 0; t < out.rows(); ++t) {
            if (valid[static_cast<std::size_t>(t)]) {
                acc += out.row(t).transpose();
                n += 1;
            }
        }
        return n > 0 ? Vector(acc / n) : acc;
    }

    void backward_sequence(const Batch& batch, Eigen::Index b, const SequenceCache& c, Scalar dz, Vector& grad) const {
        const Eigen::Index T = batch.cols(), h = H();
        grad.segment(layout_.head_w, h) += dz * c.pooled;
        grad(layout_.head_b) += dz;
        const Vector d_pooled = dz * head_weight();

        Matrix d_out = Matrix::Zero(T, h);
        if (T > 0) {
            if (pooling_ == Pooling::cls) {
                d_out.row(0) = d_pooled.transpose();
            } else {
                Scalar n = 0;
                for (char v : c.valid) n += v ? 1 : 0;
                if (n > 0)
                    for (Eigen::Index t = 0; t < T; ++t)
                        if (c.valid[static_cast<std::size_t>(t)]) d_out.row(t) = d_pooled.transpose() / n;
            }
        }
        Matrix dx = rms_backward(d_out, c.x_last, params_.segment(layout_.final_norm, h), c.inv_rf,
                                 grad.segment(layout_.final_norm, h));

        const Scalar scale = Scalar(1) / std::sqrt(Scalar(DH()));
        for (std::size_t li = layout_.layers.size(); li-- > 0;) {
            const auto& L = layout_.layers[li];
            const auto& lc = c.layers[li];

            // feed-forward residual
            const Matrix df = lc.drop2.size() ? Matrix(dx.cwiseProduct(lc.drop2)) : dx;
            MatrixMap(grad.data() + L.w2, F(), h).noalias() += lc.h_act.transpose() * df;
            Matrix dh = df * tensor(L.w2, F(), h).transpose();
            dh = dh.cwiseProduct((lc.h_pre.array() > Scalar(0)).template cast<Scalar>().matrix());
            MatrixMap(grad.data() + L.w1, h, F()).noalias() += lc.n2.transpose() * dh;
            const Matrix dn2 = dh * tensor(L.w1, h, F()).transpose();
            dx += rms_backward(dn2, lc.x_mid, params_.segment(L.norm2, h), lc.inv_r2, grad.segment(L.norm2, h));

            // attention residual
            const Matrix da = lc.drop1.size() ? Matrix(dx.cwiseProduct(lc.drop1)) : dx;
            MatrixMap(grad.data() + L.wo, h, h).noalias() += lc.concat.transpose() * da;
            const Matrix dconcat = da * tensor(L.wo, h, h).transpose();
            Matrix dq(T, h), dk(T, h), dv(T, h);
            for (Eigen::Index hd = 0; hd < NH(); ++hd) {
                const auto cols = Eigen::seqN(hd * DH(), DH());
                const Matrix& p = lc.probs[static_cast<std::size_t>(hd)];
                const Matrix dA = dconcat(Eigen::all, cols);
                const Matrix dP = dA * lc.v(Eigen::all, cols).transpose();
                dv(Eigen::all, cols).noalias() = p.transpose() * dA;
                const Vector rowdot = (dP.array() * p.array()).rowwise().sum().matrix();
                const Matrix dS = p.cwiseProduct(dP - rowdot.replicate(1, T)) * scale;
                dq(Eigen::all, cols).noalias() = dS * lc.k(Eigen::all, cols);
                dk(Eigen::all, cols).noalias() = dS.transpose() * lc.q(Eigen::all, cols);
            }
            MatrixMap(grad.data() + L.wq, h, h).noalias() += lc.n1.transpose() * dq;
            MatrixMap(grad.data() + L.wk, h, h).noalias() += lc.n1.transpose() * dk;
            MatrixMap(grad.data() + L.wv, h, h).noalias() += lc.n1.transpose() * dv;
            Matrix dn1 = dq * tensor(L.wq, h, h).transpose();
            dn1.noalias() += dk * tensor(L.wk, h, h).transpose();
            dn1.noalias() += dv * tensor(L.wv, h, h).transpose();
            dx += rms_backward(dn1, lc.x_in, params_.segment(L.norm1, h), lc.inv_r1, grad.segment(L.norm1, h));
        }

        if (c.drop0.size()) dx = dx.cwiseProduct(c.drop0);
        MatrixMap d_tok(grad.data() + layout_.tok_emb, V(), h);
        MatrixMap d_pos(grad.data() + layout_.pos_emb, P(), h);
        for (Eigen::Index t = 0; t < T; ++t) {
            if (!c.valid[static_cast<std::size_t>(t)]) continue; // no loss path through masked rows
            d_tok.row(batch.ids(b, t)) += dx.row(t);
            d_pos.row(t) += dx.row(t);
        }
    }

    EncoderConfig cfg_;
    HeadKind head_ = HeadKind::regression;
    Pooling pooling_ = Pooling::cls;
    ParameterLayout layout_;
    Vector params_;
};

/// Row 0 of each state matrix, stacked into (batch x hidden).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
pool_cls(const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& states) {
    const Eigen::Index h = states.empty() ? 0 : states.front().cols();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(static_cast<Eigen::Index>(states.size()), h);
    for (std::size_t b = 0; b < states.size(); ++b) out.row(static_cast<Eigen::Index>(b)) = states[b].row(0);
    return out;
}

/// sum(states * mask) / sum(mask) per sequence.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
pool_mean(const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& states, const MaskMatrix& mask) {
    const Eigen::Index h = states.empty() ? 0 : states.front().cols();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(static_cast<Eigen::Index>(states.size()), h);
    for (std::size_t b = 0; b < states.size(); ++b) {
        const auto r = static_cast<Eigen::Index>(b);
        const auto m = mask.row(r).template cast<Scalar>();
        const Scalar n = m.sum();
        out.row(r) = n > 0 ? Eigen::Matrix<Scalar, 1, Eigen::Dynamic>((m * states[b]) / n)
                           : Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(h);
    }
    return out;
}

extern template class EncoderModel<double>;
using Model = EncoderModel<double>;

} // namespace llmprop
