#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tokendrop/errors.hpp"

namespace tokendrop {

// Dense row-major tensor. Training runs in float; gradient-check suites
// instantiate the same code with double.
template <typename S>
struct TensorT {
    std::vector<int> shape;
    std::vector<S> data;   // row-major, size == product(shape)
    std::vector<S> grad;   // empty until first accumulation, else same size as data

    TensorT() = default;

    explicit TensorT(std::vector<int> shp) : shape(std::move(shp)) {
        data.assign(numel_of(shape), S(0));
    }

    TensorT(std::vector<int> shp, std::vector<S> values) : shape(std::move(shp)), data(std::move(values)) {
        if (static_cast<int64_t>(data.size()) != numel_of(shape))
            throw DimError("tensor data length does not match shape " + shape_str());
    }

    static int64_t numel_of(const std::vector<int>& shp) {
        int64_t n = 1;
        for (int e : shp) n *= e;
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rows() const { return shape.empty() ? 1 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    bool is_matrix() const { return shape.size() == 2; }

    S& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
    S at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

    std::vector<S>& ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), S(0));
        return grad;
    }

    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), S(0));
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << "[";
        for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
        os << "]";
        return os.str();
    }
};

using Tensor = TensorT<float>;

namespace detail {

template <typename S>
using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
Eigen::Map<EMat<S>> mat(TensorT<S>& t) {
    return Eigen::Map<EMat<S>>(t.data.data(), t.rows(), t.cols());
}

template <typename S>
Eigen::Map<const EMat<S>> cmat(const TensorT<S>& t) {
    return Eigen::Map<const EMat<S>>(t.data.data(), t.rows(), t.cols());
}

template <typename S>
Eigen::Map<EMat<S>> gmat(TensorT<S>& t) {
    t.ensure_grad();
    return Eigen::Map<EMat<S>>(t.grad.data(), t.rows(), t.cols());
}

template <typename S>
Eigen::Map<const EMat<S>> cmat_grad(TensorT<S>& t) {
    return Eigen::Map<const EMat<S>>(t.grad.data(), t.rows(), t.cols());
}

}  // namespace detail

// Result of a cross-entropy node: mean loss plus the per-position negative
// log-likelihoods (read by the importance table, not differentiated).
template <typename S>
struct CrossEntropyOut {
    TensorT<S>* loss = nullptr;
    std::vector<S> per_position;
};

// Records every differentiable operation in execution order; backward() walks
// the list once in reverse. Entries keep explicit parent references so the
// gather/merge gradient routing can be inspected in a debugger.
template <typename S>
class TapeT {
public:
    struct Node {
        const char* op;
        std::vector<TensorT<S>*> inputs;
        TensorT<S>* out;
        std::function<void()> back;
    };

    TapeT() = default;
    TapeT(const TapeT&) = delete;
    TapeT& operator=(const TapeT&) = delete;

    // Arena tensor owned by the tape; freed on clear().
    TensorT<S>& alloc(std::vector<int> shape) {
        arena_.emplace_back(std::move(shape));
        return arena_.back();
    }

    size_t size() const { return nodes_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }

    void clear() {
        nodes_.clear();
        arena_.clear();
    }

    // Seeds d(root)/d(root) = 1 and replays the tape backwards, visiting each
    // node exactly once. Root must be scalar.
    void backward(TensorT<S>& root) {
        if (root.numel() != 1) throw ContractError("backward root must be scalar, got " + root.shape_str());
        root.ensure_grad();
        root.grad[0] = S(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            if (it->out->grad.empty()) continue;  // nothing flowed into this node
            it->back();
        }
    }

    // ---- operations ----------------------------------------------------

    // c = a @ b, a:[m,k] b:[k,n]. dA += dC B^T, dB += A^T dC.
    TensorT<S>& matmul(TensorT<S>& a, TensorT<S>& b) {
        require_matrix(a, "matmul");
        require_matrix(b, "matmul");
        if (a.cols() != b.rows())
            throw DimError("matmul: inner extents differ, " + a.shape_str() + " x " + b.shape_str());
        TensorT<S>& out = alloc({a.rows(), b.cols()});
        detail::mat(out).noalias() = detail::cmat(a) * detail::cmat(b);
        record("matmul", {&a, &b}, &out, [&a, &b, &out] {
            auto dC = detail::cmat_grad(out);
            detail::gmat(a).noalias() += dC * detail::cmat(b).transpose();
            detail::gmat(b).noalias() += detail::cmat(a).transpose() * dC;
        });
        return out;
    }

    // c = a @ b^T, a:[m,k] b:[n,k]. dA += dC B, dB += dC^T A.
    TensorT<S>& matmul_nt(TensorT<S>& a, TensorT<S>& b) {
        require_matrix(a, "matmul_nt");
        require_matrix(b, "matmul_nt");
        if (a.cols() != b.cols())
            throw DimError("matmul_nt: inner extents differ, " + a.shape_str() + " x " + b.shape_str() + "^T");
        TensorT<S>& out = alloc({a.rows(), b.rows()});
        detail::mat(out).noalias() = detail::cmat(a) * detail::cmat(b).transpose();
        record("matmul_nt", {&a, &b}, &out, [&a, &b, &out] {
            auto dC = detail::cmat_grad(out);
            detail::gmat(a).noalias() += dC * detail::cmat(b);
            detail::gmat(b).noalias() += dC.transpose() * detail::cmat(a);
        });
        return out;
    }

    TensorT<S>& add(TensorT<S>& a, TensorT<S>& b) {
        if (a.shape != b.shape)
            throw DimError("add: shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
        TensorT<S>& out = alloc(a.shape);
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
        record("add", {&a, &b}, &out, [&a, &b, &out] {
            auto& ga = a.ensure_grad();
            auto& gb = b.ensure_grad();
            for (size_t i = 0; i < out.grad.size(); ++i) {
                ga[i] += out.grad[i];
                gb[i] += out.grad[i];
            }
        });
        return out;
    }

    // Adds a length-n bias to every row of a [m,n] matrix.
    TensorT<S>& add_row(TensorT<S>& a, TensorT<S>& bias) {
        require_matrix(a, "add_row");
        if (static_cast<int>(bias.numel()) != a.cols())
            throw DimError("add_row: bias " + bias.shape_str() + " does not match " + a.shape_str());
        TensorT<S>& out = alloc(a.shape);
        const int m = a.rows(), n = a.cols();
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) out.at(r, c) = a.at(r, c) + bias.data[c];
        record("add_row", {&a, &bias}, &out, [&a, &bias, &out, m, n] {
            auto& ga = a.ensure_grad();
            auto& gb = bias.ensure_grad();
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < n; ++c) {
                    ga[static_cast<size_t>(r) * n + c] += out.grad[static_cast<size_t>(r) * n + c];
                    gb[c] += out.grad[static_cast<size_t>(r) * n + c];
                }
        });
        return out;
    }

    TensorT<S>& scale(TensorT<S>& a, S factor) {
        TensorT<S>& out = alloc(a.shape);
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] * factor;
        record("scale", {&a}, &out, [&a, &out, factor] {
            auto& ga = a.ensure_grad();
            for (size_t i = 0; i < out.grad.size(); ++i) ga[i] += out.grad[i] * factor;
        });
        return out;
    }

    TensorT<S>& relu(TensorT<S>& a) {
        TensorT<S>& out = alloc(a.shape);
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] > S(0) ? a.data[i] : S(0);
        record("relu", {&a}, &out, [&a, &out] {
            auto& ga = a.ensure_grad();
            for (size_t i = 0; i < out.grad.size(); ++i)
                if (a.data[i] > S(0)) ga[i] += out.grad[i];
        });
        return out;
    }

    // Row-wise softmax, stabilized by subtracting the row max.
    TensorT<S>& softmax_rows(TensorT<S>& x) {
        require_matrix(x, "softmax_rows");
        TensorT<S>& out = alloc(x.shape);
        const int m = x.rows(), n = x.cols();
        for (int r = 0; r < m; ++r) {
            S mx = x.at(r, 0);
            for (int c = 1; c < n; ++c) mx = std::max(mx, x.at(r, c));
            S sum = S(0);
            for (int c = 0; c < n; ++c) {
                S e = std::exp(x.at(r, c) - mx);
                out.at(r, c) = e;
                sum += e;
            }
            S inv = S(1) / sum;
            for (int c = 0; c < n; ++c) out.at(r, c) *= inv;
        }
        record("softmax_rows", {&x}, &out, [&x, &out, m, n] {
            auto& gx = x.ensure_grad();
            for (int r = 0; r < m; ++r) {
                S dot = S(0);
                for (int c = 0; c < n; ++c) dot += out.grad[static_cast<size_t>(r) * n + c] * out.at(r, c);
                for (int c = 0; c < n; ++c) {
                    size_t i = static_cast<size_t>(r) * n + c;
                    gx[i] += out.at(r, c) * (out.grad[i] - dot);
                }
            }
        });
        return out;
    }

    // Per-row normalization to zero mean / unit variance, then affine.
    TensorT<S>& layernorm(TensorT<S>& x, TensorT<S>& gain, TensorT<S>& bias) {
        require_matrix(x, "layernorm");
        const int m = x.rows(), n = x.cols();
        if (static_cast<int>(gain.numel()) != n || static_cast<int>(bias.numel()) != n)
            throw DimError("layernorm: gain/bias do not match " + x.shape_str());
        TensorT<S>& out = alloc(x.shape);
        auto mean = std::make_shared<std::vector<S>>(m);
        auto inv_std = std::make_shared<std::vector<S>>(m);
        const S eps = S(1e-12);
        for (int r = 0; r < m; ++r) {
            S mu = S(0);
            for (int c = 0; c < n; ++c) mu += x.at(r, c);
            mu /= S(n);
            S var = S(0);
            for (int c = 0; c < n; ++c) {
                S d = x.at(r, c) - mu;
                var += d * d;
            }
            var /= S(n);
            S inv = S(1) / std::sqrt(var + eps);
            (*mean)[r] = mu;
            (*inv_std)[r] = inv;
            for (int c = 0; c < n; ++c) out.at(r, c) = (x.at(r, c) - mu) * inv * gain.data[c] + bias.data[c];
        }
        record("layernorm", {&x, &gain, &bias}, &out, [&x, &gain, &bias, &out, mean, inv_std, m, n] {
            auto& gx = x.ensure_grad();
            auto& gg = gain.ensure_grad();
            auto& gb = bias.ensure_grad();
            for (int r = 0; r < m; ++r) {
                const S mu = (*mean)[r], inv = (*inv_std)[r];
                // xhat_c = (x - mu) * inv; dy flows through gain and the normalization
                S sum_dxhat = S(0), sum_dxhat_xhat = S(0);
                for (int c = 0; c < n; ++c) {
                    size_t i = static_cast<size_t>(r) * n + c;
                    S xhat = (x.data[i] - mu) * inv;
                    S dy = out.grad[i];
                    S dxhat = dy * gain.data[c];
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xhat;
                    gg[c] += dy * xhat;
                    gb[c] += dy;
                }
                for (int c = 0; c < n; ++c) {
                    size_t i = static_cast<size_t>(r) * n + c;
                    S xhat = (x.data[i] - mu) * inv;
                    S dxhat = out.grad[i] * gain.data[c];
                    gx[i] += inv * (dxhat - (sum_dxhat + xhat * sum_dxhat_xhat) / S(n));
                }
            }
        });
        return out;
    }

    // out[j] = x[idx[j]]; backward scatter-adds into the gathered rows and
    // leaves the rest untouched. Repeated indices accumulate.
    TensorT<S>& gather_rows(TensorT<S>& x, std::vector<int> idx) {
        require_matrix(x, "gather_rows");
        const int n = x.cols(), rows = x.rows();
        for (int i : idx)
            if (i < 0 || i >= rows)
                throw IndexError("gather_rows: index " + std::to_string(i) + " out of range [0, " +
                                 std::to_string(rows) + ")");
        TensorT<S>& out = alloc({static_cast<int>(idx.size()), n});
        for (size_t j = 0; j < idx.size(); ++j)
            std::copy_n(x.data.begin() + static_cast<size_t>(idx[j]) * n, n,
                        out.data.begin() + j * n);
        record("gather_rows", {&x}, &out, [&x, &out, idx = std::move(idx), n] {
            auto& gx = x.ensure_grad();
            for (size_t j = 0; j < idx.size(); ++j)
                for (int c = 0; c < n; ++c)
                    gx[static_cast<size_t>(idx[j]) * n + c] += out.grad[j * n + c];
        });
        return out;
    }

    // Restores a full-length row set from the kept and dropped partitions:
    // out[keep_idx[j]] = kept[j], out[drop_idx[j]] = dropped[j].
    TensorT<S>& merge_rows(TensorT<S>& kept, TensorT<S>& dropped, std::vector<int> keep_idx,
                           std::vector<int> drop_idx) {
        require_matrix(kept, "merge_rows");
        const int n = kept.cols();
        if (dropped.numel() > 0 && dropped.cols() != n)
            throw DimError("merge_rows: column mismatch, " + kept.shape_str() + " vs " + dropped.shape_str());
        if (kept.rows() != static_cast<int>(keep_idx.size()) ||
            dropped.rows() != static_cast<int>(drop_idx.size()))
            throw DimError("merge_rows: index lists do not match row counts");
        const int total = kept.rows() + dropped.rows();
        for (int i : keep_idx)
            if (i < 0 || i >= total) throw IndexError("merge_rows: keep index out of range");
        for (int i : drop_idx)
            if (i < 0 || i >= total) throw IndexError("merge_rows: drop index out of range");
        TensorT<S>& out = alloc({total, n});
        for (size_t j = 0; j < keep_idx.size(); ++j)
            std::copy_n(kept.data.begin() + j * n, n, out.data.begin() + static_cast<size_t>(keep_idx[j]) * n);
        for (size_t j = 0; j < drop_idx.size(); ++j)
            std::copy_n(dropped.data.begin() + j * n, n, out.data.begin() + static_cast<size_t>(drop_idx[j]) * n);
        record("merge_rows", {&kept, &dropped}, &out,
               [&kept, &dropped, &out, keep_idx = std::move(keep_idx), drop_idx = std::move(drop_idx), n] {
                   auto& gk = kept.ensure_grad();
                   for (size_t j = 0; j < keep_idx.size(); ++j)
                       for (int c = 0; c < n; ++c)
                           gk[j * n + c] += out.grad[static_cast<size_t>(keep_idx[j]) * n + c];
                   if (dropped.numel() > 0) {
                       auto& gd = dropped.ensure_grad();
                       for (size_t j = 0; j < drop_idx.size(); ++j)
                           for (int c = 0; c < n; ++c)
                               gd[j * n + c] += out.grad[static_cast<size_t>(drop_idx[j]) * n + c];
                   }
               });
        return out;
    }

    // Window-2 stride-2 mean over rows: out[i] = (x[2i] + x[2i+1]) / 2.
    TensorT<S>& pool_pair_rows(TensorT<S>& x) {
        require_matrix(x, "pool_pair_rows");
        if (x.rows() % 2 != 0) throw DimError("pool_pair_rows: odd row count " + x.shape_str());
        const int m = x.rows() / 2, n = x.cols();
        TensorT<S>& out = alloc({m, n});
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) out.at(r, c) = (x.at(2 * r, c) + x.at(2 * r + 1, c)) * S(0.5);
        record("pool_pair_rows", {&x}, &out, [&x, &out, m, n] {
            auto& gx = x.ensure_grad();
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < n; ++c) {
                    S g = out.grad[static_cast<size_t>(r) * n + c] * S(0.5);
                    gx[static_cast<size_t>(2 * r) * n + c] += g;
                    gx[static_cast<size_t>(2 * r + 1) * n + c] += g;
                }
        });
        return out;
    }

    // Inverse expansion: out[2i] = out[2i+1] = x[i].
    TensorT<S>& unpool_pair_rows(TensorT<S>& x) {
        require_matrix(x, "unpool_pair_rows");
        const int m = x.rows(), n = x.cols();
        TensorT<S>& out = alloc({2 * m, n});
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) {
                out.at(2 * r, c) = x.at(r, c);
                out.at(2 * r + 1, c) = x.at(r, c);
            }
        record("unpool_pair_rows", {&x}, &out, [&x, &out, m, n] {
            auto& gx = x.ensure_grad();
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < n; ++c)
                    gx[static_cast<size_t>(r) * n + c] +=
                        out.grad[static_cast<size_t>(2 * r) * n + c] +
                        out.grad[static_cast<size_t>(2 * r + 1) * n + c];
        });
        return out;
    }

    TensorT<S>& slice_rows(TensorT<S>& x, int begin, int count) {
        require_matrix(x, "slice_rows");
        if (begin < 0 || count < 0 || begin + count > x.rows())
            throw IndexError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                             ") out of " + x.shape_str());
        const int n = x.cols();
        TensorT<S>& out = alloc({count, n});
        std::copy_n(x.data.begin() + static_cast<size_t>(begin) * n, static_cast<size_t>(count) * n,
                    out.data.begin());
        record("slice_rows", {&x}, &out, [&x, &out, begin, count, n] {
            auto& gx = x.ensure_grad();
            for (size_t i = 0; i < static_cast<size_t>(count) * n; ++i)
                gx[static_cast<size_t>(begin) * n + i] += out.grad[i];
        });
        return out;
    }

    TensorT<S>& concat_rows(const std::vector<TensorT<S>*>& parts) {
        if (parts.empty()) throw ContractError("concat_rows: no inputs");
        const int n = parts[0]->cols();
        int m = 0;
        for (auto* p : parts) {
            require_matrix(*p, "concat_rows");
            if (p->cols() != n) throw DimError("concat_rows: column mismatch");
            m += p->rows();
        }
        TensorT<S>& out = alloc({m, n});
        size_t off = 0;
        for (auto* p : parts) {
            std::copy(p->data.begin(), p->data.end(), out.data.begin() + off);
            off += p->data.size();
        }
        record("concat_rows", parts, &out, [parts, &out] {
            size_t off = 0;
            for (auto* p : parts) {
                auto& gp = p->ensure_grad();
                for (size_t i = 0; i < gp.size(); ++i) gp[i] += out.grad[off + i];
                off += gp.size();
            }
        });
        return out;
    }

    TensorT<S>& concat_cols(const std::vector<TensorT<S>*>& parts) {
        if (parts.empty()) throw ContractError("concat_cols: no inputs");
        const int m = parts[0]->rows();
        int n = 0;
        for (auto* p : parts) {
            require_matrix(*p, "concat_cols");
            if (p->rows() != m) throw DimError("concat_cols: row mismatch");
            n += p->cols();
        }
        TensorT<S>& out = alloc({m, n});
        int coff = 0;
        for (auto* p : parts) {
            for (int r = 0; r < m; ++r)
                std::copy_n(p->data.begin() + static_cast<size_t>(r) * p->cols(), p->cols(),
                            out.data.begin() + static_cast<size_t>(r) * n + coff);
            coff += p->cols();
        }
        record("concat_cols", parts, &out, [parts, &out, m, n] {
            int coff = 0;
            for (auto* p : parts) {
                auto& gp = p->ensure_grad();
                const int pc = p->cols();
                for (int r = 0; r < m; ++r)
                    for (int c = 0; c < pc; ++c)
                        gp[static_cast<size_t>(r) * pc + c] += out.grad[static_cast<size_t>(r) * n + coff + c];
                coff += pc;
            }
        });
        return out;
    }

    // Mean negative log-likelihood over rows; per-row NLLs are returned for
    // the importance-table update and are not part of the graph.
    CrossEntropyOut<S> cross_entropy(TensorT<S>& logits, const std::vector<int>& labels) {
        require_matrix(logits, "cross_entropy");
        if (labels.empty()) throw ContractError("cross_entropy: empty label list");
        const int m = logits.rows(), n = logits.cols();
        if (static_cast<int>(labels.size()) != m)
            throw DimError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                           logits.shape_str());
        for (int l : labels)
            if (l < 0 || l >= n) throw IndexError("cross_entropy: label " + std::to_string(l) + " out of range");
        auto probs = std::make_shared<std::vector<S>>(logits.data.size());
        CrossEntropyOut<S> result;
        result.per_position.resize(m);
        S total = S(0);
        for (int r = 0; r < m; ++r) {
            S mx = logits.at(r, 0);
            for (int c = 1; c < n; ++c) mx = std::max(mx, logits.at(r, c));
            S sum = S(0);
            for (int c = 0; c < n; ++c) {
                S e = std::exp(logits.at(r, c) - mx);
                (*probs)[static_cast<size_t>(r) * n + c] = e;
                sum += e;
            }
            S inv = S(1) / sum;
            for (int c = 0; c < n; ++c) (*probs)[static_cast<size_t>(r) * n + c] *= inv;
            S nll = std::log(sum) + mx - logits.at(r, labels[r]);
            result.per_position[r] = nll;
            total += nll;
        }
        TensorT<S>& loss = alloc({1});
        loss.data[0] = total / S(m);
        record("cross_entropy", {&logits}, &loss, [&logits, &loss, probs, labels, m, n] {
            auto& gl = logits.ensure_grad();
            const S g = loss.grad[0] / S(m);
            for (int r = 0; r < m; ++r) {
                for (int c = 0; c < n; ++c)
                    gl[static_cast<size_t>(r) * n + c] += g * (*probs)[static_cast<size_t>(r) * n + c];
                gl[static_cast<size_t>(r) * n + labels[r]] -= g;
            }
        });
        result.loss = &loss;
        return result;
    }

    // Scalar sum of all entries (test utility).
    TensorT<S>& sum_all(TensorT<S>& x) {
        TensorT<S>& out = alloc({1});
        out.data[0] = std::accumulate(x.data.begin(), x.data.end(), S(0));
        record("sum_all", {&x}, &out, [&x, &out] {
            auto& gx = x.ensure_grad();
            for (auto& g : gx) g += out.grad[0];
        });
        return out;
    }

private:
    static void require_matrix(const TensorT<S>& t, const char* op) {
        if (t.shape.size() != 2)
            throw DimError(std::string(op) + ": expected a matrix, got " + t.shape_str());
    }

    void record(const char* op, std::vector<TensorT<S>*> inputs, TensorT<S>* out, std::function<void()> back) {
        nodes_.push_back(Node{op, std::move(inputs), out, std::move(back)});
    }

    std::deque<TensorT<S>> arena_;  // deque keeps element addresses stable
    std::vector<Node> nodes_;
};

using Tape = TapeT<float>;

}  // namespace tokendrop
