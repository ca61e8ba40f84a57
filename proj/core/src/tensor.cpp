#include "swindet/tensor.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

namespace swindet {

namespace {

std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

void check_positive_dims(const std::vector<int>& shape) {
    for (int d : shape) {
        if (d <= 0) throw Error("tensor: non-positive dimension in shape " + shape_str(shape));
    }
}

}  // namespace

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    check_positive_dims(shape_);
    data_.assign(static_cast<std::size_t>(shape_numel(shape_)), 0.0f);
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    check_positive_dims(shape_);
    if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_)) {
        throw Error("tensor: value count " + std::to_string(data_.size()) +
                    " does not match shape " + shape_str(shape_));
    }
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t(std::move(shape));
    for (float& v : t.data_) v = value;
    return t;
}

void Tensor::reshape(std::vector<int> new_shape) {
    check_positive_dims(new_shape);
    if (shape_numel(new_shape) != numel()) {
        throw Error("tensor: reshape " + shape_str(shape_) + " -> " + shape_str(new_shape) +
                    " changes element count");
    }
    shape_ = std::move(new_shape);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw Error("tensor: matmul expects rank-2 inputs");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw Error("tensor: matmul inner dimensions mismatch (" + std::to_string(k) + " vs " +
                    std::to_string(b.dim(0)) + ")");
    }
    Tensor out({m, n});
    const float* A = a.data();
    const float* B = b.data();
    float* C = out.data();
    for (int i = 0; i < m; ++i) {
        const float* arow = A + static_cast<std::size_t>(i) * k;
        float* crow = C + static_cast<std::size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const float av = arow[kk];
            const float* brow = B + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw Error("tensor: matmul_nt expects rank-2 inputs");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
    if (b.dim(1) != k) {
        throw Error("tensor: matmul_nt inner dimensions mismatch (" + std::to_string(k) +
                    " vs " + std::to_string(b.dim(1)) + ")");
    }
    Tensor out({m, n});
    const float* A = a.data();
    const float* B = b.data();
    float* C = out.data();
    for (int i = 0; i < m; ++i) {
        const float* arow = A + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const float* brow = B + static_cast<std::size_t>(j) * k;
            float acc = 0.0f;
            for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            C[static_cast<std::size_t>(i) * n + j] = acc;
        }
    }
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    if (x.rank() != 2) throw Error("tensor: softmax_rows expects rank-2 input");
    const int r = x.dim(0), c = x.dim(1);
    Tensor out({r, c});
    const float kNegInf = -std::numeric_limits<float>::infinity();
    for (int i = 0; i < r; ++i) {
        const float* row = x.data() + static_cast<std::size_t>(i) * c;
        float* dst = out.data() + static_cast<std::size_t>(i) * c;
        float maxv = kNegInf;
        for (int j = 0; j < c; ++j) maxv = row[j] > maxv ? row[j] : maxv;
        if (maxv == kNegInf) continue;  // fully masked row stays zero
        float sum = 0.0f;
        for (int j = 0; j < c; ++j) {
            dst[j] = std::exp(row[j] - maxv);
            sum += dst[j];
        }
        const float inv = 1.0f / sum;
        for (int j = 0; j < c; ++j) dst[j] *= inv;
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
    if (x.rank() < 1) throw Error("tensor: layer_norm expects rank >= 1");
    const int c = x.dim(x.rank() - 1);
    if (gamma.numel() != c || beta.numel() != c) {
        throw Error("tensor: layer_norm gamma/beta length must equal last dimension " +
                    std::to_string(c));
    }
    const std::int64_t rows = x.numel() / c;
    Tensor out(x.shape());
    const float* g = gamma.data();
    const float* be = beta.data();
    for (std::int64_t i = 0; i < rows; ++i) {
        const float* row = x.data() + i * c;
        float* dst = out.data() + i * c;
        float mean = 0.0f;
        for (int j = 0; j < c; ++j) mean += row[j];
        mean /= static_cast<float>(c);
        float var = 0.0f;
        for (int j = 0; j < c; ++j) {
            const float d = row[j] - mean;
            var += d * d;
        }
        var /= static_cast<float>(c);
        const float inv = 1.0f / std::sqrt(var + eps);
        for (int j = 0; j < c; ++j) dst[j] = (row[j] - mean) * inv * g[j] + be[j];
    }
    return out;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    if (x.rank() != 3 || w.rank() != 4) throw Error("tensor: conv2d expects x[C,H,W], w[Co,Ci,kh,kw]");
    const int ci = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(1) != ci) throw Error("tensor: conv2d channel mismatch");
    if (b.numel() != co) throw Error("tensor: conv2d bias length must equal output channels");
    if (kh % 2 == 0 || kw % 2 == 0) throw Error("tensor: conv2d kernel sides must be odd");
    if (stride < 1) throw Error("tensor: conv2d stride must be >= 1");
    if ((h + 2 * pad - kh) % stride != 0 || (wd + 2 * pad - kw) % stride != 0) {
        throw Error("tensor: conv2d non-integral output size");
    }
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (wd + 2 * pad - kw) / stride + 1;
    if (ho <= 0 || wo <= 0) throw Error("tensor: conv2d non-positive output size");

    Tensor out({co, ho, wo});
    const std::size_t in_plane = static_cast<std::size_t>(h) * wd;
    const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
    for (int oc = 0; oc < co; ++oc) {
        float* oplane = out.data() + oc * out_plane;
        const float bias = b.data()[oc];
        for (std::size_t t = 0; t < out_plane; ++t) oplane[t] = bias;
        for (int ic = 0; ic < ci; ++ic) {
            const float* iplane = x.data() + ic * in_plane;
            const float* wk = w.data() +
                (static_cast<std::size_t>(oc) * ci + ic) * kh * kw;
            for (int ky = 0; ky < kh; ++ky) {
                for (int kx = 0; kx < kw; ++kx) {
                    const float wv = wk[ky * kw + kx];
                    // output columns whose sampled input column stays in range
                    int ox_lo = 0;
                    while (ox_lo < wo && ox_lo * stride + kx - pad < 0) ++ox_lo;
                    int ox_hi = wo - 1;
                    while (ox_hi >= 0 && ox_hi * stride + kx - pad >= wd) --ox_hi;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= h) continue;
                        const float* irow = iplane + static_cast<std::size_t>(iy) * wd;
                        float* orow = oplane + static_cast<std::size_t>(oy) * wo;
                        if (stride == 1) {
                            const float* src = irow + (ox_lo + kx - pad);
                            for (int ox = ox_lo; ox <= ox_hi; ++ox, ++src) orow[ox] += wv * *src;
                        } else {
                            for (int ox = ox_lo; ox <= ox_hi; ++ox) {
                                orow[ox] += wv * irow[ox * stride + kx - pad];
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

Tensor upsample_nearest2x(const Tensor& x) {
    if (x.rank() != 3) throw Error("tensor: upsample_nearest2x expects [C,H,W]");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c, 2 * h, 2 * w});
    for (int ic = 0; ic < c; ++ic) {
        for (int y = 0; y < h; ++y) {
            const float* src = x.data() + (static_cast<std::size_t>(ic) * h + y) * w;
            float* d0 = out.data() + (static_cast<std::size_t>(ic) * 2 * h + 2 * y) * 2 * w;
            float* d1 = d0 + 2 * w;
            for (int xx = 0; xx < w; ++xx) {
                const float v = src[xx];
                d0[2 * xx] = v;
                d0[2 * xx + 1] = v;
                d1[2 * xx] = v;
                d1[2 * xx + 1] = v;
            }
        }
    }
    return out;
}

Tensor maxpool2(const Tensor& x) {
    if (x.rank() != 3) throw Error("tensor: maxpool2 expects [C,H,W]");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int ho = (h + 1) / 2, wo = (w + 1) / 2;
    Tensor out({c, ho, wo});
    for (int ic = 0; ic < c; ++ic) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                const int y0 = 2 * oy, x0 = 2 * ox;
                float m = x.at(ic, y0, x0);
                if (x0 + 1 < w) m = std::max(m, x.at(ic, y0, x0 + 1));
                if (y0 + 1 < h) {
                    m = std::max(m, x.at(ic, y0 + 1, x0));
                    if (x0 + 1 < w) m = std::max(m, x.at(ic, y0 + 1, x0 + 1));
                }
                out.at(ic, oy, ox) = m;
            }
        }
    }
    return out;
}

float gelu_scalar(float x) {
    const float kSqrt2OverPi = 0.7978845608028654f;
    const float kCubicCoeff = 0.044715f;
    const float inner = kSqrt2OverPi * (x + kCubicCoeff * x * x * x);
    return 0.5f * x * (1.0f + std::tanh(inner));
}

Tensor gelu(const Tensor& x) {
    Tensor out(x.shape());
    const float* src = x.data();
    float* dst = out.data();
    const std::int64_t n = x.numel();
    for (std::int64_t i = 0; i < n; ++i) dst[i] = gelu_scalar(src[i]);
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape());
    const float* src = x.data();
    float* dst = out.data();
    const std::int64_t n = x.numel();
    for (std::int64_t i = 0; i < n; ++i) dst[i] = src[i] > 0.0f ? src[i] : 0.0f;
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (w.rank() != 2) throw Error("tensor: linear weight must be rank-2 [in,out]");
    const int in = w.dim(0), out_dim = w.dim(1);
    if (x.rank() < 1 || x.dim(x.rank() - 1) != in) {
        throw Error("tensor: linear input last dimension must be " + std::to_string(in));
    }
    if (b.numel() != out_dim) throw Error("tensor: linear bias length must be " + std::to_string(out_dim));
    const int rows = static_cast<int>(x.numel() / in);
    Tensor flat = x;
    flat.reshape({rows, in});
    Tensor y = matmul(flat, w);
    float* d = y.data();
    const float* bias = b.data();
    for (int i = 0; i < rows; ++i) {
        float* row = d + static_cast<std::size_t>(i) * out_dim;
        for (int j = 0; j < out_dim; ++j) row[j] += bias[j];
    }
    std::vector<int> out_shape = x.shape();
    out_shape.back() = out_dim;
    y.reshape(std::move(out_shape));
    return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw Error("tensor: add shape mismatch");
    Tensor out(a.shape());
    const float* pa = a.data();
    const float* pb = b.data();
    float* d = out.data();
    const std::int64_t n = a.numel();
    for (std::int64_t i = 0; i < n; ++i) d[i] = pa[i] + pb[i];
    return out;
}

Tensor scale(const Tensor& x, float s) {
    Tensor out(x.shape());
    const float* src = x.data();
    float* dst = out.data();
    const std::int64_t n = x.numel();
    for (std::int64_t i = 0; i < n; ++i) dst[i] = src[i] * s;
    return out;
}

bool all_finite(const Tensor& x) {
    for (float v : x.values()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace swindet
