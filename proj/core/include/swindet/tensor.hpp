#pragma once

#include <cstdint>
#include <vector>

#include "swindet/error.hpp"

namespace swindet {

/// Dense row-major float32 tensor with an explicit shape.
///
/// There is no broadcasting and no views; every kernel below takes the
/// shapes it documents and nothing else. All kernels run in a fixed
/// sequential summation order, so results are bit-identical across runs
/// for identical inputs.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<int> shape);

    Tensor(std::vector<int> shape, std::vector<float> values);

    static Tensor full(std::vector<int> shape, float value);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    float& at(int i, int j) { return data_[static_cast<std::size_t>(i) * dim(1) + j]; }
    const float& at(int i, int j) const {
        return data_[static_cast<std::size_t>(i) * dim(1) + j];
    }
    float& at(int i, int j, int k) {
        return data_[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
    }
    const float& at(int i, int j, int k) const {
        return data_[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
    }

    /// Reinterprets the shape in place; the element count must not change.
    void reshape(std::vector<int> new_shape);

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

std::int64_t shape_numel(const std::vector<int>& shape);

/// [m,k] x [k,n] -> [m,n]. The sum over k runs in ascending order.
Tensor matmul(const Tensor& a, const Tensor& b);

/// [m,k] x [n,k]^T -> [m,n]; b is indexed by rows (no transpose copy).
Tensor matmul_nt(const Tensor& a, const Tensor& b);

/// Row-wise softmax with per-row max subtraction. Entries equal to -inf
/// come out as exactly 0; a row that is entirely -inf comes out all zero.
Tensor softmax_rows(const Tensor& x);

/// Normalizes over the last axis (length must equal gamma/beta length),
/// then applies the affine map gamma * x + beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  float eps = 1e-5f);

/// Cross-correlation of x [C_in,H,W] with w [C_out,C_in,kh,kw] plus bias,
/// zero padding. kh/kw must be odd and the output size integral.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);

/// [C,H,W] -> [C,2H,2W], each pixel replicated into a 2x2 block.
Tensor upsample_nearest2x(const Tensor& x);

/// 2x2 stride-2 max over [C,H,W] -> [C,ceil(H/2),ceil(W/2)]. Odd far
/// edges behave as if padded with -inf (the max ignores missing cells).
Tensor maxpool2(const Tensor& x);

/// Tanh-approximation GELU, elementwise. Fixed constants:
/// 0.5*x*(1 + tanh(0.7978845608028654*(x + 0.044715*x^3))).
Tensor gelu(const Tensor& x);
float gelu_scalar(float x);

/// Elementwise max(x, 0).
Tensor relu(const Tensor& x);

/// Affine map over the last axis: x [..,in] x w [in,out] + b [out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// Elementwise sum of two same-shape tensors.
Tensor add(const Tensor& a, const Tensor& b);

/// Elementwise scalar multiply.
Tensor scale(const Tensor& x, float s);

bool all_finite(const Tensor& x);

}  // namespace swindet
