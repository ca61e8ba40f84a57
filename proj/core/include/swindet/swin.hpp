#pragma once

#include <array>
#include <vector>

#include "swindet/tensor.hpp"
#include "swindet/weights.hpp"

namespace swindet {

/// Swin-Tiny hyperparameters. Stage i emits channels embed_dim * 2^i on a
/// side of input_side / (patch * 2^i); the input side must therefore be
/// divisible by patch * 8 = 32.
struct SwinConfig {
    int img_size = 512;
    int patch = 4;
    int embed_dim = 96;
    std::array<int, 4> depths{2, 2, 6, 2};
    std::array<int, 4> heads{3, 6, 12, 24};
    int window = 7;
    int mlp_ratio = 4;
    int in_channels = 3;
};

/// The four stage outputs in CHW layout, e.g. [96,128,128] .. [768,16,16]
/// for a 512x512 input.
struct FeatureHierarchy {
    std::array<Tensor, 4> stages;
};

/// [C,H,W] -> [ (H/p)*(W/p), C*p*p ]. Tokens are ordered row-major over the
/// patch grid; within a token the values are ordered (channel, dy, dx).
Tensor patch_partition(const Tensor& image, int patch);

/// Inverse of patch_partition for an image of the given channel count and
/// pixel size.
Tensor patch_unpartition(const Tensor& tokens, int patch, int channels, int height,
                         int width);

/// tokens [N,in] x w [in,out] + b: per-token affine embedding.
Tensor linear_embed(const Tensor& tokens, const Tensor& w, const Tensor& b);

/// [H,W,C] -> [nW, window*window, C] with windows row-major over the window
/// grid and tokens row-major inside each window. H and W must already be
/// multiples of window.
Tensor window_partition(const Tensor& x, int window);

/// Inverse of window_partition back onto an [H,W,C] canvas.
Tensor window_reverse(const Tensor& windows, int window, int height, int width);

/// Cyclic roll: out(y,x) = in((y - dy) mod H, (x - dx) mod W). The shifted
/// attention path uses dy = dx = -shift and undoes it with +shift.
Tensor cyclic_shift(const Tensor& x, int dy, int dx);

/// Region labels per post-shift canvas position (row-major, length Hp*Wp).
/// Padding (positions whose pre-shift source lies outside height x width)
/// gets -1; real tokens get one of nine labels such that two tokens sharing
/// a label were contiguous before the shift. shift == 0 labels every real
/// token 0.
std::vector<int> shift_region_ids(int height, int width, int padded_h, int padded_w,
                                  int window, int shift);

/// Builds the additive attention mask [nW, w*w, w*w]: 0 where both tokens
/// carry the same non-negative region id, -1e9 otherwise.
Tensor attention_mask_from_ids(const std::vector<int>& ids, int padded_h, int padded_w,
                               int window);

/// Expands a learned bias table [(2w-1)^2, heads] to [heads, w*w, w*w]:
/// entry (h,i,j) = table[(dy+w-1)*(2w-1) + (dx+w-1)][h] with dy = yi-yj,
/// dx = xi-xj inside the window.
Tensor relative_bias_matrix(const Tensor& table, int window);

/// Multi-head attention applied independently per window.
/// windows: [nW, T, C]; wqkv: [C,3C] (+ bqkv [3C]) with columns ordered
/// query, key, value, each head-major; wproj: [C,C] (+ bproj [C]).
/// rel_bias: [heads,T,T] or empty; mask: [nW,T,T] additive or empty.
/// Scores = QK^T / sqrt(C/heads) + rel_bias + mask, row softmax, times V,
/// then the output projection.
Tensor window_attention(const Tensor& windows, int heads, const Tensor& wqkv,
                        const Tensor& bqkv, const Tensor& wproj, const Tensor& bproj,
                        const Tensor& rel_bias, const Tensor& mask);

/// One attention sub-layer on an [H,W,C] canvas: pad to window multiples,
/// cyclic-shift by -shift, masked window attention (mask covers padding and,
/// when shift > 0, cross-region pairs), unshift, crop back to H x W.
Tensor shifted_block(const Tensor& x, int window, int shift, int heads,
                     const Tensor& wqkv, const Tensor& bqkv, const Tensor& wproj,
                     const Tensor& bproj, const Tensor& rel_bias_table);

/// [H,W,C] -> [H/2,W/2,2C]: concatenate the 2x2 neighbors in the order
/// (0,0),(1,0),(0,1),(1,1) into 4C channels, layer-norm, then reduce with
/// w [4C,2C] (no bias).
Tensor patch_merge(const Tensor& x, const Tensor& norm_gamma, const Tensor& norm_beta,
                   const Tensor& reduce_w);

/// Full backbone forward. image is [in_channels, S, S'] with both sides
/// divisible by patch * 8. Blocks alternate shift 0 / window/2 within each
/// stage; every block is pre-norm with a GELU MLP of ratio mlp_ratio.
FeatureHierarchy swin_forward(const Tensor& image, const WeightMap& weights,
                              const SwinConfig& cfg = {});

/// Names and shapes of every parameter swin_forward reads.
std::vector<WeightSpec> swin_weight_spec(const SwinConfig& cfg = {});

}  // namespace swindet
