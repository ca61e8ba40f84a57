#include "swindet/swin.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace swindet {

namespace {

int ceil_to_multiple(int v, int m) { return (v + m - 1) / m * m; }

Tensor hwc_to_chw(const Tensor& x) {
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    Tensor out({c, h, w});
    for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < w; ++xx) {
            for (int ci = 0; ci < c; ++ci) {
                out.at(ci, y, xx) = x.at(y, xx, ci);
            }
        }
    }
    return out;
}

}  // namespace

Tensor patch_partition(const Tensor& image, int patch) {
    if (image.rank() != 3) throw Error("swin: patch_partition expects a [C,H,W] tensor");
    if (patch <= 0) throw Error("swin: patch size must be positive");
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    if (h % patch != 0 || w % patch != 0) {
        throw Error("swin: image size " + std::to_string(h) + "x" + std::to_string(w) +
                    " not divisible by patch " + std::to_string(patch));
    }
    const int gh = h / patch, gw = w / patch;
    const int token_len = c * patch * patch;
    Tensor out({gh * gw, token_len});
    float* op = out.data();
    for (int py = 0; py < gh; ++py) {
        for (int px = 0; px < gw; ++px) {
            float* row = op + (static_cast<std::size_t>(py) * gw + px) * token_len;
            int idx = 0;
            for (int ci = 0; ci < c; ++ci) {
                for (int dy = 0; dy < patch; ++dy) {
                    for (int dx = 0; dx < patch; ++dx) {
                        row[idx++] = image.at(ci, py * patch + dy, px * patch + dx);
                    }
                }
            }
        }
    }
    return out;
}

Tensor patch_unpartition(const Tensor& tokens, int patch, int channels, int height,
                         int width) {
    if (tokens.rank() != 2) throw Error("swin: patch_unpartition expects [N,len]");
    if (height % patch != 0 || width % patch != 0) {
        throw Error("swin: target size not divisible by patch");
    }
    const int gh = height / patch, gw = width / patch;
    const int token_len = channels * patch * patch;
    if (tokens.dim(0) != gh * gw || tokens.dim(1) != token_len) {
        throw Error("swin: token tensor does not match target geometry");
    }
    Tensor out({channels, height, width});
    const float* tp = tokens.data();
    for (int py = 0; py < gh; ++py) {
        for (int px = 0; px < gw; ++px) {
            const float* row = tp + (static_cast<std::size_t>(py) * gw + px) * token_len;
            int idx = 0;
            for (int ci = 0; ci < channels; ++ci) {
                for (int dy = 0; dy < patch; ++dy) {
                    for (int dx = 0; dx < patch; ++dx) {
                        out.at(ci, py * patch + dy, px * patch + dx) = row[idx++];
                    }
                }
            }
        }
    }
    return out;
}

Tensor linear_embed(const Tensor& tokens, const Tensor& w, const Tensor& b) {
    if (tokens.rank() != 2) throw Error("swin: linear_embed expects [N,in] tokens");
    return linear(tokens, w, b);
}

Tensor window_partition(const Tensor& x, int window) {
    if (x.rank() != 3) throw Error("swin: window_partition expects [H,W,C]");
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    if (window <= 0 || h % window != 0 || w % window != 0) {
        throw Error("swin: canvas not a multiple of the window size");
    }
    const int gh = h / window, gw = w / window;
    Tensor out({gh * gw, window * window, c});
    for (int wy = 0; wy < gh; ++wy) {
        for (int wx = 0; wx < gw; ++wx) {
            const int wi = wy * gw + wx;
            for (int ty = 0; ty < window; ++ty) {
                for (int tx = 0; tx < window; ++tx) {
                    const float* src = &x.at(wy * window + ty, wx * window + tx, 0);
                    float* dst = &out.at(wi, ty * window + tx, 0);
                    std::memcpy(dst, src, sizeof(float) * static_cast<std::size_t>(c));
                }
            }
        }
    }
    return out;
}

Tensor window_reverse(const Tensor& windows, int window, int height, int width) {
    if (windows.rank() != 3) throw Error("swin: window_reverse expects [nW,T,C]");
    if (window <= 0 || height % window != 0 || width % window != 0) {
        throw Error("swin: canvas not a multiple of the window size");
    }
    const int gh = height / window, gw = width / window;
    const int c = windows.dim(2);
    if (windows.dim(0) != gh * gw || windows.dim(1) != window * window) {
        throw Error("swin: window tensor does not match target canvas");
    }
    Tensor out({height, width, c});
    for (int wy = 0; wy < gh; ++wy) {
        for (int wx = 0; wx < gw; ++wx) {
            const int wi = wy * gw + wx;
            for (int ty = 0; ty < window; ++ty) {
                for (int tx = 0; tx < window; ++tx) {
                    const float* src = &windows.at(wi, ty * window + tx, 0);
                    float* dst = &out.at(wy * window + ty, wx * window + tx, 0);
                    std::memcpy(dst, src, sizeof(float) * static_cast<std::size_t>(c));
                }
            }
        }
    }
    return out;
}

Tensor cyclic_shift(const Tensor& x, int dy, int dx) {
    if (x.rank() != 3) throw Error("swin: cyclic_shift expects [H,W,C]");
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    Tensor out({h, w, c});
    for (int y = 0; y < h; ++y) {
        const int sy = ((y - dy) % h + h) % h;
        for (int xx = 0; xx < w; ++xx) {
            const int sx = ((xx - dx) % w + w) % w;
            std::memcpy(&out.at(y, xx, 0), &x.at(sy, sx, 0),
                        sizeof(float) * static_cast<std::size_t>(c));
        }
    }
    return out;
}

std::vector<int> shift_region_ids(int height, int width, int padded_h, int padded_w,
                                  int window, int shift) {
    if (window <= 0 || shift < 0 || shift >= window) {
        throw Error("swin: shift must satisfy 0 <= shift < window");
    }
    if (padded_h < height || padded_w < width || padded_h % window != 0 ||
        padded_w % window != 0) {
        throw Error("swin: padded canvas must cover the input and align to windows");
    }
    auto band = [&](int v, int padded) {
        if (v < padded - window) return 0;
        if (v < padded - shift) return 1;
        return 2;
    };
    std::vector<int> ids(static_cast<std::size_t>(padded_h) * padded_w);
    for (int y = 0; y < padded_h; ++y) {
        for (int x = 0; x < padded_w; ++x) {
            const int sy = (y + shift) % padded_h;
            const int sx = (x + shift) % padded_w;
            int id;
            if (sy >= height || sx >= width) {
                id = -1;
            } else if (shift == 0) {
                id = 0;
            } else {
                id = band(y, padded_h) * 3 + band(x, padded_w);
            }
            ids[static_cast<std::size_t>(y) * padded_w + x] = id;
        }
    }
    return ids;
}

Tensor attention_mask_from_ids(const std::vector<int>& ids, int padded_h, int padded_w,
                               int window) {
    if (ids.size() != static_cast<std::size_t>(padded_h) * padded_w) {
        throw Error("swin: region id grid does not match the canvas");
    }
    if (padded_h % window != 0 || padded_w % window != 0) {
        throw Error("swin: canvas not a multiple of the window size");
    }
    const int gh = padded_h / window, gw = padded_w / window;
    const int t = window * window;
    Tensor mask({gh * gw, t, t});
    std::vector<int> local(static_cast<std::size_t>(t));
    for (int wy = 0; wy < gh; ++wy) {
        for (int wx = 0; wx < gw; ++wx) {
            const int wi = wy * gw + wx;
            for (int ty = 0; ty < window; ++ty) {
                for (int tx = 0; tx < window; ++tx) {
                    local[static_cast<std::size_t>(ty) * window + tx] =
                        ids[static_cast<std::size_t>(wy * window + ty) * padded_w +
                            (wx * window + tx)];
                }
            }
            for (int i = 0; i < t; ++i) {
                for (int j = 0; j < t; ++j) {
                    const bool allowed = local[static_cast<std::size_t>(i)] >= 0 &&
                                         local[static_cast<std::size_t>(i)] ==
                                             local[static_cast<std::size_t>(j)];
                    mask.at(wi, i, j) = allowed ? 0.0f : -1e9f;
                }
            }
        }
    }
    return mask;
}

Tensor relative_bias_matrix(const Tensor& table, int window) {
    const int span = 2 * window - 1;
    if (table.rank() != 2 || table.dim(0) != span * span) {
        throw Error("swin: bias table must be [(2w-1)^2, heads]");
    }
    const int heads = table.dim(1);
    const int t = window * window;
    Tensor out({heads, t, t});
    for (int i = 0; i < t; ++i) {
        const int yi = i / window, xi = i % window;
        for (int j = 0; j < t; ++j) {
            const int yj = j / window, xj = j % window;
            const int idx = (yi - yj + window - 1) * span + (xi - xj + window - 1);
            for (int h = 0; h < heads; ++h) {
                out.at(h, i, j) = table.at(idx, h);
            }
        }
    }
    return out;
}

Tensor window_attention(const Tensor& windows, int heads, const Tensor& wqkv,
                        const Tensor& bqkv, const Tensor& wproj, const Tensor& bproj,
                        const Tensor& rel_bias, const Tensor& mask) {
    if (windows.rank() != 3) throw Error("swin: window_attention expects [nW,T,C]");
    const int nw = windows.dim(0), t = windows.dim(1), c = windows.dim(2);
    if (heads <= 0 || c % heads != 0) {
        throw Error("swin: channel count " + std::to_string(c) +
                    " not divisible by head count " + std::to_string(heads));
    }
    if (wqkv.rank() != 2 || wqkv.dim(0) != c || wqkv.dim(1) != 3 * c) {
        throw Error("swin: qkv weight must be [C,3C]");
    }
    if (wproj.rank() != 2 || wproj.dim(0) != c || wproj.dim(1) != c) {
        throw Error("swin: projection weight must be [C,C]");
    }
    const bool has_bias = !rel_bias.empty();
    if (has_bias &&
        (rel_bias.rank() != 3 || rel_bias.dim(0) != heads || rel_bias.dim(1) != t ||
         rel_bias.dim(2) != t)) {
        throw Error("swin: relative bias must be [heads,T,T]");
    }
    const bool has_mask = !mask.empty();
    if (has_mask && (mask.rank() != 3 || mask.dim(0) != nw || mask.dim(1) != t ||
                     mask.dim(2) != t)) {
        throw Error("swin: attention mask must be [nW,T,T]");
    }

    const int d = c / heads;
    const float inv_sqrt_d = 1.0f / std::sqrt(static_cast<float>(d));

    Tensor flat = windows;
    flat.reshape({nw * t, c});
    Tensor qkv = linear(flat, wqkv, bqkv);  // [nW*T, 3C], columns q|k|v, head-major
    Tensor concat({nw * t, c});

    Tensor scores({t, t});
    const float* qp = qkv.data();
    const int qkv_stride = 3 * c;
    for (int n = 0; n < nw; ++n) {
        for (int h = 0; h < heads; ++h) {
            const int qoff = h * d, koff = c + h * d, voff = 2 * c + h * d;
            for (int i = 0; i < t; ++i) {
                const float* qi = qp + static_cast<std::size_t>(n * t + i) * qkv_stride + qoff;
                for (int j = 0; j < t; ++j) {
                    const float* kj =
                        qp + static_cast<std::size_t>(n * t + j) * qkv_stride + koff;
                    float acc = 0.0f;
                    for (int k = 0; k < d; ++k) acc += qi[k] * kj[k];
                    float s = acc * inv_sqrt_d;
                    if (has_bias) s += rel_bias.at(h, i, j);
                    if (has_mask) s += mask.at(n, i, j);
                    scores.at(i, j) = s;
                }
            }
            Tensor probs = softmax_rows(scores);
            for (int i = 0; i < t; ++i) {
                float* out_row = &concat.at(n * t + i, qoff);
                for (int k = 0; k < d; ++k) out_row[k] = 0.0f;
                for (int j = 0; j < t; ++j) {
                    const float p = probs.at(i, j);
                    const float* vj =
                        qp + static_cast<std::size_t>(n * t + j) * qkv_stride + voff;
                    for (int k = 0; k < d; ++k) out_row[k] += p * vj[k];
                }
            }
        }
    }

    Tensor out = linear(concat, wproj, bproj);
    out.reshape({nw, t, c});
    return out;
}

Tensor shifted_block(const Tensor& x, int window, int shift, int heads,
                     const Tensor& wqkv, const Tensor& bqkv, const Tensor& wproj,
                     const Tensor& bproj, const Tensor& rel_bias_table) {
    if (x.rank() != 3) throw Error("swin: shifted_block expects [H,W,C]");
    if (shift < 0 || shift >= window) {
        throw Error("swin: shift must satisfy 0 <= shift < window");
    }
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    const int hp = ceil_to_multiple(h, window);
    const int wp = ceil_to_multiple(w, window);

    Tensor canvas;
    if (hp == h && wp == w) {
        canvas = x;
    } else {
        canvas = Tensor({hp, wp, c});
        for (int y = 0; y < h; ++y) {
            std::memcpy(&canvas.at(y, 0, 0), &x.at(y, 0, 0),
                        sizeof(float) * static_cast<std::size_t>(w) * c);
        }
    }
    if (shift > 0) canvas = cyclic_shift(canvas, -shift, -shift);

    Tensor mask;
    if (shift > 0 || hp != h || wp != w) {
        mask = attention_mask_from_ids(shift_region_ids(h, w, hp, wp, window, shift), hp,
                                       wp, window);
    }
    Tensor rel_bias;
    if (!rel_bias_table.empty()) rel_bias = relative_bias_matrix(rel_bias_table, window);

    Tensor wins = window_partition(canvas, window);
    wins = window_attention(wins, heads, wqkv, bqkv, wproj, bproj, rel_bias, mask);
    canvas = window_reverse(wins, window, hp, wp);

    if (shift > 0) canvas = cyclic_shift(canvas, shift, shift);
    if (hp == h && wp == w) return canvas;
    Tensor out({h, w, c});
    for (int y = 0; y < h; ++y) {
        std::memcpy(&out.at(y, 0, 0), &canvas.at(y, 0, 0),
                    sizeof(float) * static_cast<std::size_t>(w) * c);
    }
    return out;
}

Tensor patch_merge(const Tensor& x, const Tensor& norm_gamma, const Tensor& norm_beta,
                   const Tensor& reduce_w) {
    if (x.rank() != 3) throw Error("swin: patch_merge expects [H,W,C]");
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    if (h % 2 != 0 || w % 2 != 0) {
        throw Error("swin: patch_merge needs even spatial dimensions, got " +
                    std::to_string(h) + "x" + std::to_string(w));
    }
    if (reduce_w.rank() != 2 || reduce_w.dim(0) != 4 * c || reduce_w.dim(1) != 2 * c) {
        throw Error("swin: patch_merge reduction weight must be [4C,2C]");
    }
    const int oh = h / 2, ow = w / 2;
    Tensor cat({oh, ow, 4 * c});
    constexpr int offs[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    for (int y = 0; y < oh; ++y) {
        for (int xx = 0; xx < ow; ++xx) {
            float* dst = &cat.at(y, xx, 0);
            for (int n = 0; n < 4; ++n) {
                const float* src = &x.at(2 * y + offs[n][0], 2 * xx + offs[n][1], 0);
                std::memcpy(dst + n * c, src, sizeof(float) * static_cast<std::size_t>(c));
            }
        }
    }
    Tensor normed = layer_norm(cat, norm_gamma, norm_beta);
    Tensor zero_bias({2 * c});
    return linear(normed, reduce_w, zero_bias);
}

namespace {

std::string block_prefix(int stage, int block) {
    return "swin.s" + std::to_string(stage) + ".b" + std::to_string(block) + ".";
}

}  // namespace

FeatureHierarchy swin_forward(const Tensor& image, const WeightMap& weights,
                              const SwinConfig& cfg) {
    if (image.rank() != 3 || image.dim(0) != cfg.in_channels) {
        throw Error("swin: input must be [" + std::to_string(cfg.in_channels) + ",H,W]");
    }
    const int side_mult = cfg.patch * 8;
    if (image.dim(1) % side_mult != 0 || image.dim(2) % side_mult != 0) {
        throw Error("swin: input sides must be divisible by " + std::to_string(side_mult));
    }

    const int token_len = cfg.in_channels * cfg.patch * cfg.patch;
    Tensor tokens = patch_partition(image, cfg.patch);
    Tensor x = linear_embed(
        tokens, fetch_weight(weights, "swin.patch_embed.weight", {token_len, cfg.embed_dim}),
        fetch_weight(weights, "swin.patch_embed.bias", {cfg.embed_dim}));

    int hs = image.dim(1) / cfg.patch;
    int ws = image.dim(2) / cfg.patch;
    int c = cfg.embed_dim;
    x.reshape({hs, ws, c});

    const int span2 = (2 * cfg.window - 1) * (2 * cfg.window - 1);
    FeatureHierarchy out;
    for (int s = 0; s < 4; ++s) {
        const int heads = cfg.heads[static_cast<std::size_t>(s)];
        const int hidden = c * cfg.mlp_ratio;
        for (int b = 0; b < cfg.depths[static_cast<std::size_t>(s)]; ++b) {
            const std::string p = block_prefix(s, b);
            const int shift = (b % 2 == 1) ? cfg.window / 2 : 0;

            Tensor a = layer_norm(x, fetch_weight(weights, p + "norm1.gamma", {c}),
                                  fetch_weight(weights, p + "norm1.beta", {c}));
            a = shifted_block(a, cfg.window, shift, heads,
                              fetch_weight(weights, p + "attn.qkv.weight", {c, 3 * c}),
                              fetch_weight(weights, p + "attn.qkv.bias", {3 * c}),
                              fetch_weight(weights, p + "attn.proj.weight", {c, c}),
                              fetch_weight(weights, p + "attn.proj.bias", {c}),
                              fetch_weight(weights, p + "attn.rel_bias", {span2, heads}));
            x = add(x, a);

            Tensor m = layer_norm(x, fetch_weight(weights, p + "norm2.gamma", {c}),
                                  fetch_weight(weights, p + "norm2.beta", {c}));
            m = linear(m, fetch_weight(weights, p + "mlp.fc1.weight", {c, hidden}),
                       fetch_weight(weights, p + "mlp.fc1.bias", {hidden}));
            m = gelu(m);
            m = linear(m, fetch_weight(weights, p + "mlp.fc2.weight", {hidden, c}),
                       fetch_weight(weights, p + "mlp.fc2.bias", {c}));
            x = add(x, m);
        }
        out.stages[static_cast<std::size_t>(s)] = hwc_to_chw(x);
        if (s < 3) {
            const std::string mp = "swin.merge" + std::to_string(s) + ".";
            x = patch_merge(x, fetch_weight(weights, mp + "norm.gamma", {4 * c}),
                            fetch_weight(weights, mp + "norm.beta", {4 * c}),
                            fetch_weight(weights, mp + "reduce.weight", {4 * c, 2 * c}));
            hs /= 2;
            ws /= 2;
            c *= 2;
        }
    }
    return out;
}

std::vector<WeightSpec> swin_weight_spec(const SwinConfig& cfg) {
    std::vector<WeightSpec> spec;
    const int token_len = cfg.in_channels * cfg.patch * cfg.patch;
    spec.push_back({"swin.patch_embed.weight", {token_len, cfg.embed_dim}});
    spec.push_back({"swin.patch_embed.bias", {cfg.embed_dim}});
    const int span2 = (2 * cfg.window - 1) * (2 * cfg.window - 1);
    int c = cfg.embed_dim;
    for (int s = 0; s < 4; ++s) {
        const int heads = cfg.heads[static_cast<std::size_t>(s)];
        const int hidden = c * cfg.mlp_ratio;
        for (int b = 0; b < cfg.depths[static_cast<std::size_t>(s)]; ++b) {
            const std::string p = block_prefix(s, b);
            spec.push_back({p + "norm1.gamma", {c}});
            spec.push_back({p + "norm1.beta", {c}});
            spec.push_back({p + "attn.qkv.weight", {c, 3 * c}});
            spec.push_back({p + "attn.qkv.bias", {3 * c}});
            spec.push_back({p + "attn.proj.weight", {c, c}});
            spec.push_back({p + "attn.proj.bias", {c}});
            spec.push_back({p + "attn.rel_bias", {span2, heads}});
            spec.push_back({p + "norm2.gamma", {c}});
            spec.push_back({p + "norm2.beta", {c}});
            spec.push_back({p + "mlp.fc1.weight", {c, hidden}});
            spec.push_back({p + "mlp.fc1.bias", {hidden}});
            spec.push_back({p + "mlp.fc2.weight", {hidden, c}});
            spec.push_back({p + "mlp.fc2.bias", {c}});
        }
        if (s < 3) {
            const std::string mp = "swin.merge" + std::to_string(s) + ".";
            spec.push_back({mp + "norm.gamma", {4 * c}});
            spec.push_back({mp + "norm.beta", {4 * c}});
            spec.push_back({mp + "reduce.weight", {4 * c, 2 * c}});
            c *= 2;
        }
    }
    return spec;
}

}  // namespace swindet
