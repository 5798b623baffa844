#include "crsynth/gen/swin.hpp"

namespace crsynth::gen {

namespace O = ag::ops;

namespace {

// (N,C,H,W) <-> (N,H*W,C) token views.
Variable to_tokens(const Variable& x) {
  const Shape& s = x.value().shape();
  return O::reshape(O::permute(x, {0, 2, 3, 1}), {s[0], s[2] * s[3], s[1]});
}

Variable to_nchw(const Variable& t, int64_t h, int64_t w) {
  const Shape& s = t.value().shape();
  return O::permute(O::reshape(t, {s[0], h, w, s[2]}), {0, 3, 1, 2});
}

Variable ln_nchw(const nn::LayerNorm& ln, const Variable& x) {
  const Shape& s = x.value().shape();
  return to_nchw(ln.forward(to_tokens(x)), s[2], s[3]);
}

// Additive attention mask for a cyclically shifted layout: tokens from
// different pre-shift regions must not attend to each other.
Tensor build_shift_mask(int64_t h, int64_t w, int64_t window, int64_t shift) {
  Tensor ids(Shape{h, w});
  auto band = [&](int64_t v, int64_t extent) {
    if (v < extent - window) return 0;
    if (v < extent - shift) return 1;
    return 2;
  };
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) ids.at({y, x}) = static_cast<double>(band(y, h) * 3 + band(x, w));
  }
  int64_t t = window * window;
  int64_t nw = (h / window) * (w / window);
  Tensor mask(Shape{nw, t, t});
  for (int64_t wy = 0; wy < h / window; ++wy) {
    for (int64_t wx = 0; wx < w / window; ++wx) {
      int64_t widx = wy * (w / window) + wx;
      for (int64_t i = 0; i < t; ++i) {
        double idi = ids.at({wy * window + i / window, wx * window + i % window});
        for (int64_t j = 0; j < t; ++j) {
          double idj = ids.at({wy * window + j / window, wx * window + j % window});
          mask.at({widx, i, j}) = idi == idj ? 0.0 : -1e4;
        }
      }
    }
  }
  return mask;
}

}  // namespace

Variable window_partition(const Variable& x, int64_t window) {
  const Shape& s = x.value().shape();
  if (s.size() != 4) throw ShapeError("window_partition: expects NCHW");
  int64_t n = s[0], c = s[1], h = s[2], w = s[3];
  if (h % window != 0 || w % window != 0) {
    throw ShapeError("window_partition: extent " + std::to_string(h) + "x" + std::to_string(w) +
                     " is not divisible by window " + std::to_string(window));
  }
  int64_t gh = h / window, gw = w / window;
  Variable r = O::reshape(x, {n, c, gh, window, gw, window});
  r = O::permute(r, {0, 2, 4, 3, 5, 1});  // (N, gh, gw, win, win, C)
  return O::reshape(r, {n * gh * gw, window * window, c});
}

Variable window_reverse(const Variable& tokens, int64_t window, int64_t n, int64_t h, int64_t w) {
  const Shape& s = tokens.value().shape();
  int64_t c = s[2];
  int64_t gh = h / window, gw = w / window;
  Variable r = O::reshape(tokens, {n, gh, gw, window, window, c});
  r = O::permute(r, {0, 5, 1, 3, 2, 4});  // (N, C, gh, win, gw, win)
  return O::reshape(r, {n, c, h, w});
}

WindowAttention::WindowAttention(int64_t dim, int64_t heads, int64_t window, Rng& rng)
    : dim_(dim),
      heads_(heads),
      window_(window),
      qkv_(dim, 3 * dim, rng),
      proj_(dim, dim, rng),
      tau_(register_parameter("tau", Tensor::full({heads}, 0.1))),
      rel_table_(register_parameter("rel_table", Tensor::zeros({(2 * window - 1) * (2 * window - 1), heads}))) {
  register_module("qkv", qkv_);
  register_module("proj", proj_);
  int64_t t = window * window;
  rel_index_.resize(static_cast<size_t>(t * t));
  for (int64_t i = 0; i < t; ++i) {
    int64_t yi = i / window, xi = i % window;
    for (int64_t j = 0; j < t; ++j) {
      int64_t yj = j / window, xj = j % window;
      int64_t dy = yi - yj + window - 1;
      int64_t dx = xi - xj + window - 1;
      rel_index_[static_cast<size_t>(i * t + j)] = dy * (2 * window - 1) + dx;
    }
  }
}

Variable WindowAttention::logits(const Variable& tokens, const Tensor* mask, int64_t windows_per_image) const {
  const Shape& s = tokens.value().shape();
  int64_t bw = s[0], t = s[1];
  if (s[2] != dim_) throw ShapeError("WindowAttention: token width mismatch");
  int64_t hd = dim_ / heads_;

  Variable qkv = O::reshape(qkv_.forward(tokens), {bw, t, 3, heads_, hd});
  auto head_view = [&](int64_t which) {
    Variable part = O::slice(qkv, 2, which, 1);                       // (bw, t, 1, heads, hd)
    part = O::permute(O::reshape(part, {bw, t, heads_, hd}), {0, 2, 1, 3});
    return O::reshape(part, {bw * heads_, t, hd});
  };
  Variable q = O::l2_normalize(head_view(0), 2);
  Variable k = O::l2_normalize(head_view(1), 2);

  Variable cos = O::bmm(q, O::permute(k, {0, 2, 1}));  // (bw*heads, t, t)
  cos = O::reshape(cos, {bw, heads_, t, t});
  Variable temp = O::reshape(O::clamp_min(tau_, 0.01), {heads_, 1, 1});
  Variable lg = O::div(cos, temp);

  Variable bias = O::gather_rows(rel_table_, rel_index_);              // (t*t, heads)
  bias = O::permute(O::reshape(bias, {t, t, heads_}), {2, 0, 1});      // (heads, t, t)
  lg = O::add(lg, bias);

  if (mask != nullptr) {
    int64_t b = bw / windows_per_image;
    lg = O::reshape(lg, {b, windows_per_image, heads_, t, t});
    lg = O::add(lg, Variable::constant(mask->reshaped({windows_per_image, 1, t, t})));
    lg = O::reshape(lg, {bw, heads_, t, t});
  }
  return lg;
}

Variable WindowAttention::attention_probs(const Variable& tokens) const {
  return O::softmax_lastdim(logits(tokens, nullptr, 1));
}

Variable WindowAttention::forward(const Variable& tokens, const Tensor* mask, int64_t windows_per_image) const {
  const Shape& s = tokens.value().shape();
  int64_t bw = s[0], t = s[1];
  int64_t hd = dim_ / heads_;

  Variable probs = O::softmax_lastdim(logits(tokens, mask, windows_per_image));
  Variable qkv = O::reshape(qkv_.forward(tokens), {bw, t, 3, heads_, hd});
  Variable v = O::permute(O::reshape(O::slice(qkv, 2, 2, 1), {bw, t, heads_, hd}), {0, 2, 1, 3});
  v = O::reshape(v, {bw * heads_, t, hd});

  Variable out = O::bmm(O::reshape(probs, {bw * heads_, t, t}), v);    // (bw*heads, t, hd)
  out = O::permute(O::reshape(out, {bw, heads_, t, hd}), {0, 2, 1, 3});
  out = O::reshape(out, {bw, t, dim_});
  return proj_.forward(out);
}

SwinBlock::SwinBlock(int64_t dim, int64_t heads, int64_t window, int64_t shift, Rng& rng)
    : dim_(dim),
      window_(window),
      shift_(shift),
      attn_(dim, heads, window, rng),
      norm1_(dim),
      norm2_(dim),
      mlp_in_(dim, 4 * dim, rng),
      mlp_out_(4 * dim, dim, rng) {
  register_module("attn", attn_);
  register_module("norm1", norm1_);
  register_module("norm2", norm2_);
  register_module("mlp_in", mlp_in_);
  register_module("mlp_out", mlp_out_);
}

Variable SwinBlock::forward(const Variable& x) const {
  const Shape& s = x.value().shape();
  int64_t n = s[0], h = s[2], w = s[3];
  int64_t shift = (shift_ > 0 && std::min(h, w) > window_) ? shift_ : 0;

  Variable shifted = shift > 0 ? O::roll2d(x, -shift, -shift) : x;
  Variable tokens = window_partition(shifted, window_);
  int64_t nw = (h / window_) * (w / window_);

  Variable att;
  if (shift > 0) {
    Tensor mask = build_shift_mask(h, w, window_, shift);
    att = attn_.forward(tokens, &mask, nw);
  } else {
    att = attn_.forward(tokens, nullptr, nw);
  }
  Variable att_map = window_reverse(att, window_, n, h, w);
  if (shift > 0) att_map = O::roll2d(att_map, shift, shift);

  // Residual post-norm arrangement.
  Variable x1 = O::add(x, ln_nchw(norm1_, att_map));

  Variable tok = to_tokens(x1);
  Variable mlp = mlp_out_.forward(O::gelu(mlp_in_.forward(tok)));
  Variable x2 = O::add(x1, ln_nchw(norm2_, to_nchw(mlp, h, w)));
  return x2;
}

PatchMerging::PatchMerging(int64_t dim, Rng& rng) : norm_(4 * dim), reduce_(4 * dim, 2 * dim, rng, /*bias=*/false) {
  register_module("norm", norm_);
  register_module("reduce", reduce_);
}

Variable PatchMerging::forward(const Variable& x) const {
  const Shape& s = x.value().shape();
  int64_t n = s[0], c = s[1], h = s[2], w = s[3];
  if (h % 2 != 0 || w % 2 != 0) throw ShapeError("PatchMerging: extent must be even");
  Variable r = O::reshape(x, {n, c, h / 2, 2, w / 2, 2});
  r = O::permute(r, {0, 3, 5, 1, 2, 4});  // (N, 2, 2, C, H/2, W/2)
  r = O::reshape(r, {n, 4 * c, h / 2, w / 2});
  Variable tok = to_tokens(r);
  tok = reduce_.forward(norm_.forward(tok));
  return to_nchw(tok, h / 2, w / 2);
}

SwinBackbone::SwinBackbone(int64_t in_channels, const GeneratorConfig& cfg, Rng& rng)
    : window_(cfg.window_size),
      embed_(in_channels, cfg.swin_embed_dim, 1, 1, 0, nn::PadMode::Zero, true, rng),
      embed_norm_(cfg.swin_embed_dim) {
  register_module("embed", embed_);
  register_module("embed_norm", embed_norm_);
  for (int stage = 0; stage < 4; ++stage) {
    int64_t dim = cfg.swin_embed_dim << stage;
    stage_sizes_[static_cast<size_t>(stage)] = static_cast<int>(cfg.swin_depths[static_cast<size_t>(stage)]);
    for (int64_t d = 0; d < cfg.swin_depths[static_cast<size_t>(stage)]; ++d) {
      int64_t shift = (d % 2 == 1) ? window_ / 2 : 0;
      blocks_.emplace_back(
          std::make_unique<SwinBlock>(dim, cfg.swin_heads[static_cast<size_t>(stage)], window_, shift, rng));
      register_module("stage" + std::to_string(stage + 1) + ".block" + std::to_string(d), *blocks_.back());
    }
    if (stage < 3) {
      merges_.emplace_back(std::make_unique<PatchMerging>(dim, rng));
      register_module("merge" + std::to_string(stage + 1), *merges_.back());
    }
  }
}

std::array<Variable, 4> SwinBackbone::forward(const Variable& x) const {
  const Shape& s = x.value().shape();
  if (s[2] % (window_ * 8) != 0 || s[3] % (window_ * 8) != 0) {
    throw ShapeError("SwinBackbone: extent " + std::to_string(s[2]) + "x" + std::to_string(s[3]) +
                     " is not divisible by window_size*8 = " + std::to_string(window_ * 8));
  }
  Variable h = embed_.forward(x);
  h = ln_nchw(embed_norm_, h);

  std::array<Variable, 4> features;
  size_t cursor = 0;
  for (int stage = 0; stage < 4; ++stage) {
    for (int d = 0; d < stage_sizes_[static_cast<size_t>(stage)]; ++d) {
      h = blocks_[cursor++]->forward(h);
    }
    features[static_cast<size_t>(stage)] = h;
    if (stage < 3) h = merges_[static_cast<size_t>(stage)]->forward(h);
  }
  return features;
}

}  // namespace crsynth::gen
