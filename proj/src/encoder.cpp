#include "tagspan/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tagspan {

void ParamBinder::accumulate_grads(ParamStore& store) const {
  for (size_t id = 0; id < leaves_.size(); ++id) {
    if (leaves_[id] < 0) continue;
    const Matrix& g = tape_->grad(leaves_[id]);
    if (g.empty()) continue;  // not reached by backward
    Matrix& acc = store[static_cast<int>(id)].grad;
    for (size_t i = 0; i < g.size(); ++i) acc.data()[i] += g.data()[i];
  }
}

std::vector<Matrix> ParamBinder::collect_grads() const {
  std::vector<Matrix> out(leaves_.size());
  for (size_t id = 0; id < leaves_.size(); ++id) {
    if (leaves_[id] < 0) continue;
    const Matrix& g = tape_->grad(leaves_[id]);
    if (!g.empty()) out[id] = g;
  }
  return out;
}

namespace {

AttentionUnitParams create_unit(ParamStore& store, const std::string& prefix, int d, Rng& rng) {
  AttentionUnitParams u;
  u.wq = store.add_weight(prefix + "/wq", d, d, rng);
  u.wk = store.add_weight(prefix + "/wk", d, d, rng);
  u.wv = store.add_weight(prefix + "/wv", d, d, rng);
  u.wo = store.add_weight(prefix + "/wo", d, d, rng);
  u.ffn_w1 = store.add_weight(prefix + "/ffn_w1", d, d, rng);
  u.ffn_b1 = store.add_bias(prefix + "/ffn_b1", d);
  u.ffn_w2 = store.add_weight(prefix + "/ffn_w2", d, d, rng);
  u.ffn_b2 = store.add_bias(prefix + "/ffn_b2", d);
  u.ln1_gain = store.add_bias(prefix + "/ln1_gain", d, 1.0);
  u.ln1_shift = store.add_bias(prefix + "/ln1_shift", d);
  u.ln2_gain = store.add_bias(prefix + "/ln2_gain", d, 1.0);
  u.ln2_shift = store.add_bias(prefix + "/ln2_shift", d);
  return u;
}

}  // namespace

EncoderParams EncoderParams::create(ParamStore& store, const EncoderConfig& cfg, Rng& rng) {
  if (cfg.dim <= 0 || cfg.heads <= 0 || cfg.dim % cfg.heads != 0)
    throw std::invalid_argument("encoder: dim must be positive and divisible by head count");
  if (cfg.layers < 1) throw std::invalid_argument("encoder: need at least one layer");
  const int d = cfg.dim;
  EncoderParams p;
  p.proj_label_w = store.add_weight("proj/label/w", d, d, rng);
  p.proj_label_b = store.add_bias("proj/label/b", d);
  p.proj_entity_w = store.add_weight("proj/entity/w", d, d, rng);
  p.proj_entity_b = store.add_bias("proj/entity/b", d);
  p.proj_relation_w = store.add_weight("proj/relation/w", d, d, rng);
  p.proj_relation_b = store.add_bias("proj/relation/b", d);
  for (int layer = 0; layer < cfg.layers; ++layer) {
    const std::string base = "layer" + std::to_string(layer);
    EncoderLayerParams lp;
    lp.fuse_w = store.add_weight(base + "/fuse/w", 2 * d, d, rng);
    lp.fuse_b = store.add_bias(base + "/fuse/b", d);
    lp.label_unit = create_unit(store, base + "/label_unit", d, rng);
    lp.entity_unit = create_unit(store, base + "/entity_unit", d, rng);
    lp.relation_unit = create_unit(store, base + "/relation_unit", d, rng);
    p.layers.push_back(lp);
  }
  return p;
}

int multi_head_attention(Tape& t, int q, int k, int v, const AttentionUnitParams& p, ParamBinder& bind,
                         const EncoderConfig& cfg, EncoderTrace* trace) {
  const int d = cfg.dim;
  const int dh = d / cfg.heads;
  const int qp = t.matmul(q, bind(p.wq));
  const int kp = t.matmul(k, bind(p.wk));
  const int vp = t.matmul(v, bind(p.wv));
  std::vector<int> heads;
  heads.reserve(cfg.heads);
  for (int h = 0; h < cfg.heads; ++h) {
    const int qh = t.slice_cols(qp, h * dh, (h + 1) * dh);
    const int kh = t.slice_cols(kp, h * dh, (h + 1) * dh);
    const int vh = t.slice_cols(vp, h * dh, (h + 1) * dh);
    const int scores = t.scale(t.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
    const int attn = t.softmax_rows(scores);
    if (trace) trace->softmax_nodes.push_back(attn);
    heads.push_back(t.matmul(attn, vh));
  }
  return t.matmul(t.concat_cols(heads), bind(p.wo));
}

int position_wise_ffn(Tape& t, int x, const AttentionUnitParams& p, ParamBinder& bind) {
  const int h = t.relu(t.add_row(t.matmul(x, bind(p.ffn_w1)), bind(p.ffn_b1)));
  return t.add_row(t.matmul(h, bind(p.ffn_w2)), bind(p.ffn_b2));
}

int attention_unit(Tape& t, int q, int k, int v, const AttentionUnitParams& p, ParamBinder& bind,
                   const EncoderConfig& cfg, EncoderTrace* trace) {
  const int mha = multi_head_attention(t, q, k, v, p, bind, cfg, trace);
  const int norm1 = t.normalize_rows(t.add(q, mha), cfg.layer_norm_eps);
  if (trace) trace->prenorm_nodes.push_back(norm1);
  const int a = t.affine_rows(norm1, bind(p.ln1_gain), bind(p.ln1_shift));
  const int ffn = position_wise_ffn(t, a, p, bind);
  const int norm2 = t.normalize_rows(t.add(a, ffn), cfg.layer_norm_eps);
  if (trace) trace->prenorm_nodes.push_back(norm2);
  return t.affine_rows(norm2, bind(p.ln2_gain), bind(p.ln2_shift));
}

int fuse_streams(Tape& t, int h_entity, int h_relation, const EncoderLayerParams& p, ParamBinder& bind) {
  const int cat = t.concat_cols({h_entity, h_relation});
  return t.add_row(t.matmul(cat, bind(p.fuse_w)), bind(p.fuse_b));
}

StreamNodes encode_layer(Tape& t, const StreamNodes& in, const EncoderLayerParams& p, ParamBinder& bind,
                         const EncoderConfig& cfg, EncoderTrace* trace) {
  int label_kv = in.label;
  switch (cfg.mode) {
    case InteractionMode::full:
      label_kv = fuse_streams(t, in.entity, in.relation, p, bind);
      break;
    case InteractionMode::no_re_to_ner:
      label_kv = in.entity;
      break;
    case InteractionMode::no_ner_to_re:
      label_kv = in.relation;
      break;
    case InteractionMode::none:
      label_kv = in.label;
      break;
  }
  StreamNodes out;
  out.label = attention_unit(t, in.label, label_kv, label_kv, p.label_unit, bind, cfg, trace);
  // the token streams read the *updated* label stream
  out.entity = attention_unit(t, in.entity, out.label, out.label, p.entity_unit, bind, cfg, trace);
  out.relation = attention_unit(t, in.relation, out.label, out.label, p.relation_unit, bind, cfg, trace);
  return out;
}

StreamNodes encode_stack(Tape& t, const Matrix& embeddings, const EncoderParams& p, ParamBinder& bind,
                         const EncoderConfig& cfg, EncoderTrace* trace) {
  if (!embeddings.all_finite()) throw std::domain_error("encode_stack: non-finite embeddings");
  const int emb = t.leaf(embeddings);
  StreamNodes s;
  s.label = t.add_row(t.matmul(emb, bind(p.proj_label_w)), bind(p.proj_label_b));
  s.entity = t.add_row(t.matmul(emb, bind(p.proj_entity_w)), bind(p.proj_entity_b));
  s.relation = t.add_row(t.matmul(emb, bind(p.proj_relation_w)), bind(p.proj_relation_b));
  for (const auto& layer : p.layers) s = encode_layer(t, s, layer, bind, cfg, trace);
  return s;
}

}  // namespace tagspan
