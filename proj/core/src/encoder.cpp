#include "reasonkit/encoder.hpp"

#include <cmath>

#include "reasonkit/errors.hpp"
#include "reasonkit/io.hpp"
#include "reasonkit/rng.hpp"
#include "reasonkit/text.hpp"

namespace rk {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

void EncoderSpec::validate() const {
  if (kind != kToyTransformerKind && kind != kExternalPretrainedKind) {
    throw ConfigError("unknown encoder kind: " + kind);
  }
  if (max_sequence_length < 8) throw ConfigError("max_sequence_length must be >= 8");
  if (hidden_size < 1) throw ConfigError("hidden_size must be positive");
  if (kind == kToyTransformerKind) {
    if (num_layers < 1) throw ConfigError("num_layers must be >= 1");
    if (num_heads < 1 || hidden_size % num_heads != 0) {
      throw ConfigError("hidden_size must be divisible by num_heads");
    }
    if (ffn_size < 1) throw ConfigError("ffn_size must be positive");
  }
}

json EncoderSpec::to_json() const {
  return json{{"kind", kind},
              {"max_sequence_length", max_sequence_length},
              {"hidden_size", hidden_size},
              {"num_layers", num_layers},
              {"num_heads", num_heads},
              {"ffn_size", ffn_size}};
}

EncoderSpec EncoderSpec::from_json(const json& doc) {
  EncoderSpec spec;
  spec.kind = doc.value("kind", std::string(kToyTransformerKind));
  spec.max_sequence_length = doc.value("max_sequence_length", 64);
  spec.hidden_size = doc.value("hidden_size", 128);
  spec.num_layers = doc.value("num_layers", 2);
  spec.num_heads = doc.value("num_heads", 4);
  spec.ffn_size = doc.value("ffn_size", 256);
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Parameter layout

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kMaskValue = -1e30;

struct Layout {
  struct Layer {
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
    std::size_t ln1_g, ln1_b;
    std::size_t w1, b1, w2, b2;
    std::size_t ln2_g, ln2_b;
  };
  int V = 0, H = 0, F = 0, L = 0, heads = 0, max_t = 0;
  std::size_t tok_emb = 0, pos_emb = 0, emb_ln_g = 0, emb_ln_b = 0;
  std::vector<Layer> layers;
  std::size_t total = 0;
};

Layout make_layout(const EncoderSpec& spec, int vocab_size) {
  Layout lt;
  lt.V = vocab_size;
  lt.H = spec.hidden_size;
  lt.F = spec.ffn_size;
  lt.L = spec.num_layers;
  lt.heads = spec.num_heads;
  lt.max_t = spec.max_sequence_length;
  const auto H = std::size_t(lt.H), F = std::size_t(lt.F);
  std::size_t at = 0;
  auto take = [&at](std::size_t n) {
    const std::size_t off = at;
    at += n;
    return off;
  };
  lt.tok_emb = take(std::size_t(lt.V) * H);
  lt.pos_emb = take(std::size_t(lt.max_t) * H);
  lt.emb_ln_g = take(H);
  lt.emb_ln_b = take(H);
  for (int l = 0; l < lt.L; ++l) {
    Layout::Layer lay;
    lay.wq = take(H * H);
    lay.bq = take(H);
    lay.wk = take(H * H);
    lay.bk = take(H);
    lay.wv = take(H * H);
    lay.bv = take(H);
    lay.wo = take(H * H);
    lay.bo = take(H);
    lay.ln1_g = take(H);
    lay.ln1_b = take(H);
    lay.w1 = take(H * F);
    lay.b1 = take(F);
    lay.w2 = take(F * H);
    lay.b2 = take(H);
    lay.ln2_g = take(H);
    lay.ln2_b = take(H);
    lt.layers.push_back(lay);
  }
  lt.total = at;
  return lt;
}

struct LnCache {
  MatX xhat;
  VecX inv_std;
};

MatX layer_norm(const MatX& r, const Eigen::Map<const VecX>& g,
                const Eigen::Map<const VecX>& b, LnCache* c) {
  const VecX mean = r.rowwise().mean();
  MatX centered = r;
  centered.colwise() -= mean;
  const VecX var = centered.array().square().rowwise().mean().matrix();
  const VecX inv_std = (var.array() + kLnEps).rsqrt().matrix();
  MatX xhat = (centered.array().colwise() * inv_std.array()).matrix();
  MatX y = (xhat.array().rowwise() * g.transpose().array()).matrix();
  y.array().rowwise() += b.transpose().array();
  if (c) {
    c->xhat = std::move(xhat);
    c->inv_std = inv_std;
    return y;
  }
  return y;
}

// Returns d(loss)/d(r) and accumulates dgamma/dbeta.
MatX layer_norm_backward(const MatX& dy, const LnCache& c,
                         const Eigen::Map<const VecX>& g, Eigen::Map<VecX> dg,
                         Eigen::Map<VecX> db) {
  dg += (dy.array() * c.xhat.array()).colwise().sum().matrix().transpose();
  db += dy.colwise().sum().transpose();
  const MatX dxhat = (dy.array().rowwise() * g.transpose().array()).matrix();
  const VecX m1 = dxhat.rowwise().mean();
  const VecX m2 = (dxhat.array() * c.xhat.array()).rowwise().mean().matrix();
  MatX dr = dxhat;
  dr.colwise() -= m1;
  dr -= (c.xhat.array().colwise() * m2.array()).matrix();
  dr = (dr.array().colwise() * c.inv_std.array()).matrix();
  return dr;
}

}  // namespace

// ---------------------------------------------------------------------------
// ToyTransformer

struct ToyTransformer::Cache : EncodeCache {
  int B = 0, T = 0;
  std::vector<std::vector<int>> ids;
  std::vector<int> lens;
  MatX x0;
  LnCache emb_ln;
  struct LayerCache {
    MatX a, q, k, v;
    std::vector<MatX> attn;  // B*heads blocks of [T,T] probabilities
    MatX ocat;
    LnCache ln1;
    MatX x1, fpre, fact;
    LnCache ln2;
    MatX x2;
  };
  std::vector<LayerCache> layers;
};

ToyTransformer::ToyTransformer(EncoderSpec spec, Vocab vocab)
    : spec_(std::move(spec)), vocab_(std::move(vocab)) {
  spec_.validate();
  if (spec_.kind != kToyTransformerKind) {
    throw ConfigError("ToyTransformer requires the in-repo encoder kind");
  }
  params_.assign(make_layout(spec_, int(vocab_.size())).total, 0.0);
}

void ToyTransformer::init_params(std::uint64_t seed) {
  const Layout lt = make_layout(spec_, int(vocab_.size()));
  Rng rng(mix_seed(seed, 0xE2C0DE));
  std::fill(params_.begin(), params_.end(), 0.0);
  auto fill_normal = [&](std::size_t off, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) params_[off + i] = rng.normal(0.0, 0.02);
  };
  auto fill_ones = [&](std::size_t off, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) params_[off + i] = 1.0;
  };
  const auto H = std::size_t(lt.H), F = std::size_t(lt.F);
  fill_normal(lt.tok_emb, std::size_t(lt.V) * H);
  fill_normal(lt.pos_emb, std::size_t(lt.max_t) * H);
  fill_ones(lt.emb_ln_g, H);
  for (const auto& lay : lt.layers) {
    fill_normal(lay.wq, H * H);
    fill_normal(lay.wk, H * H);
    fill_normal(lay.wv, H * H);
    fill_normal(lay.wo, H * H);
    fill_ones(lay.ln1_g, H);
    fill_normal(lay.w1, H * F);
    fill_normal(lay.w2, F * H);
    fill_ones(lay.ln2_g, H);
  }
}

std::unique_ptr<EncodeCache> ToyTransformer::make_cache() const {
  return std::make_unique<Cache>();
}

Eigen::MatrixXd ToyTransformer::encode(const std::vector<TextPair>& inputs,
                                       EncodeCache* cache) const {
  std::vector<std::vector<int>> ids;
  ids.reserve(inputs.size());
  for (const auto& in : inputs) {
    ids.push_back(vocab_.pack_pair(in.question, in.answer, spec_.max_sequence_length));
  }
  return encode_ids(ids, cache);
}

Eigen::MatrixXd ToyTransformer::encode_ids(const std::vector<std::vector<int>>& ids,
                                           EncodeCache* cache) const {
  if (ids.empty()) throw ConfigError("cannot encode an empty batch");
  const Layout lt = make_layout(spec_, int(vocab_.size()));
  const int B = int(ids.size());
  int T = 0;
  for (const auto& seq : ids) {
    if (seq.empty()) throw ConfigError("cannot encode an empty token sequence");
    if (int(seq.size()) > lt.max_t) {
      throw ConfigError("token sequence exceeds max_sequence_length");
    }
    for (const int id : seq) {
      if (id < 0 || id >= lt.V) throw ConfigError("token id outside vocabulary");
    }
    T = std::max(T, int(seq.size()));
  }
  const int H = lt.H, heads = lt.heads, dh = lt.H / lt.heads;
  const int N = B * T;
  const double scale = 1.0 / std::sqrt(double(dh));

  const double* p = params_.data();
  auto mat = [&](std::size_t off, int rows, int cols) {
    return Eigen::Map<const MatX>(p + off, rows, cols);
  };
  auto vec = [&](std::size_t off, int n) { return Eigen::Map<const VecX>(p + off, n); };

  const auto tok_emb = mat(lt.tok_emb, lt.V, H);
  const auto pos_emb = mat(lt.pos_emb, lt.max_t, H);

  Cache local;
  Cache& c = cache ? dynamic_cast<Cache&>(*cache) : local;
  c.B = B;
  c.T = T;
  c.ids = ids;
  c.lens.clear();
  for (const auto& seq : ids) c.lens.push_back(int(seq.size()));
  c.layers.assign(std::size_t(lt.L), Cache::LayerCache{});

  MatX x0(N, H);
  for (int b = 0; b < B; ++b) {
    for (int t = 0; t < T; ++t) {
      const int id = t < c.lens[std::size_t(b)] ? ids[std::size_t(b)][std::size_t(t)]
                                                : Vocab::kPad;
      x0.row(b * T + t) = tok_emb.row(id) + pos_emb.row(t);
    }
  }
  c.x0 = x0;
  MatX x = layer_norm(x0, vec(lt.emb_ln_g, H), vec(lt.emb_ln_b, H), &c.emb_ln);

  for (int l = 0; l < lt.L; ++l) {
    const auto& lay = lt.layers[std::size_t(l)];
    auto& lc = c.layers[std::size_t(l)];
    lc.a = x;
    lc.q = (x * mat(lay.wq, H, H)).rowwise() + vec(lay.bq, H).transpose();
    lc.k = (x * mat(lay.wk, H, H)).rowwise() + vec(lay.bk, H).transpose();
    lc.v = (x * mat(lay.wv, H, H)).rowwise() + vec(lay.bv, H).transpose();
    lc.attn.assign(std::size_t(B) * std::size_t(heads), MatX());
    lc.ocat.resize(N, H);
    for (int b = 0; b < B; ++b) {
      const int len = c.lens[std::size_t(b)];
      for (int h = 0; h < heads; ++h) {
        const auto Qb = lc.q.block(b * T, h * dh, T, dh);
        const auto Kb = lc.k.block(b * T, h * dh, T, dh);
        const auto Vb = lc.v.block(b * T, h * dh, T, dh);
        MatX S = (Qb * Kb.transpose()) * scale;
        for (int j = len; j < T; ++j) S.col(j).array() = kMaskValue;
        // rowwise softmax with max subtraction
        const VecX rmax = S.rowwise().maxCoeff();
        S.colwise() -= rmax;
        MatX A = S.array().exp().matrix();
        const VecX denom = A.rowwise().sum();
        A.array().colwise() /= denom.array();
        lc.ocat.block(b * T, h * dh, T, dh) = A * Vb;
        lc.attn[std::size_t(b * heads + h)] = std::move(A);
      }
    }
    MatX attn_out = (lc.ocat * mat(lay.wo, H, H)).rowwise() + vec(lay.bo, H).transpose();
    MatX r1 = lc.a + attn_out;
    lc.x1 = layer_norm(r1, vec(lay.ln1_g, H), vec(lay.ln1_b, H), &lc.ln1);
    lc.fpre = (lc.x1 * mat(lay.w1, H, lt.F)).rowwise() + vec(lay.b1, lt.F).transpose();
    lc.fact = lc.fpre.cwiseMax(0.0);
    MatX ffn_out = (lc.fact * mat(lay.w2, lt.F, H)).rowwise() + vec(lay.b2, H).transpose();
    MatX r2 = lc.x1 + ffn_out;
    lc.x2 = layer_norm(r2, vec(lay.ln2_g, H), vec(lay.ln2_b, H), &lc.ln2);
    x = lc.x2;
  }

  MatX features(B, H);
  for (int b = 0; b < B; ++b) features.row(b) = x.row(b * T);
  return features;
}

void ToyTransformer::backward(const EncodeCache& cache, const Eigen::MatrixXd& dfeatures,
                              double* grad) const {
  const auto& c = dynamic_cast<const Cache&>(cache);
  if (c.B == 0) throw ConfigError("backward called before encode");
  if (dfeatures.rows() != c.B || dfeatures.cols() != spec_.hidden_size) {
    throw ConfigError("feature gradient shape mismatch");
  }
  const Layout lt = make_layout(spec_, int(vocab_.size()));
  const int B = c.B, T = c.T, H = lt.H, heads = lt.heads, dh = lt.H / lt.heads;
  const int N = B * T;
  const double scale = 1.0 / std::sqrt(double(dh));

  const double* p = params_.data();
  auto mat = [&](std::size_t off, int rows, int cols) {
    return Eigen::Map<const MatX>(p + off, rows, cols);
  };
  auto vec = [&](std::size_t off, int n) { return Eigen::Map<const VecX>(p + off, n); };
  auto gmat = [&](std::size_t off, int rows, int cols) {
    return Eigen::Map<MatX>(grad + off, rows, cols);
  };
  auto gvec = [&](std::size_t off, int n) { return Eigen::Map<VecX>(grad + off, n); };

  MatX dx = MatX::Zero(N, H);
  for (int b = 0; b < B; ++b) dx.row(b * T) = dfeatures.row(b);

  for (int l = lt.L - 1; l >= 0; --l) {
    const auto& lay = lt.layers[std::size_t(l)];
    const auto& lc = c.layers[std::size_t(l)];

    MatX dr2 = layer_norm_backward(dx, lc.ln2, vec(lay.ln2_g, H), gvec(lay.ln2_g, H),
                                   gvec(lay.ln2_b, H));
    MatX dx1 = dr2;  // residual branch
    // ffn_out = fact * W2 + b2
    gmat(lay.w2, lt.F, H) += lc.fact.transpose() * dr2;
    gvec(lay.b2, H) += dr2.colwise().sum().transpose();
    MatX dfact = dr2 * mat(lay.w2, lt.F, H).transpose();
    MatX dfpre = (lc.fpre.array() > 0.0).select(dfact, 0.0);
    gmat(lay.w1, H, lt.F) += lc.x1.transpose() * dfpre;
    gvec(lay.b1, lt.F) += dfpre.colwise().sum().transpose();
    dx1 += dfpre * mat(lay.w1, H, lt.F).transpose();

    MatX dr1 = layer_norm_backward(dx1, lc.ln1, vec(lay.ln1_g, H), gvec(lay.ln1_g, H),
                                   gvec(lay.ln1_b, H));
    MatX da = dr1;  // residual branch
    // attn_out = ocat * Wo + bo
    gmat(lay.wo, H, H) += lc.ocat.transpose() * dr1;
    gvec(lay.bo, H) += dr1.colwise().sum().transpose();
    MatX docat = dr1 * mat(lay.wo, H, H).transpose();

    MatX dq = MatX::Zero(N, H), dk = MatX::Zero(N, H), dv = MatX::Zero(N, H);
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < heads; ++h) {
        const auto Qb = lc.q.block(b * T, h * dh, T, dh);
        const auto Kb = lc.k.block(b * T, h * dh, T, dh);
        const auto Vb = lc.v.block(b * T, h * dh, T, dh);
        const MatX& A = lc.attn[std::size_t(b * heads + h)];
        const auto dOb = docat.block(b * T, h * dh, T, dh);
        MatX dA = dOb * Vb.transpose();
        dv.block(b * T, h * dh, T, dh) = A.transpose() * dOb;
        const VecX rdot = (dA.array() * A.array()).rowwise().sum().matrix();
        dA.colwise() -= rdot;
        MatX dS = (A.array() * dA.array()).matrix();
        dq.block(b * T, h * dh, T, dh) = (dS * Kb) * scale;
        dk.block(b * T, h * dh, T, dh) = (dS.transpose() * Qb) * scale;
      }
    }
    gmat(lay.wq, H, H) += lc.a.transpose() * dq;
    gvec(lay.bq, H) += dq.colwise().sum().transpose();
    da += dq * mat(lay.wq, H, H).transpose();
    gmat(lay.wk, H, H) += lc.a.transpose() * dk;
    gvec(lay.bk, H) += dk.colwise().sum().transpose();
    da += dk * mat(lay.wk, H, H).transpose();
    gmat(lay.wv, H, H) += lc.a.transpose() * dv;
    gvec(lay.bv, H) += dv.colwise().sum().transpose();
    da += dv * mat(lay.wv, H, H).transpose();
    dx = std::move(da);
  }

  MatX dx0 = layer_norm_backward(dx, c.emb_ln, vec(lt.emb_ln_g, H),
                                 gvec(lt.emb_ln_g, H), gvec(lt.emb_ln_b, H));
  auto dtok = gmat(lt.tok_emb, lt.V, H);
  auto dpos = gmat(lt.pos_emb, lt.max_t, H);
  for (int b = 0; b < B; ++b) {
    for (int t = 0; t < T; ++t) {
      const int id = t < c.lens[std::size_t(b)] ? c.ids[std::size_t(b)][std::size_t(t)]
                                                : Vocab::kPad;
      dtok.row(id) += dx0.row(b * T + t);
      dpos.row(t) += dx0.row(b * T + t);
    }
  }
}

json ToyTransformer::state_json() const { return json{{"vocab", vocab_.to_json()}}; }

// ---------------------------------------------------------------------------
// PrecomputedEmbeddings

namespace {
struct NullCache : EncodeCache {};
}  // namespace

PrecomputedEmbeddings::PrecomputedEmbeddings(
    EncoderSpec spec, std::map<std::string, std::vector<double>> table)
    : spec_(std::move(spec)), table_(std::move(table)) {
  spec_.validate();
  if (spec_.kind != kExternalPretrainedKind) {
    throw ConfigError("PrecomputedEmbeddings requires the external encoder kind");
  }
  if (table_.empty()) throw DataError("embedding table is empty");
  for (const auto& [text, v] : table_) {
    if (int(v.size()) != spec_.hidden_size) {
      throw DataError("embedding width mismatch for text: " + text);
    }
  }
}

PrecomputedEmbeddings PrecomputedEmbeddings::load_jsonl(
    const std::filesystem::path& path, int max_sequence_length) {
  std::map<std::string, std::vector<double>> table;
  for (const auto& row : read_jsonl(path)) {
    if (!row.contains("text") || !row.contains("embedding")) {
      throw DataError("embedding rows need text and embedding fields: " + path.string());
    }
    table[row.at("text").get<std::string>()] =
        row.at("embedding").get<std::vector<double>>();
  }
  if (table.empty()) throw DataError("no embeddings in " + path.string());
  EncoderSpec spec;
  spec.kind = kExternalPretrainedKind;
  spec.max_sequence_length = max_sequence_length;
  spec.hidden_size = int(table.begin()->second.size());
  return PrecomputedEmbeddings(std::move(spec), std::move(table));
}

std::unique_ptr<EncodeCache> PrecomputedEmbeddings::make_cache() const {
  return std::make_unique<NullCache>();
}

Eigen::MatrixXd PrecomputedEmbeddings::encode(const std::vector<TextPair>& inputs,
                                              EncodeCache*) const {
  if (inputs.empty()) throw ConfigError("cannot encode an empty batch");
  MatX features(long(inputs.size()), spec_.hidden_size);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string key = assemble_sequence(inputs[i].question, inputs[i].answer);
    const auto it = table_.find(key);
    if (it == table_.end()) {
      throw DataError("no precomputed embedding for text: " + key);
    }
    features.row(long(i)) =
        Eigen::Map<const VecX>(it->second.data(), spec_.hidden_size);
  }
  return features;
}

json PrecomputedEmbeddings::state_json() const {
  json table = json::object();
  for (const auto& [text, v] : table_) table[text] = v;
  return json{{"embeddings", table}};
}

// ---------------------------------------------------------------------------

std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec, const json& state) {
  spec.validate();
  if (spec.kind == kToyTransformerKind) {
    if (!state.contains("vocab")) throw DataError("encoder state lacks a vocabulary");
    return std::make_unique<ToyTransformer>(spec, Vocab::from_json(state.at("vocab")));
  }
  if (!state.contains("embeddings")) {
    throw DataError("encoder state lacks an embedding table");
  }
  std::map<std::string, std::vector<double>> table;
  for (const auto& [text, v] : state.at("embeddings").items()) {
    table[text] = v.get<std::vector<double>>();
  }
  return std::make_unique<PrecomputedEmbeddings>(spec, std::move(table));
}

}  // namespace rk
