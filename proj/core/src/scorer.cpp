#include "reasonkit/scorer.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "reasonkit/errors.hpp"
#include "reasonkit/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian");

namespace rk {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

std::vector<ScorePair> Scorer::score_batch(const std::vector<TextPair>& inputs) const {
  std::vector<ScorePair> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) out.push_back(score(in.question, in.answer));
  return out;
}

ReasonablenessModel::ReasonablenessModel(std::unique_ptr<Encoder> encoder)
    : encoder_(std::move(encoder)) {
  if (!encoder_) throw ConfigError("model requires an encoder");
  head_.assign(std::size_t(hidden_size()) * 2 + 2, 0.0);
  metadata_ = json::object();
}

void ReasonablenessModel::init_params(std::uint64_t seed) {
  encoder_->init_params(seed);
  Rng rng(mix_seed(seed, 0x4EAD));
  const std::size_t w = std::size_t(hidden_size()) * 2;
  for (std::size_t i = 0; i < w; ++i) head_[i] = rng.normal(0.0, 0.02);
  head_[w] = 0.0;
  head_[w + 1] = 0.0;
}

std::size_t ReasonablenessModel::param_count() const {
  return encoder_->param_count() + head_.size();
}

std::vector<double> ReasonablenessModel::params_copy() const {
  std::vector<double> flat(param_count());
  const std::size_t n = encoder_->param_count();
  if (n > 0) std::memcpy(flat.data(), encoder_->param_data(), n * sizeof(double));
  std::memcpy(flat.data() + n, head_.data(), head_.size() * sizeof(double));
  return flat;
}

void ReasonablenessModel::set_params(const std::vector<double>& flat) {
  if (flat.size() != param_count()) {
    throw ConfigError("parameter vector size mismatch: got " +
                      std::to_string(flat.size()) + ", want " +
                      std::to_string(param_count()));
  }
  const std::size_t n = encoder_->param_count();
  if (n > 0) std::memcpy(encoder_->param_data(), flat.data(), n * sizeof(double));
  std::memcpy(head_.data(), flat.data() + n, head_.size() * sizeof(double));
}

ReasonablenessModel::Forward ReasonablenessModel::forward(
    const std::vector<TextPair>& inputs, EncodeCache* cache) const {
  Forward fwd;
  fwd.features = encoder_->encode(inputs, cache);
  const int H = hidden_size();
  const Eigen::Map<const MatX> w(head_.data(), H, 2);
  const Eigen::Map<const Eigen::Vector2d> b(head_.data() + std::size_t(H) * 2);
  fwd.logits = (fwd.features * w).rowwise() + b.transpose();
  if (!fwd.logits.allFinite()) {
    throw NumericError("non-finite head logits");
  }
  return fwd;
}

void ReasonablenessModel::backward(const EncodeCache& cache, const Forward& fwd,
                                   const Eigen::MatrixXd& dlogits,
                                   const Eigen::MatrixXd& dfeatures,
                                   std::vector<double>& grad) const {
  if (grad.size() != param_count()) {
    throw ConfigError("gradient vector size mismatch");
  }
  if (dlogits.rows() != fwd.features.rows() || dlogits.cols() != 2) {
    throw ConfigError("logit gradient shape mismatch");
  }
  const int H = hidden_size();
  const std::size_t n = encoder_->param_count();
  const Eigen::Map<const MatX> w(head_.data(), H, 2);
  Eigen::Map<MatX> dw(grad.data() + n, H, 2);
  Eigen::Map<Eigen::Vector2d> db(grad.data() + n + std::size_t(H) * 2);

  dw += fwd.features.transpose() * dlogits;
  db += dlogits.colwise().sum().transpose();

  MatX dfeat = dlogits * w.transpose();
  if (dfeatures.size() > 0) {
    if (dfeatures.rows() != dfeat.rows() || dfeatures.cols() != dfeat.cols()) {
      throw ConfigError("feature gradient shape mismatch");
    }
    dfeat += dfeatures;
  }
  encoder_->backward(cache, dfeat, grad.data());
}

ScorePair ReasonablenessModel::score(const std::string& question,
                                     const std::string& answer) const {
  return score_batch({{question, answer}}).front();
}

std::vector<ScorePair> ReasonablenessModel::score_batch(
    const std::vector<TextPair>& inputs) const {
  const Forward fwd = forward(inputs, nullptr);
  std::vector<ScorePair> out;
  out.reserve(inputs.size());
  for (long i = 0; i < fwd.logits.rows(); ++i) {
    const auto [pp, pm] = softmax2(fwd.logits(i, 0), fwd.logits(i, 1));
    out.push_back({pp, pm, fwd.features.row(i).transpose()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint archive

namespace {
constexpr char kMagic[8] = {'R', 'K', 'C', 'K', 'P', 'T', '1', '\n'};
}

void ReasonablenessModel::save(const std::filesystem::path& path,
                               const json& metadata) const {
  const json header{{"format_version", 1},
                    {"encoder_spec", spec().to_json()},
                    {"encoder_state", encoder_->state_json()},
                    {"metadata", metadata},
                    {"param_count", param_count()}};
  const std::string header_bytes = header.dump();
  const auto params = params_copy();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = header_bytes.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_bytes.data(), long(header_bytes.size()));
  out.write(reinterpret_cast<const char*>(params.data()),
            long(params.size() * sizeof(double)));
  if (!out) throw IoError("short write on checkpoint: " + path.string());
}

ReasonablenessModel ReasonablenessModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a checkpoint file: " + path.string());
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len == 0 || len > (1ULL << 31)) {
    throw DataError("corrupt checkpoint header: " + path.string());
  }
  std::string header_bytes(len, '\0');
  in.read(header_bytes.data(), long(len));
  if (!in) throw DataError("truncated checkpoint header: " + path.string());
  const json header = json::parse(header_bytes, nullptr, false);
  if (header.is_discarded()) {
    throw DataError("checkpoint header is not valid JSON: " + path.string());
  }

  const EncoderSpec spec = EncoderSpec::from_json(header.at("encoder_spec"));
  ReasonablenessModel model(make_encoder(spec, header.at("encoder_state")));
  model.metadata_ = header.value("metadata", json::object());

  const auto expected = header.at("param_count").get<std::size_t>();
  if (expected != model.param_count()) {
    throw DataError("checkpoint parameter count does not match its own spec");
  }
  std::vector<double> params(expected);
  in.read(reinterpret_cast<char*>(params.data()), long(expected * sizeof(double)));
  if (!in) throw DataError("truncated checkpoint blob: " + path.string());
  model.set_params(params);
  return model;
}

}  // namespace rk
