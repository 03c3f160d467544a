#include "pflat/tiny_transformer.hpp"

#include "pflat/error.hpp"
#include "pflat/information.hpp"
#include "pflat/random.hpp"
#include "pflat/weight_file.hpp"

#include <cmath>

namespace pflat {
namespace {

using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

constexpr Scalar kLayerNormEps = 1e-5;

std::vector<TinyTransformerModel::Tensor> make_layout(const TransformerConfig& c) {
  std::vector<TinyTransformerModel::Tensor> layout;
  Index offset = 0;
  auto add = [&](std::string name, Index rows, Index cols) {
    layout.push_back({std::move(name), offset, rows, cols});
    offset += rows * cols;
  };
  const Index d = c.d_model;
  add("wte", c.vocab_size, d);
  add("wpe", c.max_seq_len, d);
  for (int l = 0; l < c.layers; ++l) {
    const std::string p = "h" + std::to_string(l) + ".";
    add(p + "ln1.g", 1, d);
    add(p + "ln1.b", 1, d);
    add(p + "attn.w_qkv", d, 3 * d);
    add(p + "attn.b_qkv", 1, 3 * d);
    add(p + "attn.w_o", d, d);
    add(p + "attn.b_o", 1, d);
    add(p + "ln2.g", 1, d);
    add(p + "ln2.b", 1, d);
    add(p + "mlp.w_fc", d, 4 * d);
    add(p + "mlp.b_fc", 1, 4 * d);
    add(p + "mlp.w_proj", 4 * d, d);
    add(p + "mlp.b_proj", 1, d);
  }
  add("lnf.g", 1, d);
  add("lnf.b", 1, d);
  return layout;
}

RowMatrix layer_norm(const RowMatrix& x, const Eigen::Ref<const Eigen::RowVectorXd>& gain,
                     const Eigen::Ref<const Eigen::RowVectorXd>& shift) {
  RowMatrix out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar mean = x.row(r).mean();
    const Eigen::RowVectorXd centered = x.row(r).array() - mean;
    const Scalar var = centered.squaredNorm() / static_cast<Scalar>(x.cols());
    out.row(r) = (centered / std::sqrt(var + kLayerNormEps)).cwiseProduct(gain) + shift;
  }
  return out;
}

Scalar gelu(Scalar x) {
  constexpr Scalar kAlpha = 0.7978845608028654;  // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(kAlpha * (x + 0.044715 * x * x * x)));
}

}  // namespace

void TransformerConfig::validate() const {
  if (layers < 1 || heads < 1 || d_model < 1 || vocab_size < 1 || max_seq_len < 1) {
    throw Error(ErrorCode::InvalidConfig, "transformer dimensions must be positive");
  }
  if (d_model % heads != 0) throw Error(ErrorCode::InvalidConfig, "d_model must be divisible by heads");
}

Index TransformerConfig::param_count() const {
  const Index d = d_model;
  return static_cast<Index>(vocab_size) * d + static_cast<Index>(max_seq_len) * d + layers * (12 * d * d + 13 * d) +
         2 * d;
}

TinyTransformerModel::TinyTransformerModel(Verbalizer verbalizer, TransformerConfig cfg)
    : ScoringModel(verbalizer, (cfg.validate(), cfg.param_count())), cfg_(cfg), layout_(make_layout(cfg)) {
  if (kByteVocab + static_cast<Index>(label_count()) > cfg_.vocab_size) {
    throw Error(ErrorCode::UnknownLabelToken, "vocab_size " + std::to_string(cfg_.vocab_size) +
                                                  " leaves no reserved id for every verbalizer token");
  }
  for (std::size_t k = 0; k < label_count(); ++k) lowered_tokens_.push_back(ascii_lower(this->verbalizer().token(k)));
  for (const auto& t : layout_) {
    if (t.name.ends_with(".g")) params_.segment(t.offset, t.rows * t.cols).setOnes();
  }
}

TinyTransformerModel TinyTransformerModel::random(Verbalizer verbalizer, TransformerConfig cfg, std::uint64_t seed,
                                                  double init_std) {
  TinyTransformerModel model(std::move(verbalizer), cfg);
  ParameterVector theta = model.params();
  Rng rng(derive_seed(seed, "transformer-init", 0));
  std::normal_distribution<double> normal(0.0, init_std);
  for (const auto& t : model.layout_) {
    if (t.rows > 1) {
      // Rounded to f32 so a saved init reloads to the same model.
      for (Index i = 0; i < t.rows * t.cols; ++i) theta(t.offset + i) = static_cast<float>(normal(rng));
    }
  }
  model.set_params(theta);
  return model;
}

std::unique_ptr<ScoringModel> TinyTransformerModel::clone() const {
  return std::make_unique<TinyTransformerModel>(*this);
}

TokenSequence TinyTransformerModel::tokenize(std::string_view text) const {
  const std::string lower = ascii_lower(text);
  TokenSequence ids;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < lower.size()) {
    if (is_space(lower[i])) {
      ids.push_back(static_cast<unsigned char>(lower[i]));
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < lower.size() && !is_space(lower[j])) ++j;
    const std::string_view word(lower.data() + i, j - i);
    bool reserved = false;
    for (std::size_t k = 0; k < lowered_tokens_.size(); ++k) {
      if (word == lowered_tokens_[k]) {
        ids.push_back(label_token_id(k));
        reserved = true;
        break;
      }
    }
    if (!reserved) {
      for (unsigned char c : word) ids.push_back(c);
    }
    i = j;
  }
  return ids;
}

Vector TinyTransformerModel::label_probs(const TokenSequence& tokens, const PrefixParameters* prefix) const {
  const Index d = cfg_.d_model;
  const Index n_prefix = prefix ? prefix->rows() : 0;
  const Index seq = n_prefix + static_cast<Index>(tokens.size());
  if (seq == 0) throw Error(ErrorCode::EmptyText, "cannot score an empty sequence");
  if (seq > cfg_.max_seq_len) {
    throw Error(ErrorCode::SequenceTooLong,
                std::to_string(seq) + " positions exceed max_seq_len " + std::to_string(cfg_.max_seq_len));
  }
  if (prefix && prefix->cols() != d) throw Error(ErrorCode::DimensionMismatch, "prefix width must equal d_model");

  std::size_t cursor = 0;
  auto next = [&]() -> const Tensor& { return layout_[cursor++]; };
  auto map = [&](const Tensor& t) { return ConstRowMap(params_.data() + t.offset, t.rows, t.cols); };

  const auto wte = map(next());
  const auto wpe = map(next());
  RowMatrix x(seq, d);
  for (Index r = 0; r < n_prefix; ++r) x.row(r) = prefix->row(r) + wpe.row(r);
  for (Index r = n_prefix; r < seq; ++r) {
    const TokenId id = tokens[static_cast<std::size_t>(r - n_prefix)];
    if (id < 0 || id >= cfg_.vocab_size) throw Error(ErrorCode::UnknownLabelToken, "token id outside vocabulary");
    x.row(r) = wte.row(id) + wpe.row(r);
  }

  const Index head_dim = d / cfg_.heads;
  const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(head_dim));
  for (int l = 0; l < cfg_.layers; ++l) {
    const auto ln1_g = map(next()), ln1_b = map(next());
    const auto w_qkv = map(next()), b_qkv = map(next());
    const auto w_o = map(next()), b_o = map(next());
    const auto ln2_g = map(next()), ln2_b = map(next());
    const auto w_fc = map(next()), b_fc = map(next());
    const auto w_proj = map(next()), b_proj = map(next());

    RowMatrix qkv = layer_norm(x, ln1_g, ln1_b) * w_qkv;
    qkv.rowwise() += b_qkv.row(0);
    RowMatrix attended(seq, d);
    for (int h = 0; h < cfg_.heads; ++h) {
      const auto q = qkv.middleCols(h * head_dim, head_dim);
      const auto k = qkv.middleCols(d + h * head_dim, head_dim);
      const auto v = qkv.middleCols(2 * d + h * head_dim, head_dim);
      RowMatrix scores = (q * k.transpose()) * scale;
      for (Index r = 0; r < seq; ++r) {
        const Vector row = softmax(scores.row(r).head(r + 1).transpose());
        scores.row(r).setZero();
        scores.row(r).head(r + 1) = row.transpose();
      }
      attended.middleCols(h * head_dim, head_dim) = scores * v;
    }
    RowMatrix projected = attended * w_o;
    projected.rowwise() += b_o.row(0);
    x += projected;

    RowMatrix hidden = layer_norm(x, ln2_g, ln2_b) * w_fc;
    hidden.rowwise() += b_fc.row(0);
    hidden = hidden.unaryExpr([](Scalar v) { return gelu(v); });
    RowMatrix mlp = hidden * w_proj;
    mlp.rowwise() += b_proj.row(0);
    x += mlp;
  }
  const auto lnf_g = map(next()), lnf_b = map(next());
  const RowMatrix last = layer_norm(x.bottomRows(1), lnf_g, lnf_b);

  Vector logits(static_cast<Index>(label_count()));
  for (std::size_t k = 0; k < label_count(); ++k) {
    logits(static_cast<Index>(k)) = wte.row(label_token_id(k)).dot(last.row(0));
  }
  return softmax(logits);
}

void TinyTransformerModel::save(const std::filesystem::path& path) const {
  const nlohmann::json config = {{"backend", std::string(kBackend)}, {"layers", cfg_.layers},
                                 {"heads", cfg_.heads},            {"d_model", cfg_.d_model},
                                 {"vocab_size", cfg_.vocab_size},  {"max_seq_len", cfg_.max_seq_len},
                                 {"labels", verbalizer().labels()}};
  std::vector<TensorView> views;
  for (const auto& t : layout_) {
    std::vector<std::int64_t> shape = t.rows == 1 ? std::vector<std::int64_t>{t.cols}
                                                  : std::vector<std::int64_t>{t.rows, t.cols};
    views.push_back({t.name, shape, {params_.data() + t.offset, static_cast<std::size_t>(t.rows * t.cols)}});
  }
  write_weight_file(path, config, views);
}

namespace {

struct StoredTransformer {
  TransformerConfig cfg;
  std::vector<std::string> labels;
};

StoredTransformer read_stored_config(const std::filesystem::path& path, const WeightFileHeader& header) {
  const auto& config = header.config;
  if (config.value("backend", std::string{}) != TinyTransformerModel::kBackend) {
    throw Error(ErrorCode::FormatError, path.string() + " does not hold a tiny_transformer model");
  }
  StoredTransformer stored;
  try {
    stored.cfg.layers = config.at("layers").get<int>();
    stored.cfg.heads = config.at("heads").get<int>();
    stored.cfg.d_model = config.at("d_model").get<int>();
    stored.cfg.vocab_size = config.at("vocab_size").get<int>();
    stored.cfg.max_seq_len = config.at("max_seq_len").get<int>();
    stored.labels = config.at("labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  return stored;
}

}  // namespace

TinyTransformerModel load_transformer(const std::filesystem::path& path, const TransformerConfig& cfg,
                                      const Verbalizer& verbalizer) {
  const auto contents = read_weight_file(path);
  const auto stored = read_stored_config(path, contents.header);
  if (!(stored.cfg == cfg)) {
    throw Error(ErrorCode::ShapeMismatch, path.string() + ": header config differs from the requested config");
  }
  if (stored.labels != verbalizer.labels()) {
    throw Error(ErrorCode::ShapeMismatch, path.string() + ": label set differs from the verbalizer");
  }

  TinyTransformerModel model(verbalizer, cfg);
  if (contents.header.tensors.size() != model.tensors().size()) {
    throw Error(ErrorCode::ShapeMismatch, path.string() + ": tensor count differs from the config");
  }
  ParameterVector theta(model.param_count());
  for (const auto& t : model.tensors()) {
    if (contents.info(t.name).numel() != t.rows * t.cols) {
      throw Error(ErrorCode::ShapeMismatch, path.string() + ": tensor " + t.name);
    }
    const auto& values = contents.tensor(t.name);
    for (std::size_t i = 0; i < values.size(); ++i) theta(t.offset + static_cast<Index>(i)) = values[i];
  }
  model.set_params(theta);
  return model;
}

TinyTransformerModel TinyTransformerModel::load(const std::filesystem::path& path, const Verbalizer& verbalizer) {
  return load_transformer(path, read_stored_config(path, read_weight_file_header(path)).cfg, verbalizer);
}

}  // namespace pflat
