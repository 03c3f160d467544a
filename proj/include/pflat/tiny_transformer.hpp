#pragma once

#include "pflat/model.hpp"

#include <cstdint>

namespace pflat {

struct TransformerConfig {
  int layers = 1;
  int heads = 2;
  int d_model = 16;
  int vocab_size = 258;  // 256 bytes + one reserved id per verbalizer label
  int max_seq_len = 256;

  /// Throws InvalidConfig.
  void validate() const;
  Index param_count() const;
  bool operator==(const TransformerConfig&) const = default;
};

/// Byte-level pre-LayerNorm decoder (attention then MLP blocks, tied output
/// embedding). Whitespace-delimited words equal to a verbalizer token map to
/// reserved ids 256 + label index; everything else is one id per byte.
/// The label distribution is the softmax of the final-position logits
/// restricted to those reserved ids.
class TinyTransformerModel final : public ScoringModel {
 public:
  static constexpr std::string_view kBackend = "tiny_transformer";
  static constexpr int kByteVocab = 256;

  /// Throws InvalidConfig, or UnknownLabelToken when the reserved label ids
  /// do not fit in vocab_size.
  TinyTransformerModel(Verbalizer verbalizer, TransformerConfig cfg);

  /// Gaussian N(0, init_std^2) matrices, zero biases, unit LayerNorm gains.
  static TinyTransformerModel random(Verbalizer verbalizer, TransformerConfig cfg, std::uint64_t seed,
                                     double init_std = 0.1);

  std::unique_ptr<ScoringModel> clone() const override;
  std::string_view backend_name() const override { return kBackend; }
  Capabilities capabilities() const override { return {.analytic_gradient = false}; }

  TokenSequence tokenize(std::string_view text) const override;
  /// Throws SequenceTooLong when prefix rows + tokens exceed max_seq_len.
  Vector label_probs(const TokenSequence& tokens, const PrefixParameters* prefix = nullptr) const override;
  Index prefix_width() const override { return cfg_.d_model; }

  void save(const std::filesystem::path& path) const override;
  /// Loads with the config stored in the file header.
  static TinyTransformerModel load(const std::filesystem::path& path, const Verbalizer& verbalizer);

  const TransformerConfig& config() const noexcept { return cfg_; }
  TokenId label_token_id(std::size_t label) const { return kByteVocab + static_cast<TokenId>(label); }

  struct Tensor {
    std::string name;
    Index offset;
    Index rows;
    Index cols;
  };
  const std::vector<Tensor>& tensors() const noexcept { return layout_; }

 private:
  TransformerConfig cfg_;
  std::vector<Tensor> layout_;
  std::vector<std::string> lowered_tokens_;
};

/// Throws FormatError (bad magic or header) or ShapeMismatch (header config
/// differs from `cfg`).
TinyTransformerModel load_transformer(const std::filesystem::path& path, const TransformerConfig& cfg,
                                      const Verbalizer& verbalizer);

}  // namespace pflat
