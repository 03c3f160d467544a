#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pflat {

/// Label name -> surface token. Labels are kept in lexicographic order; that
/// order indexes every probability vector in the library.
class Verbalizer {
 public:
  Verbalizer() = default;
  explicit Verbalizer(std::map<std::string, std::string> entries);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t index) const { return labels_.at(index); }
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::string& token_for(std::string_view label) const;

  std::optional<std::size_t> index_of(std::string_view label) const;
  /// Throws UnknownLabel.
  std::size_t require_index(std::string_view label) const;

  bool operator==(const Verbalizer&) const = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> tokens_;
};

struct Demo {
  std::string text;
  std::string label;

  bool operator==(const Demo&) const = default;
};

struct PromptCandidate {
  std::string id;
  std::string instruction;
  std::vector<Demo> demos;

  bool operator==(const PromptCandidate&) const = default;
};

struct PromptPool {
  std::vector<PromptCandidate> prompts;

  /// Throws InvalidArgument on fewer than 2 prompts, DuplicateId on repeated ids.
  void validate() const;
  const PromptCandidate& find(std::string_view id) const;
};

struct Example {
  std::string text;
  std::optional<std::string> label;
  std::size_t line = 0;  // 1-based source line; 0 when built in memory

  bool operator==(const Example&) const = default;
};

/// Examples with gold labels (loaders also allow unlabeled rows; operations
/// that need labels reject them with MissingLabel).
using LabeledSet = std::vector<Example>;
using InputSet = std::vector<std::string>;

InputSet inputs_of(const LabeledSet& examples);

/// Gold label indices in verbalizer order. Throws MissingLabel / UnknownLabel.
std::vector<std::size_t> label_indices(const LabeledSet& examples, const Verbalizer& verbalizer);

/// instruction + "\n\n" + each demo as "{text}\n{token}\n\n" + input + "\n".
std::string render(const PromptCandidate& prompt, const Verbalizer& verbalizer, std::string_view input);

/// Rendering with an empty input; identifies a prompt's text for dedupe.
std::string render_prompt(const PromptCandidate& prompt, const Verbalizer& verbalizer);

}  // namespace pflat
