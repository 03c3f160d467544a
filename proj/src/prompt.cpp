#include "pflat/prompt.hpp"

#include "pflat/error.hpp"

#include <algorithm>
#include <set>

namespace pflat {

Verbalizer::Verbalizer(std::map<std::string, std::string> entries) {
  if (entries.size() < 2) {
    throw Error(ErrorCode::InvalidConfig, "verbalizer needs at least 2 labels");
  }
  std::set<std::string> seen_tokens;
  for (auto& [label, token] : entries) {
    if (token.empty()) throw Error(ErrorCode::InvalidConfig, "empty verbalizer token for label '" + label + "'");
    if (!seen_tokens.insert(token).second) {
      throw Error(ErrorCode::InvalidConfig, "verbalizer token '" + token + "' used by two labels");
    }
    labels_.push_back(label);
    tokens_.push_back(token);
  }
}

const std::string& Verbalizer::token_for(std::string_view label) const { return tokens_[require_index(label)]; }

std::optional<std::size_t> Verbalizer::index_of(std::string_view label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t Verbalizer::require_index(std::string_view label) const {
  auto index = index_of(label);
  if (!index) throw Error(ErrorCode::UnknownLabel, "label '" + std::string(label) + "' is not in the verbalizer");
  return *index;
}

void PromptPool::validate() const {
  if (prompts.size() < 2) throw Error(ErrorCode::InvalidArgument, "a prompt pool needs at least 2 prompts");
  std::set<std::string> ids;
  for (const auto& p : prompts) {
    if (!ids.insert(p.id).second) throw Error(ErrorCode::DuplicateId, "duplicate prompt id '" + p.id + "'");
  }
}

const PromptCandidate& PromptPool::find(std::string_view id) const {
  for (const auto& p : prompts) {
    if (p.id == id) return p;
  }
  throw Error(ErrorCode::InvalidArgument, "no prompt with id '" + std::string(id) + "'");
}

InputSet inputs_of(const LabeledSet& examples) {
  InputSet inputs;
  inputs.reserve(examples.size());
  for (const auto& e : examples) inputs.push_back(e.text);
  return inputs;
}

std::vector<std::size_t> label_indices(const LabeledSet& examples, const Verbalizer& verbalizer) {
  std::vector<std::size_t> indices;
  indices.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& e = examples[i];
    if (!e.label) {
      throw Error(ErrorCode::MissingLabel, "example " + std::to_string(e.line ? e.line : i + 1) + " has no label");
    }
    indices.push_back(verbalizer.require_index(*e.label));
  }
  return indices;
}

std::string render_prompt(const PromptCandidate& prompt, const Verbalizer& verbalizer) {
  std::string out = prompt.instruction;
  out += "\n\n";
  for (const auto& demo : prompt.demos) {
    out += demo.text;
    out += '\n';
    out += verbalizer.token_for(demo.label);
    out += "\n\n";
  }
  return out;
}

std::string render(const PromptCandidate& prompt, const Verbalizer& verbalizer, std::string_view input) {
  std::string out = render_prompt(prompt, verbalizer);
  out += input;
  out += '\n';
  return out;
}

}  // namespace pflat
