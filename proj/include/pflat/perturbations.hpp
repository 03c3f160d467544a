#pragma once

#include "pflat/core.hpp"
#include "pflat/prompt.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace pflat {

struct PerturbationConfig {
  int n_samples = 5;
  double sigma2 = 1e-4;
  std::uint64_t master_seed = 0;

  /// Throws InvalidConfig.
  void validate() const;
  bool operator==(const PerturbationConfig&) const = default;
};

/// Sample `sample_index` of N(0, sigma2 I) in `dim` dimensions. A pure
/// function of (master_seed, sample_index, dim).
ParameterVector sample_gaussian(Index dim, const PerturbationConfig& cfg, int sample_index);

/// `k` distinct demo orderings, none equal to the original. When k equals
/// the number of other orderings, all of them are returned. Throws
/// NotEnoughOrderings.
std::vector<PromptCandidate> demo_permutations(const PromptCandidate& p, int k, std::uint64_t seed);

enum class EditKind { drop_token, swap_adjacent };

std::string_view to_string(EditKind kind);
/// Throws InvalidArgument.
EditKind parse_edit_kind(std::string_view name);

/// Whitespace-token edits; the result is re-joined with single spaces.
std::string drop_token(std::string_view instruction, std::size_t index);
std::string swap_adjacent(std::string_view instruction, std::size_t index);

/// `m` single-edit variants of the instruction; demos are untouched. Throws
/// InstructionTooShort when the instruction has fewer than 2 tokens.
std::vector<PromptCandidate> instruction_edits(const PromptCandidate& p, int m, const std::vector<EditKind>& kinds,
                                               std::uint64_t seed);

struct SensitivitySetConfig {
  int k_permutations = 8;
  int m_edits = 8;
  std::vector<EditKind> edit_kinds = {EditKind::drop_token, EditKind::swap_adjacent};
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SensitivitySetConfig&) const = default;
};

/// Demo permutations followed by instruction edits, deduplicated by rendered
/// text with the original's text excluded.
std::vector<PromptCandidate> build_sensitivity_set(const PromptCandidate& p, const Verbalizer& verbalizer,
                                                   const SensitivitySetConfig& cfg);

}  // namespace pflat
