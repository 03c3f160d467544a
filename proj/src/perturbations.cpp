#include "pflat/perturbations.hpp"

#include "pflat/error.hpp"
#include "pflat/random.hpp"
#include "pflat/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

namespace pflat {
namespace {

constexpr std::size_t kEnumerateAllUpTo = 8;

/// n! / prod(multiplicity!) as a double; exact well past any pool we use.
double distinct_orderings(const std::vector<Demo>& demos) {
  std::vector<Demo> sorted = demos;
  std::sort(sorted.begin(), sorted.end(), [](const Demo& a, const Demo& b) {
    return std::tie(a.text, a.label) < std::tie(b.text, b.label);
  });
  double count = std::tgamma(static_cast<double>(demos.size()) + 1);
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    count /= std::tgamma(static_cast<double>(j - i) + 1);
    i = j;
  }
  return std::round(count);
}

}  // namespace

void PerturbationConfig::validate() const {
  if (n_samples < 1) throw Error(ErrorCode::InvalidConfig, "n_samples must be at least 1");
  if (!(sigma2 >= 0) || !std::isfinite(sigma2)) throw Error(ErrorCode::InvalidConfig, "sigma2 must be finite and >= 0");
}

ParameterVector sample_gaussian(Index dim, const PerturbationConfig& cfg, int sample_index) {
  cfg.validate();
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  if (sample_index < 0 || sample_index >= cfg.n_samples) {
    throw Error(ErrorCode::InvalidArgument, "sample index outside [0, n_samples)");
  }
  if (cfg.sigma2 == 0) return ParameterVector::Zero(dim);
  Rng rng(derive_seed(cfg.master_seed, "gaussian", static_cast<std::uint64_t>(sample_index)));
  std::normal_distribution<double> normal(0.0, std::sqrt(cfg.sigma2));
  ParameterVector eps(dim);
  for (Index i = 0; i < dim; ++i) eps(i) = normal(rng);
  return eps;
}

std::vector<PromptCandidate> demo_permutations(const PromptCandidate& p, int k, std::uint64_t seed) {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "k must be non-negative");
  if (k == 0) return {};
  const std::size_t n = p.demos.size();
  const double others = distinct_orderings(p.demos) - 1;
  if (static_cast<double>(k) > others) {
    throw Error(ErrorCode::NotEnoughOrderings, "requested " + std::to_string(k) + " orderings but only " +
                                                   std::to_string(static_cast<long long>(others)) + " exist");
  }
  Rng rng(derive_seed(seed, "demo-permutations", 0));
  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  std::vector<std::vector<Demo>> chosen;

  if (n <= kEnumerateAllUpTo) {
    auto key_less = [](const std::vector<Demo>& a, const std::vector<Demo>& b) {
      return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](const Demo& x, const Demo& y) {
        return std::tie(x.text, x.label) < std::tie(y.text, y.label);
      });
    };
    std::vector<std::vector<Demo>> all;
    std::vector<std::size_t> order = identity;
    do {
      std::vector<Demo> demos;
      for (std::size_t i : order) demos.push_back(p.demos[i]);
      if (demos == p.demos) continue;
      const bool fresh = std::none_of(all.begin(), all.end(), [&](const auto& d) { return d == demos; });
      if (fresh) all.push_back(std::move(demos));
    } while (std::next_permutation(order.begin(), order.end()));
    std::sort(all.begin(), all.end(), key_less);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<std::size_t>(k));
    chosen = std::move(all);
  } else {
    while (chosen.size() < static_cast<std::size_t>(k)) {
      std::vector<std::size_t> order = identity;
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<Demo> demos;
      for (std::size_t i : order) demos.push_back(p.demos[i]);
      if (demos == p.demos) continue;
      if (std::find(chosen.begin(), chosen.end(), demos) != chosen.end()) continue;
      chosen.push_back(std::move(demos));
    }
  }

  std::vector<PromptCandidate> out;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    out.push_back({p.id + "~perm" + std::to_string(i), p.instruction, std::move(chosen[i])});
  }
  return out;
}

std::string_view to_string(EditKind kind) {
  return kind == EditKind::drop_token ? "drop_token" : "swap_adjacent";
}

EditKind parse_edit_kind(std::string_view name) {
  if (name == "drop_token") return EditKind::drop_token;
  if (name == "swap_adjacent") return EditKind::swap_adjacent;
  throw Error(ErrorCode::InvalidArgument, "unknown edit kind '" + std::string(name) + "'");
}

std::string drop_token(std::string_view instruction, std::size_t index) {
  auto words = split_whitespace(instruction);
  if (index >= words.size()) throw Error(ErrorCode::InvalidArgument, "token index out of range");
  words.erase(words.begin() + static_cast<std::ptrdiff_t>(index));
  return join(words, " ");
}

std::string swap_adjacent(std::string_view instruction, std::size_t index) {
  auto words = split_whitespace(instruction);
  if (index + 1 >= words.size()) throw Error(ErrorCode::InvalidArgument, "no adjacent pair at that index");
  std::swap(words[index], words[index + 1]);
  return join(words, " ");
}

std::vector<PromptCandidate> instruction_edits(const PromptCandidate& p, int m, const std::vector<EditKind>& kinds,
                                               std::uint64_t seed) {
  if (m < 0) throw Error(ErrorCode::InvalidArgument, "m must be non-negative");
  if (m == 0) return {};
  if (kinds.empty()) throw Error(ErrorCode::InvalidArgument, "no edit kinds given");
  const std::size_t n = split_whitespace(p.instruction).size();
  if (n < 2) throw Error(ErrorCode::InstructionTooShort, "instruction of prompt '" + p.id + "' has fewer than 2 tokens");

  std::vector<PromptCandidate> out;
  for (int i = 0; i < m; ++i) {
    Rng rng(derive_seed(seed, "instruction-edit", static_cast<std::uint64_t>(i)));
    const EditKind kind = kinds[std::uniform_int_distribution<std::size_t>(0, kinds.size() - 1)(rng)];
    PromptCandidate q{p.id + "~edit" + std::to_string(i), {}, p.demos};
    if (kind == EditKind::drop_token) {
      q.instruction = drop_token(p.instruction, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    } else {
      q.instruction = swap_adjacent(p.instruction, std::uniform_int_distribution<std::size_t>(0, n - 2)(rng));
    }
    out.push_back(std::move(q));
  }
  return out;
}

void SensitivitySetConfig::validate() const {
  if (k_permutations < 0 || m_edits < 0) throw Error(ErrorCode::InvalidConfig, "set sizes must be non-negative");
  if (k_permutations + m_edits < 1) throw Error(ErrorCode::InvalidConfig, "k_permutations + m_edits must be >= 1");
}

std::vector<PromptCandidate> build_sensitivity_set(const PromptCandidate& p, const Verbalizer& verbalizer,
                                                   const SensitivitySetConfig& cfg) {
  cfg.validate();
  std::vector<PromptCandidate> candidates = demo_permutations(p, cfg.k_permutations, cfg.seed);
  for (auto& q : instruction_edits(p, cfg.m_edits, cfg.edit_kinds, cfg.seed)) candidates.push_back(std::move(q));

  std::set<std::string> seen{render_prompt(p, verbalizer)};
  std::vector<PromptCandidate> out;
  for (auto& q : candidates) {
    if (seen.insert(render_prompt(q, verbalizer)).second) out.push_back(std::move(q));
  }
  return out;
}

}  // namespace pflat
