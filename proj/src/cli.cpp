#include "pflat/cli.hpp"

#include "pflat/error.hpp"
#include "pflat/evaluation.hpp"
#include "pflat/flat_prefix.hpp"
#include "pflat/io.hpp"
#include "pflat/logistic_bag.hpp"
#include "pflat/selection.hpp"
#include "pflat/tiny_transformer.hpp"
#include "pflat/weight_file.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

namespace pflat {
namespace {

using nlohmann::json;

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  std::string format = "json";
  int threads = 1;
};

struct ModelInputs {
  std::string model;
  std::string verbalizer;
  std::string pool;
};

struct MetricFlags {
  std::string data;
  std::string dev;
  int n_samples = 5;
  double sigma2 = 1e-4;
  std::string divergence = "kl";
  std::string loss_kind = "cross_entropy";
  int k_permutations = 8;
  int m_edits = 8;
  std::string edit_kinds = "drop_token,swap_adjacent";
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "'" + item + "' is not a number");
    }
  }
  return out;
}

void add_model_inputs(CLI::App* cmd, ModelInputs& m, bool need_pool = true) {
  cmd->add_option("--model", m.model, "Weight file of a fitted backend")->required();
  cmd->add_option("--verbalizer", m.verbalizer, "JSON object mapping label -> token")->required();
  if (need_pool) cmd->add_option("--pool", m.pool, "Prompt pool JSON")->required();
}

void add_metric_flags(CLI::App* cmd, MetricFlags& f, bool need_data = true) {
  auto* data = cmd->add_option("--data", f.data, "JSONL examples; label-free metrics use their texts");
  if (need_data) data->required();
  cmd->add_option("--dev", f.dev, "Labeled JSONL used for the prompt loss (default: --data labels)");
  cmd->add_option("--n-samples", f.n_samples, "Gaussian perturbations per pFlat estimate")->capture_default_str();
  cmd->add_option("--sigma2", f.sigma2, "Perturbation variance")->capture_default_str();
  cmd->add_option("--divergence", f.divergence, "kl | cross_entropy")->capture_default_str();
  cmd->add_option("--loss-kind", f.loss_kind, "cross_entropy | zero_one")->capture_default_str();
  cmd->add_option("--k-perm", f.k_permutations, "Demo reorderings in each sensitivity set")->capture_default_str();
  cmd->add_option("--m-edits", f.m_edits, "Instruction edits in each sensitivity set")->capture_default_str();
  cmd->add_option("--edit-kinds", f.edit_kinds, "Comma list of drop_token, swap_adjacent")->capture_default_str();
}

struct Loaded {
  Verbalizer verbalizer;
  std::unique_ptr<ScoringModel> model;
  PromptPool pool;
  LabeledSet data;
  std::optional<LabeledSet> dev;
};

Loaded load_inputs(const ModelInputs& m, const MetricFlags* f, bool need_pool = true) {
  Loaded l;
  l.verbalizer = load_verbalizer(m.verbalizer);
  l.model = load_model(m.model, l.verbalizer);
  if (need_pool) l.pool = load_prompt_pool(m.pool, l.verbalizer);
  if (f && !f->data.empty()) {
    l.data = load_dataset(f->data, &l.verbalizer);
    if (l.data.empty()) throw Error(ErrorCode::EmptyDataset, f->data + " has no examples");
  }
  if (f && !f->dev.empty()) l.dev = load_dataset(f->dev, &l.verbalizer);
  return l;
}

PerturbationConfig perturbation_of(const MetricFlags& f, const Globals& g) {
  PerturbationConfig cfg{f.n_samples, f.sigma2, g.seed};
  cfg.validate();
  return cfg;
}

SensitivitySetConfig sensitivity_of(const MetricFlags& f, const Globals& g) {
  SensitivitySetConfig cfg;
  cfg.k_permutations = f.k_permutations;
  cfg.m_edits = f.m_edits;
  cfg.edit_kinds.clear();
  for (const auto& name : split_list(f.edit_kinds)) cfg.edit_kinds.push_back(parse_edit_kind(name));
  cfg.seed = g.seed;
  cfg.validate();
  return cfg;
}

StudyConfig study_of(const MetricFlags& f, const Globals& g, const std::string& metrics, double alpha) {
  StudyConfig cfg;
  cfg.metrics = split_list(metrics);
  if (cfg.metrics.empty()) throw Error(ErrorCode::InvalidArgument, "no metrics requested");
  for (const auto& name : cfg.metrics) parse_metric_spec(name);
  cfg.alpha = alpha;
  cfg.loss_kind = parse_loss_kind(f.loss_kind);
  cfg.divergence = parse_divergence_kind(f.divergence);
  cfg.perturbation = perturbation_of(f, g);
  cfg.sensitivity = sensitivity_of(f, g);
  cfg.threads = g.threads;
  return cfg;
}

/// Reads a JSON config and turns it into command-line tokens. Arrays become
/// comma lists; `true` becomes a bare flag and `false` is dropped.
std::vector<std::pair<std::string, std::vector<std::string>>> config_tokens(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, path + ": config must be a JSON object");
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string flag = "--" + it.key();
    const json& v = it.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) out.push_back({it.key(), {flag}});
    } else if (v.is_array()) {
      std::string joined;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) joined += ',';
        joined += v[i].is_string() ? v[i].get<std::string>() : canonical_dump(v[i]);
      }
      out.push_back({it.key(), {flag, joined}});
    } else if (v.is_string()) {
      out.push_back({it.key(), {flag, v.get<std::string>()}});
    } else {
      out.push_back({it.key(), {flag, v.dump()}});
    }
  }
  return out;
}

std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

class Cli {
 public:
  Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& args);

 private:
  void build();
  void emit(const std::string& content) const;
  template <typename Report>
  void emit_report(const Report& report) const {
    emit(render_report(report, parse_report_format(globals_.format)));
  }

  void run_score();
  void run_select();
  void run_tune_alpha();
  void run_evaluate();
  void run_sweep();
  void run_prefix_tune();
  void run_fit_backend();

  std::ostream& out_;
  std::ostream& err_;
  CLI::App app_{"Prompt selection with loss, MI, sensitivity and flatness", "pflat"};
  Globals globals_;
  std::map<CLI::App*, std::function<void()>> handlers_;

  ModelInputs inputs_;
  MetricFlags metrics_;
  std::string score_metrics_ = "loss,mi,sen,pflat";
  std::string metric_list_ = "loss,mi,sen,pflat,loss+pflat,mi+pflat,sen+pflat";
  std::string metric_ = "loss";
  std::string base_ = "loss";
  std::string grid_ = "0,0.01,0.03,0.1,0.3,1,3,10";
  std::optional<double> alpha_opt_;
  double alpha_ = 1.0;
  bool true_flatness_ = false;
  std::string variable_ = "sigma2";
  std::string values_;
  int repeats_ = 1;

  std::string train_;
  std::string test_;
  std::string prefix_out_;
  SamConfig sam_;
  bool no_flatness_ = false;

  std::string backend_ = "logistic_bag";
  LogisticBagConfig logistic_;
  TransformerConfig transformer_;
  double init_std_ = 0.1;
};

void Cli::build() {
  app_.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app_.require_subcommand(1);
  app_.fallthrough();
  app_.add_option("--seed", globals_.seed, "Master seed")->capture_default_str();
  app_.add_option("--config", globals_.config, "JSON file whose keys are long option names");
  app_.add_option("--out", globals_.out, "Output path (default: standard output)");
  app_.add_option("--format", globals_.format, "json | csv")->capture_default_str();
  app_.add_option("--threads", globals_.threads, "Worker threads")
      ->envname("PFLAT_THREADS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* score = app_.add_subcommand("score", "Metric reports for every prompt in a pool");
  add_model_inputs(score, inputs_);
  add_metric_flags(score, metrics_);
  score->add_option("--metrics", score_metrics_, "Comma list of loss, mi, sen, pflat")->capture_default_str();
  score->add_flag("--true-flatness", true_flatness_, "Also compute the gradient-norm flatness");
  score->add_option("--alpha", alpha_opt_, "Fill the combined score with this alpha");
  score->add_option("--base", base_, "Base metric of the combined score")->capture_default_str();
  handlers_[score] = [this] { run_score(); };

  auto* select = app_.add_subcommand("select", "Best prompt under one metric");
  add_model_inputs(select, inputs_);
  add_metric_flags(select, metrics_);
  select->add_option("--metric", metric_, "loss | mi | sen | pflat")->capture_default_str();
  select->add_option("--alpha", alpha_opt_, "Weight of pFlat added to the metric (default 0)");
  handlers_[select] = [this] { run_select(); };

  auto* tune = app_.add_subcommand("tune-alpha", "Pick alpha by dev accuracy of the selected prompt");
  add_model_inputs(tune, inputs_);
  add_metric_flags(tune, metrics_, false);
  tune->get_option("--dev")->required();
  tune->add_option("--base", base_, "loss | mi | sen")->capture_default_str();
  tune->add_option("--grid", grid_, "Ascending comma list of alphas")->capture_default_str();
  handlers_[tune] = [this] { run_tune_alpha(); };

  auto* evaluate = app_.add_subcommand("evaluate", "Correlation and ranking study against test accuracy");
  add_model_inputs(evaluate, inputs_);
  add_metric_flags(evaluate, metrics_);
  evaluate->add_option("--metrics", metric_list_, "Comma list of metrics")
      ->capture_default_str();
  evaluate->add_option("--alpha", alpha_, "Weight of pFlat in combined metrics")->capture_default_str();
  handlers_[evaluate] = [this] { run_evaluate(); };

  auto* sweep_cmd = app_.add_subcommand("sweep", "Repeat the study over sigma2 or n_samples values");
  add_model_inputs(sweep_cmd, inputs_);
  add_metric_flags(sweep_cmd, metrics_);
  sweep_cmd->add_option("--metrics", metric_list_, "Comma list of metrics")
      ->capture_default_str();
  sweep_cmd->add_option("--alpha", alpha_, "Weight of pFlat in combined metrics")->capture_default_str();
  sweep_cmd->add_option("--variable", variable_, "sigma2 | n_samples")->capture_default_str();
  sweep_cmd->add_option("--values", values_, "Ascending comma list")->required();
  sweep_cmd->add_option("--repeats", repeats_, "Repeats per value")->capture_default_str();
  handlers_[sweep_cmd] = [this] { run_sweep(); };

  auto* prefix = app_.add_subcommand("prefix-tune", "Train a continuous prefix, with or without SAM");
  add_model_inputs(prefix, inputs_, false);
  prefix->add_option("--train", train_, "Labeled JSONL")->required();
  prefix->add_option("--test", test_, "Labeled JSONL for held-out accuracy");
  prefix->add_option("--rho", sam_.rho, "SAM radius")->capture_default_str();
  prefix->add_option("--lr", sam_.learning_rate, "Learning rate")->capture_default_str();
  prefix->add_option("--epochs", sam_.epochs, "Full-batch epochs")->capture_default_str();
  prefix->add_option("--prefix-len", sam_.prefix_len, "Prefix rows")->capture_default_str();
  prefix->add_option("--init-scale", sam_.init_scale, "Std of the initial prefix")->capture_default_str();
  prefix->add_option("--grad-floor", sam_.grad_norm_floor, "Gradient norm below which SAM skips ascent")
      ->capture_default_str();
  prefix->add_flag("--no-flatness", no_flatness_, "Plain gradient descent");
  prefix->add_option("--prefix-out", prefix_out_, "Where to save the trained prefix");
  handlers_[prefix] = [this] { run_prefix_tune(); };

  auto* fit = app_.add_subcommand("fit-backend", "Fit (logistic) or initialize (transformer) a backend");
  fit->add_option("--backend", backend_, "logistic_bag | tiny_transformer")->capture_default_str();
  fit->add_option("--verbalizer", inputs_.verbalizer, "JSON object mapping label -> token")->required();
  fit->add_option("--train", train_, "Labeled JSONL (logistic_bag)");
  fit->add_option("--vocab-size", logistic_.vocab_size, "Hashed buckets (logistic) ")->capture_default_str();
  fit->add_option("--l2", logistic_.l2, "L2 weight")->capture_default_str();
  fit->add_option("--epochs", logistic_.train_epochs, "Gradient steps")->capture_default_str();
  fit->add_option("--lr", logistic_.learning_rate, "Learning-rate cap")->capture_default_str();
  fit->add_option("--init-scale", logistic_.init_scale, "Std of the initial weights")->capture_default_str();
  fit->add_option("--layers", transformer_.layers)->capture_default_str();
  fit->add_option("--heads", transformer_.heads)->capture_default_str();
  fit->add_option("--d-model", transformer_.d_model)->capture_default_str();
  fit->add_option("--tf-vocab-size", transformer_.vocab_size, "Transformer vocabulary")->capture_default_str();
  fit->add_option("--max-seq-len", transformer_.max_seq_len)->capture_default_str();
  fit->add_option("--init-std", init_std_, "Std of transformer weight matrices")->capture_default_str();
  handlers_[fit] = [this] { run_fit_backend(); };
}

void Cli::emit(const std::string& content) const {
  if (globals_.out.empty()) {
    out_ << content;
  } else {
    write_text_file(globals_.out, content);
  }
}

void Cli::run_score() {
  const Loaded in = load_inputs(inputs_, &metrics_);
  ScoreOptions options;
  options.loss = options.mi = options.sen = options.pflat = false;
  for (const auto& name : split_list(score_metrics_)) {
    const MetricSpec spec = parse_metric_spec(name);
    if (spec.with_pflat && spec.base) throw Error(ErrorCode::InvalidArgument, "use --alpha and --base for combined scores");
    if (!spec.base) options.pflat = true;
    else if (*spec.base == BaseMetric::loss) options.loss = true;
    else if (*spec.base == BaseMetric::mi) options.mi = true;
    else options.sen = true;
  }
  options.true_flatness = true_flatness_;
  options.loss_kind = parse_loss_kind(metrics_.loss_kind);
  options.divergence = parse_divergence_kind(metrics_.divergence);
  options.perturbation = perturbation_of(metrics_, globals_);
  options.sensitivity = sensitivity_of(metrics_, globals_);
  options.threads = globals_.threads;
  if (alpha_opt_) {
    options.alpha = alpha_opt_;
    options.combined_base = parse_base_metric(base_);
  }
  const LabeledSet& labeled = in.dev ? *in.dev : in.data;
  const InputSet inputs = inputs_of(in.data);
  std::vector<MetricReport> reports;
  for (const auto& p : in.pool.prompts) reports.push_back(score_prompt(*in.model, p, labeled, inputs, options));
  emit_report(reports);
}

void Cli::run_select() {
  const Loaded in = load_inputs(inputs_, &metrics_);
  const double alpha = alpha_opt_.value_or(0.0);
  if (!(alpha >= 0)) throw Error(ErrorCode::InvalidArgument, "alpha must be non-negative");
  const MetricSpec spec = parse_metric_spec(metric_);
  ScoreOptions options;
  options.loss = options.mi = options.sen = false;
  options.pflat = !spec.base || alpha > 0;
  if (spec.base) {
    options.alpha = alpha;
    options.combined_base = spec.base;
  }
  options.loss_kind = parse_loss_kind(metrics_.loss_kind);
  options.divergence = parse_divergence_kind(metrics_.divergence);
  options.perturbation = perturbation_of(metrics_, globals_);
  options.sensitivity = sensitivity_of(metrics_, globals_);
  options.threads = globals_.threads;

  const LabeledSet& labeled = in.dev ? *in.dev : in.data;
  const InputSet inputs = inputs_of(in.data);
  ScoreMap scores;
  for (const auto& p : in.pool.prompts) {
    const MetricReport r = score_prompt(*in.model, p, labeled, inputs, options);
    scores.emplace(p.id, spec.base ? *r.combined : *r.pflat);
  }
  const std::string best = select_best(in.pool, scores, Direction::lower_better);
  const json doc = {{"selected", best},
                    {"score", scores.at(best)},
                    {"metric", spec.name()},
                    {"alpha", alpha},
                    {"scores", scores}};
  if (parse_report_format(globals_.format) == ReportFormat::json) {
    emit(canonical_dump(doc) + "\n");
  } else {
    Table t{{"prompt_id", "score", "selected"}, {}};
    for (const auto& [id, s] : scores) t.rows.push_back({id, format_real(s), id == best ? "1" : "0"});
    emit(to_csv(t));
  }
}

void Cli::run_tune_alpha() {
  const Loaded in = load_inputs(inputs_, &metrics_);
  TuneOptions options;
  options.base = parse_base_metric(base_);
  options.grid.values = parse_reals(grid_);
  options.perturbation = perturbation_of(metrics_, globals_);
  options.divergence = parse_divergence_kind(metrics_.divergence);
  options.sensitivity = sensitivity_of(metrics_, globals_);
  options.threads = globals_.threads;
  emit_report(tune_alpha(*in.model, in.pool, *in.dev, options));
}

void Cli::run_evaluate() {
  const Loaded in = load_inputs(inputs_, &metrics_);
  const StudyConfig cfg = study_of(metrics_, globals_, metric_list_, alpha_);
  emit_report(correlation_study(*in.model, in.pool, in.data, cfg, in.dev ? &*in.dev : nullptr));
}

void Cli::run_sweep() {
  const Loaded in = load_inputs(inputs_, &metrics_);
  const StudyConfig cfg = study_of(metrics_, globals_, metric_list_, alpha_);
  SweepSpec spec{parse_sweep_variable(variable_), parse_reals(values_), repeats_};
  emit_report(sweep(*in.model, in.pool, in.data, cfg, spec, in.dev ? &*in.dev : nullptr));
}

void Cli::run_prefix_tune() {
  const Loaded in = load_inputs(inputs_, nullptr, false);
  const LabeledSet train = load_dataset(train_, &in.verbalizer);
  std::optional<LabeledSet> test;
  if (!test_.empty()) test = load_dataset(test_, &in.verbalizer);
  SamConfig cfg = sam_;
  cfg.use_flatness = !no_flatness_;
  cfg.seed = globals_.seed;
  const PrefixTuneResult result = prefix_tune(*in.model, train, cfg, globals_.threads);
  std::optional<double> test_accuracy;
  if (test) test_accuracy = prefix_accuracy(*in.model, result.prefix, *test);

  std::string rendered;
  if (parse_report_format(globals_.format) == ReportFormat::json) {
    json doc = to_json(result);
    doc["use_flatness"] = cfg.use_flatness;
    doc["train_accuracy"] = prefix_accuracy(*in.model, result.prefix, train);
    doc["test_accuracy"] = test_accuracy ? json(*test_accuracy) : json(nullptr);
    rendered = canonical_dump(doc) + "\n";
  } else {
    rendered = to_csv(to_table(result));
  }
  if (!prefix_out_.empty()) save_prefix(prefix_out_, result.prefix);
  emit(rendered);
}

void Cli::run_fit_backend() {
  if (globals_.out.empty()) throw Error(ErrorCode::InvalidArgument, "fit-backend needs --out for the weight file");
  const Verbalizer verbalizer = load_verbalizer(inputs_.verbalizer);
  json summary = {{"backend", backend_}};
  if (backend_ == LogisticBagModel::kBackend) {
    if (train_.empty()) throw Error(ErrorCode::InvalidArgument, "logistic_bag needs --train");
    LogisticBagConfig cfg = logistic_;
    cfg.seed = globals_.seed;
    const LogisticFit fit = fit_logistic(load_dataset(train_, &verbalizer), verbalizer, cfg);
    fit.model.save(globals_.out);
    summary["param_count"] = fit.model.param_count();
    summary["final_loss"] = fit.loss_history.back();
    summary["final_grad_norm"] = fit.final_grad_norm;
  } else if (backend_ == TinyTransformerModel::kBackend) {
    const auto model = TinyTransformerModel::random(verbalizer, transformer_, globals_.seed, init_std_);
    model.save(globals_.out);
    summary["param_count"] = model.param_count();
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown backend '" + backend_ + "'");
  }
  out_ << canonical_dump(summary) << "\n";
}

int Cli::run(const std::vector<std::string>& args) {
  build();
  std::vector<std::string> argv = args;
  try {
    if (const auto path = find_config_path(args)) {
      // Config values go right after the subcommand name so that anything
      // typed on the command line comes later and wins (TakeLast).
      auto sub_at = std::find_if(argv.begin() + 1, argv.end(), [&](const std::string& a) {
        return app_.get_subcommand_no_throw(a) != nullptr;
      });
      if (sub_at != argv.end()) {
        CLI::App* sub = app_.get_subcommand(*sub_at);
        std::vector<std::string> injected;
        for (const auto& [key, tokens] : config_tokens(*path)) {
          if (key == "config") continue;
          const std::string flag = "--" + key;
          if (sub->get_option_no_throw(flag) || app_.get_option_no_throw(flag)) {
            injected.insert(injected.end(), tokens.begin(), tokens.end());
            continue;
          }
          const bool known_elsewhere = std::any_of(handlers_.begin(), handlers_.end(), [&](const auto& h) {
            return h.first->get_option_no_throw(flag) != nullptr;
          });
          if (!known_elsewhere) throw Error(ErrorCode::InvalidArgument, "config key '" + key + "' is not an option");
        }
        argv.insert(sub_at + 1, injected.begin(), injected.end());
      }
    }
  } catch (const Error& e) {
    err_ << "pflat: " << e.what() << "\n";
    return e.category() == ErrorCategory::usage ? kExitUsage : kExitData;
  }

  // CLI11 drops an environment value that fails validation without a word.
  if (const char* env = std::getenv("PFLAT_THREADS"); env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) {
      err_ << "pflat: PFLAT_THREADS must be a positive integer, got '" << env << "'\n";
      return kExitUsage;
    }
  }

  std::vector<const char*> cargs;
  for (const auto& a : argv) cargs.push_back(a.c_str());
  try {
    app_.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp&) {
    out_ << app_.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err_ << "pflat: " << e.what() << "\n" << app_.help();
    return kExitUsage;
  }

  try {
    for (auto& [cmd, handler] : handlers_) {
      if (cmd->parsed()) {
        handler();
        return kExitOk;
      }
    }
    err_ << app_.help();
    return kExitUsage;
  } catch (const Error& e) {
    err_ << "pflat: " << e.what() << "\n";
    switch (e.category()) {
      case ErrorCategory::usage: return kExitUsage;
      case ErrorCategory::data: return kExitData;
      case ErrorCategory::numeric: return kExitNumeric;
    }
    return kExitData;
  } catch (const std::exception& e) {
    err_ << "pflat: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Cli cli(out, err);
  return cli.run(args);
}

}  // namespace pflat
