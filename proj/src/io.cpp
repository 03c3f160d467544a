#include "pflat/io.hpp"

#include "pflat/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pflat {

using nlohmann::json;

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  std::string out(buf);
  return out == "-0" ? "0" : out;
}

namespace {

void dump_into(const json& value, std::string& out) {
  switch (value.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      // nlohmann::json keeps object keys in a std::map, so iteration is sorted.
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        dump_into(it.value(), out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) out += ',';
        dump_into(value[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float: {
      const double v = value.get<double>();
      out += std::isfinite(v) ? format_real(v) : "null";
      break;
    }
    default:
      out += value.dump();
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_document(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

std::string location(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string cell(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string canonical_dump(const json& value) {
  std::string out;
  dump_into(value, out);
  return out;
}

Verbalizer load_verbalizer(const std::filesystem::path& path) {
  const json doc = parse_document(path);
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, path.string() + ": verbalizer must be a JSON object");
  std::map<std::string, std::string> entries;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!it.value().is_string()) {
      throw Error(ErrorCode::ParseError, path.string() + ": token for '" + it.key() + "' must be a string");
    }
    entries.emplace(it.key(), it.value().get<std::string>());
  }
  return Verbalizer(std::move(entries));
}

LabeledSet load_dataset(const std::filesystem::path& path, const Verbalizer* verbalizer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  LabeledSet out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (is_blank(line)) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, location(path, number) + e.what());
    }
    if (!row.is_object() || !row.contains("text") || !row.at("text").is_string()) {
      throw Error(ErrorCode::ParseError, location(path, number) + "expected an object with a string \"text\"");
    }
    Example ex{row.at("text").get<std::string>(), std::nullopt, number};
    if (is_blank(ex.text)) throw Error(ErrorCode::EmptyText, location(path, number) + "empty text");
    if (row.contains("label") && !row.at("label").is_null()) {
      if (!row.at("label").is_string()) throw Error(ErrorCode::ParseError, location(path, number) + "label must be a string or null");
      ex.label = row.at("label").get<std::string>();
      if (verbalizer && !verbalizer->index_of(*ex.label)) {
        throw Error(ErrorCode::UnknownLabel, location(path, number) + "unknown label '" + *ex.label + "'");
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

PromptPool load_prompt_pool(const std::filesystem::path& path, const Verbalizer& verbalizer) {
  const json doc = parse_document(path);
  PromptPool pool;
  try {
    for (const auto& entry : doc.at("prompts")) {
      PromptCandidate p{entry.at("id").get<std::string>(), entry.at("instruction").get<std::string>(), {}};
      for (const auto& d : entry.at("demos")) {
        Demo demo{d.at("text").get<std::string>(), d.at("label").get<std::string>()};
        if (!verbalizer.index_of(demo.label)) {
          throw Error(ErrorCode::UnknownLabel,
                      path.string() + ": prompt '" + p.id + "' has a demo labeled '" + demo.label + "'");
        }
        p.demos.push_back(std::move(demo));
      }
      pool.prompts.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  pool.validate();
  return pool;
}

json to_json(const MetricReport& r) {
  const auto& pv = r.provenance;
  return {{"prompt_id", r.prompt_id},
          {"loss", optional_json(r.loss)},
          {"mi", optional_json(r.mi)},
          {"sen", optional_json(r.sen)},
          {"pflat", optional_json(r.pflat)},
          {"true_flatness", optional_json(r.true_flatness)},
          {"combined", optional_json(r.combined)},
          {"provenance",
           {{"n_samples", pv.n_samples},
            {"sigma2", pv.sigma2},
            {"master_seed", pv.master_seed},
            {"loss_kind", to_string(pv.loss_kind)},
            {"divergence_kind", to_string(pv.divergence_kind)},
            {"alpha", optional_json(pv.alpha)},
            {"combined_base", pv.combined_base ? json(to_string(*pv.combined_base)) : json(nullptr)}}}};
}

json to_json(const std::vector<MetricReport>& reports) {
  json prompts = json::array();
  for (const auto& r : reports) prompts.push_back(to_json(r));
  return {{"prompts", prompts}};
}

// Thread count is deliberately left out: reports must not depend on it.
json to_json(const StudyConfig& c) {
  json kinds = json::array();
  for (auto k : c.sensitivity.edit_kinds) kinds.push_back(to_string(k));
  return {{"metrics", c.metrics},
          {"alpha", c.alpha},
          {"loss_kind", to_string(c.loss_kind)},
          {"divergence_kind", to_string(c.divergence)},
          {"n_samples", c.perturbation.n_samples},
          {"sigma2", c.perturbation.sigma2},
          {"master_seed", c.perturbation.master_seed},
          {"sensitivity",
           {{"k_permutations", c.sensitivity.k_permutations},
            {"m_edits", c.sensitivity.m_edits},
            {"edit_kinds", kinds},
            {"seed", c.sensitivity.seed}}}};
}

json to_json(const EvaluationReport& report) {
  json rows = json::array();
  for (const auto& row : report.per_prompt) {
    rows.push_back({{"prompt_id", row.prompt_id}, {"accuracy", row.accuracy}, {"metrics", to_json(row.metrics)}});
  }
  json correlations = json::object();
  for (const auto& [name, c] : report.correlations) {
    json entry = {{"pearson", optional_json(c.pearson)}, {"spearman", optional_json(c.spearman)}};
    if (c.reason) entry["reason"] = *c.reason;
    correlations[name] = entry;
  }
  json ranking = json::object();
  for (const auto& [name, r] : report.ranking) {
    json entry = {{"selected", r.selected}, {"ndcg1", r.ndcg1}, {"ndcg3", r.ndcg3}, {"rate", optional_json(r.rate)}};
    if (r.reason) entry["reason"] = *r.reason;
    ranking[name] = entry;
  }
  return {{"per_prompt", rows}, {"correlations", correlations}, {"ranking", ranking}, {"config", to_json(report.config)}};
}

json to_json(const SweepResult& result) {
  json rows = json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"value", r.value},
                    {"repeat", r.repeat},
                    {"mean_rate", optional_json(r.mean_rate)},
                    {"mean_pearson", optional_json(r.mean_pearson)},
                    {"mean_pflat", optional_json(r.mean_pflat)}});
  }
  json cells = json::array();
  for (const auto& c : result.cells) cells.push_back(to_json(c));
  return {{"rows", rows}, {"cells", cells}};
}

json to_json(const AlphaTuning& tuning) {
  json trials = json::array();
  for (const auto& t : tuning.trials) {
    trials.push_back({{"alpha", t.alpha}, {"selected", t.selected}, {"dev_accuracy", t.dev_accuracy}});
  }
  return {{"alpha", tuning.alpha}, {"dev_accuracy", tuning.dev_accuracy}, {"trials", trials}};
}

json to_json(const PrefixTuneResult& result) {
  json history = json::array();
  for (const auto& h : result.history) {
    history.push_back({{"epoch", h.epoch}, {"loss", h.loss}, {"grad_norm", h.grad_norm}});
  }
  return {{"prefix_shape", {result.prefix.rows(), result.prefix.cols()}}, {"history", history}};
}

MetricReport metric_report_from_json(const json& j) {
  try {
    MetricReport r;
    r.prompt_id = j.at("prompt_id").get<std::string>();
    r.loss = optional_from(j, "loss");
    r.mi = optional_from(j, "mi");
    r.sen = optional_from(j, "sen");
    r.pflat = optional_from(j, "pflat");
    r.true_flatness = optional_from(j, "true_flatness");
    r.combined = optional_from(j, "combined");
    const json& pv = j.at("provenance");
    r.provenance.n_samples = pv.at("n_samples").get<int>();
    r.provenance.sigma2 = pv.at("sigma2").get<double>();
    r.provenance.master_seed = pv.at("master_seed").get<std::uint64_t>();
    r.provenance.loss_kind = parse_loss_kind(pv.at("loss_kind").get<std::string>());
    r.provenance.divergence_kind = parse_divergence_kind(pv.at("divergence_kind").get<std::string>());
    r.provenance.alpha = optional_from(pv, "alpha");
    if (!pv.at("combined_base").is_null()) {
      r.provenance.combined_base = parse_base_metric(pv.at("combined_base").get<std::string>());
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("metric report: ") + e.what());
  }
}

StudyConfig study_config_from_json(const json& j) {
  try {
    StudyConfig c;
    c.metrics = j.at("metrics").get<std::vector<std::string>>();
    c.alpha = j.at("alpha").get<double>();
    c.loss_kind = parse_loss_kind(j.at("loss_kind").get<std::string>());
    c.divergence = parse_divergence_kind(j.at("divergence_kind").get<std::string>());
    c.perturbation.n_samples = j.at("n_samples").get<int>();
    c.perturbation.sigma2 = j.at("sigma2").get<double>();
    c.perturbation.master_seed = j.at("master_seed").get<std::uint64_t>();
    const json& s = j.at("sensitivity");
    c.sensitivity.k_permutations = s.at("k_permutations").get<int>();
    c.sensitivity.m_edits = s.at("m_edits").get<int>();
    c.sensitivity.edit_kinds.clear();
    for (const auto& k : s.at("edit_kinds")) c.sensitivity.edit_kinds.push_back(parse_edit_kind(k.get<std::string>()));
    c.sensitivity.seed = s.at("seed").get<std::uint64_t>();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("study config: ") + e.what());
  }
}

EvaluationReport evaluation_report_from_json(const json& j) {
  try {
    EvaluationReport report;
    for (const auto& row : j.at("per_prompt")) {
      report.per_prompt.push_back({row.at("prompt_id").get<std::string>(), row.at("accuracy").get<double>(),
                                   metric_report_from_json(row.at("metrics"))});
    }
    for (auto it = j.at("correlations").begin(); it != j.at("correlations").end(); ++it) {
      CorrelationEntry c{optional_from(it.value(), "pearson"), optional_from(it.value(), "spearman"), std::nullopt};
      if (it.value().contains("reason")) c.reason = it.value().at("reason").get<std::string>();
      report.correlations.emplace(it.key(), c);
    }
    for (auto it = j.at("ranking").begin(); it != j.at("ranking").end(); ++it) {
      const json& e = it.value();
      RankingEntry r{e.at("selected").get<std::string>(), e.at("ndcg1").get<double>(), e.at("ndcg3").get<double>(),
                     optional_from(e, "rate"), std::nullopt};
      if (e.contains("reason")) r.reason = e.at("reason").get<std::string>();
      report.ranking.emplace(it.key(), r);
    }
    report.config = study_config_from_json(j.at("config"));
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("evaluation report: ") + e.what());
  }
}

Table to_table(const std::vector<MetricReport>& reports) {
  Table t{{"prompt_id", "loss", "mi", "sen", "pflat", "true_flatness", "combined"}, {}};
  for (const auto& r : reports) {
    t.rows.push_back({r.prompt_id, cell(r.loss), cell(r.mi), cell(r.sen), cell(r.pflat), cell(r.true_flatness),
                      cell(r.combined)});
  }
  return t;
}

Table to_table(const EvaluationReport& report) {
  Table t{{"prompt_id", "accuracy", "loss", "mi", "sen", "pflat", "true_flatness", "combined"}, {}};
  for (const auto& row : report.per_prompt) {
    const auto& m = row.metrics;
    t.rows.push_back({row.prompt_id, format_real(row.accuracy), cell(m.loss), cell(m.mi), cell(m.sen), cell(m.pflat),
                      cell(m.true_flatness), cell(m.combined)});
  }
  return t;
}

Table to_table(const SweepResult& result) {
  Table t{{"value", "repeat", "mean_rate", "mean_pearson", "mean_pflat"}, {}};
  for (const auto& r : result.rows) {
    t.rows.push_back({format_real(r.value), std::to_string(r.repeat), cell(r.mean_rate), cell(r.mean_pearson),
                      cell(r.mean_pflat)});
  }
  return t;
}

Table to_table(const AlphaTuning& tuning) {
  Table t{{"alpha", "selected", "dev_accuracy", "chosen"}, {}};
  for (const auto& trial : tuning.trials) {
    t.rows.push_back({format_real(trial.alpha), trial.selected, format_real(trial.dev_accuracy),
                      trial.alpha == tuning.alpha ? "1" : "0"});
  }
  return t;
}

Table to_table(const PrefixTuneResult& result) {
  Table t{{"epoch", "loss", "grad_norm"}, {}};
  for (const auto& h : result.history) {
    t.rows.push_back({std::to_string(h.epoch), format_real(h.loss), format_real(h.grad_norm)});
  }
  return t;
}

std::string to_csv(const Table& table) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(fields[i]);
    }
    out += '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  return out;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw Error(ErrorCode::InvalidArgument, "unknown format '" + std::string(name) + "'");
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  const auto parent = path.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw Error(ErrorCode::IoError, "directory " + parent.string() + " does not exist");
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot move output into place at " + path.string());
  }
}

}  // namespace pflat
