// Copyright 2026 The fisher-cpp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fisher/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "fisher/checkpoint.hpp"
#include "fisher/config.hpp"
#include "fisher/csv.hpp"
#include "fisher/embedding_io.hpp"
#include "fisher/harness.hpp"
#include "fisher/hash.hpp"
#include "fisher/model.hpp"
#include "fisher/svg.hpp"
#include "fisher/synth.hpp"
#include "fisher/trainer.hpp"

namespace fisher {

namespace fs = std::filesystem;

namespace {

using Json = nlohmann::ordered_json;

enum class Level { debug = 0, info = 1, warn = 2, error = 3 };

Level parse_level(const std::string& s) {
  if (s == "debug") return Level::debug;
  if (s == "info") return Level::info;
  if (s == "warn") return Level::warn;
  if (s == "error") return Level::error;
  throw UsageError("log level must be debug, info, warn or error");
}

class Logger {
 public:
  Logger(std::ostream& err, Level level) : err_(err), level_(level) {}
  void log(Level level, const std::string& msg) const {
    static const char* names[] = {"debug", "info", "warn", "error"};
    if (level >= level_) err_ << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
  }
  void info(const std::string& msg) const { log(Level::info, msg); }
  void warn(const std::string& msg) const { log(Level::warn, msg); }
  void debug(const std::string& msg) const { log(Level::debug, msg); }

 private:
  std::ostream& err_;
  Level level_;
};

// Every artifact a command writes, recorded with its content hash in
// <out>/run_summary.json. A failed command still writes the index with
// status "failed" so partial outputs are flagged.
class RunIndex {
 public:
  RunIndex(std::string command, std::vector<std::string> args) : command_(std::move(command)), args_(std::move(args)) {}

  void set_out(const fs::path& out) { out_ = out; }
  const fs::path& out() const { return out_; }
  void add(const fs::path& path) { artifacts_.push_back(path); }
  void set_config(KeyValues config) { config_ = std::move(config); }
  void warn(const std::string& w) { warnings_.push_back(w); }

  void write(const std::string& status, const std::string& error = "") const {
    if (out_.empty()) return;
    Json j;
    j["format"] = "fisher-run-summary";
    j["version"] = 1;
    j["command"] = command_;
    j["args"] = args_;
    j["status"] = status;
    if (!error.empty()) j["error"] = error;
    if (!config_.empty()) j["config"] = config_;
    j["warnings"] = warnings_;
    Json arts = Json::array();
    std::vector<fs::path> sorted = artifacts_;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (const auto& p : sorted) {
      Json a;
      a["path"] = fs::relative(p, out_).generic_string();
      if (fs::exists(p)) {
        a["bytes"] = fs::file_size(p);
        a["sha256"] = sha256_file(p);
      } else {
        a["missing"] = true;
      }
      if (status != "ok") a["partial"] = true;
      arts.push_back(a);
    }
    j["artifacts"] = arts;
    write_text_file(out_ / "run_summary.json", j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  fs::path out_;
  std::vector<fs::path> artifacts_;
  KeyValues config_;
  std::vector<std::string> warnings_;
};

struct Common {
  std::string out;
  int threads = 1;
  std::string log_level = "info";
};

void add_common(CLI::App* cmd, Common& c, bool needs_out = true) {
  auto* o = cmd->add_option("--out,-o", c.out, "Output directory");
  if (needs_out) o->required();
  cmd->add_option("--threads,-j", c.threads, "Worker threads (results do not depend on this)")->check(CLI::PositiveNumber);
  cmd->add_option("--log-level", c.log_level, "debug, info, warn or error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));
}

std::string to_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

fs::path latest_checkpoint(const fs::path& out) {
  const fs::path dir = out / "checkpoints";
  if (!fs::is_directory(dir)) throw UsageError("nothing to resume: " + dir.string() + " does not exist");
  fs::path best;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("step_", 0) == 0 && e.path().extension() == ".ckpt" && (best.empty() || e.path() > best)) best = e.path();
  }
  if (best.empty()) throw UsageError("nothing to resume: no checkpoints in " + dir.string());
  return best;
}

// Reads a manifest and validates it, against classes.csv when one sits next
// to it.
Manifest load_manifest(const fs::path& path) {
  Manifest m = read_manifest(path);
  const fs::path classes = path.parent_path() / "classes.csv";
  if (fs::exists(classes)) {
    const ClassSets sets = read_class_sets(classes);
    validate_manifest(m, &sets);
  } else {
    validate_manifest(m);
  }
  return m;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  Common common;
  std::string recipe, builtin;
  std::optional<std::uint64_t> seed;
};

void run_synth(const SynthArgs& a, RunIndex& index, const Logger& log) {
  if (a.recipe.empty() == a.builtin.empty()) throw UsageError("give exactly one of --recipe or --builtin");
  CorpusRecipe recipe = a.recipe.empty() ? builtin_recipe(a.builtin) : read_recipe(a.recipe);
  if (a.seed) recipe.seed = *a.seed;
  const fs::path out(a.common.out);
  index.set_out(out);
  log.info("generating corpus '" + recipe.name + "' into " + out.string());
  const auto corpus = gen_corpus(recipe, out, a.common.threads);
  for (const auto& r : corpus.manifest.rows) index.add(out / r.path);
  index.add(out / "manifest.csv");
  index.add(out / "classes.csv");
  log.info("wrote " + std::to_string(corpus.manifest.rows.size()) + " recordings");
}

// ------------------------------------------------------------------ train

struct ConfigArgs {
  std::string preset, config;
  std::vector<std::string> sets;
};

void add_config(CLI::App* cmd, ConfigArgs& c) {
  cmd->add_option("--preset", c.preset, "Named preset: desk-tiny, tiny, mini, small");
  cmd->add_option("--config", c.config, "Key-value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.sets, "Override, key=value (repeatable)");
}

struct TrainArgs {
  Common common;
  ConfigArgs config;
  std::string manifest;
  std::optional<std::uint64_t> seed;
  bool resume = false;
};

void run_train(const TrainArgs& a, RunIndex& index, const Logger& log) {
  auto overrides = a.config.sets;
  if (a.seed) overrides.push_back("train.seed=" + std::to_string(*a.seed));
  overrides.push_back("train.threads=" + std::to_string(a.common.threads));
  const RunConfig cfg = resolve_config(a.config.preset, a.config.config, overrides);
  const fs::path out(a.common.out);
  index.set_out(out);
  auto values = config_values(cfg);
  values.erase("train.threads");
  if (!cfg.preset.empty()) values["preset"] = cfg.preset;
  index.set_config(values);
  write_text_file(out / "config.txt", format_key_values(values));
  index.add(out / "config.txt");

  const Manifest manifest = load_manifest(a.manifest);
  std::vector<RawSignal> corpus;
  for (auto& s : segment_corpus(manifest)) corpus.push_back(std::move(s.signal));
  log.info("training on " + std::to_string(corpus.size()) + " segments");

  ModelState<double> state;
  OptimizerState opt;
  if (a.resume) {
    const auto path = latest_checkpoint(out);
    auto ck = load_checkpoint(path);
    if (!ck.optimizer) throw DataError(path.string() + ": checkpoint lacks optimizer state, cannot resume");
    const auto& m = ck.state.config;
    if (m.depth != cfg.model.depth || m.hidden != cfg.model.hidden || m.heads != cfg.model.heads ||
        m.patch != cfg.model.patch)
      throw UsageError("resumed checkpoint model differs from the configuration");
    state = std::move(ck.state);
    opt = std::move(*ck.optimizer);
    log.info("resuming from " + path.filename().string());
  } else {
    state = init_params<double>(cfg.model, cfg.train.seed);
    opt = make_optimizer_state(state);
  }
  const auto result = train_loop(corpus, state, opt, cfg.train, cfg.stft, out, [&](const StepReport& r) {
    const std::string line = "step " + std::to_string(r.step) + " loss " + format_double(r.loss.total) + " lr " +
                             format_double(r.lr) + " rate " + format_double(r.batch_rate) + " slices " +
                             std::to_string(r.slices);
    if (r.step % 10 == 0 || r.step == cfg.train.steps) log.info(line);
    else log.debug(line);
  });
  for (const auto& c : result.checkpoints) index.add(c);
  if (fs::is_directory(out / "checkpoints"))
    for (const auto& e : fs::directory_iterator(out / "checkpoints")) index.add(e.path());
  index.add(result.loss_log);
}

// ------------------------------------------------------------------ embed

struct EmbedArgs {
  Common common;
  std::string checkpoint, manifest, tag = "fisher";
};

void run_embed(const EmbedArgs& a, RunIndex& index, const Logger& log) {
  const fs::path out(a.common.out);
  index.set_out(out);
  const auto ck = load_checkpoint(a.checkpoint);
  const Manifest manifest = load_manifest(a.manifest);
  const auto segs = segment_corpus(manifest);
  log.info("embedding " + std::to_string(segs.size()) + " segments at native rate");
  EmbeddingFile file;
  file.model = a.tag;
  file.parameters = encoder_parameter_count(ck.state.config);
  file.records.resize(segs.size());
  parallel_for(segs.size(), a.common.threads, [&](std::size_t i) {
    auto r = record_for(manifest, segs[i]);
    r.vector = embed_segment(segs[i].signal, ck.state, ck.stft).cast<float>();
    file.records[i] = std::move(r);
  });
  // Files carry one dimension; mixed-rate corpora embed to different widths.
  file.dim = static_cast<int>(file.records.front().vector.size());
  for (const auto& r : file.records)
    if (r.vector.size() != file.dim)
      throw DataError("segments embed to different dimensions (mixed rates); split the manifest by rate");
  write_embeddings(out / "embeddings.fshe", file);
  index.add(out / "embeddings.fshe");
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  Common common;
  ConfigArgs config;
  std::string embeddings;
  std::vector<std::string> datasets;
};

struct LoadedEmbeddings {
  EmbeddingFile file;
  std::vector<std::pair<DatasetConfig, std::vector<EmbeddingRecord>>> datasets;
};

LoadedEmbeddings load_for_eval(const EvalArgs& a, const RunConfig& cfg, std::optional<Task> task) {
  LoadedEmbeddings l;
  l.file = read_embeddings(a.embeddings);
  for (const auto& name : dataset_names(l.file.records)) {
    if (!a.datasets.empty() && std::find(a.datasets.begin(), a.datasets.end(), name) == a.datasets.end()) continue;
    auto recs = select_dataset(l.file.records, name);
    auto dc = dataset_config(name, recs);
    if (task && dc.task != *task) continue;
    if (cfg.eval.k > 0) dc.k = cfg.eval.k;
    if (cfg.eval.train_ratio > 0.0) dc.train_ratio = cfg.eval.train_ratio;
    dc.max_fpr = cfg.eval.max_fpr;
    l.datasets.emplace_back(dc, std::move(recs));
  }
  if (l.datasets.empty()) throw DataError(a.embeddings + ": no matching datasets to evaluate");
  return l;
}

void write_report(const MetricReport& rep, const fs::path& out, RunIndex& index) {
  write_text_file(out / "report.json", report_json(rep));
  write_text_file(out / "report.csv", report_csv(rep));
  index.add(out / "report.json");
  index.add(out / "report.csv");
}

void run_eval(const EvalArgs& a, Task task, RunIndex& index, const Logger& log) {
  const RunConfig cfg = resolve_config(a.config.preset, a.config.config, a.config.sets);
  const fs::path out(a.common.out);
  index.set_out(out);
  const auto loaded = load_for_eval(a, cfg, task);
  std::vector<DatasetScore> scores;
  for (const auto& [dc, recs] : loaded.datasets) {
    scores.push_back(evaluate_fixed(recs, dc, a.common.threads));
    log.info(dc.name + ": " + to_percent(scores.back().mean));
  }
  auto rep = partial_report(std::move(scores), loaded.file.model);
  rep.parameters = loaded.file.parameters;
  write_report(rep, out, index);
}

void run_sweep(const EvalArgs& a, RunIndex& index, const Logger& log) {
  const RunConfig cfg = resolve_config(a.config.preset, a.config.config, a.config.sets);
  const fs::path out(a.common.out);
  index.set_out(out);
  const auto loaded = load_for_eval(a, cfg, Task::fault_diagnosis);
  std::vector<SweepResult> sweeps;
  for (const auto& [dc, recs] : loaded.datasets) {
    if (std::any_of(recs.begin(), recs.end(), [](const auto& r) { return !r.split.empty(); })) {
      log.warn(dc.name + ": official split, skipped");
      index.warn(dc.name + ": official split, skipped");
      continue;
    }
    auto s = multi_split_sweep(recs, dc, a.common.threads);
    s.model = loaded.file.model;
    for (const auto& p : s.points)
      if (!p.feasible) {
        const std::string w = dc.name + ": ratio " + format_double(p.ratio) + " infeasible, skipped";
        log.warn(w);
        index.warn(w);
      }
    log.info(dc.name + ": multi-split area " + to_percent(s.area));
    const fs::path curve = out / "curves" / (dc.name + ".csv");
    write_text_file(curve, sweep_csv(s));
    index.add(curve);
    sweeps.push_back(std::move(s));
  }
  if (sweeps.empty()) throw DataError("no dataset without an official split to sweep");
  write_text_file(out / "sweep.json", sweep_json(sweeps));
  index.add(out / "sweep.json");
}

// ------------------------------------------------------------------ report

struct ReportArgs {
  Common common;
  std::vector<std::string> reports, sweeps;
};

void run_report(const ReportArgs& a, RunIndex& index, const Logger& log) {
  if (a.reports.empty()) throw UsageError("report needs at least one --reports file");
  const fs::path out(a.common.out);
  index.set_out(out);
  // Merge per model tag, keeping input order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<DatasetScore>> by_model;
  std::map<std::string, std::int64_t> params;
  for (const auto& path : a.reports) {
    const auto rep = parse_report_json(read_text_file(path));
    if (!by_model.count(rep.model)) order.push_back(rep.model);
    auto& list = by_model[rep.model];
    for (const auto& d : rep.datasets) {
      if (std::any_of(list.begin(), list.end(), [&](const auto& e) { return e.name == d.name; }))
        throw DataError("dataset '" + d.name + "' appears twice for model '" + rep.model + "'");
      list.push_back(d);
    }
    if (rep.parameters > 0) params[rep.model] = rep.parameters;
  }
  Json set;
  set["format"] = "fisher-report-set";
  set["version"] = 1;
  Json models = Json::array();
  std::string csv;
  std::vector<MetricReport> merged;
  for (const auto& m : order) {
    auto rep = partial_report(by_model[m], m);
    rep.parameters = params.count(m) ? params[m] : 0;
    if (!rep.overall) log.warn(m + ": only one task present, no overall score");
    models.push_back(Json::parse(report_json(rep)));
    // Per-model rows gain a leading model column.
    const auto one = parse_csv(report_csv(rep));
    if (csv.empty()) {
      CsvRow header{"model"};
      header.insert(header.end(), one.front().begin(), one.front().end());
      csv += csv_line(header);
    }
    for (std::size_t i = 1; i < one.size(); ++i) {
      CsvRow row{m};
      row.insert(row.end(), one[i].begin(), one[i].end());
      csv += csv_line(row);
    }
    merged.push_back(std::move(rep));
  }
  set["models"] = models;
  write_text_file(out / "report.json", set.dump(2) + "\n");
  write_text_file(out / "report.csv", csv);
  index.add(out / "report.json");
  index.add(out / "report.csv");

  // Score against model size, sorted by size.
  std::vector<const MetricReport*> sized;
  for (const auto& r : merged)
    if (r.parameters > 0) sized.push_back(&r);
  if (sized.size() == merged.size()) {
    std::sort(sized.begin(), sized.end(), [](auto* x, auto* y) { return x->parameters < y->parameters; });
    LineChart chart;
    chart.title = "Score versus model size";
    chart.x_label = "encoder parameters";
    chart.y_label = "score (%)";
    chart.log_x = true;
    for (const auto& [label, get] : std::vector<std::pair<std::string, std::function<std::optional<double>(const MetricReport&)>>>{
             {"overall", [](const MetricReport& r) { return r.overall; }},
             {"anomaly detection", [](const MetricReport& r) -> std::optional<double> {
                if (!r.task_means.count(Task::anomaly_detection)) return std::nullopt;
                return r.task_means.at(Task::anomaly_detection);
              }},
             {"fault diagnosis", [](const MetricReport& r) -> std::optional<double> {
                if (!r.task_means.count(Task::fault_diagnosis)) return std::nullopt;
                return r.task_means.at(Task::fault_diagnosis);
              }}}) {
      Series s;
      s.name = label;
      for (const auto* r : sized)
        if (const auto v = get(*r)) {
          s.x.push_back(static_cast<double>(r->parameters));
          s.y.push_back(*v);
        }
      if (!s.x.empty()) chart.series.push_back(std::move(s));
    }
    write_text_file(out / "score_vs_size.svg", render_svg(chart));
    index.add(out / "score_vs_size.svg");
  } else {
    index.warn("some reports lack a parameter count; score_vs_size.svg skipped");
    log.warn("some reports lack a parameter count; score_vs_size.svg skipped");
  }

  // One multi-split chart per dataset, one series per model.
  std::map<std::string, LineChart> charts;
  for (const auto& path : a.sweeps)
    for (const auto& s : parse_sweep_json(read_text_file(path))) {
      auto& c = charts[s.dataset];
      c.title = "Multi-split curve: " + s.dataset;
      c.x_label = "train ratio";
      c.y_label = "macro accuracy (%)";
      Series line;
      line.name = (s.model.empty() ? "model" : s.model) + " (area " + to_percent(s.area) + ")";
      for (const auto& p : s.points)
        if (p.feasible) {
          line.x.push_back(p.ratio);
          line.y.push_back(p.mean);
        }
      c.series.push_back(std::move(line));
    }
  for (const auto& [dataset, chart] : charts) {
    std::string safe;
    for (char ch : dataset) safe += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
    const fs::path p = out / ("multi_split_" + safe + ".svg");
    write_text_file(p, render_svg(chart));
    index.add(p);
  }
}

Json error_record(const std::string& kind, const std::string& message, int code) {
  return Json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
}

}  // namespace

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const UsageError*>(&error) || dynamic_cast<const CLI::Error*>(&error)) return 1;
  if (dynamic_cast<const DivergenceError*>(&error)) return 3;
  return 2;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fisher: multi-rate industrial signal representation toolkit", "fisher"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic corpus (WAV files + manifest)");
  add_common(c_synth, synth.common);
  c_synth->add_option("--recipe", synth.recipe, "Key-value recipe file")->check(CLI::ExistingFile);
  c_synth->add_option("--builtin", synth.builtin, "Built-in recipe: fd-high, fd-low, ad, pretrain");
  c_synth->add_option("--seed", synth.seed, "Override the recipe seed");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Self-distillation pre-training; writes checkpoints and a loss log");
  add_common(c_train, train.common);
  add_config(c_train, train.config);
  c_train->add_option("--manifest", train.manifest, "Training manifest CSV")->required()->check(CLI::ExistingFile);
  c_train->add_option("--seed", train.seed, "Shorthand for --set train.seed=N");
  c_train->add_flag("--resume", train.resume, "Continue from the latest checkpoint in --out");

  EmbedArgs embed;
  auto* c_embed = app.add_subcommand("embed", "Embed every manifest segment at its native rate");
  add_common(c_embed, embed.common);
  c_embed->add_option("--checkpoint", embed.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  c_embed->add_option("--manifest", embed.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  c_embed->add_option("--tag", embed.tag, "Model tag stored in the embedding file");

  EvalArgs ad, fd, sweep;
  auto eval_cmd = [&](const char* name, const char* help, EvalArgs& e) {
    auto* c = app.add_subcommand(name, help);
    add_common(c, e.common);
    add_config(c, e.config);
    c->add_option("--embeddings", e.embeddings, "Embedding file")->required()->check(CLI::ExistingFile);
    c->add_option("--dataset", e.datasets, "Restrict to these datasets (repeatable)");
    return c;
  };
  auto* c_ad = eval_cmd("eval-ad", "Anomaly detection: k-NN memory banks, challenge score", ad);
  auto* c_fd = eval_cmd("eval-fd", "Fault diagnosis: k-NN over 10 sealed splits, macro accuracy", fd);
  auto* c_sweep = eval_cmd("sweep-splits", "Multi-split curve and area over train ratios 0.05..0.95", sweep);

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Merge reports; emit JSON, CSV and SVG charts");
  add_common(c_report, report.common);
  c_report->add_option("--reports", report.reports, "report.json files from eval-ad / eval-fd")->required()->check(CLI::ExistingFile);
  c_report->add_option("--sweeps", report.sweeps, "sweep.json files from sweep-splits")->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help and friends
      out << (dynamic_cast<const CLI::CallForAllHelp*>(&e) ? app.help("", CLI::AppFormatMode::All)
                                                            : (app.get_subcommands().empty() ? app.help()
                                                                                             : app.get_subcommands().front()->help()));
      return 0;
    }
    err << error_record("usage", e.what(), 1).dump() << "\n";
    return 1;
  }

  CLI::App* cmd = app.get_subcommands().front();
  RunIndex index(cmd->get_name(), args);
  const Common* common = nullptr;
  if (cmd == c_synth) common = &synth.common;
  else if (cmd == c_train) common = &train.common;
  else if (cmd == c_embed) common = &embed.common;
  else if (cmd == c_ad) common = &ad.common;
  else if (cmd == c_fd) common = &fd.common;
  else if (cmd == c_sweep) common = &sweep.common;
  else common = &report.common;
  const Logger log(err, parse_level(common->log_level));
  try {
    if (cmd == c_synth) run_synth(synth, index, log);
    else if (cmd == c_train) run_train(train, index, log);
    else if (cmd == c_embed) run_embed(embed, index, log);
    else if (cmd == c_ad) run_eval(ad, Task::anomaly_detection, index, log);
    else if (cmd == c_fd) run_eval(fd, Task::fault_diagnosis, index, log);
    else if (cmd == c_sweep) run_sweep(sweep, index, log);
    else run_report(report, index, log);
    index.write("ok");
    return 0;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    const char* kind = code == 1 ? "usage" : code == 3 ? "divergence" : "data";
    try {
      index.write("failed", e.what());
    } catch (...) {
    }
    err << error_record(kind, e.what(), code).dump() << "\n";
    return code;
  }
}

}  // namespace fisher
