// relayar: command-line pipeline for AR-coefficient relay analytics.
// Subcommands cover corpus generation, disturbance detection, feature
// extraction, mRMR selection, fuzzy tuning, classifier training/evaluation,
// the distance-relay baseline, and report emission.
//
// Exit codes: 0 success, 1 operational failure, 2 usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "relayar/classify.hpp"
#include "relayar/config.hpp"
#include "relayar/detector.hpp"
#include "relayar/features.hpp"
#include "relayar/fuzzy.hpp"
#include "relayar/manifest.hpp"
#include "relayar/mrmr.hpp"
#include "relayar/pipeline.hpp"
#include "relayar/relay.hpp"
#include "relayar/waveform.hpp"

namespace fs = std::filesystem;
using namespace relayar;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> end_mode;
  std::optional<double> window_cycles;
  int jobs = 1;
};

config::PipelineConfig resolve_config(const CommonOpts& opts) {
  config::KvConfig kv;
  if (!opts.config_path.empty()) kv = config::KvConfig::parse_file(opts.config_path);
  auto cfg = config::PipelineConfig::from(kv);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.end_mode) {
    if (*opts.end_mode == "single") cfg.double_end = false;
    else if (*opts.end_mode == "double") cfg.double_end = true;
    else throw CLI::ValidationError("--end-mode", "must be single or double");
  }
  if (opts.window_cycles) cfg.window_cycles = *opts.window_cycles;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_config = true) {
  if (with_config) cmd->add_option("--config", opts.config_path, "pipeline config file (key = value sections)");
  cmd->add_option("--seed", opts.seed, "override the master seed");
  cmd->add_option("--end-mode", opts.end_mode, "single or double CT measurement");
  cmd->add_option("--window-cycles", opts.window_cycles, "analysis window length in cycles");
  cmd->add_option("--jobs", opts.jobs, "worker threads for per-case work")->check(CLI::PositiveNumber);
}

const std::array<classify::Task, 5> kAllTasks = {classify::Task::detection, classify::Task::region,
                                                 classify::Task::location, classify::Task::phase,
                                                 classify::Task::faulttype};

std::string models_path(const std::string& dir, classify::Task task) {
  return (fs::path(dir) / (std::string("models_") + classify::to_string(task) + ".txt")).string();
}

int trainable_classes(const classify::Dataset& d) {
  std::set<int> classes(d.y.begin(), d.y.end());
  return static_cast<int>(classes.size());
}

// ---------------------------------------------------------------------------

int cmd_generate(const std::string& grid_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
                 int jobs) {
  auto kv = config::KvConfig::parse_file(grid_path);
  auto grid = pipeline::GridSpec::from(kv);
  if (seed) grid.master_seed = *seed;
  const auto m = pipeline::write_corpus(grid, out_dir, jobs);
  std::cout << "generated " << m.rows.size() << " cases under " << out_dir << "\n";
  return 0;
}

int cmd_detect(const std::string& manifest_path, const CommonOpts& opts, const std::string& out_path) {
  const auto cfg = resolve_config(opts);
  const auto corpus = pipeline::load_corpus(manifest_path, opts.jobs);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + out_path);
  out << "case_id,phase,sample_index,dd_value\n";
  static constexpr const char* phases[] = {"a", "b", "c"};
  for (const auto& c : corpus) {
    const auto detections = detector::detect(c.wf, pipeline::detector_config_for(cfg, c.wf));
    for (const auto& d : detections)
      out << c.row.case_id << ',' << phases[d.phase] << ',' << d.sample_index << ','
          << strings::g17(d.dd_value) << '\n';
  }
  return 0;
}

int cmd_extract(const std::string& manifest_path, const CommonOpts& opts, const std::string& out_path,
                const std::string& which) {
  const auto cfg = resolve_config(opts);
  const auto corpus = pipeline::load_corpus(manifest_path, opts.jobs);
  std::vector<int> ids;
  if (which == "all") {
    ids = features::registry::all_ids();
  } else if (which == "selected") {
    ids = cfg.selected_features;
  } else {
    for (auto part : strings::split(which, ',')) {
      const auto name = strings::trim(part);
      if (!name.empty()) ids.push_back(features::registry::id(name));
    }
    if (ids.empty()) throw std::runtime_error("--features list is empty");
  }
  pipeline::write_features_csv(corpus, cfg, ids, out_path, opts.jobs);
  return 0;
}

int cmd_select(const std::string& features_path, const std::string& manifest_path, const std::string& task_s,
               int k, int bins, const std::string& out_path) {
  auto table = pipeline::read_features_csv(features_path);
  const auto m = manifest::load_csv(manifest_path, false);
  const auto task = classify::parse_task(task_s);
  std::vector<std::string> col_names;
  auto fm = pipeline::feature_matrix_for(table, m, task, &col_names);
  if (bins <= 0) bins = mrmr::default_bins(fm.n_rows());
  if (k <= 0) k = static_cast<int>(fm.n_cols());
  const auto ranking = mrmr::rank(fm, k, bins);
  pipeline::write_ranking_csv(ranking, col_names, fm.feature_ids, out_path);
  if (table.imputed > 0)
    std::cerr << "note: imputed 0 for " << table.imputed << " undefined feature cells\n";
  return 0;
}

int cmd_tune_fuzzy(const std::string& manifest_path, const CommonOpts& opts, const std::string& out_path) {
  const auto cfg = resolve_config(opts);
  const auto corpus = pipeline::load_corpus(manifest_path, opts.jobs);
  std::vector<fuzzy::LabeledInputs> train;
  for (const auto& c : corpus) {
    const auto label = c.row.label(classify::Task::detection);
    if (!label) continue;
    const auto det_cfg = pipeline::detector_config_for(cfg, c.wf);
    const auto onset = detector::event_onset(detector::detect(c.wf, det_cfg));
    if (!onset) continue;
    const std::size_t half = det_cfg.half_cycle_samples;
    std::vector<waveform::SampleWindow> windows;
    for (int w = 0; w < 4; ++w) {
      const std::size_t start = *onset + static_cast<std::size_t>(w) * half;
      if (start + half > c.wf.size()) break;
      windows.push_back(waveform::window_at_index(c.wf, start, 0.5));
    }
    if (windows.empty()) continue;
    const auto fi = features::fuzzy_inputs(windows);
    train.push_back({{fi.max_a2[0], fi.max_a2[1], fi.max_a2[2], fi.max_a5[0], fi.max_a5[1], fi.max_a5[2]},
                     *label == 1});
  }
  if (train.empty()) throw std::runtime_error("tune-fuzzy: no triggered labeled cases in the corpus");

  const std::vector<std::string> names = {"a2_a", "a2_b", "a2_c", "a5_a", "a5_b", "a5_c"};
  const auto tmpl =
      fuzzy::make_template(train, names, cfg.fuzzy_input_sets, cfg.fuzzy_output_sets, cfg.fuzzy_rules);
  const auto result = fuzzy::ga_tune(train, tmpl, cfg.ga);
  fuzzy::save(result.system, out_path);
  std::cout << "tuned fuzzy detector: train balanced accuracy " << strings::g17(result.train_balanced_accuracy)
            << "\n";
  return 0;
}

int cmd_train(const std::string& manifest_path, const CommonOpts& opts, const std::string& out_dir) {
  const auto cfg = resolve_config(opts);
  const auto corpus = pipeline::load_corpus(manifest_path, opts.jobs);
  fs::create_directories(out_dir);
  bool any = false;
  for (const auto task : kAllTasks) {
    const auto built = pipeline::build_dataset(corpus, task, cfg, opts.jobs);
    if (built.data.n_rows() == 0 || trainable_classes(built.data) < 2) {
      std::cerr << "note: skipping " << classify::to_string(task) << " (not enough labeled classes)\n";
      continue;
    }
    const auto split = pipeline::stratified_split(built.data.y, cfg.test_fraction, cfg.seed);
    const auto train_set = pipeline::take_rows(built.data, split.train);
    const auto models =
        pipeline::train_task_ensemble(train_set, cfg, seed_combine(cfg.seed, static_cast<std::uint64_t>(task)));
    classify::save_models(models, models_path(out_dir, task));
    any = true;
  }
  if (!any) throw std::runtime_error("train: no task had two labeled classes");
  return 0;
}

int cmd_evaluate(const std::string& manifest_path, const CommonOpts& opts, const std::string& models_dir,
                 const std::string& out_dir, const std::string& fuzzy_path) {
  const auto cfg = resolve_config(opts);
  const auto corpus = pipeline::load_corpus(manifest_path, opts.jobs);
  fs::create_directories(out_dir);

  classify::StagedModels staged;
  if (!fuzzy_path.empty()) staged.fuzzy_detector = fuzzy::load(fuzzy_path);

  pipeline::BuiltDataset detection_built;
  pipeline::Split detection_split;
  bool all_stages = true;
  for (const auto task : kAllTasks) {
    const auto path = models_path(models_dir, task);
    if (!fs::exists(path)) {
      all_stages = false;
      continue;
    }
    const auto models = classify::load_models(path);
    auto built = pipeline::build_dataset(corpus, task, cfg, opts.jobs);
    if (built.data.n_rows() == 0) continue;
    const auto split = pipeline::stratified_split(built.data.y, cfg.test_fraction, cfg.seed);
    const auto test_set = pipeline::take_rows(built.data, split.test);
    const auto rep = classify::evaluate(models, test_set);
    const auto j = pipeline::report_json(rep, task, cfg.config_hash);
    std::ofstream out((fs::path(out_dir) / (std::string("eval_") + classify::to_string(task) + ".json")).string(),
                      std::ios::binary);
    out << j.dump(2) << '\n';
    pipeline::write_confusion_csv(
        rep, task, (fs::path(out_dir) / (std::string("confusion_") + classify::to_string(task) + ".csv")).string());
    switch (task) {
      case classify::Task::detection: staged.detection = models; detection_built = std::move(built); detection_split = split; break;
      case classify::Task::region: staged.region = models; break;
      case classify::Task::location: staged.location = models; break;
      case classify::Task::phase: staged.phase = models; break;
      case classify::Task::faulttype: staged.faulttype = models; break;
    }
  }

  // staged decision records over the detection test split
  if (all_stages && !staged.detection.empty()) {
    std::ofstream out((fs::path(out_dir) / "decisions.csv").string(), std::ios::binary);
    out << "case_id,fault,trip,region,location,phase,faulttype,fuzzy_score\n";
    for (const std::size_t row : detection_split.test) {
      classify::Dataset one;
      one.task = classify::Task::detection;
      one.feature_names = detection_built.data.feature_names;
      one.X = {detection_built.data.X[row]};
      one.y = {0};
      const auto decision = classify::staged_pipeline(staged, one);
      const auto& case_id = corpus[detection_built.case_indices[row]].row.case_id;
      out << case_id << ',' << (decision.fault ? 1 : 0) << ',' << (decision.trip ? 1 : 0) << ','
          << (decision.region ? manifest::index_to_label(classify::Task::region, *decision.region) : std::string())
          << ','
          << (decision.location ? manifest::index_to_label(classify::Task::location, *decision.location)
                                : std::string())
          << ','
          << (decision.phase_sel ? manifest::index_to_label(classify::Task::phase, *decision.phase_sel)
                                 : std::string())
          << ','
          << (decision.fault_type ? manifest::index_to_label(classify::Task::faulttype, *decision.fault_type)
                                  : std::string())
          << ',' << (decision.fuzzy_score ? strings::g17(*decision.fuzzy_score) : std::string()) << '\n';
    }
  }
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& out_path) {
  std::vector<nlohmann::ordered_json> reports;
  for (const auto task : kAllTasks) {
    const auto path = fs::path(in_dir) / (std::string("eval_") + classify::to_string(task) + ".json");
    if (!fs::exists(path)) continue;
    std::ifstream in(path);
    nlohmann::ordered_json j;
    in >> j;
    reports.push_back(std::move(j));
  }
  if (reports.empty()) throw std::runtime_error("report: no eval_*.json files under " + in_dir);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + out_path);
  out << "relayar evaluation report\n";
  out << "config_hash " << reports.front()["config_hash"].get<std::string>() << "\n\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %10s %10s %10s %8s\n", "task", "accuracy", "ci_lo", "ci_hi", "n_test");
  out << line;
  for (const auto& j : reports) {
    std::snprintf(line, sizeof(line), "%-12s %10.4f %10.4f %10.4f %8llu\n", j["task"].get<std::string>().c_str(),
                  j["accuracy"].get<double>(), j["ci_lo"].get<double>(), j["ci_hi"].get<double>(),
                  static_cast<unsigned long long>(j["n_test"].get<std::size_t>()));
    out << line;
  }
  const auto csv_path = fs::path(out_path).replace_extension(".csv");
  std::ofstream csv(csv_path, std::ios::binary);
  csv << "task,accuracy,ci_lo,ci_hi,n_test,config_hash\n";
  for (const auto& j : reports)
    csv << j["task"].get<std::string>() << ',' << strings::g17(j["accuracy"].get<double>()) << ','
        << strings::g17(j["ci_lo"].get<double>()) << ',' << strings::g17(j["ci_hi"].get<double>()) << ','
        << j["n_test"].get<std::size_t>() << ',' << j["config_hash"].get<std::string>() << '\n';
  return 0;
}

int cmd_relay(const std::string& scenario_path, const std::string& out_path) {
  const auto kv = config::KvConfig::parse_file(scenario_path);
  relay::LineConstants line;
  line.z1 = {kv.get_double("line", "r1_ohm", 0.96), kv.get_double("line", "x1_ohm", 31.18)};
  line.z0 = {kv.get_double("line", "r0_ohm", 33.6), kv.get_double("line", "x0_ohm", 112.9)};
  relay::TrajectoryConfig cfg;
  cfg.line = line;
  cfg.f0 = kv.get_double("scenario", "f0", 60.0);
  cfg.tracked = kv.get_string("scenario", "mode", "fixed") == "tracked";
  cfg.zone = relay::default_zone1(line, kv.get_double("scenario", "reach_fraction", 0.8));
  const double fs = kv.get_double("scenario", "fs", 1920.0);
  const double duration = kv.get_double("scenario", "duration_s", 0.3);
  const double signal_hz = kv.get_double("scenario", "signal_hz", 60.0);
  const double fraction = kv.get_double("scenario", "fault_fraction", 0.5);
  const auto loop_s = kv.get_string("scenario", "fault_loop", "ag");
  relay::Loop loop = relay::Loop::ag;
  if (loop_s == "bg") loop = relay::Loop::bg;
  else if (loop_s == "cg") loop = relay::Loop::cg;
  else if (loop_s != "ag") throw std::runtime_error("relay: fault_loop must be ag, bg, or cg");
  const auto ps = relay::metallic_fault_phasors(line, fraction, loop,
                                                kv.get_double("scenario", "fault_current", 2.0));
  const auto v = relay::phasor_record(ps.v, signal_hz, fs, duration, cfg.f0);
  const auto i = relay::phasor_record(ps.i, signal_hz, fs, duration, cfg.f0);
  const auto traj = relay::impedance_trajectory(v, i, cfg);
  relay::write_trajectory_csv(traj, out_path);
  std::cout << "wrote " << traj.size() << " trajectory points to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AR-coefficient relay analytics pipeline"};
  app.require_subcommand(1);

  // generate
  std::string grid_path, gen_out;
  std::optional<std::uint64_t> gen_seed;
  int gen_jobs = 1;
  auto* generate = app.add_subcommand("generate", "synthesize a scenario-grid corpus");
  generate->add_option("--grid", grid_path, "grid spec file")->required();
  generate->add_option("--out", gen_out, "output directory")->required();
  generate->add_option("--seed", gen_seed, "override the grid master seed");
  generate->add_option("--jobs", gen_jobs, "worker threads")->check(CLI::PositiveNumber);

  // detect
  CommonOpts det_opts;
  std::string det_manifest, det_out;
  auto* detect_cmd = app.add_subcommand("detect", "run the disturbance detector over a corpus");
  detect_cmd->add_option("--manifest", det_manifest, "corpus manifest")->required();
  detect_cmd->add_option("--out", det_out, "detections CSV")->required();
  add_common(detect_cmd, det_opts);

  // extract
  CommonOpts ext_opts;
  std::string ext_manifest, ext_out, ext_features = "all";
  auto* extract_cmd = app.add_subcommand("extract", "extract catalog features per case and phase");
  extract_cmd->add_option("--manifest", ext_manifest, "corpus manifest")->required();
  extract_cmd->add_option("--out", ext_out, "feature matrix CSV")->required();
  extract_cmd->add_option("--features", ext_features, "all, selected, or a comma list of names");
  add_common(extract_cmd, ext_opts);

  // select
  std::string sel_features, sel_manifest, sel_task = "detection", sel_out;
  int sel_k = 0, sel_bins = 0;
  auto* select_cmd = app.add_subcommand("select", "rank features by max-relevance min-redundancy");
  select_cmd->add_option("--features", sel_features, "feature matrix CSV from extract")->required();
  select_cmd->add_option("--manifest", sel_manifest, "corpus manifest (labels)")->required();
  select_cmd->add_option("--task", sel_task, "label task for relevance");
  select_cmd->add_option("--k", sel_k, "how many features to rank (0 = all)");
  select_cmd->add_option("--bins", sel_bins, "discretization bins (0 = sqrt rule)");
  select_cmd->add_option("--out", sel_out, "ranking CSV")->required();

  // tune-fuzzy
  CommonOpts fz_opts;
  std::string fz_manifest, fz_out;
  auto* fuzzy_cmd = app.add_subcommand("tune-fuzzy", "GA-tune the fuzzy fault detector");
  fuzzy_cmd->add_option("--manifest", fz_manifest, "corpus manifest")->required();
  fuzzy_cmd->add_option("--out", fz_out, "fuzzy system file")->required();
  add_common(fuzzy_cmd, fz_opts);

  // train
  CommonOpts tr_opts;
  std::string tr_manifest, tr_out;
  auto* train_cmd = app.add_subcommand("train", "train per-stage classifier ensembles");
  train_cmd->add_option("--manifest", tr_manifest, "corpus manifest")->required();
  train_cmd->add_option("--out", tr_out, "models output directory")->required();
  add_common(train_cmd, tr_opts);

  // evaluate
  CommonOpts ev_opts;
  std::string ev_manifest, ev_models, ev_out, ev_fuzzy;
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate saved models on the held-out split");
  eval_cmd->add_option("--manifest", ev_manifest, "corpus manifest")->required();
  eval_cmd->add_option("--models", ev_models, "models directory from train")->required();
  eval_cmd->add_option("--out", ev_out, "report output directory")->required();
  eval_cmd->add_option("--fuzzy", ev_fuzzy, "optional tuned fuzzy system file");
  add_common(eval_cmd, ev_opts);

  // relay
  std::string rl_scenario, rl_out;
  auto* relay_cmd = app.add_subcommand("relay", "distance-relay impedance trajectory for a scenario");
  relay_cmd->add_option("--scenario", rl_scenario, "scenario spec file")->required();
  relay_cmd->add_option("--out", rl_out, "trajectory CSV")->required();

  // report
  std::string rp_in, rp_out;
  auto* report_cmd = app.add_subcommand("report", "merge eval JSON files into a summary table");
  report_cmd->add_option("--in", rp_in, "directory holding eval_*.json")->required();
  report_cmd->add_option("--out", rp_out, "report text file (CSV written alongside)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "relayar: usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (generate->parsed()) return cmd_generate(grid_path, gen_out, gen_seed, gen_jobs);
    if (detect_cmd->parsed()) return cmd_detect(det_manifest, det_opts, det_out);
    if (extract_cmd->parsed()) return cmd_extract(ext_manifest, ext_opts, ext_out, ext_features);
    if (select_cmd->parsed()) return cmd_select(sel_features, sel_manifest, sel_task, sel_k, sel_bins, sel_out);
    if (fuzzy_cmd->parsed()) return cmd_tune_fuzzy(fz_manifest, fz_opts, fz_out);
    if (train_cmd->parsed()) return cmd_train(tr_manifest, tr_opts, tr_out);
    if (eval_cmd->parsed()) return cmd_evaluate(ev_manifest, ev_opts, ev_models, ev_out, ev_fuzzy);
    if (relay_cmd->parsed()) return cmd_relay(rl_scenario, rl_out);
    if (report_cmd->parsed()) return cmd_report(rp_in, rp_out);
  } catch (const std::exception& e) {
    std::cerr << "relayar: error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "relayar: usage error: no subcommand\n";
  return 2;
}
