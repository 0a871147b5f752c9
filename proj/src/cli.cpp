#include "cogload/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cogload/error.hpp"
#include "cogload/harness.hpp"

namespace cogload::cli {

namespace fs = std::filesystem;

namespace {

struct ConfigArgs {
  std::string path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> profile;
  std::optional<std::string> model;
  std::optional<int> cohort;
  std::optional<int> high;
  std::optional<int> folds;
  std::optional<std::string> features;  // comma-separated

  void attach(CLI::App* app, bool experiment) {
    app->add_option("--config", path, "Experiment config file (JSON)");
    app->add_option("--seed", seed, "Override the config seed");
    app->add_option("--profile", profile, "raw | privacy");
    if (!experiment) return;
    app->add_option("--model", model, "rf | mlp");
    app->add_option("--cohort", cohort, "Participants in the phase-1 cohort");
    app->add_option("--high", high, "HIGH-load participants in the cohort");
    app->add_option("--folds", folds, "Cross-validation folds");
    app->add_option("--features", features, "Comma-separated feature subset");
  }

  harness::ExperimentConfig resolve() const {
    auto c = path.empty() ? harness::ExperimentConfig{} : harness::ExperimentConfig::load(path);
    if (seed) c.seed = *seed;
    if (profile) {
      auto p = features::parse_profile(*profile);
      if (!p) throw CLI::ValidationError("--profile", "must be raw or privacy");
      c.profile = *p;
    }
    if (model) {
      auto m = learn::parse_model_kind(*model);
      if (!m) throw CLI::ValidationError("--model", "must be rf or mlp");
      c.model = *m;
    }
    if (cohort) c.cohort = *cohort;
    if (high) c.high = *high;
    if (folds) c.folds = *folds;
    if (features) {
      c.features.clear();
      std::stringstream ss(*features);
      std::string name;
      while (std::getline(ss, name, ',')) {
        if (!name.empty()) c.features.push_back(name);
      }
    }
    c.validate();
    return c;
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cli", "IO_ERROR", "cannot write " + path);
  f << text;
}

std::vector<features::FeatureLog> read_logs(const std::vector<std::string>& paths) {
  std::vector<features::FeatureLog> logs;
  for (const auto& p : paths) logs.push_back(features::read_feature_log(p));
  return logs;
}

features::Profile common_profile(const std::vector<features::FeatureLog>& logs) {
  if (logs.empty()) throw Error("cli", "NO_INPUT", "no feature logs given");
  for (const auto& l : logs) {
    if (l.header.profile != logs.front().header.profile) {
      throw Error("learn", "PROFILE_MISMATCH", "feature logs mix profiles");
    }
  }
  return logs.front().header.profile;
}

std::vector<features::FeatureVector> all_vectors(const std::vector<features::FeatureLog>& logs) {
  std::vector<features::FeatureVector> v;
  for (const auto& l : logs) v.insert(v.end(), l.vectors.begin(), l.vectors.end());
  return v;
}

// Dataset in the config's feature order with constant columns removed.
learn::Dataset training_set(const std::vector<features::FeatureLog>& logs, harness::ExperimentConfig& cfg) {
  cfg.profile = common_profile(logs);
  const auto vectors = all_vectors(logs);
  auto order = cfg.feature_order();
  auto data = learn::Dataset::from_vectors(vectors, order, cfg.profile);
  const auto dropped = learn::constant_features(data);
  if (!dropped.empty()) {
    std::vector<std::string> kept;
    for (const auto& n : order) {
      if (std::find(dropped.begin(), dropped.end(), n) == dropped.end()) kept.push_back(n);
    }
    data = learn::select_features(data, kept);
  }
  return data;
}

void print_metrics(std::ostream& out, const char* level, const learn::ClassificationMetrics& m) {
  auto f = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return std::string(buf);
  };
  out << level << ": accuracy " << f(m.accuracy) << "  precision " << f(m.precision) << "  recall " << f(m.recall)
      << "  f1 " << f(m.f1) << "  auc " << f(m.auc_roc) << "  n " << m.confusion.n() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cognitive-load classification and adaptive-difficulty toolkit", "cogload"};
  app.require_subcommand(1);
  std::vector<std::pair<CLI::App*, std::function<void()>>> actions;
  auto command = [&](const char* name, const char* help) { return app.add_subcommand(name, help); };

  // simulate
  ConfigArgs sim_cfg;
  std::string sim_out;
  auto* sim = command("simulate", "Generate a synthetic cohort (session logs, TLX files, manifest)");
  sim_cfg.attach(sim, true);
  sim->add_option("--out", sim_out, "Output directory")->required();
  actions.emplace_back(sim, [&] {
    const auto cfg = sim_cfg.resolve();
    const auto cohort = harness::simulate_cohort(cfg);
    simgen::write_cohort(sim_out, cohort);
    out << "wrote " << cohort.members.size() << " sessions to " << sim_out << "\n";
  });

  // extract
  ConfigArgs ext_cfg;
  std::string ext_session, ext_out;
  bool ext_streaming = false;
  auto* ext = command("extract", "Windowed features from a session log");
  ext_cfg.attach(ext, false);
  ext->add_option("--session", ext_session, "Session log")->required();
  ext->add_option("--out", ext_out, "Feature log (default stdout)");
  ext->add_flag("--streaming", ext_streaming, "Use the incremental extractor");
  actions.emplace_back(ext, [&] {
    const auto cfg = ext_cfg.resolve();
    const auto log = protocol::read_session_log(ext_session);
    features::FeatureLog fl;
    fl.header = {cfg.profile, cfg.hash(), features::registry_hash(),
                 features::profile_features(cfg.profile, cfg.extraction.profile_options)};
    if (ext_streaming) {
      features::StreamingExtractor sx(log.header, cfg.extraction, cfg.profile);
      for (const auto& m : log.records) {
        auto w = sx.push(m);
        fl.vectors.insert(fl.vectors.end(), w.begin(), w.end());
      }
      auto w = sx.finish();
      fl.vectors.insert(fl.vectors.end(), w.begin(), w.end());
    } else {
      fl.vectors = features::batch_extract(log, cfg.extraction, cfg.profile);
    }
    if (ext_out.empty()) {
      features::write_feature_log(out, fl);
    } else {
      features::write_feature_log(ext_out, fl);
    }
  });

  // label
  std::string lab_features, lab_session, lab_strategy = "tlx", lab_tlx, lab_out;
  double lab_threshold = 50.0;
  auto* lab = command("label", "Attach LOW/HIGH labels to a feature log");
  lab->add_option("--features", lab_features, "Feature log")->required();
  lab->add_option("--session", lab_session, "Session log the features came from")->required();
  lab->add_option("--strategy", lab_strategy, "block | tlx");
  lab->add_option("--tlx", lab_tlx, "TLX report (tlx strategy)");
  lab->add_option("--threshold", lab_threshold, "Mental-demand threshold");
  lab->add_option("--out", lab_out, "Labelled feature log (default stdout)");
  actions.emplace_back(lab, [&] {
    auto strategy = stroop::parse_strategy(lab_strategy);
    if (!strategy) throw CLI::ValidationError("--strategy", "must be block or tlx");
    auto fl = features::read_feature_log(lab_features);
    const auto log = protocol::read_session_log(lab_session);
    std::optional<stroop::TlxReport> tlx;
    if (!lab_tlx.empty()) tlx = stroop::read_tlx(lab_tlx);
    fl.vectors = stroop::label_windows(std::move(fl.vectors), log, *strategy, tlx ? &*tlx : nullptr, lab_threshold);
    if (lab_out.empty()) {
      features::write_feature_log(out, fl);
    } else {
      features::write_feature_log(lab_out, fl);
    }
  });

  // train
  ConfigArgs tr_cfg;
  std::vector<std::string> tr_features;
  std::string tr_out;
  auto* tr = command("train", "Train a classifier on labelled feature logs");
  tr_cfg.attach(tr, false);
  tr->add_option("--model", tr_cfg.model, "rf | mlp");
  tr->add_option("--select", tr_cfg.features, "Comma-separated feature subset");
  tr->add_option("--folds", tr_cfg.folds, "Also report grouped cross-validation with this many folds");
  tr->add_option("--features", tr_features, "Labelled feature logs")->required();
  tr->add_option("--out", tr_out, "Model file")->required();
  actions.emplace_back(tr, [&] {
    auto cfg = tr_cfg.resolve();
    const auto logs = read_logs(tr_features);
    const auto data = training_set(logs, cfg);
    if (tr_cfg.folds) {
      const auto cv = learn::cross_validate(cfg.model_spec(), data, cfg.folds, Rng::derive(cfg.seed, 13));
      print_metrics(out, "cv window", cv.window);
      print_metrics(out, "cv participant", cv.participant);
    }
    auto model = learn::train(cfg.model_spec(), data);
    learn::meta_of(model).config_hash = cfg.hash();
    learn::save_model(tr_out, model);
    out << "trained " << learn::to_string(cfg.model) << " on " << data.rows() << " windows, " << data.cols()
        << " features\n";
  });

  // evaluate
  ConfigArgs ev_cfg;
  std::vector<std::string> ev_features;
  std::string ev_model, ev_out;
  auto* ev = command("evaluate", "Score a model, or cross-validate when no model is given");
  ev_cfg.attach(ev, false);
  ev->add_option("--model-kind", ev_cfg.model, "rf | mlp (cross-validation)");
  ev->add_option("--folds", ev_cfg.folds, "Cross-validation folds");
  ev->add_option("--select", ev_cfg.features, "Comma-separated feature subset");
  ev->add_option("--features", ev_features, "Labelled feature logs")->required();
  ev->add_option("--model", ev_model, "Model file");
  ev->add_option("--out", ev_out, "Report file (default stdout)");
  actions.emplace_back(ev, [&] {
    auto cfg = ev_cfg.resolve();
    const auto logs = read_logs(ev_features);
    learn::EvalReport report;
    if (!ev_model.empty()) {
      const auto model = learn::load_model(ev_model);
      const auto& meta = learn::meta_of(model);
      const auto vectors = all_vectors(logs);
      report = learn::evaluate(model, learn::Dataset::from_vectors(vectors, meta.feature_order, meta.profile));
    } else {
      const auto data = training_set(logs, cfg);
      report = learn::cross_validate(cfg.model_spec(), data, cfg.folds, Rng::derive(cfg.seed, 13));
    }
    if (ev_out.empty()) {
      print_metrics(out, "window", report.window);
      print_metrics(out, "participant", report.participant);
    } else {
      write_text(ev_out, learn::eval_report_json(report) + "\n");
    }
  });

  // finetune
  ConfigArgs ft_cfg;
  std::string ft_base, ft_out;
  std::vector<std::string> ft_features, ft_users;
  auto* ft = command("finetune", "Adapt a model to new users' labelled windows");
  ft_cfg.attach(ft, false);
  ft->add_option("--base", ft_base, "Base model file")->required();
  ft->add_option("--features", ft_features, "Labelled feature logs of the new users");
  ft->add_option("--user", ft_users, "Session logs of the new users, labelled by Stroop block");
  ft->add_option("--out", ft_out, "Tuned model file")->required();
  actions.emplace_back(ft, [&] {
    if (ft_features.empty() && ft_users.empty()) throw CLI::ValidationError("finetune", "give --features or --user");
    const auto cfg = ft_cfg.resolve();
    const auto base = learn::load_model(ft_base);
    const auto& meta = learn::meta_of(base);
    auto vectors = all_vectors(read_logs(ft_features));
    for (const auto& path : ft_users) {
      const auto log = protocol::read_session_log(path);
      auto v = stroop::label_windows(features::batch_extract(log, cfg.extraction, meta.profile), log,
                                     stroop::LabelStrategy::kBlockCondition);
      vectors.insert(vectors.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    }
    const auto data = learn::Dataset::from_vectors(vectors, meta.feature_order, meta.profile);
    const auto tuned = learn::fine_tune(base, data);
    learn::save_model(ft_out, tuned);
    out << "fine-tuned on " << data.rows() << " windows, version " << learn::meta_of(tuned).version << "\n";
  });

  // serve
  ConfigArgs sv_cfg;
  std::string sv_model, sv_out;
  bool sv_stdin = false;
  int sv_port = 0, sv_sessions = 0;
  auto* sv = command("serve", "Run the live session loop over stdin/stdout or TCP");
  sv_cfg.attach(sv, false);
  sv->add_option("--model", sv_model, "Model file (adaptive modes)");
  sv->add_flag("--stdin", sv_stdin, "Serve one session on stdin/stdout");
  sv->add_option("--port", sv_port, "TCP port on 127.0.0.1")->check(CLI::Range(1, 65535));
  sv->add_option("--out", sv_out, "Directory for session and command logs");
  sv->add_option("--sessions", sv_sessions, "Stop after this many TCP sessions (0 = no limit)");
  actions.emplace_back(sv, [&] {
    if (sv_stdin == (sv_port != 0)) throw CLI::ValidationError("serve", "give exactly one of --stdin and --port");
    const auto cfg = sv_cfg.resolve();
    std::optional<learn::TrainedModel> model;
    if (!sv_model.empty()) model = learn::load_model(sv_model);
    const auto sc = cfg.server_config();
    if (sv_stdin) {
      const auto result = server::serve_stream(std::cin, out, model ? &*model : nullptr, sc);
      if (!sv_out.empty()) {
        harness::write_session_record(sv_out, {result.session, result.commands, std::nullopt});
      }
      if (result.skipped_lines > 0) err << "skipped " << result.skipped_lines << " malformed lines\n";
    } else {
      server::serve_tcp(static_cast<std::uint16_t>(sv_port), sv_out.empty() ? "." : sv_out,
                        model ? &*model : nullptr, sc, sv_sessions);
    }
  });

  // replay
  ConfigArgs rp_cfg;
  std::string rp_session, rp_model, rp_out;
  auto* rp = command("replay", "Recompute the command log of a recorded session");
  rp_cfg.attach(rp, false);
  rp->add_option("--session", rp_session, "Session log")->required();
  rp->add_option("--model", rp_model, "Model file (adaptive modes)");
  rp->add_option("--out", rp_out, "Command log (default stdout)");
  actions.emplace_back(rp, [&] {
    const auto cfg = rp_cfg.resolve();
    std::optional<learn::TrainedModel> model;
    if (!rp_model.empty()) model = learn::load_model(rp_model);
    const auto log = protocol::read_session_log(rp_session);
    const auto commands = server::replay_commands(log, model ? &*model : nullptr, cfg.server_config());
    if (rp_out.empty()) {
      server::write_command_log(out, commands);
    } else {
      server::write_command_log(rp_out, commands);
    }
  });

  // report
  std::vector<std::string> rep_dirs;
  std::string rep_out;
  auto* rep = command("report", "Compare conditions over logged sessions");
  rep->add_option("--sessions", rep_dirs, "Directories of session and command logs")->required();
  rep->add_option("--out", rep_out, "Directory for report.json and report.txt");
  actions.emplace_back(rep, [&] {
    std::vector<harness::SessionRecord> records;
    for (const auto& d : rep_dirs) {
      auto r = harness::load_session_records(d);
      records.insert(records.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
    const auto report = harness::build_report(records, {});
    if (!rep_out.empty()) {
      write_text((fs::path(rep_out) / "report.json").string(), harness::report_json(report) + "\n");
      write_text((fs::path(rep_out) / "report.txt").string(), harness::report_table(report));
    }
    out << harness::report_table(report);
  });

  // phase1
  ConfigArgs p1_cfg;
  std::string p1_out;
  auto* p1 = command("phase1", "Cohort -> features -> labels -> grouped CV -> model");
  p1_cfg.attach(p1, true);
  p1->add_option("--out", p1_out, "Output directory")->required();
  actions.emplace_back(p1, [&] {
    const auto cfg = p1_cfg.resolve();
    const auto r = harness::run_phase1(cfg, p1_out);
    out << "config " << cfg.hash() << "\n";
    print_metrics(out, "window", r.cv.window);
    print_metrics(out, "participant", r.cv.participant);
  });

  // phase2
  ConfigArgs p2_cfg;
  std::string p2_out, p2_base;
  auto* p2 = command("phase2", "Fine-tune on new users, then serve adaptive and REGULAR sessions");
  p2_cfg.attach(p2, true);
  p2->add_option("--base", p2_base, "Base model (default: train one with phase1 in memory)");
  p2->add_option("--out", p2_out, "Output directory")->required();
  actions.emplace_back(p2, [&] {
    const auto cfg = p2_cfg.resolve();
    const auto base = p2_base.empty() ? harness::run_phase1(cfg, "").model : learn::load_model(p2_base);
    const auto r = harness::run_phase2(cfg, base, p2_out);
    std::vector<harness::SessionRecord> records = r.adaptive;
    records.insert(records.end(), r.regular.begin(), r.regular.end());
    out << harness::report_table(harness::build_report(records, {}));
  });

  // phase3
  ConfigArgs p3_cfg;
  std::string p3_out;
  auto* p3 = command("phase3", "Phases 1 and 2 under both profiles, then the comparison report");
  p3_cfg.attach(p3, true);
  p3->add_option("--out", p3_out, "Output directory")->required();
  actions.emplace_back(p3, [&] {
    const auto cfg = p3_cfg.resolve();
    out << harness::report_table(harness::run_phase3(cfg, p3_out));
  });

  try {
    app.parse(argc, argv);
    for (auto& [sub, action] : actions) {
      if (sub->parsed()) action();
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvariantBreach& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace cogload::cli
