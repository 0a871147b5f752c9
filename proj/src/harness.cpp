#include "cogload/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cogload/error.hpp"
#include "cogload/hash.hpp"
#include "cogload/random.hpp"

namespace cogload::harness {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad_config(const std::string& detail) { throw Error("harness", "BAD_CONFIG", detail); }

std::string lower_profile(features::Profile p) { return p == features::Profile::kRaw ? "raw" : "privacy"; }
std::string strategy_name(stroop::LabelStrategy s) {
  return s == stroop::LabelStrategy::kBlockCondition ? "block" : "tlx";
}
std::string correction_name(oculo::PupilCorrection c) {
  return c == oculo::PupilCorrection::kAbsolute ? "absolute" : "relative";
}

// Reads one config object; keys that were never asked for are rejected.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad_config(label() + " must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) bad_config(where(key) + " must be a boolean");
    } else if constexpr (std::is_arithmetic_v<T>) {
      if (!it->is_number()) bad_config(where(key) + " must be a number");
      if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) bad_config(where(key) + " must be an integer");
      }
    }
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      bad_config(where(key) + " has the wrong type");
    }
  }

  std::optional<std::string> text(const char* key) {
    std::optional<std::string> s;
    if (j_.contains(key)) {
      s.emplace();
      read(key, *s);
    } else {
      seen_.insert(key);
    }
    return s;
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return Section(*it, where(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw Error("harness", "UNKNOWN_CONFIG_KEY", where(k));
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json extraction_doc(const features::ExtractionConfig& e) {
  Json j;
  j["window"] = {{"eye_window_s", e.window.eye_window_s},
                 {"hrv_window_s", e.window.hrv_window_s},
                 {"hop_s", e.window.hop_s}};
  j["fixation"] = {{"dispersion_deg", e.fixation.dispersion_deg},
                   {"min_fixation_ms", e.fixation.min_fixation_ms},
                   {"gap_interp_max_ms", e.fixation.gap_interp_max_ms}};
  j["grid"] = {{"x_min_deg", e.grid.x_min_deg}, {"x_max_deg", e.grid.x_max_deg}, {"y_min_deg", e.grid.y_min_deg},
               {"y_max_deg", e.grid.y_max_deg}, {"nx", e.grid.nx},           {"ny", e.grid.ny}};
  j["max_rel_jump"] = e.max_rel_jump;
  j["pupil_correction"] = correction_name(e.pupil_correction);
  j["privacy_keeps_pupil"] = e.profile_options.privacy_keeps_pupil;
  j["include_behavioral"] = e.profile_options.include_behavioral;
  return j;
}

void read_extraction(Section s, features::ExtractionConfig& e) {
  if (auto w = s.child("window")) {
    w->read("eye_window_s", e.window.eye_window_s);
    w->read("hrv_window_s", e.window.hrv_window_s);
    w->read("hop_s", e.window.hop_s);
    w->finish();
  }
  if (auto f = s.child("fixation")) {
    f->read("dispersion_deg", e.fixation.dispersion_deg);
    f->read("min_fixation_ms", e.fixation.min_fixation_ms);
    f->read("gap_interp_max_ms", e.fixation.gap_interp_max_ms);
    f->finish();
  }
  if (auto g = s.child("grid")) {
    g->read("x_min_deg", e.grid.x_min_deg);
    g->read("x_max_deg", e.grid.x_max_deg);
    g->read("y_min_deg", e.grid.y_min_deg);
    g->read("y_max_deg", e.grid.y_max_deg);
    g->read("nx", e.grid.nx);
    g->read("ny", e.grid.ny);
    g->finish();
  }
  s.read("max_rel_jump", e.max_rel_jump);
  if (auto c = s.text("pupil_correction")) {
    if (*c == "absolute") {
      e.pupil_correction = oculo::PupilCorrection::kAbsolute;
    } else if (*c == "relative") {
      e.pupil_correction = oculo::PupilCorrection::kRelative;
    } else {
      bad_config("extraction.pupil_correction must be absolute or relative");
    }
  }
  s.read("privacy_keeps_pupil", e.profile_options.privacy_keeps_pupil);
  s.read("include_behavioral", e.profile_options.include_behavioral);
  s.finish();
}

Json population_doc(const simgen::PopulationConfig& p) {
  return Json{{"pupil_mean_mm", p.pupil_mean_mm},
              {"pupil_sd_mm", p.pupil_sd_mm},
              {"pupil_min_mm", p.pupil_min_mm},
              {"pupil_max_mm", p.pupil_max_mm},
              {"pupil_shift_mean_mm", p.pupil_shift_mean_mm},
              {"pupil_shift_sd_mm", p.pupil_shift_sd_mm},
              {"pupil_shift_min_mm", p.pupil_shift_min_mm},
              {"fixdur_low_ms", p.fixdur_low_ms},
              {"fixdur_high_ms", p.fixdur_high_ms},
              {"rr_mean_ms", p.rr_mean_ms},
              {"rr_sd_ms", p.rr_sd_ms},
              {"hrv_load_factor", p.hrv_load_factor},
              {"entropy_load_factor", p.entropy_load_factor},
              {"rt_interference_ms", p.rt_interference_ms}};
}

void read_population(Section s, simgen::PopulationConfig& p) {
  s.read("pupil_mean_mm", p.pupil_mean_mm);
  s.read("pupil_sd_mm", p.pupil_sd_mm);
  s.read("pupil_min_mm", p.pupil_min_mm);
  s.read("pupil_max_mm", p.pupil_max_mm);
  s.read("pupil_shift_mean_mm", p.pupil_shift_mean_mm);
  s.read("pupil_shift_sd_mm", p.pupil_shift_sd_mm);
  s.read("pupil_shift_min_mm", p.pupil_shift_min_mm);
  s.read("fixdur_low_ms", p.fixdur_low_ms);
  s.read("fixdur_high_ms", p.fixdur_high_ms);
  s.read("rr_mean_ms", p.rr_mean_ms);
  s.read("rr_sd_ms", p.rr_sd_ms);
  s.read("hrv_load_factor", p.hrv_load_factor);
  s.read("entropy_load_factor", p.entropy_load_factor);
  s.read("rt_interference_ms", p.rt_interference_ms);
  s.finish();
}

Json metrics_doc(const learn::ClassificationMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"accuracy", opt(m.accuracy)},
              {"precision", opt(m.precision)},
              {"recall", opt(m.recall)},
              {"f1", opt(m.f1)},
              {"auc_roc", opt(m.auc_roc)}};
}

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("harness", "IO_ERROR", "cannot write " + path.string());
  f << text;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

protocol::SessionMode adaptive_mode(features::Profile p) {
  return p == features::Profile::kRaw ? protocol::SessionMode::kAdaptiveRaw
                                      : protocol::SessionMode::kAdaptivePrivacy;
}

}  // namespace

std::string extraction_json(const features::ExtractionConfig& e) { return extraction_doc(e).dump(); }
std::string extraction_hash(const features::ExtractionConfig& e) { return hex64(fnv1a(extraction_json(e))); }

std::string ExperimentConfig::to_json() const {
  Json j;
  j["seed"] = seed;
  j["profile"] = lower_profile(profile);
  j["model"] = std::string(learn::to_string(model));
  j["features"] = features;
  j["folds"] = folds;
  j["label_strategy"] = strategy_name(label_strategy);
  j["tlx_threshold"] = tlx_threshold;
  j["cohort"] = cohort;
  j["high"] = high;
  j["new_users"] = new_users;
  j["new_high"] = new_high;
  j["trace_purity"] = trace_purity;
  j["served_trials"] = served_trials;
  j["served_cap_s"] = served_cap_s;
  j["serve_chunk_s"] = serve_chunk_s;
  j["extraction"] = extraction_doc(extraction);
  j["controller"] = {{"k_high", controller.k_high},
                     {"k_low", controller.k_low},
                     {"cooldown_s", controller.cooldown_s},
                     {"hint_on_ease", controller.hint_on_ease}};
  j["rf"] = {{"n_trees", rf.n_trees},
             {"max_depth", rf.max_depth},
             {"min_samples_leaf", rf.min_samples_leaf},
             {"mtry", rf.mtry},
             {"bootstrap", rf.bootstrap}};
  j["mlp"] = {{"hidden", mlp.hidden}, {"learning_rate", mlp.learning_rate}, {"epochs", mlp.epochs}};
  j["population"] = population_doc(population);
  return j.dump(2);
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a(to_json())); }

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) bad_config("not valid JSON");
  ExperimentConfig c;
  Section s(j, "");
  s.read("seed", c.seed);
  if (auto p = s.text("profile")) {
    auto v = features::parse_profile(*p);
    if (!v) bad_config("profile must be raw or privacy");
    c.profile = *v;
  }
  if (auto m = s.text("model")) {
    auto v = learn::parse_model_kind(*m);
    if (!v) bad_config("model must be rf or mlp");
    c.model = *v;
  }
  s.read("features", c.features);
  s.read("folds", c.folds);
  if (auto l = s.text("label_strategy")) {
    auto v = stroop::parse_strategy(*l);
    if (!v) bad_config("label_strategy must be block or tlx");
    c.label_strategy = *v;
  }
  s.read("tlx_threshold", c.tlx_threshold);
  s.read("cohort", c.cohort);
  s.read("high", c.high);
  s.read("new_users", c.new_users);
  s.read("new_high", c.new_high);
  s.read("trace_purity", c.trace_purity);
  s.read("served_trials", c.served_trials);
  s.read("served_cap_s", c.served_cap_s);
  s.read("serve_chunk_s", c.serve_chunk_s);
  if (auto e = s.child("extraction")) read_extraction(*e, c.extraction);
  if (auto k = s.child("controller")) {
    k->read("k_high", c.controller.k_high);
    k->read("k_low", c.controller.k_low);
    k->read("cooldown_s", c.controller.cooldown_s);
    k->read("hint_on_ease", c.controller.hint_on_ease);
    k->finish();
  }
  if (auto r = s.child("rf")) {
    r->read("n_trees", c.rf.n_trees);
    r->read("max_depth", c.rf.max_depth);
    r->read("min_samples_leaf", c.rf.min_samples_leaf);
    r->read("mtry", c.rf.mtry);
    r->read("bootstrap", c.rf.bootstrap);
    r->finish();
  }
  if (auto m = s.child("mlp")) {
    m->read("hidden", c.mlp.hidden);
    m->read("learning_rate", c.mlp.learning_rate);
    m->read("epochs", c.mlp.epochs);
    m->finish();
  }
  if (auto p = s.child("population")) read_population(*p, c.population);
  s.finish();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("harness", "IO_ERROR", "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

void ExperimentConfig::validate() const {
  if (folds < 2) bad_config("folds must be >= 2");
  if (cohort < folds) bad_config("cohort must be at least folds");
  if (high < 0 || high > cohort) bad_config("high must be in [0, cohort]");
  if (new_users < 1) bad_config("new_users must be >= 1");
  if (new_high < 0 || new_high > new_users) bad_config("new_high must be in [0, new_users]");
  if (!(tlx_threshold >= 0.0 && tlx_threshold <= 100.0)) bad_config("tlx_threshold must be in [0, 100]");
  if (!(trace_purity >= 0.5 && trace_purity <= 1.0)) bad_config("trace_purity must be in [0.5, 1]");
  if (served_trials < 0) bad_config("served_trials must be >= 0");
  if (!(served_cap_s > 0.0)) bad_config("served_cap_s must be positive");
  if (!(serve_chunk_s > 0.0)) bad_config("serve_chunk_s must be positive");
  if (rf.n_trees < 1 || rf.min_samples_leaf < 1 || rf.max_depth < 0 || rf.mtry < 0) bad_config("bad rf settings");
  if (mlp.epochs < 1 || !(mlp.learning_rate > 0.0)) bad_config("bad mlp settings");
  for (int h : mlp.hidden) {
    if (h < 1) bad_config("mlp.hidden sizes must be >= 1");
  }
  extraction.window.validate();
  extraction.grid.validate();
  controller.validate(extraction.window.hop_s);
  std::set<std::string> seen;
  for (const auto& name : features) {
    const auto* spec = features::find_feature(name);
    if (spec == nullptr) bad_config("unknown feature " + name);
    if (!features::permitted(*spec, profile, extraction.profile_options)) {
      bad_config("feature " + name + " is not permitted under the " + lower_profile(profile) + " profile");
    }
    if (!seen.insert(name).second) bad_config("duplicate feature " + name);
  }
}

std::vector<std::string> ExperimentConfig::feature_order() const {
  if (!features.empty()) return features;
  return features::profile_features(profile, extraction.profile_options);
}

learn::ModelSpec ExperimentConfig::model_spec() const {
  learn::ModelSpec spec;
  spec.kind = model;
  spec.rf = rf;
  spec.rf.seed = Rng::derive(seed, 11);
  spec.mlp = mlp;
  spec.mlp.seed = Rng::derive(seed, 12);
  return spec;
}

server::ServerConfig ExperimentConfig::server_config() const { return {extraction, controller, hash()}; }

std::vector<features::FeatureVector> extract_and_label(const simgen::CohortMember& member,
                                                       const features::ExtractionConfig& extraction,
                                                       features::Profile profile, stroop::LabelStrategy strategy,
                                                       double tlx_threshold) {
  auto vectors = features::batch_extract(member.session, extraction, profile);
  return stroop::label_windows(std::move(vectors), member.session, strategy, &member.tlx, tlx_threshold);
}

simgen::Cohort simulate_cohort(const ExperimentConfig& config) {
  simgen::CohortOptions opts;
  opts.population = config.population;
  opts.trace_purity = config.trace_purity;
  return simgen::generate_cohort(config.cohort, config.high, config.seed, opts);
}

Phase1Result run_phase1(const ExperimentConfig& config, const std::string& out_dir, const std::string& provenance,
                        const simgen::Cohort* cohort) {
  config.validate();
  const std::string hash = provenance.empty() ? config.hash() : provenance;
  const bool write = !out_dir.empty();
  const fs::path out(out_dir);

  std::optional<simgen::Cohort> own;
  if (cohort == nullptr) {
    own = simulate_cohort(config);
    cohort = &*own;
    if (write) simgen::write_cohort((out / "cohort").string(), *cohort);
  }
  if (write) fs::create_directories(out / "features");

  const auto order = config.feature_order();
  features::FeatureLogHeader log_header{config.profile, hash, features::registry_hash(),
                                        features::profile_features(config.profile, config.extraction.profile_options)};
  std::vector<features::FeatureVector> all;
  for (const auto& m : cohort->members) {
    auto vectors = extract_and_label(m, config.extraction, config.profile, config.label_strategy, config.tlx_threshold);
    if (write) {
      features::write_feature_log((out / "features" / (m.pseudonym + ".features.jsonl")).string(),
                                  {log_header, vectors});
    }
    all.insert(all.end(), std::make_move_iterator(vectors.begin()), std::make_move_iterator(vectors.end()));
  }

  Phase1Result r;
  r.dataset = learn::Dataset::from_vectors(all, order, config.profile);
  r.dropped_features = learn::constant_features(r.dataset);
  if (!r.dropped_features.empty()) {
    std::vector<std::string> kept;
    for (const auto& n : order) {
      if (std::find(r.dropped_features.begin(), r.dropped_features.end(), n) == r.dropped_features.end()) {
        kept.push_back(n);
      }
    }
    if (kept.empty()) throw Error("harness", "NO_USABLE_FEATURES", "every selected feature is constant");
    r.dataset = learn::select_features(r.dataset, kept);
  }

  const auto spec = config.model_spec();
  r.cv = learn::cross_validate(spec, r.dataset, config.folds, Rng::derive(config.seed, 13));
  r.model = learn::train(spec, r.dataset);
  learn::meta_of(r.model).config_hash = hash;

  if (write) {
    Json doc;
    doc["config_hash"] = hash;
    doc["profile"] = lower_profile(config.profile);
    doc["model"] = std::string(learn::to_string(config.model));
    doc["folds"] = config.folds;
    doc["features"] = r.dataset.feature_order;
    doc["dropped_features"] = r.dropped_features;
    doc["participants"] = static_cast<int>(cohort->members.size());
    doc["report"] = Json::parse(learn::eval_report_json(r.cv));
    write_text(out / "cv_report.json", doc.dump(2) + "\n");
    learn::save_model((out / "model.json").string(), r.model);
    write_text(out / "config.json", config.to_json() + "\n");
  }
  return r;
}

SessionRecord serve_simulated(const simgen::ParticipantProfile& profile, const simgen::SessionScript& script,
                              const simgen::LoadTrace& trace, std::uint64_t seed, const learn::TrainedModel* model,
                              const server::ServerConfig& config, double chunk_s) {
  simgen::SessionSimulator sim(profile, script, trace, seed);
  server::SessionServer srv(model, config);
  auto apply = [&](const std::vector<protocol::AdaptCommand>& cmds) {
    for (const auto& c : cmds) sim.set_difficulty(c.difficulty);
  };
  apply(srv.on_message(sim.header()));
  const auto chunk = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(chunk_s * 1e6)));
  std::int64_t t = 0;
  while (!sim.done()) {
    t += chunk;
    for (const auto& msg : sim.advance(t)) apply(srv.on_message(msg));
  }
  if (!srv.finished()) apply(srv.finish());

  SessionRecord rec;
  rec.session = srv.session_log();
  rec.commands = srv.command_log();
  rec.tlx = simgen::post_session_tlx(sim.training_high_fraction(), Rng::derive(seed, 3));
  return rec;
}

Phase2Result run_phase2(const ExperimentConfig& config, const learn::TrainedModel& base, const std::string& out_dir,
                        const std::string& provenance, bool serve_regular) {
  config.validate();
  const std::string hash = provenance.empty() ? config.hash() : provenance;
  const auto& meta = learn::meta_of(base);

  simgen::CohortOptions opts;
  opts.population = config.population;
  opts.trace_purity = config.trace_purity;
  opts.pseudonym_prefix = "N";
  const auto users = simgen::generate_cohort(config.new_users, config.new_high, Rng::derive(config.seed, 2), opts);

  std::vector<features::FeatureVector> fresh;
  for (const auto& m : users.members) {
    auto v = extract_and_label(m, config.extraction, meta.profile, stroop::LabelStrategy::kBlockCondition,
                               config.tlx_threshold);
    fresh.insert(fresh.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  }
  const auto tune_data = learn::Dataset::from_vectors(fresh, meta.feature_order, meta.profile);

  Phase2Result r;
  r.tuned = learn::fine_tune(base, tune_data);
  learn::meta_of(r.tuned).config_hash = hash;

  auto sc = config.server_config();
  sc.config_hash = hash;
  for (const auto& m : users.members) {
    simgen::SessionScript script = opts.script;
    script.participant = m.pseudonym;
    script.stroop_blocks.clear();
    script.training_trials = config.served_trials;
    script.training_s = config.served_cap_s;
    const auto seed = Rng::derive(m.seed, 20);

    script.mode = adaptive_mode(meta.profile);
    script.session_id = m.pseudonym + "-" + std::string(protocol::to_string(script.mode));
    r.adaptive.push_back(
        serve_simulated(m.profile, script, simgen::LoadTrace::adaptive(), seed, &r.tuned, sc, config.serve_chunk_s));

    if (serve_regular) {
      script.mode = protocol::SessionMode::kRegular;
      script.session_id = m.pseudonym + "-" + std::string(protocol::to_string(script.mode));
      r.regular.push_back(
          serve_simulated(m.profile, script, simgen::LoadTrace::adaptive(), seed, nullptr, sc, config.serve_chunk_s));
    }
  }

  if (!out_dir.empty()) {
    const fs::path out(out_dir);
    fs::create_directories(out / "sessions");
    learn::save_model((out / "model_tuned.json").string(), r.tuned);
    for (const auto& rec : r.adaptive) write_session_record((out / "sessions").string(), rec);
    for (const auto& rec : r.regular) write_session_record((out / "sessions").string(), rec);
  }
  return r;
}

ConditionSummary summarize_condition(protocol::SessionMode mode, std::span<const SessionRecord> sessions) {
  ConditionSummary s;
  s.condition = mode;
  std::vector<double> completion, final_difficulty, tlx;
  long responses = 0, errors = 0;
  for (const auto& rec : sessions) {
    s.sessions.push_back(rec.session.header.session_id);
    std::optional<std::int64_t> train_start, complete;
    for (const auto& msg : rec.session.records) {
      const auto* e = std::get_if<protocol::EventRecord>(&msg);
      if (e == nullptr) continue;
      if (e->kind == protocol::EventKind::kBlockStart && !train_start &&
          features::event_phase(*e) == protocol::Phase::kTraining) {
        train_start = e->t_us;
      }
      if (e->kind == protocol::EventKind::kTaskComplete && !complete) complete = e->t_us;
      if (e->kind == protocol::EventKind::kHintRequest) ++s.hint_requests;
      if (train_start && e->t_us >= *train_start) {
        if (e->kind == protocol::EventKind::kTrialResponse) ++responses;
        if (e->kind == protocol::EventKind::kErrorCommitted) ++errors;
      }
    }
    if (train_start && complete) completion.push_back(static_cast<double>(*complete - *train_start) / 1e6);

    const auto cmds = rec.commands.commands();
    for (const auto& c : cmds) {
      if (c.hint) ++s.hints;
      if (c.reason == protocol::AdaptReason::kHighLoadStreak || c.reason == protocol::AdaptReason::kLowLoadStreak) {
        ++s.difficulty_changes;
      }
    }
    if (!cmds.empty()) final_difficulty.push_back(cmds.back().difficulty);
    if (rec.tlx) tlx.push_back(rec.tlx->raw_tlx);
  }
  s.mean_completion_s = mean_of(completion);
  if (responses > 0) s.error_rate = static_cast<double>(errors) / static_cast<double>(responses);
  s.mean_final_difficulty = mean_of(final_difficulty);
  s.mean_raw_tlx = mean_of(tlx);
  return s;
}

ComparisonReport build_report(std::span<const SessionRecord> sessions,
                              const std::map<protocol::SessionMode, learn::ClassificationMetrics>& classification) {
  ComparisonReport report;
  std::set<std::string> hashes;
  for (const auto& rec : sessions) hashes.insert(rec.commands.header.config_hash);
  if (hashes.size() > 1) {
    std::string list;
    for (const auto& h : hashes) list += (list.empty() ? "" : ", ") + h;
    throw Error("harness", "MIXED_CONFIG_HASHES", list);
  }
  if (!hashes.empty()) report.config_hash = *hashes.begin();

  for (auto mode : {protocol::SessionMode::kAdaptiveRaw, protocol::SessionMode::kAdaptivePrivacy,
                    protocol::SessionMode::kRegular}) {
    std::vector<SessionRecord> subset;
    for (const auto& rec : sessions) {
      if (rec.commands.header.mode == mode) subset.push_back(rec);
    }
    auto row = summarize_condition(mode, subset);
    if (auto it = classification.find(mode); it != classification.end()) row.classification = it->second;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string report_json(const ComparisonReport& report) {
  Json j;
  j["config_hash"] = report.config_hash;
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json row;
    row["condition"] = std::string(protocol::to_string(r.condition));
    row["sessions"] = r.sessions;
    row["classification"] = r.classification ? metrics_doc(*r.classification) : Json(nullptr);
    row["mean_completion_s"] = opt_json(r.mean_completion_s);
    row["error_rate"] = opt_json(r.error_rate);
    row["hints"] = r.hints;
    row["hint_requests"] = r.hint_requests;
    row["difficulty_changes"] = r.difficulty_changes;
    row["mean_final_difficulty"] = opt_json(r.mean_final_difficulty);
    row["mean_raw_tlx"] = opt_json(r.mean_raw_tlx);
    rows.push_back(std::move(row));
  }
  j["conditions"] = rows;

  auto diff = [](const std::optional<double>& a, const std::optional<double>& b) {
    return a && b ? Json(*a - *b) : Json(nullptr);
  };
  auto accuracy = [](const ConditionSummary& r) {
    return r.classification ? r.classification->accuracy : std::nullopt;
  };
  Json deltas = Json::array();
  const std::pair<std::size_t, std::size_t> pairs[] = {{0, 2}, {1, 2}, {1, 0}};
  for (auto [a, b] : pairs) {
    if (a >= report.rows.size() || b >= report.rows.size()) continue;
    const auto& ra = report.rows[a];
    const auto& rb = report.rows[b];
    Json d;
    d["a"] = std::string(protocol::to_string(ra.condition));
    d["b"] = std::string(protocol::to_string(rb.condition));
    d["accuracy"] = diff(accuracy(ra), accuracy(rb));
    d["mean_completion_s"] = diff(ra.mean_completion_s, rb.mean_completion_s);
    d["error_rate"] = diff(ra.error_rate, rb.error_rate);
    d["hints"] = ra.hints - rb.hints;
    d["difficulty_changes"] = ra.difficulty_changes - rb.difficulty_changes;
    d["mean_raw_tlx"] = diff(ra.mean_raw_tlx, rb.mean_raw_tlx);
    deltas.push_back(std::move(d));
  }
  j["deltas"] = deltas;
  return j.dump(2);
}

std::string report_table(const ComparisonReport& report) {
  auto num = [](const std::optional<double>& v, const char* fmt) {
    if (!v) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, fmt, *v);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"condition", "sessions", "accuracy", "f1", "auc", "completion_s", "error_rate", "hints",
                   "hint_requests", "changes", "final_diff", "raw_tlx"});
  for (const auto& r : report.rows) {
    const auto* m = r.classification ? &*r.classification : nullptr;
    cells.push_back({std::string(protocol::to_string(r.condition)), std::to_string(r.sessions.size()),
                     num(m ? m->accuracy : std::nullopt, "%.3f"), num(m ? m->f1 : std::nullopt, "%.3f"),
                     num(m ? m->auc_roc : std::nullopt, "%.3f"), num(r.mean_completion_s, "%.1f"),
                     num(r.error_rate, "%.3f"), std::to_string(r.hints), std::to_string(r.hint_requests),
                     std::to_string(r.difficulty_changes), num(r.mean_final_difficulty, "%.2f"),
                     num(r.mean_raw_tlx, "%.1f")});
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out = "config " + report.config_hash + "\n";
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i == 0) {
        line += row[i] + std::string(width[i] - row[i].size(), ' ');
      } else {
        line += "  " + std::string(width[i] - row[i].size(), ' ') + row[i];
      }
    }
    out += line + "\n";
  }
  return out;
}

std::vector<SessionRecord> load_session_records(const std::string& dir) {
  static const std::string kSuffix = ".session.jsonl";
  std::vector<std::string> ids;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const auto name = entry.path().filename().string();
    if (name.size() > kSuffix.size() && name.compare(name.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0) {
      ids.push_back(name.substr(0, name.size() - kSuffix.size()));
    }
  }
  if (ec) throw Error("harness", "IO_ERROR", "cannot list " + dir);
  std::sort(ids.begin(), ids.end());

  std::vector<SessionRecord> out;
  const fs::path base(dir);
  for (const auto& id : ids) {
    SessionRecord rec;
    rec.session = protocol::read_session_log((base / (id + kSuffix)).string());
    const auto cmd_path = base / (id + ".commands.jsonl");
    if (!fs::exists(cmd_path)) throw Error("harness", "MISSING_COMMAND_LOG", cmd_path.string());
    rec.commands = server::read_command_log(cmd_path.string());
    const auto tlx_path = base / (id + ".tlx.json");
    if (fs::exists(tlx_path)) rec.tlx = stroop::read_tlx(tlx_path.string());
    out.push_back(std::move(rec));
  }
  return out;
}

void write_session_record(const std::string& dir, const SessionRecord& rec) {
  const fs::path base(dir);
  fs::create_directories(base);
  const auto& id = rec.session.header.session_id;
  protocol::write_session_log((base / (id + ".session.jsonl")).string(), rec.session);
  server::write_command_log((base / (id + ".commands.jsonl")).string(), rec.commands);
  if (rec.tlx) stroop::write_tlx((base / (id + ".tlx.json")).string(), *rec.tlx);
}

ComparisonReport run_phase3(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  const std::string hash = config.hash();
  const bool write = !out_dir.empty();
  const fs::path out(out_dir);

  const auto cohort = simulate_cohort(config);
  if (write) simgen::write_cohort((out / "cohort").string(), cohort);

  std::vector<SessionRecord> records;
  std::map<protocol::SessionMode, learn::ClassificationMetrics> classification;
  for (auto profile : {features::Profile::kRaw, features::Profile::kPrivacy}) {
    ExperimentConfig c = config;
    c.profile = profile;
    c.features.clear();
    const auto sub = write ? out / lower_profile(profile) : fs::path();
    auto p1 = run_phase1(c, write ? (sub / "phase1").string() : "", hash, &cohort);
    auto p2 = run_phase2(c, p1.model, write ? (sub / "phase2").string() : "", hash,
                         profile == features::Profile::kRaw);
    classification[adaptive_mode(profile)] = p1.cv.window;
    for (auto& r : p2.adaptive) records.push_back(std::move(r));
    for (auto& r : p2.regular) records.push_back(std::move(r));
  }

  auto report = build_report(records, classification);
  if (write) {
    write_text(out / "report.json", report_json(report) + "\n");
    write_text(out / "report.txt", report_table(report));
    write_text(out / "config.json", config.to_json() + "\n");
  }
  return report;
}

}  // namespace cogload::harness
