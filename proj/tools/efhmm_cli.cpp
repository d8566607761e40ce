// Command-line front end for the efhmm library.

#include <csignal>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "efhmm/efhmm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using efhmm::ErrorCode;

std::string num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

struct DetectorFlags {
  double steady_delta_w = 0;
  double event_threshold_w = 0;
  double window_seconds = 0;
  double max_transient_seconds = 0;
  CLI::Option* steady_delta = nullptr;
  CLI::Option* threshold = nullptr;
  CLI::Option* window = nullptr;
  CLI::Option* max_transient = nullptr;

  void add(CLI::App* app) {
    const efhmm::DetectorConfig d;
    steady_delta = app->add_option("--steady-delta", steady_delta_w,
                                   "Max-min of a steady window in W (default " + num(d.steady_delta_w) +
                                       ", tuning default)");
    threshold = app->add_option("--event-threshold", event_threshold_w,
                                "Deviation that opens a transient in W (default " +
                                    num(d.event_threshold_w) + ", common edge-detection threshold)");
    window = app->add_option("--window-seconds", window_seconds,
                             "Steady window length n_w in s (default " + num(d.window_seconds) +
                                 ", reference-dataset setting)");
    max_transient = app->add_option("--max-transient-seconds", max_transient_seconds,
                                    "Force-close cap for a transient in s (default " +
                                        num(d.max_transient_seconds) + ", tuning default)");
  }

  void apply(efhmm::DetectorConfig& c) const {
    if (steady_delta->count()) c.steady_delta_w = steady_delta_w;
    if (threshold->count()) c.event_threshold_w = event_threshold_w;
    if (window->count()) c.window_seconds = window_seconds;
    if (max_transient->count()) c.max_transient_seconds = max_transient_seconds;
    c.validate();
  }
};

struct ClusterFlags {
  double h_min_w = 0;
  double beta = 0;
  CLI::Option* h_min = nullptr;
  CLI::Option* beta_opt = nullptr;

  void add(CLI::App* app) {
    const efhmm::ClusterConfig c;
    h_min = app->add_option("--h-min", h_min_w,
                            "Mean-shift bandwidth floor in W (default " + num(c.h_min_w) +
                                ", tuning default)");
    beta_opt = app->add_option("--beta", beta,
                               "Mean-shift bandwidth slope (default " + num(c.beta) +
                                   ", tuning default)");
  }

  void apply(efhmm::ClusterConfig& c) const {
    if (h_min->count()) c.h_min_w = h_min_w;
    if (beta_opt->count()) c.beta = beta;
    c.validate();
  }
};

/// Config file (optional) overlaid by flags.
struct Settings {
  std::string config_path;
  DetectorFlags detector_flags;
  ClusterFlags cluster_flags;

  void add(CLI::App* app, bool with_cluster) {
    app->add_option("--config", config_path, "JSON file with 'detector' and 'cluster' sections")
        ->check(CLI::ExistingFile);
    detector_flags.add(app);
    if (with_cluster) cluster_flags.add(app);
  }

  std::pair<efhmm::DetectorConfig, efhmm::ClusterConfig> resolve(const efhmm::DetectorConfig& base_d = {},
                                                                  const efhmm::ClusterConfig& base_c = {}) const {
    efhmm::DetectorConfig d = base_d;
    efhmm::ClusterConfig c = base_c;
    if (!config_path.empty()) {
      const json j = efhmm::read_json_file(config_path);
      if (j.contains("detector")) efhmm::merge_detector_config(j["detector"], d);
      if (j.contains("cluster")) efhmm::merge_cluster_config(j["cluster"], c);
    }
    detector_flags.apply(d);
    if (cluster_flags.h_min) cluster_flags.apply(c);
    return {d, c};
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) efhmm::fail(ErrorCode::io, "cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_json(const fs::path& path, const json& j) { efhmm::write_text_file(path, j.dump(2) + "\n"); }

json effective_config(const efhmm::DetectorConfig& d, const efhmm::ClusterConfig& c, json extra = json::object()) {
  extra["detector"] = efhmm::to_json(d);
  extra["cluster"] = efhmm::to_json(c);
  return extra;
}

std::string sanitize_id(const std::string& id) {
  for (char ch : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
    if (!ok || id == "." || id == "..") {
      efhmm::fail(ErrorCode::invalid_argument, "appliance id '" + id + "' is not usable as a file name");
    }
  }
  return id;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string archetypes;
  std::string script;
  double rate = 50.0;
  double duration = 3600.0;
  double min_gap = 10.0;
  std::uint64_t seed = 1;
  std::string out;
};

void run_simulate(const SimulateArgs& a) {
  const auto archetypes = efhmm::load_archetypes(a.archetypes);
  const efhmm::Script script = a.script.empty() ? efhmm::random_script(archetypes, a.duration, a.min_gap, a.seed)
                                                : efhmm::script_from_json(efhmm::read_json_file(a.script));
  for (const auto& s : script.appliances) {
    bool known = false;
    for (const auto& arch : archetypes) known = known || arch.id == s.id;
    efhmm::require(known, ErrorCode::validation, "script names unknown appliance '" + s.id + "'");
  }
  for (const auto& arch : archetypes) sanitize_id(arch.id);

  // Appliances are generated in parallel; each has its own derived seed.
  std::vector<efhmm::PowerSeries> traces(archetypes.size());
  std::vector<std::exception_ptr> errors(archetypes.size());
  {
    std::vector<std::thread> workers;
    for (std::size_t k = 0; k < archetypes.size(); ++k) {
      workers.emplace_back([&, k] {
        try {
          static const std::vector<efhmm::ScriptStep> none;
          const auto* steps = script.find(archetypes[k].id);
          traces[k] = efhmm::generate_trace(archetypes[k], steps ? steps->steps : none, a.rate, script.duration_s,
                                            efhmm::appliance_seed(a.seed, k));
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  const efhmm::PowerSeries aggregate = efhmm::mix_household(traces);

  const fs::path out(a.out);
  ensure_dir(out);
  json truth = {{"sample_rate_hz", a.rate},
                {"duration_s", script.duration_s},
                {"seed", a.seed},
                {"samples", aggregate.size()},
                {"aggregate", "aggregate.csv"},
                {"events", efhmm::count_events(script)}};
  json apps = json::array();
  for (std::size_t k = 0; k < archetypes.size(); ++k) {
    const std::string file = archetypes[k].id + ".csv";
    efhmm::save_csv(traces[k], out / file);
    const auto* steps = script.find(archetypes[k].id);
    json s = steps ? efhmm::to_json(efhmm::Script{script.duration_s, {*steps}})["appliances"][0]["steps"] : json::array();
    apps.push_back({{"id", archetypes[k].id}, {"csv", file}, {"steps", std::move(s)}});
  }
  truth["appliances"] = std::move(apps);
  efhmm::save_csv(aggregate, out / "aggregate.csv");
  write_json(out / "ground_truth.json", truth);
  write_json(out / "script.json", efhmm::to_json(script));
  write_json(out / "config.json", {{"archetypes", efhmm::archetypes_to_json(archetypes)},
                                   {"rate", a.rate},
                                   {"seed", a.seed},
                                   {"min_gap_s", a.min_gap}});
  std::cout << "simulated " << archetypes.size() << " appliances, " << efhmm::count_events(script) << " events, "
            << aggregate.size() << " samples -> " << out.string() << "\n";
}

// ---- detect -------------------------------------------------------------------

void run_detect(const std::string& input, const std::string& out_dir, const Settings& settings) {
  const auto [detector, cluster] = settings.resolve();
  const efhmm::PowerSeries series = efhmm::load_csv(input);
  const efhmm::Observations obs = efhmm::observe(series, detector);
  const fs::path out(out_dir);
  ensure_dir(out);
  json events = json::array();
  for (const auto& e : obs.events) events.push_back(efhmm::to_json(e));
  write_json(out / "events.json", events);
  efhmm::CsvTable segs;
  segs.header = {"start_idx", "end_idx", "mean_w", "std_w"};
  segs.columns.resize(4);
  for (const auto& s : obs.segments) {
    segs.columns[0].push_back(static_cast<double>(s.start_idx));
    segs.columns[1].push_back(static_cast<double>(s.end_idx));
    segs.columns[2].push_back(s.mean);
    segs.columns[3].push_back(s.std);
  }
  efhmm::write_csv_table(segs, out / "segments.csv");
  write_json(out / "config.json", effective_config(detector, cluster, {{"input", input}}));
  std::cout << obs.events.size() << " events, " << obs.segments.size() << " steady segments\n";
}

// ---- train ----------------------------------------------------------------------

json report_to_json(const efhmm::TrainingReport& r) {
  json edges = json::array();
  for (const auto& e : r.edges) {
    edges.push_back({{"from", e.from_state},
                     {"to", e.to_state},
                     {"count", e.count},
                     {"raw_prob", e.raw_prob},
                     {"low_support", e.low_support}});
  }
  return {{"events", r.num_events},
          {"segments", r.num_segments},
          {"centroids", r.centroids},
          {"flagged_segments", r.flagged_segments},
          {"self_transitions", r.self_transitions},
          {"edges", std::move(edges)}};
}

struct TrainArgs {
  std::string input;
  std::string id;
  std::string name;
  std::string house_id = "house";
  double confidence = efhmm::kConfidenceMultiplier;
  std::string out;
  std::string report;
};

void run_train(const TrainArgs& a, const Settings& settings) {
  const auto [detector, cluster] = settings.resolve();
  const efhmm::PowerSeries series = efhmm::load_csv(a.input);
  const efhmm::TrainingResult r = efhmm::train_appliance(series, detector, cluster, a.id, a.name);
  efhmm::HouseholdModel defaults;
  defaults.house_id = a.house_id;
  defaults.confidence_multiplier = a.confidence;
  defaults.detector = detector;
  defaults.cluster = cluster;
  efhmm::save_model(efhmm::assemble_household({r.model}, defaults), a.out);
  if (!a.report.empty()) write_json(a.report, report_to_json(r.report));
  std::cout << "trained '" << a.id << "': " << r.model.num_states() << " states, " << r.model.edges.size()
            << " edges, SL " << efhmm::sparsity_level(r.model) << "\n";
}

struct TrainHouseholdArgs {
  std::vector<std::string> models;
  std::vector<std::string> inputs;  // id=path
  std::string house_id = "house";
  double confidence = efhmm::kConfidenceMultiplier;
  std::string out;
};

void run_train_household(const TrainHouseholdArgs& a, const Settings& settings) {
  efhmm::require(!a.models.empty() || !a.inputs.empty(), ErrorCode::invalid_argument,
                 "give at least one --model or --input");
  std::optional<efhmm::HouseholdModel> first;
  std::vector<efhmm::ApplianceModel> appliances;
  for (const auto& path : a.models) {
    efhmm::HouseholdModel m = efhmm::load_model(path);
    if (!first) first = m;
    efhmm::require(m.detector == first->detector, ErrorCode::validation,
                   "model '" + path + "' was trained with different detector settings");
    for (auto& app : m.appliances) appliances.push_back(std::move(app));
  }
  const auto [detector, cluster] =
      first ? settings.resolve(first->detector, first->cluster) : settings.resolve();
  if (first) {
    efhmm::require(detector == first->detector, ErrorCode::validation,
                   "detector flags differ from the settings the merged models were trained with");
  }

  // One worker per appliance trace; results are kept in argument order.
  std::vector<std::pair<std::string, std::string>> jobs;
  for (const auto& spec : a.inputs) {
    const auto eq = spec.find('=');
    efhmm::require(eq != std::string::npos && eq > 0 && eq + 1 < spec.size(), ErrorCode::invalid_argument,
                   "--input expects id=path, got '" + spec + "'");
    jobs.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
  }
  std::vector<efhmm::ApplianceModel> trained(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  {
    std::vector<std::thread> workers;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      workers.emplace_back([&, k] {
        try {
          trained[k] = efhmm::train_appliance(efhmm::load_csv(jobs[k].second), detector, cluster, jobs[k].first,
                                              jobs[k].first)
                           .model;
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& m : trained) appliances.push_back(std::move(m));

  efhmm::HouseholdModel defaults;
  defaults.house_id = a.house_id;
  defaults.confidence_multiplier = a.confidence;
  defaults.detector = detector;
  defaults.cluster = cluster;
  const efhmm::HouseholdModel h = efhmm::assemble_household(std::move(appliances), defaults);
  efhmm::save_model(h, a.out);
  std::cout << "household '" << h.house_id << "' with " << h.size() << " appliances -> " << a.out << "\n";
}

// ---- disaggregate ---------------------------------------------------------------

struct DisaggregateArgs {
  std::string model;
  std::string input;
  std::string out;
  std::string initial;
  bool no_dts = false;
  bool no_dsp = false;
  bool no_confirm = false;
};

efhmm::StateVector parse_initial(const std::string& text, const efhmm::HouseholdModel& h) {
  efhmm::StateVector v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const unsigned long x = std::stoul(item, &pos);
      efhmm::require(pos == item.size(), ErrorCode::invalid_argument, "");
      v.push_back(x);
    } catch (const std::exception&) {
      efhmm::fail(ErrorCode::invalid_argument, "--initial expects comma-separated state indices, got '" + text + "'");
    }
  }
  efhmm::validate_state(h, v);
  return v;
}

void run_disaggregate(const DisaggregateArgs& a) {
  const efhmm::HouseholdModel h = efhmm::load_model(a.model);
  const efhmm::PowerSeries series = efhmm::load_csv(a.input);
  efhmm::InferenceOptions options;
  options.use_dts = !a.no_dts;
  options.use_dsp = !a.no_dsp;
  options.use_confirmation = !a.no_confirm;
  std::optional<efhmm::StateVector> initial;
  if (!a.initial.empty()) initial = parse_initial(a.initial, h);
  const efhmm::SeriesDisaggregation run = efhmm::disaggregate_series(h, series, options, initial);

  const fs::path out(a.out);
  ensure_dir(out);
  write_json(out / "assignments.json", efhmm::result_to_json(h, run));
  efhmm::write_csv_table(efhmm::estimated_power_table(h, run.result), out / "estimated_power.csv");
  write_json(out / "config.json",
             effective_config(h.detector, h.cluster,
                              {{"model", a.model},
                               {"input", a.input},
                               {"house_id", h.house_id},
                               {"confidence_multiplier", h.confidence_multiplier},
                               {"use_dts", options.use_dts},
                               {"use_dsp", options.use_dsp},
                               {"use_confirmation", options.use_confirmation}}));
  std::cout << run.observations.events.size() << " events, " << run.result.unconfirmed << " unconfirmed, "
            << run.result.skipped << " skipped\n";
}

// ---- evaluate / report ------------------------------------------------------------

struct Paired {
  std::string id;
  efhmm::PowerSeries truth;
  efhmm::PowerSeries estimate;
};

std::vector<Paired> load_pairs(const std::string& truth_dir, const std::string& est_dir) {
  const efhmm::CsvTable est = efhmm::read_csv_table(fs::path(est_dir) / "estimated_power.csv");
  const std::size_t tcol = est.column_index("timestamp_s");
  const double rate = efhmm::infer_sample_rate(est.columns[tcol], "estimated_power.csv");
  std::vector<Paired> out;
  for (std::size_t c = 0; c < est.header.size(); ++c) {
    if (c == tcol) continue;
    Paired p;
    p.id = sanitize_id(est.header[c]);
    p.truth = efhmm::load_csv(fs::path(truth_dir) / (p.id + ".csv"));
    p.estimate = efhmm::PowerSeries{est.columns[c], rate, est.columns[tcol].front()};
    efhmm::require(p.truth.size() == p.estimate.size(), ErrorCode::validation,
                   "appliance '" + p.id + "': truth has " + std::to_string(p.truth.size()) +
                       " samples, estimate has " + std::to_string(p.estimate.size()));
    out.push_back(std::move(p));
  }
  efhmm::require(!out.empty(), ErrorCode::validation, "estimated_power.csv has no appliance columns");
  return out;
}

void run_evaluate(const std::string& truth_dir, const std::string& est_dir, std::string out_dir, double on_threshold) {
  if (out_dir.empty()) out_dir = est_dir;
  const auto pairs = load_pairs(truth_dir, est_dir);
  std::vector<efhmm::ApplianceMetrics> metrics;
  for (const auto& p : pairs) metrics.push_back(efhmm::evaluate_appliance(p.id, p.truth, p.estimate, on_threshold));
  const efhmm::ApplianceMetrics avg = efhmm::macro_average(metrics);

  std::string csv = "appliance,accuracy,precision,recall,f1,rmse_w,tp,tn,fp,fn\n";
  json per = json::array();
  const auto row = [&](const efhmm::ApplianceMetrics& m) {
    std::ostringstream line;
    line.precision(17);
    line << m.id << ',' << m.scores.accuracy << ',' << m.scores.precision << ',' << m.scores.recall << ','
         << m.scores.f1 << ',' << m.rmse << ',' << m.confusion.tp << ',' << m.confusion.tn << ',' << m.confusion.fp
         << ',' << m.confusion.fn << '\n';
    csv += line.str();
  };
  for (const auto& m : metrics) {
    row(m);
    per.push_back({{"id", m.id},
                   {"accuracy", m.scores.accuracy},
                   {"precision", m.scores.precision},
                   {"recall", m.scores.recall},
                   {"f1", m.scores.f1},
                   {"rmse_w", m.rmse},
                   {"precision_undefined", m.scores.precision_undefined},
                   {"recall_undefined", m.scores.recall_undefined},
                   {"confusion",
                    {{"tp", m.confusion.tp}, {"tn", m.confusion.tn}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}}}});
  }
  row(avg);
  const fs::path out(out_dir);
  ensure_dir(out);
  efhmm::write_text_file(out / "metrics.csv", csv);
  write_json(out / "metrics.json", {{"on_threshold_w", on_threshold},
                                    {"appliances", std::move(per)},
                                    {"macro_average",
                                     {{"accuracy", avg.scores.accuracy},
                                      {"precision", avg.scores.precision},
                                      {"recall", avg.scores.recall},
                                      {"f1", avg.scores.f1},
                                      {"rmse_w", avg.rmse}}}});
  std::cout << csv;
}

void run_report(const std::string& truth_dir, const std::string& est_dir, const std::string& out_dir) {
  const auto pairs = load_pairs(truth_dir, est_dir);
  const fs::path out(out_dir);
  ensure_dir(out);
  for (const auto& p : pairs) {
    efhmm::CsvTable t;
    t.header = {"t", "truth_w", "est_w"};
    t.columns.resize(3);
    for (std::size_t i = 0; i < p.truth.size(); ++i) t.columns[0].push_back(p.truth.time_at(i));
    t.columns[1] = p.truth.samples;
    t.columns[2] = p.estimate.samples;
    efhmm::write_csv_table(t, out / (p.id + ".csv"));
  }
  std::cout << "wrote " << pairs.size() << " series to " << out.string() << "\n";
}

// ---- edge / cloud -----------------------------------------------------------------

struct EdgeArgs {
  std::string input;
  std::string connect;
  std::string house_id = "house";
  std::string model;
  std::string out;
};

void run_edge(const EdgeArgs& a, const Settings& settings) {
  efhmm::DetectorConfig base;
  std::string house = a.house_id;
  if (!a.model.empty()) {
    const efhmm::HouseholdModel h = efhmm::load_model(a.model);
    base = h.detector;
    house = h.house_id;
  }
  const auto [detector, cluster] = settings.resolve(base);
  const efhmm::PowerSeries series = efhmm::load_csv(a.input);
  efhmm::EdgeAgent agent(efhmm::net::parse_endpoint(a.connect), house, detector);
  const efhmm::EdgeRunResult r = agent.run(series);
  const efhmm::ReductionReport report =
      efhmm::reduction_report(r.stats, detector.window_seconds, series.sample_rate_hz);
  std::cout << "messages sent: " << r.stats.messages_sent << " (" << r.stats.events_sent << " EVENT, "
            << r.stats.steady_sent << " STEADY), bytes: " << r.stats.bytes_sent << ", dropped: " << r.stats.dropped
            << "\nassignments received: " << r.assignments.size() << "\n"
            << efhmm::format_report(report);
  if (!a.out.empty()) {
    json assigns = json::array();
    for (const auto& m : r.assignments) assigns.push_back(efhmm::wire::to_json(m));
    json errors = json::array();
    for (const auto& m : r.errors) errors.push_back(efhmm::wire::to_json(m));
    write_json(a.out, {{"assignments", std::move(assigns)},
                       {"errors", std::move(errors)},
                       {"stats",
                        {{"raw_samples_seen", r.stats.raw_samples_seen},
                         {"messages_sent", r.stats.messages_sent},
                         {"bytes_sent", r.stats.bytes_sent},
                         {"events_sent", r.stats.events_sent},
                         {"steady_sent", r.stats.steady_sent},
                         {"dropped", r.stats.dropped}}},
                       {"reduction",
                        {{"event_ratio", report.event_ratio},
                         {"window_ratio", report.window_ratio},
                         {"message_ratio", report.message_ratio},
                         {"bytes_ratio", report.bytes_ratio}}}});
  }
  for (const auto& e : r.errors) std::cerr << "cloud error: " << e.code << ": " << e.detail << "\n";
  efhmm::require(r.errors.empty(), ErrorCode::protocol, "cloud reported " + std::to_string(r.errors.size()) + " errors");
}

void run_cloud(const std::vector<std::string>& models, const std::string& bind) {
  efhmm::ModelRegistry registry;
  for (const auto& path : models) registry.add(efhmm::load_model(path));

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  efhmm::CloudServer server(registry, efhmm::net::parse_endpoint(bind));
  server.start();
  std::cout << "listening on port " << server.port() << " with " << registry.size() << " household model(s)"
            << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  std::cout << "served " << server.connections_served() << " connection(s)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-driven two-stage factorial-HMM load disaggregation"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate appliance traces and their aggregate");
  simulate->add_option("--archetypes", sim.archetypes, "Archetype JSON file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--script", sim.script, "Script JSON file (random sessions when omitted)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--rate", sim.rate, "Sample rate in Hz (default 50, reference-dataset rate)");
  simulate->add_option("--duration", sim.duration, "Length of a random script in s (default 3600, tuning default)");
  simulate->add_option("--min-gap", sim.min_gap,
                       "Minimum spacing of random-script events in s (default 10, tuning default)");
  simulate->add_option("--seed", sim.seed, "Random seed (default 1)");
  simulate->add_option("--out", sim.out, "Output directory")->required();

  std::string detect_input, detect_out;
  Settings detect_settings;
  auto* detect = app.add_subcommand("detect", "Detect events and steady segments in a power CSV");
  detect->add_option("--input", detect_input, "timestamp_s,power_w CSV")->required()->check(CLI::ExistingFile);
  detect->add_option("--out", detect_out, "Output directory")->required();
  detect_settings.add(detect, false);

  TrainArgs train_args;
  Settings train_settings;
  auto* train = app.add_subcommand("train", "Train one appliance model from its own power CSV");
  train->add_option("--input", train_args.input, "Appliance CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--id", train_args.id, "Appliance id")->required();
  train->add_option("--name", train_args.name, "Human-readable name (defaults to the id)");
  train->add_option("--house-id", train_args.house_id, "House id stored in the model (default 'house')");
  train->add_option("--confidence", train_args.confidence,
                    "Stage-2 quantile factor (default 2.576, two-sided 99% normal quantile)");
  train->add_option("--report", train_args.report, "Write the training diagnostics JSON here");
  train->add_option("--out", train_args.out, "Model JSON to write")->required();
  train_settings.add(train, true);

  TrainHouseholdArgs th_args;
  Settings th_settings;
  auto* train_household = app.add_subcommand("train-household", "Merge or train several appliances into one model");
  train_household->add_option("--model", th_args.models, "Existing model JSON (repeatable)")
      ->check(CLI::ExistingFile);
  train_household->add_option("--input", th_args.inputs, "id=path of an appliance CSV to train (repeatable)");
  train_household->add_option("--house-id", th_args.house_id, "House id (default 'house')");
  train_household->add_option("--confidence", th_args.confidence,
                              "Stage-2 quantile factor (default 2.576, two-sided 99% normal quantile)");
  train_household->add_option("--out", th_args.out, "Model JSON to write")->required();
  th_settings.add(train_household, true);

  DisaggregateArgs dis;
  auto* disaggregate = app.add_subcommand("disaggregate", "Disaggregate an aggregate power CSV");
  disaggregate->add_option("--model", dis.model, "Household model JSON")->required()->check(CLI::ExistingFile);
  disaggregate->add_option("--input", dis.input, "Aggregate CSV")->required()->check(CLI::ExistingFile);
  disaggregate->add_option("--out", dis.out, "Output directory")->required();
  disaggregate->add_option("--initial", dis.initial, "Initial state per appliance, e.g. 0,1,0 (default all OFF)");
  disaggregate->add_flag("--no-dts", dis.no_dts, "Drop the transient spike term from stage 1");
  disaggregate->add_flag("--no-dsp", dis.no_dsp, "Drop the steady-step term from stage 1");
  disaggregate->add_flag("--no-confirm", dis.no_confirm, "Skip stage-2 confirmation");

  std::string eval_truth, eval_est, eval_out;
  double on_threshold = efhmm::kDefaultOnThreshold;
  auto* evaluate = app.add_subcommand("evaluate", "Score estimated against true appliance power");
  evaluate->add_option("--truth", eval_truth, "Directory with <id>.csv truth traces")->required()->check(
      CLI::ExistingDirectory);
  evaluate->add_option("--est", eval_est, "Directory with estimated_power.csv")->required()->check(
      CLI::ExistingDirectory);
  evaluate->add_option("--out", eval_out, "Output directory (default: the --est directory)");
  evaluate->add_option("--on-threshold", on_threshold, "ON threshold in W (default 5, tuning default)");

  std::string report_truth, report_est, report_out;
  auto* report = app.add_subcommand("report", "Write per-appliance t,truth_w,est_w CSVs for plotting");
  report->add_option("--truth", report_truth, "Directory with <id>.csv truth traces")->required()->check(
      CLI::ExistingDirectory);
  report->add_option("--est", report_est, "Directory with estimated_power.csv")->required()->check(
      CLI::ExistingDirectory);
  report->add_option("--out", report_out, "Output directory")->required();

  EdgeArgs edge_args;
  Settings edge_settings;
  auto* edge = app.add_subcommand("edge", "Stream a power CSV to a cloud service");
  edge->add_option("--input", edge_args.input, "Power CSV")->required()->check(CLI::ExistingFile);
  edge->add_option("--connect", edge_args.connect, "Cloud address host:port")->required();
  edge->add_option("--house-id", edge_args.house_id, "House id sent in HELLO (default 'house')");
  edge->add_option("--model", edge_args.model, "Take house id and detector settings from this model")
      ->check(CLI::ExistingFile);
  edge->add_option("--out", edge_args.out, "Write received assignments and stats JSON here");
  edge_settings.add(edge, false);

  std::vector<std::string> cloud_models;
  std::string bind = "127.0.0.1:7878";
  auto* cloud = app.add_subcommand("cloud", "Serve disaggregation to edge agents");
  cloud->add_option("--model", cloud_models, "Household model JSON (repeatable, one per house)")
      ->required()
      ->check(CLI::ExistingFile);
  cloud->add_option("--bind", bind, "Listen address host:port (default 127.0.0.1:7878)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: invalid_argument: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*simulate) run_simulate(sim);
    else if (*detect) run_detect(detect_input, detect_out, detect_settings);
    else if (*train) run_train(train_args, train_settings);
    else if (*train_household) run_train_household(th_args, th_settings);
    else if (*disaggregate) run_disaggregate(dis);
    else if (*evaluate) run_evaluate(eval_truth, eval_est, eval_out, on_threshold);
    else if (*report) run_report(report_truth, report_est, report_out);
    else if (*edge) run_edge(edge_args, edge_settings);
    else if (*cloud) run_cloud(cloud_models, bind);
  } catch (const efhmm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
