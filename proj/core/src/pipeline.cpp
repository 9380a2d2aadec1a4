#include "uptime/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uptime/dht.hpp"
#include "uptime/error.hpp"
#include "uptime/f2f.hpp"
#include "uptime/parallel.hpp"
#include "uptime/random.hpp"
#include "uptime/synth.hpp"
#include "uptime/text_io.hpp"

namespace uptime {

namespace {

bool parse_bool(std::string_view v, std::string_view key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw DataError("config key '" + std::string(key) + "': expected a boolean, got '" +
                  std::string(v) + "'");
}

std::size_t parse_count(std::string_view v, std::string_view key) {
  const auto n = text::parse_int(v, key);
  if (n < 0) throw DataError("config key '" + std::string(key) + "' must be non-negative");
  return static_cast<std::size_t>(n);
}

const char* filter_name(FilterMode f) { return f == FilterMode::all ? "all" : "superpeer"; }

std::string bool_name(bool b) { return b ? "true" : "false"; }

}  // namespace

ExperimentConfig parse_config(std::string_view content) {
  ExperimentConfig c;
  std::size_t line_no = 0;
  for (auto raw : text::lines(content)) {
    ++line_no;
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw DataError("config line " + std::to_string(line_no) + ": expected key=value");
    const auto key = text::trim(line.substr(0, eq));
    const auto value = text::trim(line.substr(eq + 1));
    if (key == "trace") c.trace = value;
    else if (key == "events") c.events = value;
    else if (key == "origin_ts") c.origin_ts = text::parse_int(value, key);
    else if (key == "slot_seconds") c.slot_seconds = text::parse_int(value, key);
    else if (key == "profiles") c.profiles = value;
    else if (key == "weeks") c.weeks = parse_count(value, key);
    else if (key == "filter") {
      if (value == "all") c.filter = FilterMode::all;
      else if (value == "superpeer") c.filter = FilterMode::superpeer;
      else throw DataError("config key 'filter': expected all or superpeer");
    } else if (key == "threshold_hours") c.threshold_hours = text::parse_real(value, key);
    else if (key == "standardize") c.standardize = parse_bool(value, key);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_count(value, key));
    else if (key == "window_slots") c.window_slots = parse_count(value, key);
    else if (key == "ablation") c.ablation = parse_bool(value, key);
    else if (key == "dht") c.dht = parse_bool(value, key);
    else if (key == "dht_reps") c.dht_reps = parse_count(value, key);
    else if (key == "dht_sample") c.dht_sample = parse_count(value, key);
    else if (key == "dht_iterations") c.dht_iterations = parse_count(value, key);
    else if (key == "dht_replicas") c.dht_replicas = parse_count(value, key);
    else if (key == "target_unavail") c.target_unavail = text::parse_real(value, key);
    else if (key == "f2f") c.f2f = parse_bool(value, key);
    else if (key == "f2f_reps") c.f2f_reps = parse_count(value, key);
    else if (key == "f2f_sample") c.f2f_sample = parse_count(value, key);
    else if (key == "f2f_degree") c.f2f_degree = parse_count(value, key);
    else if (key == "f2f_rewire") c.f2f_rewire = text::parse_real(value, key);
    else if (key == "f2f_capacity") c.f2f_capacity = parse_count(value, key);
    else if (key == "newsfeed") c.newsfeed = parse_bool(value, key);
    else if (key == "newsfeed_max_n") c.newsfeed_max_n = parse_count(value, key);
    else
      throw DataError("config line " + std::to_string(line_no) + ": unknown key '" +
                      std::string(key) + "'");
  }
  return c;
}

ExperimentConfig read_config(const std::filesystem::path& path) {
  return parse_config(text::read_file(path));
}

std::string format_config(const ExperimentConfig& c) {
  std::string out;
  auto put = [&](const char* key, const std::string& v) {
    out += key;
    out += '=';
    out += v;
    out += '\n';
  };
  using std::to_string;
  if (!c.trace.empty()) put("trace", c.trace);
  if (!c.events.empty()) {
    put("events", c.events);
    put("origin_ts", to_string(c.origin_ts));
    put("slot_seconds", to_string(c.slot_seconds));
  }
  if (!c.profiles.empty()) {
    put("profiles", c.profiles);
    put("weeks", to_string(c.weeks));
  }
  put("filter", filter_name(c.filter));
  put("threshold_hours", text::format_exact(c.threshold_hours));
  put("standardize", bool_name(c.standardize));
  put("seed", to_string(c.seed));
  put("window_slots", to_string(c.window_slots));
  put("ablation", bool_name(c.ablation));
  put("dht", bool_name(c.dht));
  put("dht_reps", to_string(c.dht_reps));
  put("dht_sample", to_string(c.dht_sample));
  put("dht_iterations", to_string(c.dht_iterations));
  put("dht_replicas", to_string(c.dht_replicas));
  put("target_unavail", text::format_exact(c.target_unavail));
  put("f2f", bool_name(c.f2f));
  put("f2f_reps", to_string(c.f2f_reps));
  put("f2f_sample", to_string(c.f2f_sample));
  put("f2f_degree", to_string(c.f2f_degree));
  put("f2f_rewire", text::format_exact(c.f2f_rewire));
  put("f2f_capacity", to_string(c.f2f_capacity));
  put("newsfeed", bool_name(c.newsfeed));
  put("newsfeed_max_n", to_string(c.newsfeed_max_n));
  return out;
}

AvailabilityMatrix load_trace(const ExperimentConfig& c) {
  const int sources = !c.trace.empty() + !c.events.empty() + !c.profiles.empty();
  if (sources == 0) throw DataError("missing trace: set trace, events or profiles");
  if (sources > 1) throw DataError("more than one trace source configured");
  if (!c.trace.empty()) return read_matrix(c.trace);
  if (!c.events.empty()) {
    if (c.slot_seconds <= 0 || kSecondsPerDay % c.slot_seconds != 0)
      throw DataError("slot_seconds must divide a day");
    const auto per_day = static_cast<std::size_t>(kSecondsPerDay / c.slot_seconds);
    const std::size_t horizon = per_day * kDaysPerWeek * kWeeksPerPeriod * kPeriodCount;
    return ingest_events(read_events_csv(c.events), c.origin_ts, c.slot_seconds, horizon);
  }
  const auto users = expand_groups(read_profiles(c.profiles));
  return generate_trace(users, c.weeks, derive_seed(c.seed, "synth"));
}

std::pair<Cohort, Cohort> make_cohorts(const AvailabilityMatrix& m, FilterMode filter,
                                       double threshold_hours) {
  const auto split = split_periods(m);
  auto side = [&](SlotRange features, SlotRange labels) {
    Cohort c;
    c.features = features;
    c.labels = labels;
    if (filter == FilterMode::superpeer) {
      const auto ids = filter_superpeers(m, features, threshold_hours);
      if (ids.empty())
        throw DataError("no user passes the superpeer filter on slots " +
                        std::to_string(features.begin) + ":" + std::to_string(features.end));
      c.matrix = m.select_users(std::span<const std::string>(ids));
    } else {
      c.matrix = m;
    }
    return c;
  };
  return {side(split.a, split.b), side(split.c, split.d)};
}

namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

TrainedModel train_model(const Cohort& cohort, bool standardize,
                         std::span<const std::size_t> columns) {
  const auto users = all_rows(cohort.matrix.user_count());
  const auto dm =
      build_design_matrix(cohort.matrix, cohort.features, cohort.labels, users, standardize);
  const auto data = to_logistic_data(dm, columns);
  TrainedModel model;
  model.posterior = fit_laplace(data, GaussianPrior::isotropic(data.dim()));
  model.standardization = dm.standardization;
  if (!columns.empty()) model.columns.assign(columns.begin(), columns.end());
  return model;
}

PredictionMatrix predict_cohort(const TrainedModel& model, const Cohort& cohort) {
  const auto users = all_rows(cohort.matrix.user_count());
  return predict_matrix(model, cohort.matrix, cohort.features, cohort.labels, users);
}

ScoredLabels score_predictions(const PredictionMatrix& p, const AvailabilityMatrix& labels,
                               SlotRange range) {
  if (range.empty()) throw DataError("empty evaluation range");
  if (!p.range().covers(range)) throw DataError("predictions do not cover the evaluation range");
  if (range.end > labels.slot_count()) throw DataError("evaluation range exceeds label slots");
  ScoredLabels s;
  for (std::size_t u = 0; u < p.user_count(); ++u) {
    const auto row = labels.index_of(p.users()[u]);
    if (!row) throw DataError("user '" + p.users()[u] + "' missing from the label matrix");
    for (std::size_t t = range.begin; t < range.end; ++t)
      s.add(labels.at(*row, t), p.at(u, t), t);
  }
  return s;
}

std::vector<AblationRow> per_feature_ablation(const Cohort& train, const Cohort& test,
                                              bool standardize) {
  std::vector<AblationRow> rows;
  const auto full = train_model(train, standardize);
  {
    const auto s = score_predictions(predict_cohort(full, test), test.matrix, test.labels);
    rows.push_back({"all", auc(s), gm(s), std::nullopt, std::nullopt});
  }
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const std::size_t cols[] = {j};
    const auto model = train_model(train, standardize, cols);
    const auto s = score_predictions(predict_cohort(model, test), test.matrix, test.labels);
    const auto b = static_cast<Eigen::Index>(j + 1);
    rows.push_back({std::string(feature_name(j)), auc(s), gm(s), full.posterior.mean(b),
                    std::sqrt(full.posterior.covariance(b, b))});
  }
  return rows;
}

std::vector<AblationRow> per_feature_ablation(const ExperimentConfig& config) {
  const auto [train, test] = make_cohorts(load_trace(config), config.filter,
                                          config.threshold_hours);
  return per_feature_ablation(train, test, config.standardize);
}

std::vector<SimSummary> summarize(std::span<const SimRow> rows, std::string_view baseline) {
  std::vector<SimSummary> out;
  std::vector<std::vector<const SimRow*>> groups;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SimSummary& s) { return s.strategy == r.strategy; });
    if (it == out.end()) {
      out.push_back({r.strategy});
      groups.emplace_back();
      it = out.end() - 1;
    }
    groups[static_cast<std::size_t>(it - out.begin())].push_back(&r);
  }
  auto stats = [](const std::vector<const SimRow*>& g, double SimRow::*field) {
    double mean = 0;
    for (auto* r : g) mean += r->*field;
    mean /= static_cast<double>(g.size());
    double ss = 0;
    for (auto* r : g) ss += (r->*field - mean) * (r->*field - mean);
    const double sd = g.size() > 1 ? std::sqrt(ss / static_cast<double>(g.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::tie(out[i].predicted_mean, out[i].predicted_sd) = stats(groups[i], &SimRow::predicted);
    std::tie(out[i].real_mean, out[i].real_sd) = stats(groups[i], &SimRow::real);
  }
  const auto base = std::find_if(out.begin(), out.end(),
                                 [&](const SimSummary& s) { return s.strategy == baseline; });
  if (base != out.end()) {
    const double a0 = base->real_mean;
    for (auto& s : out) {
      if (s.strategy == baseline) continue;
      const double a1 = s.real_mean;
      if (a0 > 0 && a0 < 1 && a1 > 0 && a1 < 1)
        s.rho = equivalent_redundancy_increase(a0, a1);
    }
  }
  return out;
}

namespace {

void check_inputs(const SimulationInputs& in) {
  if (!in.matrix || !in.predictions) throw DataError("simulation inputs missing");
  if (in.matrix->users() != in.predictions->users())
    throw DataError("simulation matrix and predictions list different users");
  if (!in.predictions->range().covers(in.evaluation))
    throw DataError("predictions do not cover the evaluation slots");
  if (in.reference.empty() || in.reference.end > in.matrix->slot_count())
    throw DataError("reference range outside the matrix");
}

/// Sorted random subset of min(size, population) indices.
std::vector<std::size_t> sample_nodes(std::size_t population, std::size_t size,
                                      std::uint64_t seed) {
  auto idx = all_rows(population);
  Rng rng(seed);
  const std::size_t take = std::min(size, population);
  for (std::size_t i = 0; i < take; ++i)
    std::swap(idx[i], idx[i + uniform_index(rng, population - i)]);
  idx.resize(take);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::size_t replica_count(const SimulationInputs& in, std::size_t configured, double target) {
  if (configured > 0) return configured;
  const auto users = all_rows(in.matrix->user_count());
  return redundancy_for_target(average_availability(*in.matrix, users, in.reference), target);
}

}  // namespace

DhtSimulation simulate_dht(const SimulationInputs& in, const ExperimentConfig& config,
                           bool verify_objective) {
  check_inputs(in);
  DhtSimulation sim;
  sim.replicas = replica_count(in, config.dht_replicas, config.target_unavail);
  const std::size_t nodes = std::min(config.dht_sample, in.matrix->user_count());
  if (sim.replicas > nodes)
    throw DataError("replica count " + std::to_string(sim.replicas) + " exceeds the " +
                    std::to_string(nodes) + " sampled nodes");
  std::vector<std::array<SimRow, 2>> reps(config.dht_reps);
  parallel_for(config.dht_reps, [&](std::size_t rep) {
    const auto idx =
        sample_nodes(in.matrix->user_count(), nodes, derive_seed(config.seed, "dht.sample", rep));
    const auto m = in.matrix->select_users(idx);
    const auto p = in.predictions->select_users(idx);
    DhtOptions opt;
    opt.iterations = config.dht_iterations;
    opt.seed = derive_seed(config.seed, "dht.ring", rep);
    opt.slots = in.evaluation;
    opt.verify_objective = verify_objective;
    const auto r = assign_identifiers(p, sim.replicas, opt);
    reps[rep][0] = {rep, "random", r.initial_objective,
                    measure_availability(m, r.initial, sim.replicas, in.evaluation)};
    reps[rep][1] = {rep, "optimized", r.final_objective,
                    measure_availability(m, r.ring, sim.replicas, in.evaluation)};
  });
  for (const auto& r : reps) sim.rows.insert(sim.rows.end(), r.begin(), r.end());
  return sim;
}

F2fSimulation simulate_f2f(const SimulationInputs& in, const ExperimentConfig& config,
                           bool check_invariants) {
  check_inputs(in);
  F2fSimulation sim;
  sim.capacity = config.f2f_capacity > 0
                     ? config.f2f_capacity
                     : replica_count(in, config.dht_replicas, config.target_unavail);
  const std::size_t nodes = std::min(config.f2f_sample, in.matrix->user_count());
  std::vector<std::array<SimRow, 3>> reps(config.f2f_reps);
  parallel_for(config.f2f_reps, [&](std::size_t rep) {
    const auto idx =
        sample_nodes(in.matrix->user_count(), nodes, derive_seed(config.seed, "f2f.sample", rep));
    const auto m = in.matrix->select_users(idx);
    const auto p = in.predictions->select_users(idx);
    const auto g = generate_ws_graph(nodes, config.f2f_degree, config.f2f_rewire,
                                     derive_seed(config.seed, "f2f.graph", rep));
    PredictiveOptions opt;
    opt.slots = in.evaluation;
    opt.seed = derive_seed(config.seed, "f2f.init", rep);
    opt.check_invariants = check_invariants;
    const auto predictive = place_predictive(p, g, sim.capacity, opt);
    const auto random = place_random(g, sim.capacity, opt.seed);
    const auto ra = place_ra(m, in.reference, g, sim.capacity,
                             derive_seed(config.seed, "f2f.ra", rep), check_invariants);
    auto row = [&](const char* name, const PlacementResult& r) {
      return SimRow{rep, name, predicted_placement_availability(p, r.mapping, in.evaluation),
                    measure_placement_availability(m, r.mapping, in.evaluation)};
    };
    reps[rep] = {row("random", random), row("ra", ra), row("predictive", predictive)};
  });
  for (const auto& r : reps) sim.rows.insert(sim.rows.end(), r.begin(), r.end());
  return sim;
}

PreloadRun simulate_newsfeed(const SimulationInputs& in, const ExperimentConfig& config) {
  check_inputs(in);
  const auto train_avail = user_availability(*in.matrix, in.reference);
  std::vector<std::size_t> n_values(config.newsfeed_max_n);
  std::iota(n_values.begin(), n_values.end(), std::size_t{1});
  return simulate_preload(*in.matrix, in.evaluation, *in.predictions, train_avail, n_values);
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, load_trace(config));
}

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const AvailabilityMatrix& trace) {
  ExperimentReport r;
  r.config = config;
  r.seeds.emplace_back("root", config.seed);
  if (!config.profiles.empty()) r.seeds.emplace_back("synth", derive_seed(config.seed, "synth"));

  const auto [train, test] = make_cohorts(trace, config.filter, config.threshold_hours);
  r.train_users = train.matrix.user_count();
  r.test_users = test.matrix.user_count();
  r.model = train_model(train, config.standardize);
  r.predictions = predict_cohort(r.model, test);
  const auto scored = score_predictions(r.predictions, test.matrix, test.labels);
  r.auc = auc(scored);
  r.gm = gm(scored);
  r.accuracy = class_accuracy(scored);
  r.roc = roc_points(scored);
  if (config.window_slots > 0) {
    r.auc_series = metric_over_time(scored, config.window_slots, Metric::auc);
    r.gm_series = metric_over_time(scored, config.window_slots, Metric::gm);
  }
  if (config.ablation) r.ablation = per_feature_ablation(train, test, config.standardize);

  const SimulationInputs in{&test.matrix, &r.predictions, test.features, test.labels};
  if (config.dht) {
    r.dht = simulate_dht(in, config);
    for (std::size_t rep = 0; rep < config.dht_reps; ++rep) {
      r.seeds.emplace_back("dht.sample/" + std::to_string(rep),
                           derive_seed(config.seed, "dht.sample", rep));
      r.seeds.emplace_back("dht.ring/" + std::to_string(rep),
                           derive_seed(config.seed, "dht.ring", rep));
    }
  }
  if (config.f2f) {
    r.f2f = simulate_f2f(in, config);
    for (std::size_t rep = 0; rep < config.f2f_reps; ++rep)
      for (const char* name : {"f2f.sample", "f2f.graph", "f2f.init", "f2f.ra"})
        r.seeds.emplace_back(std::string(name) + "/" + std::to_string(rep),
                             derive_seed(config.seed, name, rep));
  }
  if (config.newsfeed) r.newsfeed = simulate_newsfeed(in, config);
  return r;
}

std::string format_metrics_csv(double auc_value, double gm_value, const ClassAccuracy& acc) {
  std::string out = "metric,scope,value\n";
  out += "auc,all," + text::format_exact(auc_value) + "\n";
  out += "gm,all," + text::format_exact(gm_value) + "\n";
  out += "accuracy,online," + text::format_exact(acc.positive) + "\n";
  out += "accuracy,offline," + text::format_exact(acc.negative) + "\n";
  return out;
}

std::string format_roc_csv(const std::vector<RocPoint>& roc) {
  std::string out = "fpr,tpr\n";
  for (const auto& p : roc)
    out += text::format_exact(p.fpr) + "," + text::format_exact(p.tpr) + "\n";
  return out;
}

std::string format_series_csv(const std::vector<SeriesPoint>& series) {
  std::string out = "slot,value\n";
  for (const auto& p : series)
    out += std::to_string(p.slot) + "," + text::format_exact(p.value) + "\n";
  return out;
}

std::string format_ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "feature,auc,gm,beta_mean,beta_sd\n";
  for (const auto& r : rows) {
    out += r.feature + "," + text::format_exact(r.auc) + "," + text::format_exact(r.gm) + ",";
    if (r.beta_mean) out += text::format_exact(*r.beta_mean);
    out += ",";
    if (r.beta_sd) out += text::format_exact(*r.beta_sd);
    out += "\n";
  }
  return out;
}

std::string format_sim_csv(const std::vector<SimRow>& rows) {
  std::string out = "rep,strategy,predicted_avail,real_avail\n";
  for (const auto& r : rows)
    out += std::to_string(r.rep) + "," + r.strategy + "," + text::format_exact(r.predicted) +
           "," + text::format_exact(r.real) + "\n";
  return out;
}

std::string format_summary_csv(const std::vector<SimSummary>& rows) {
  std::string out = "strategy,predicted_mean,predicted_sd,real_mean,real_sd,rho\n";
  for (const auto& s : rows) {
    out += s.strategy + "," + text::format_exact(s.predicted_mean) + "," +
           text::format_exact(s.predicted_sd) + "," + text::format_exact(s.real_mean) + "," +
           text::format_exact(s.real_sd) + ",";
    if (s.rho) out += text::format_exact(*s.rho);
    out += "\n";
  }
  return out;
}

void write_report(const std::filesystem::path& dir, const ExperimentReport& r) {
  std::filesystem::create_directories(dir);
  std::string header = "# experiment report\n" + format_config(r.config);
  header += "train_users=" + std::to_string(r.train_users) + "\n";
  header += "test_users=" + std::to_string(r.test_users) + "\n";
  header += "model_converged=" + bool_name(r.model.posterior.converged) + "\n";
  header += "model_iterations=" + std::to_string(r.model.posterior.iterations) + "\n";
  if (r.dht) header += "dht_replicas=" + std::to_string(r.dht->replicas) + "\n";
  if (r.f2f) header += "f2f_capacity=" + std::to_string(r.f2f->capacity) + "\n";
  if (r.newsfeed && r.newsfeed->capped) header += "newsfeed_capped=true\n";
  for (const auto& [name, value] : r.seeds)
    header += "seed." + name + "=" + std::to_string(value) + "\n";
  text::write_file(dir / "report.txt", header);
  write_model(dir / "model.txt", r.model);
  write_predictions(dir / "predictions.csv", r.predictions);
  text::write_file(dir / "metrics.csv", format_metrics_csv(r.auc, r.gm, r.accuracy));
  text::write_file(dir / "roc.csv", format_roc_csv(r.roc));
  text::write_file(dir / "auc_over_time.csv", format_series_csv(r.auc_series));
  text::write_file(dir / "gm_over_time.csv", format_series_csv(r.gm_series));
  if (!r.ablation.empty()) text::write_file(dir / "ablation.csv", format_ablation_csv(r.ablation));
  if (r.dht) {
    text::write_file(dir / "dht.csv", format_sim_csv(r.dht->rows));
    text::write_file(dir / "dht_summary.csv", format_summary_csv(summarize(r.dht->rows, "random")));
  }
  if (r.f2f) {
    text::write_file(dir / "f2f.csv", format_sim_csv(r.f2f->rows));
    text::write_file(dir / "f2f_summary.csv", format_summary_csv(summarize(r.f2f->rows, "ra")));
  }
  if (r.newsfeed) write_preload_csv(dir / "newsfeed.csv", *r.newsfeed);
}

}  // namespace uptime
