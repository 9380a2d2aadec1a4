// uptime: command-line front end for trace processing, availability
// prediction and the storage / preloading simulators.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "uptime/cluster.hpp"
#include "uptime/error.hpp"
#include "uptime/features.hpp"
#include "uptime/logreg.hpp"
#include "uptime/metrics.hpp"
#include "uptime/newsfeed.hpp"
#include "uptime/parallel.hpp"
#include "uptime/pipeline.hpp"
#include "uptime/prediction.hpp"
#include "uptime/synth.hpp"
#include "uptime/text_io.hpp"
#include "uptime/trace.hpp"

namespace fs = std::filesystem;
using namespace uptime;

namespace {

struct Common {
  std::string out;
  std::size_t threads = 0;
};

FilterMode parse_filter(const std::string& s) {
  if (s == "all") return FilterMode::all;
  if (s == "superpeer") return FilterMode::superpeer;
  throw DataError("filter must be all or superpeer");
}

SlotRange range_of(const AvailabilityMatrix& m, const std::string& spec) {
  if (spec.size() == 1) {
    const auto split = split_periods(m);
    return parse_range(spec, &split);
  }
  return parse_range(spec, nullptr);
}

/// The matrix itself, or its users passing the filter on `reference`.
AvailabilityMatrix restrict(const AvailabilityMatrix& m, FilterMode mode,
                            SlotRange reference, double threshold) {
  if (mode == FilterMode::all) return m;
  const auto ids = filter_superpeers(m, reference, threshold);
  if (ids.empty()) throw DataError("no user passes the superpeer filter");
  return m.select_users(std::span<const std::string>(ids));
}

std::vector<std::size_t> all_users(const AvailabilityMatrix& m) {
  std::vector<std::size_t> v(m.user_count());
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

/// Rows of `m` in the order of the prediction users.
AvailabilityMatrix align(const AvailabilityMatrix& m, const PredictionMatrix& p) {
  return m.select_users(std::span<const std::string>(p.users()));
}

struct Options {
  // shared
  std::string matrix, pred, model, profiles, events, config;
  std::string obs = "A", labels = "B", range = "D", reference = "C", evaluation = "D";
  std::string predict_obs = "C", filter_range = "A", cluster_range = "0:168";
  std::string filter = "all";
  double threshold = 4.0;
  std::uint64_t seed = 1;
  bool seed_set = false;
  // ingest
  std::int64_t origin = 0, slot_seconds = 3600;
  std::size_t horizon = 0;
  bool drop_never_online = false;
  // synth
  std::size_t weeks = 24;
  // train / features
  bool no_standardize = false;
  std::vector<std::string> features;
  // eval
  std::size_t window = 168;
  // cluster
  std::size_t k = 4, restarts = 10, max_iter = 300;
  bool any_length = false;
  // simulators
  std::size_t reps = 10, sample = 408, iterations = 1000, replicas = 0;
  std::size_t degree = 20, capacity = 0, max_n = 20;
  double rewire = 0.5, target = 0.01;
  // run
  std::string trace;
  bool no_ablation = false, dht = false, f2f = false, newsfeed = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Availability prediction for peer-to-peer and social systems"};
  app.require_subcommand(1);
  Common common;
  Options o;
  app.add_option("--threads", common.threads, "Worker threads (0 = all cores)");

  std::function<void()> action;
  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--out", common.out, "Output path")->required();
    return s;
  };
  auto seed_opt = [&](CLI::App* s) {
    s->add_option("--seed", o.seed, "Random seed");
  };
  auto matrix_opt = [&](CLI::App* s) {
    s->add_option("--matrix", o.matrix, "Availability matrix file")->required()
        ->check(CLI::ExistingFile);
  };

  // ingest
  auto* ingest = sub("ingest", "Session CSV to availability matrix");
  ingest->add_option("--events", o.events, "user_id,login_ts,logout_ts CSV")->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--origin", o.origin, "Timestamp of slot 0");
  ingest->add_option("--slot-seconds", o.slot_seconds, "Slot length in seconds");
  ingest->add_option("--horizon", o.horizon, "Slots to keep (default: four six-week periods)");
  ingest->add_flag("--drop-never-online", o.drop_never_online, "Drop users never online");
  ingest->callback([&] {
    action = [&] {
      std::size_t horizon = o.horizon;
      if (horizon == 0) {
        if (o.slot_seconds <= 0 || kSecondsPerDay % o.slot_seconds != 0)
          throw DataError("--slot-seconds must divide a day");
        horizon = static_cast<std::size_t>(kSecondsPerDay / o.slot_seconds) * kDaysPerWeek *
                  kWeeksPerPeriod * kPeriodCount;
      }
      const auto m = ingest_events(read_events_csv(o.events), o.origin, o.slot_seconds,
                                   horizon, {o.drop_never_online});
      write_matrix(common.out, m);
    };
  });

  // synth
  auto* synth = sub("synth", "Generate a synthetic trace from user profiles");
  synth->add_option("--profiles", o.profiles, "Profile file")->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--weeks", o.weeks, "Trace length in weeks");
  seed_opt(synth);
  synth->callback([&] {
    action = [&] {
      const auto users = expand_groups(read_profiles(o.profiles));
      write_matrix(common.out, generate_trace(users, o.weeks, o.seed));
    };
  });

  // split
  auto* split = sub("split", "Write periods A-D as separate matrices into a directory");
  matrix_opt(split);
  split->callback([&] {
    action = [&] {
      const auto m = read_matrix(o.matrix);
      const auto s = split_periods(m);
      fs::create_directories(common.out);
      std::string index = "period,begin,end\n";
      for (const char* name : {"A", "B", "C", "D"}) {
        const auto r = s.by_name(name);
        AvailabilityMatrix part(m.origin_ts() + static_cast<std::int64_t>(r.begin) * m.slot_seconds(),
                                m.slot_seconds(), m.users(), r.size());
        for (std::size_t u = 0; u < m.user_count(); ++u)
          for (std::size_t t = r.begin; t < r.end; ++t) part.set(u, t - r.begin, m.at(u, t));
        write_matrix(fs::path(common.out) / (std::string("period_") + name + ".am"), part);
        index += std::string(name) + "," + std::to_string(r.begin) + "," +
                 std::to_string(r.end) + "\n";
      }
      text::write_file(fs::path(common.out) / "periods.csv", index);
    };
  });

  // filter
  auto* filter = sub("filter", "Keep users online at least --threshold hours/day on --range");
  matrix_opt(filter);
  filter->add_option("--range", o.filter_range, "Reference range (A-D or begin:end)");
  filter->add_option("--threshold", o.threshold, "Hours per day");
  filter->callback([&] {
    action = [&] {
      const auto m = read_matrix(o.matrix);
      write_matrix(common.out,
                   restrict(m, FilterMode::superpeer, range_of(m, o.filter_range), o.threshold));
    };
  });

  auto model_inputs = [&](CLI::App* s) {
    matrix_opt(s);
    s->add_option("--obs", o.obs, "Observation range for features");
    s->add_option("--labels", o.labels, "Label range");
    s->add_option("--filter", o.filter, "all | superpeer (filtered on --obs)");
    s->add_option("--threshold", o.threshold, "Superpeer threshold, hours per day");
  };

  // features
  auto* features = sub("features", "Write the design matrix as CSV");
  model_inputs(features);
  features->add_flag("--no-standardize", o.no_standardize, "Keep raw feature values");
  features->callback([&] {
    action = [&] {
      const auto full = read_matrix(o.matrix);
      const auto obs = range_of(full, o.obs);
      const auto m = restrict(full, parse_filter(o.filter), obs, o.threshold);
      write_design_csv(common.out, build_design_matrix(m, obs, range_of(m, o.labels),
                                                       all_users(m), !o.no_standardize));
    };
  });

  // train
  auto* train = sub("train", "Fit the Bayesian logistic regression model");
  model_inputs(train);
  train->add_flag("--no-standardize", o.no_standardize, "Fit on raw feature values");
  train->add_option("--features", o.features, "Subset of feature names (default: all)");
  train->callback([&] {
    action = [&] {
      const auto full = read_matrix(o.matrix);
      Cohort c;
      c.features = range_of(full, o.obs);
      c.labels = range_of(full, o.labels);
      c.matrix = restrict(full, parse_filter(o.filter), c.features, o.threshold);
      std::vector<std::size_t> cols;
      for (const auto& f : o.features) cols.push_back(parse_feature(f));
      write_model(common.out, train_model(c, !o.no_standardize, cols));
    };
  });

  // predict
  auto* predict = sub("predict", "Predict online probabilities over a target range");
  matrix_opt(predict);
  predict->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);
  predict->add_option("--obs", o.predict_obs, "Observation range for features");
  predict->add_option("--target", o.range, "Prediction range");
  predict->add_option("--filter", o.filter, "all | superpeer (filtered on --obs)");
  predict->add_option("--threshold", o.threshold, "Superpeer threshold, hours per day");
  predict->callback([&] {
    action = [&] {
      const auto full = read_matrix(o.matrix);
      Cohort c;
      c.features = range_of(full, o.predict_obs);
      c.labels = range_of(full, o.range);
      c.matrix = restrict(full, parse_filter(o.filter), c.features, o.threshold);
      write_predictions(common.out, predict_cohort(read_model(o.model), c));
    };
  });

  // eval
  auto* eval = sub("eval", "Score predictions against observed availability");
  eval->add_option("--pred", o.pred, "Prediction file")->required()->check(CLI::ExistingFile);
  eval->add_option("--labels", o.matrix, "Availability matrix with the outcomes")->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--range", o.range, "Evaluation range");
  eval->callback([&] {
    action = [&] {
      const auto m = read_matrix(o.matrix);
      const auto s = score_predictions(read_predictions(o.pred), m, range_of(m, o.range));
      text::write_file(common.out, format_metrics_csv(auc(s), gm(s), class_accuracy(s)));
    };
  });

  // cluster
  auto* cluster = sub("cluster", "k-means over one week of availability rows");
  matrix_opt(cluster);
  cluster->add_option("--range", o.cluster_range, "Slot range (one week)");
  cluster->add_option("--k", o.k, "Number of clusters");
  cluster->add_option("--restarts", o.restarts, "Random restarts");
  cluster->add_option("--max-iter", o.max_iter, "Lloyd iterations per restart");
  cluster->add_flag("--any-length", o.any_length, "Accept ranges other than one week");
  seed_opt(cluster);
  cluster->callback([&] {
    action = [&] {
      const auto m = read_matrix(o.matrix);
      KMeansOptions opt;
      opt.k = o.k;
      opt.restarts = o.restarts;
      opt.max_iter = o.max_iter;
      opt.seed = o.seed;
      opt.any_length = o.any_length;
      text::write_file(common.out,
                       format_clusters(kmeans_availability(m, range_of(m, o.cluster_range), opt)));
    };
  });

  auto sim_inputs = [&](CLI::App* s) {
    s->add_option("--matrix", o.matrix, "Availability matrix")->required()
        ->check(CLI::ExistingFile);
    s->add_option("--pred", o.pred, "Predictions over the evaluation range")->required()
        ->check(CLI::ExistingFile);
    s->add_option("--reference", o.reference, "Training-side range");
    s->add_option("--eval", o.evaluation, "Evaluation range");
    seed_opt(s);
  };
  auto sim_config = [&] {
    ExperimentConfig c;
    c.seed = o.seed;
    c.dht_reps = c.f2f_reps = o.reps;
    c.dht_sample = c.f2f_sample = o.sample;
    c.dht_iterations = o.iterations;
    c.dht_replicas = o.replicas;
    c.target_unavail = o.target;
    c.f2f_degree = o.degree;
    c.f2f_rewire = o.rewire;
    c.f2f_capacity = o.capacity;
    c.newsfeed_max_n = o.max_n;
    return c;
  };
  struct Loaded {
    AvailabilityMatrix m;
    PredictionMatrix p;
    SimulationInputs in;
  };
  auto load_sim = [&](Loaded& l) {
    const auto full = read_matrix(o.matrix);
    l.p = read_predictions(o.pred);
    l.m = align(full, l.p);
    l.in = {&l.m, &l.p, range_of(full, o.reference), range_of(full, o.evaluation)};
  };

  // sim-dht
  auto* sim_dht = sub("sim-dht", "DHT identifier assignment experiment (output directory)");
  sim_inputs(sim_dht);
  sim_dht->add_option("--reps", o.reps, "Repetitions");
  sim_dht->add_option("--sample", o.sample, "Nodes sampled per repetition");
  sim_dht->add_option("--iterations", o.iterations, "Optimization sweeps");
  sim_dht->add_option("--replicas", o.replicas, "Replica count (0 = sized for --target)");
  sim_dht->add_option("--target", o.target, "Target unavailability for sizing");
  sim_dht->callback([&] {
    action = [&] {
      Loaded l;
      load_sim(l);
      const auto sim = simulate_dht(l.in, sim_config());
      fs::create_directories(common.out);
      text::write_file(fs::path(common.out) / "dht.csv", format_sim_csv(sim.rows));
      text::write_file(fs::path(common.out) / "dht_summary.csv",
                       format_summary_csv(summarize(sim.rows, "random")));
    };
  });

  // sim-f2f
  auto* sim_f2f = sub("sim-f2f", "Friend-to-friend placement experiment (output directory)");
  sim_inputs(sim_f2f);
  sim_f2f->add_option("--reps", o.reps, "Repetitions");
  sim_f2f->add_option("--sample", o.sample, "Nodes sampled per repetition");
  sim_f2f->add_option("--degree", o.degree, "Watts-Strogatz mean degree");
  sim_f2f->add_option("--rewire", o.rewire, "Rewiring probability");
  sim_f2f->add_option("--capacity", o.capacity, "Objects per node (0 = sized for --target)");
  sim_f2f->add_option("--target", o.target, "Target unavailability for sizing");
  sim_f2f->callback([&] {
    action = [&] {
      Loaded l;
      load_sim(l);
      const auto sim = simulate_f2f(l.in, sim_config());
      fs::create_directories(common.out);
      text::write_file(fs::path(common.out) / "f2f.csv", format_sim_csv(sim.rows));
      text::write_file(fs::path(common.out) / "f2f_summary.csv",
                       format_summary_csv(summarize(sim.rows, "ra")));
    };
  });

  // sim-newsfeed
  auto* sim_news = sub("sim-newsfeed", "Newsfeed preloading hit-ratio curves");
  sim_inputs(sim_news);
  sim_news->add_option("--max-n", o.max_n, "Largest push-enabled set size");
  sim_news->callback([&] {
    action = [&] {
      Loaded l;
      load_sim(l);
      write_preload_csv(common.out, simulate_newsfeed(l.in, sim_config()));
    };
  });

  // run
  auto* run = sub("run", "End-to-end experiment into a report directory");
  run->add_option("--config", o.config, "key=value configuration file")
      ->check(CLI::ExistingFile);
  run->add_option("--trace", o.trace, "Availability matrix (overrides the config)")
      ->check(CLI::ExistingFile);
  run->add_option("--profiles", o.profiles, "Synthetic profiles (overrides the config)")
      ->check(CLI::ExistingFile);
  run->add_option("--weeks", o.weeks, "Synthetic trace length");
  run->add_option("--filter", o.filter, "all | superpeer");
  run->add_flag("--no-standardize", o.no_standardize, "Fit on raw feature values");
  run->add_flag("--no-ablation", o.no_ablation, "Skip the per-feature ablation");
  run->add_flag("--dht", o.dht, "Run the DHT simulation");
  run->add_flag("--f2f", o.f2f, "Run the F2F simulation");
  run->add_flag("--newsfeed", o.newsfeed, "Run the newsfeed simulation");
  run->add_option("--seed", o.seed, "Root seed")->each([&](const std::string&) {
    o.seed_set = true;
  });
  run->callback([&] {
    action = [&] {
      ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : read_config(o.config);
      if (!o.trace.empty() || !o.profiles.empty()) {
        c.trace = o.trace;
        c.events.clear();
        c.profiles = o.profiles;
      }
      if (run->count("--weeks")) c.weeks = o.weeks;
      if (run->count("--filter")) c.filter = parse_filter(o.filter);
      if (o.no_standardize) c.standardize = false;
      if (o.no_ablation) c.ablation = false;
      if (o.dht) c.dht = true;
      if (o.f2f) c.f2f = true;
      if (o.newsfeed) c.newsfeed = true;
      if (o.seed_set) c.seed = o.seed;
      write_report(common.out, run_experiment(c));
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    set_thread_count(common.threads);
    action();
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
