#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uptime/logreg.hpp"
#include "uptime/metrics.hpp"
#include "uptime/newsfeed.hpp"
#include "uptime/prediction.hpp"
#include "uptime/trace.hpp"

namespace uptime {

enum class FilterMode { all, superpeer };

/// Flat key=value experiment configuration ('#' starts a comment).
struct ExperimentConfig {
  // Trace source: exactly one of trace (matrix file), events (session
  // CSV) or profiles (synthetic generator).
  std::string trace;
  std::string events;
  std::int64_t origin_ts = 0;
  std::int64_t slot_seconds = 3600;
  std::string profiles;
  std::size_t weeks = 24;

  FilterMode filter = FilterMode::all;
  double threshold_hours = 4.0;
  bool standardize = true;
  std::uint64_t seed = 1;
  std::size_t window_slots = 168;  // time-series window

  bool ablation = true;

  bool dht = false;
  std::size_t dht_reps = 10;
  std::size_t dht_sample = 408;
  std::size_t dht_iterations = 1000;
  std::size_t dht_replicas = 0;  // 0: smallest n reaching target_unavail
  double target_unavail = 0.01;

  bool f2f = false;
  std::size_t f2f_reps = 10;
  std::size_t f2f_sample = 408;
  std::size_t f2f_degree = 20;
  double f2f_rewire = 0.5;
  std::size_t f2f_capacity = 0;  // 0: same rule as dht_replicas

  bool newsfeed = false;
  std::size_t newsfeed_max_n = 20;
};

ExperimentConfig parse_config(std::string_view content);
ExperimentConfig read_config(const std::filesystem::path& path);
std::string format_config(const ExperimentConfig& config);

/// Loads or generates the trace named by the configuration.
AvailabilityMatrix load_trace(const ExperimentConfig& config);

/// Model inputs for one side of the protocol: the matrix restricted to
/// the side's users (global features pool over exactly these rows).
struct Cohort {
  AvailabilityMatrix matrix;
  SlotRange features;
  SlotRange labels;
};

/// Training cohort (features A, labels B) and test cohort (features C,
/// labels D). In superpeer mode each cohort keeps the users passing the
/// filter on its own feature period.
std::pair<Cohort, Cohort> make_cohorts(const AvailabilityMatrix& m, FilterMode filter,
                                       double threshold_hours);

/// Fits on every row of `cohort`; `columns` empty means all features.
TrainedModel train_model(const Cohort& cohort, bool standardize,
                         std::span<const std::size_t> columns = {});

/// Predictions for every user of `cohort` over its label period.
PredictionMatrix predict_cohort(const TrainedModel& model, const Cohort& cohort);

/// Pairs each prediction with the matching cell of `labels` (looked up by
/// user id) over `range`.
ScoredLabels score_predictions(const PredictionMatrix& p, const AvailabilityMatrix& labels,
                               SlotRange range);

struct AblationRow {
  std::string feature;  // "all" or a feature name
  double auc = 0;
  double gm = 0;
  std::optional<double> beta_mean;  // coefficient in the all-features model
  std::optional<double> beta_sd;
};

/// The all-features model followed by one single-feature model (with
/// intercept) per feature, all evaluated on the test cohort.
std::vector<AblationRow> per_feature_ablation(const Cohort& train, const Cohort& test,
                                              bool standardize);
std::vector<AblationRow> per_feature_ablation(const ExperimentConfig& config);

struct SimRow {
  std::size_t rep = 0;
  std::string strategy;
  double predicted = 0;
  double real = 0;
};

struct SimSummary {
  std::string strategy;
  double predicted_mean = 0, predicted_sd = 0;
  double real_mean = 0, real_sd = 0;
  std::optional<double> rho;  // against the baseline strategy
};

/// Mean and sample standard deviation per strategy, in first-seen order;
/// rho compares real availability means against `baseline`.
std::vector<SimSummary> summarize(std::span<const SimRow> rows, std::string_view baseline);

struct SimulationInputs {
  const AvailabilityMatrix* matrix = nullptr;  // test cohort matrix
  const PredictionMatrix* predictions = nullptr;  // aligned with matrix rows
  SlotRange reference;  // training-side observations (period C)
  SlotRange evaluation;  // prediction / measurement slots (period D)
};

struct DhtSimulation {
  std::size_t replicas = 0;
  std::vector<SimRow> rows;  // strategies "random" and "optimized"
};

DhtSimulation simulate_dht(const SimulationInputs& in, const ExperimentConfig& config,
                           bool verify_objective = false);

struct F2fSimulation {
  std::size_t capacity = 0;
  std::vector<SimRow> rows;  // strategies "random", "ra" and "predictive"
};

F2fSimulation simulate_f2f(const SimulationInputs& in, const ExperimentConfig& config,
                           bool check_invariants = false);

PreloadRun simulate_newsfeed(const SimulationInputs& in, const ExperimentConfig& config);

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::size_t train_users = 0;
  std::size_t test_users = 0;
  TrainedModel model;
  PredictionMatrix predictions;
  double auc = 0;
  double gm = 0;
  ClassAccuracy accuracy;
  std::vector<RocPoint> roc;
  std::vector<SeriesPoint> auc_series;
  std::vector<SeriesPoint> gm_series;
  std::vector<AblationRow> ablation;
  std::optional<DhtSimulation> dht;
  std::optional<F2fSimulation> f2f;
  std::optional<PreloadRun> newsfeed;
};

ExperimentReport run_experiment(const ExperimentConfig& config);
/// Same, on an already loaded trace.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const AvailabilityMatrix& trace);

/// Writes report.txt, model.txt, predictions.csv, metrics.csv, roc.csv,
/// auc_over_time.csv, gm_over_time.csv and, when present, ablation.csv,
/// dht.csv, dht_summary.csv, f2f.csv, f2f_summary.csv and newsfeed.csv.
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);

std::string format_metrics_csv(double auc, double gm, const ClassAccuracy& accuracy);
std::string format_roc_csv(const std::vector<RocPoint>& roc);
std::string format_series_csv(const std::vector<SeriesPoint>& series);
std::string format_ablation_csv(const std::vector<AblationRow>& rows);
std::string format_sim_csv(const std::vector<SimRow>& rows);
std::string format_summary_csv(const std::vector<SimSummary>& rows);

}  // namespace uptime
