#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "populations.hpp"
#include "uptime/error.hpp"
#include "uptime/pipeline.hpp"
#include "uptime/synth.hpp"

using namespace uptime;

namespace {

ExperimentConfig quick_config() {
  ExperimentConfig c;
  c.ablation = false;
  c.seed = 5;
  return c;
}

AvailabilityMatrix daily_population(std::size_t users, std::uint64_t seed) {
  std::vector<UserProfile> profiles;
  for (std::size_t u = 0; u < users; ++u)
    profiles.push_back(testpop::diurnal(static_cast<double>((u * 5) % 24)));
  return generate_trace(profiles, 24, seed);
}

}  // namespace

TEST(Config, RoundTripAndErrors) {
  auto c = parse_config("# comment\nprofiles=p.txt\nweeks=24\nfilter=superpeer\n"
                        "dht=1\ndht_reps=3\nseed=99\n");
  EXPECT_EQ(c.filter, FilterMode::superpeer);
  EXPECT_TRUE(c.dht);
  EXPECT_EQ(c.dht_reps, 3u);
  EXPECT_EQ(c.seed, 99u);
  const auto again = parse_config(format_config(c));
  EXPECT_EQ(format_config(again), format_config(c));
  EXPECT_THROW(parse_config("nonsense=1\n"), DataError);
  EXPECT_THROW(parse_config("weeks=abc\n"), DataError);
  EXPECT_THROW(parse_config("filter=some\n"), DataError);
  EXPECT_THROW(load_trace(parse_config("trace=a\nprofiles=b\n")), DataError);
  EXPECT_THROW(load_trace(parse_config("seed=1\n")), DataError);
}

TEST(Cohorts, PeriodsAndFilter) {
  auto m = testpop::random_matrix(6, 4032, 0.1, 1);
  for (std::size_t t = 0; t < 1008; ++t) m.set(0, t, true);
  for (std::size_t t = 2016; t < 3024; ++t) m.set(1, t, true);
  const auto [train, test] = make_cohorts(m, FilterMode::all, 4);
  EXPECT_EQ(train.features, (SlotRange{0, 1008}));
  EXPECT_EQ(train.labels, (SlotRange{1008, 2016}));
  EXPECT_EQ(test.features, (SlotRange{2016, 3024}));
  EXPECT_EQ(test.labels, (SlotRange{3024, 4032}));
  EXPECT_EQ(train.matrix.user_count(), 6u);
  const auto [strain, stest] = make_cohorts(m, FilterMode::superpeer, 4);
  EXPECT_EQ(strain.matrix.users(), (std::vector<std::string>{"n000"}));
  EXPECT_EQ(stest.matrix.users(), (std::vector<std::string>{"n001"}));
  EXPECT_THROW(make_cohorts(testpop::random_matrix(3, 4000, 0.5, 1), FilterMode::all, 4),
               DataError);
}

TEST(Experiment, NoLeakageOfTestLabels) {
  const auto m = daily_population(20, 3);
  auto blanked = m;
  for (std::size_t u = 0; u < m.user_count(); ++u)
    for (std::size_t t = 3024; t < 4032; ++t) blanked.set(u, t, false);
  const auto [train, test] = make_cohorts(m, FilterMode::all, 4);
  const auto [btrain, btest] = make_cohorts(blanked, FilterMode::all, 4);
  const auto model = train_model(train, true);
  const auto bmodel = train_model(btrain, true);
  EXPECT_EQ(model.posterior.mean, bmodel.posterior.mean);
  EXPECT_EQ(predict_cohort(model, test), predict_cohort(bmodel, btest));
}

TEST(Experiment, DeterministicAndThreadIndependent) {
  const auto m = daily_population(16, 4);
  auto c = quick_config();
  c.ablation = true;
  const auto a = run_experiment(c, m);
  const auto b = run_experiment(c, m);
  EXPECT_EQ(a.predictions, b.predictions);
  EXPECT_EQ(a.auc, b.auc);
  EXPECT_EQ(format_ablation_csv(a.ablation), format_ablation_csv(b.ablation));
}

TEST(Experiment, NullPopulationAucNearHalf) {
  const std::vector<UserProfile> profiles(40, testpop::flat(0.5));
  const auto m = generate_trace(profiles, 24, 11);
  const auto r = run_experiment(quick_config(), m);
  EXPECT_GE(r.auc, 0.47);
  EXPECT_LE(r.auc, 0.53);
}

TEST(Experiment, ScoresMatchPredictions) {
  const auto m = daily_population(10, 6);
  const auto r = run_experiment(quick_config(), m);
  const auto s = score_predictions(r.predictions, m, {3024, 4032});
  EXPECT_EQ(s.size(), 10u * 1008u);
  EXPECT_EQ(auc(s), r.auc);
  EXPECT_EQ(gm(s), r.gm);
  EXPECT_FALSE(r.auc_series.empty());
  EXPECT_EQ(r.auc_series.front().slot, 3024u + 167u);
}

TEST(Ablation, DailyStructureFavoursIndividualDaily) {
  const auto m = daily_population(30, 7);
  const auto [train, test] = make_cohorts(m, FilterMode::all, 4);
  const auto rows = per_feature_ablation(train, test, true);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].feature, "all");
  EXPECT_FALSE(rows[0].beta_mean.has_value());
  double best = 0;
  std::string best_name;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_TRUE(rows[i].beta_mean.has_value());
    EXPECT_GT(*rows[i].beta_sd, 0.0);
    if (rows[i].auc > best) {
      best = rows[i].auc;
      best_name = rows[i].feature;
    }
  }
  EXPECT_EQ(best_name, "individual_daily");
  EXPECT_GE(rows[0].auc, best - 0.01);
}

TEST(Ablation, IdenticalUsersMakeGlobalAndIndividualEquivalent) {
  const std::vector<UserProfile> profiles(30, testpop::office(0.9, 0.05));
  const auto m = generate_trace(profiles, 24, 8);
  const auto [train, test] = make_cohorts(m, FilterMode::all, 4);
  const auto rows = per_feature_ablation(train, test, true);
  auto find = [&](std::string_view name) {
    return std::find_if(rows.begin(), rows.end(),
                        [&](const AblationRow& r) { return r.feature == name; })->auc;
  };
  EXPECT_LT(std::abs(find("global_daily") - find("individual_daily")), 0.02);
  EXPECT_LT(std::abs(find("global_weekly") - find("individual_weekly")), 0.02);
}

TEST(Summary, SampleStatisticsAndRho) {
  const std::vector<SimRow> rows{{0, "random", 0.5, 0.90}, {0, "optimized", 0.6, 0.95},
                                 {1, "random", 0.7, 0.90}, {1, "optimized", 0.8, 0.99}};
  const auto s = summarize(rows, "random");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].strategy, "random");
  EXPECT_NEAR(s[0].predicted_mean, 0.6, 1e-15);
  EXPECT_NEAR(s[0].predicted_sd, std::sqrt(0.02), 1e-15);
  EXPECT_NEAR(*s[1].rho, std::log(1 - 0.97) / std::log(1 - 0.90) - 1, 1e-12);
  EXPECT_EQ(format_summary_csv(s).substr(0, 56),
            "strategy,predicted_mean,predicted_sd,real_mean,real_sd,r");
}

TEST(Simulations, SmallRunsProduceRows) {
  const auto m = daily_population(24, 9);
  auto c = quick_config();
  c.dht = c.f2f = c.newsfeed = true;
  c.dht_reps = c.f2f_reps = 2;
  c.dht_iterations = 5;
  c.f2f_degree = 4;
  const auto r = run_experiment(c, m);
  ASSERT_TRUE(r.dht && r.f2f && r.newsfeed);
  EXPECT_EQ(r.dht->rows.size(), 4u);
  EXPECT_EQ(r.f2f->rows.size(), 6u);
  EXPECT_EQ(r.newsfeed->n_values.size(), 20u);
  for (const auto& row : r.dht->rows) {
    EXPECT_GE(row.real, 0.0);
    EXPECT_LE(row.real, 1.0);
  }
}
