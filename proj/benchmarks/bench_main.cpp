#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "icd/gbdt.hpp"
#include "icd/imputation.hpp"
#include "icd/pair_gen.hpp"
#include "icd/synth.hpp"
#include "icd/textsim.hpp"

namespace {

std::string random_name(std::mt19937_64& gen, std::size_t len) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz_0123456789";
  std::string s(len, 'a');
  for (auto& c : s) c = alphabet[gen() % alphabet.size()];
  return s;
}

void BM_JaroWinkler(benchmark::State& state) {
  std::mt19937_64 gen(1);
  const auto len = static_cast<std::size_t>(state.range(0));
  std::vector<std::string> names;
  for (int i = 0; i < 256; ++i) names.push_back(random_name(gen, len));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(icd::jaro_winkler(names[i % 256], names[(i + 1) % 256]));
    ++i;
  }
}
BENCHMARK(BM_JaroWinkler)->Arg(8)->Arg(16)->Arg(32);

void BM_CandidatePairs(benchmark::State& state) {
  std::mt19937_64 gen(2);
  std::vector<icd::AccountRecord> records;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    icd::AccountRecord r;
    r.account_id = "a" + std::to_string(i);
    r.username = random_name(gen, 4 + gen() % 9);
    r.screen_name = random_name(gen, 4 + gen() % 11);
    if (i > 0 && gen() % 4 == 0) r.username = records[gen() % records.size()].username + "x";
    records.push_back(std::move(r));
  }
  const icd::AccountTable table(std::move(records));
  for (auto _ : state) benchmark::DoNotOptimize(icd::generate_candidate_pairs(table));
}
BENCHMARK(BM_CandidatePairs)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_CopulaEm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  icd::FeatureMatrix data = icd::sample_copula_features(icd::synthetic_sigma(), n, 3);
  std::mt19937_64 gen(4);
  std::bernoulli_distribution hide(0.3);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < data.cols(); ++j) {
      if (hide(gen) && data.observed_in_row(i) > 1) data.hide(i, j);
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(icd::fit_copula_em(data));
}
BENCHMARK(BM_CopulaEm)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_GbdtTrain(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t kP = 42;
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal;
  std::vector<double> rows(n * kP);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double score = 0.0;
    for (std::size_t j = 0; j < kP; ++j) {
      rows[i * kP + j] = normal(gen);
      score += j < 5 ? rows[i * kP + j] : 0.0;
    }
    labels[i] = score + normal(gen) > 1.0 ? 1 : 0;
  }
  icd::GbdtParams p = icd::GbdtParams::for_mask_rate(0.5);
  p.n_trees = 50;
  for (auto _ : state) benchmark::DoNotOptimize(icd::train_gbdt(rows, kP, labels, p, 6));
}
BENCHMARK(BM_GbdtTrain)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
