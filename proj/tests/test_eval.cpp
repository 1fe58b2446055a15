#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pqz/evalmod.hpp"
#include "helpers.hpp"

using namespace pqz;
using namespace pqz::eval;

TEST_CASE("compression rate arithmetic") {
  CHECK(compression_rate(2048) == doctest::Approx(10.0));
  CHECK(compression_rate(20480) == doctest::Approx(1.0));
  CHECK(compression_rate(30000) < 1.0);  // incompressible blocks report honestly
  CHECK_THROWS_AS(compression_rate(0), InvalidArgument);
}

TEST_CASE("nmse and max error identities") {
  const auto x = test::make_sine();
  CHECK(nmse(x, x) == 0.0);
  CHECK(max_error(x, x) == 0.0);

  const std::vector<double> zeros(x.size(), 0.0);
  CHECK(nmse(x, zeros) == doctest::Approx(1.0));

  auto bumped = x;
  const double e = 0.037;
  bumped[100] += e;
  double norm_sq = 0.0;
  for (double v : x) norm_sq += v * v;
  CHECK(max_error(x, bumped) == doctest::Approx(e));
  CHECK(nmse(x, bumped) == doctest::Approx(e * e / norm_sq));

  CHECK_THROWS_AS(nmse(zeros, x), InvalidArgument);
}

TEST_CASE("a small experiment produces per-signal rows plus one aggregate") {
  Grid grid;
  grid.schemes = {{pipeline::Stage1Sel::Identity, pipeline::Stage2Sel::UniformQ}};
  grid.bounds = {0.01};
  grid.noise_levels = {std::nullopt};
  std::vector<Signal> corpus(test::small_dataset().eval.begin(),
                             test::small_dataset().eval.begin() + 10);
  const Experiment exp = run_experiment(grid, corpus, test::small_store(), Exec::Serial);

  std::size_t signal_rows = 0, aggregate_rows = 0;
  for (const auto& row : exp.rows) {
    (row.aggregate ? aggregate_rows : signal_rows)++;
    if (!row.aggregate) {
      CHECK(row.ok);
      CHECK(row.max_error <= row.e_bound);
      CHECK(row.compression_rate > 0.0);
    }
  }
  CHECK(signal_rows == 10);
  CHECK(aggregate_rows == 1);

  const Aggregate* overall = exp.find("identity+uniform", 0.01, std::nullopt, -1);
  REQUIRE(overall != nullptr);
  CHECK(overall->count == 10);
  CHECK(overall->bound_violations == 0);
}

TEST_CASE("failing configs become flagged rows instead of aborting") {
  Grid grid;
  grid.schemes = {{pipeline::Stage1Sel::LinearAE8, pipeline::Stage2Sel::UniformQ},
                  {pipeline::Stage1Sel::Identity, pipeline::Stage2Sel::UniformQ}};
  grid.bounds = {0.01};
  grid.noise_levels = {std::nullopt};
  std::vector<Signal> corpus(test::small_dataset().eval.begin(),
                             test::small_dataset().eval.begin() + 3);
  pipeline::ModelStore bare;  // LinearAE deliberately missing
  const Experiment exp = run_experiment(grid, corpus, bare, Exec::Serial);

  std::size_t failed = 0, succeeded = 0;
  for (const auto& row : exp.rows) {
    if (row.aggregate) continue;
    if (row.ok) {
      ++succeeded;
    } else {
      ++failed;
      CHECK(row.error.find("model not available") != std::string::npos);
    }
  }
  CHECK(failed == 3);
  CHECK(succeeded == 3);
}

TEST_CASE("experiment rows are deterministic") {
  Grid grid;
  grid.schemes = {{pipeline::Stage1Sel::CS16, pipeline::Stage2Sel::Predictive}};
  grid.bounds = {0.01, 0.1};
  grid.noise_levels = {std::nullopt, 50.0};
  std::vector<Signal> corpus(test::small_dataset().eval.begin(),
                             test::small_dataset().eval.begin() + 4);
  const Experiment a = run_experiment(grid, corpus, test::small_store(), Exec::Serial);
  const Experiment b = run_experiment(grid, corpus, test::small_store(), Exec::Serial);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].scheme == b.rows[i].scheme);
    CHECK(a.rows[i].compressed_bytes == b.rows[i].compressed_bytes);
    CHECK(a.rows[i].nmse == b.rows[i].nmse);
  }
}

TEST_CASE("identical transform specs count identical residual fractions") {
  const Signal& sig = test::small_dataset().eval[2];
  TransformSpec spec;
  spec.stage1 = pipeline::Stage1Sel::CS16;
  spec.stage2 = pipeline::Stage2Sel::None;
  const auto [fa, fb] = count_added_residuals(sig.samples, spec, spec, 0.001,
                                              test::small_store());
  CHECK(fa == fb);
  CHECK(fa >= 0.0);
  CHECK(fa <= 1.0);
}

TEST_CASE("csv report is written with the versioned header") {
  Grid grid;
  grid.schemes = {{pipeline::Stage1Sel::Identity, pipeline::Stage2Sel::UniformQ}};
  grid.bounds = {0.1};
  grid.noise_levels = {std::nullopt};
  std::vector<Signal> corpus(test::small_dataset().eval.begin(),
                             test::small_dataset().eval.begin() + 2);
  const Experiment exp = run_experiment(grid, corpus, test::small_store(), Exec::Serial);
  const auto path = std::filesystem::temp_directory_path() / "pqz_test_report.csv";
  write_csv(exp, path.string());

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# pqzip-report v1");
  std::getline(in, line);
  CHECK(line.find("row_type,scheme,e_bound") == 0);
  std::size_t data_lines = 0;
  while (std::getline(in, line)) ++data_lines;
  CHECK(data_lines == exp.rows.size());
  std::filesystem::remove(path);
}
