#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dpfl/harness.hpp"
#include "dpfl/svg.hpp"
#include "dpfl/verify.hpp"

using namespace dpfl;

namespace {

// small but complete configuration for fast end-to-end runs
std::string small_cfg_text() {
  return "d = 80\n"
         "n = 8\n"
         "m = 2\n"
         "q = 3\n"
         "signal_norm = 4\n"
         "sigma_xi = 0.6\n"
         "sigma0 = 0.05\n"
         "eta = 0.02\n"
         "T = 40\n"
         "record_every = 10\n"
         "epsilon = 1\n"
         "delta = 1e-5\n"
         "noise_mode = shared\n"
         "C = 0.007\n"
         "seeds = 5\n"
         "n_mc = 200\n"
         "out_dir = /tmp/dpfl_test_out\n";
}

std::string slurp(const std::string& path) { return read_file(path); }

}  // namespace

TEST_CASE("config parsing: happy path and derived snr") {
  const ExperimentConfig cfg = parse_config_text(small_cfg_text());
  REQUIRE(cfg.d == 80);
  REQUIRE(cfg.signal_norm_fixed);
  REQUIRE(*cfg.snr == Catch::Approx(4.0 / (0.6 * std::sqrt(80.0))).epsilon(1e-12));
  REQUIRE(cfg.seeds == std::vector<std::uint64_t>{5});
}

TEST_CASE("config parsing: errors name the offending field") {
  REQUIRE_THROWS_WITH(parse_config_text("bogus_key = 1\nsnr = 1\nsigma_xi = 0.5\n"),
                      Catch::Matchers::ContainsSubstring("bogus_key"));
  REQUIRE_THROWS_WITH(parse_config_text("snr = 0.5\nsignal_norm = 2\nsigma_xi = 0.1\n"),
                      Catch::Matchers::ContainsSubstring("exactly one"));
  REQUIRE_THROWS_WITH(parse_config_text("snr = abc\nsigma_xi = 0.1\n"),
                      Catch::Matchers::ContainsSubstring("snr"));
  std::string bad = small_cfg_text() + "record_every = 99\n";
  REQUIRE_THROWS_WITH(parse_config_text(bad), Catch::Matchers::ContainsSubstring("record_every"));
}

TEST_CASE("with_snr keeps the pinned quantity and re-derives the other") {
  ExperimentConfig fixed_v = parse_config_text(small_cfg_text());
  const ExperimentConfig cell = fixed_v.with_snr(0.25);
  REQUIRE(*cell.signal_norm == 4.0);
  REQUIRE(cell.sigma_xi == Catch::Approx(4.0 / (0.25 * std::sqrt(80.0))).epsilon(1e-12));

  ExperimentConfig fixed_xi = parse_config_text("snr = 0.5\nsigma_xi = 0.6\nd = 80\n");
  const ExperimentConfig cell2 = fixed_xi.with_snr(1.5);
  REQUIRE(cell2.sigma_xi == 0.6);
  REQUIRE(*cell2.signal_norm == Catch::Approx(1.5 * 0.6 * std::sqrt(80.0)).epsilon(1e-12));
}

TEST_CASE("run writes the pinned CSV schema with the expected row count") {
  ExperimentConfig cfg = parse_config_text(small_cfg_text());
  cfg.out_dir = "/tmp/dpfl_test_run";
  std::filesystem::remove_all(cfg.out_dir);
  run_and_write(cfg, 5);
  const std::string text = slurp(cfg.out_dir + "/run_5.csv");
  REQUIRE(text.rfind("t,train_loss,max_gamma,max_abs_phi,max_phi_bar,min_phi_under,"
                     "recon_residual,test_error\n", 0) == 0);
  const auto rows = parse_run_csv(text);
  REQUIRE(rows.size() == 1 + 40 / 10);
  REQUIRE(rows.front().t == 0);
  REQUIRE(rows.back().t == 40);
  REQUIRE(rows.back().test_error.has_value());
  REQUIRE(!rows.front().test_error.has_value());
}

TEST_CASE("same config and seed reproduce a byte-identical CSV") {
  ExperimentConfig cfg = parse_config_text(small_cfg_text());
  cfg.out_dir = "/tmp/dpfl_test_det1";
  std::filesystem::remove_all(cfg.out_dir);
  run_and_write(cfg, 9);
  const std::string a = slurp(cfg.out_dir + "/run_9.csv");
  cfg.out_dir = "/tmp/dpfl_test_det2";
  std::filesystem::remove_all(cfg.out_dir);
  run_and_write(cfg, 9);
  const std::string b = slurp(cfg.out_dir + "/run_9.csv");
  REQUIRE(a == b);
}

TEST_CASE("manifest is sufficient to reproduce the run byte-for-byte") {
  ExperimentConfig cfg = parse_config_text(small_cfg_text());
  cfg.out_dir = "/tmp/dpfl_test_manifest";
  std::filesystem::remove_all(cfg.out_dir);
  run_and_write(cfg, 5);
  const std::string csv1 = slurp(cfg.out_dir + "/run_5.csv");

  ExperimentConfig replay = load_config(cfg.out_dir + "/manifest_5.json");
  replay.out_dir = "/tmp/dpfl_test_manifest_replay";
  std::filesystem::remove_all(replay.out_dir);
  run_and_write(replay, 5);
  const std::string csv2 = slurp(replay.out_dir + "/run_5.csv");
  REQUIRE(csv1 == csv2);
}

TEST_CASE("manifest records derived calibration and verdicts") {
  ExperimentConfig cfg = parse_config_text(small_cfg_text());
  const RunOutput out = run_one(cfg, 5);
  const auto j = run_manifest(out);
  REQUIRE(j.at("derived").at("sigma_z").get<double>() == out.train.calibration.sigma_z);
  REQUIRE(j.at("derived").at("delta2").get<double>() > 0);
  REQUIRE(!j.at("derived").at("regime").get<std::string>().empty());
  REQUIRE(j.at("config").at("C").get<double>() == Catch::Approx(0.007));
}

TEST_CASE("sweep emits one row per cell and is independent of worker count") {
  ExperimentConfig cfg = parse_config_text(small_cfg_text());
  cfg.T = 20;
  GridSpec grid;
  grid.snr = {0.3, 1.2};
  grid.epsilon = {1.0};
  grid.n_seeds = 2;
  grid.master_seed = 99;
  const auto cells1 = sweep(cfg, grid, 1);
  const auto cells4 = sweep(cfg, grid, 4);
  REQUIRE(cells1.size() == 4);
  REQUIRE(sweep_summary_csv(cells1) == sweep_summary_csv(cells4));
  for (const auto& c : cells1) REQUIRE(c.ok);
}

TEST_CASE("sweep records per-cell failures without aborting") {
  ExperimentConfig cfg = parse_config_text(small_cfg_text());
  cfg.T = 10;
  cfg.eta = 1e12;  // every cell blows up
  GridSpec grid;
  grid.snr = {0.5};
  grid.epsilon = {1.0};
  grid.n_seeds = 2;
  const auto cells = sweep(cfg, grid, 2);
  REQUIRE(cells.size() == 2);
  for (const auto& c : cells) {
    REQUIRE(!c.ok);
    REQUIRE(!c.error.empty());
  }
  const std::string csv = sweep_summary_csv(cells);
  REQUIRE_THAT(csv, Catch::Matchers::ContainsSubstring("error:"));
}

TEST_CASE("phase map emits the theory grid") {
  GridSpec grid;
  grid.snr = {0.2, 1.0, 3.0};
  grid.epsilon = {0.2, 1.0, 5.0};
  const std::string csv = phase_csv(grid, 100, 3, 1.0);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "snr,epsilon,n,q,c,signal_score,noise_score,verdict");
  int rows = 0;
  bool seen_signal = false, seen_noise = false;
  while (std::getline(in, line)) {
    ++rows;
    seen_signal = seen_signal || line.find("Signal") != std::string::npos;
    seen_noise = seen_noise || line.find("Noise") != std::string::npos;
  }
  REQUIRE(rows == 9);
  REQUIRE(seen_signal);
  REQUIRE(seen_noise);
}

TEST_CASE("plot: one CSV gives two polylines, two CSVs four, empty CSV errors") {
  ExperimentConfig cfg = parse_config_text(small_cfg_text());
  cfg.out_dir = "/tmp/dpfl_test_plot";
  std::filesystem::remove_all(cfg.out_dir);
  run_and_write(cfg, 5);
  const std::string csv = slurp(cfg.out_dir + "/run_5.csv");

  PlotOptions opt;
  const std::string one = plot_runs_svg({csv}, {"a"}, opt);
  std::size_t count = 0;
  for (std::size_t p = one.find("<polyline"); p != std::string::npos;
       p = one.find("<polyline", p + 1))
    ++count;
  REQUIRE(count == 2);

  const std::string two = plot_runs_svg({csv, csv}, {"a", "b"}, opt);
  count = 0;
  for (std::size_t p = two.find("<polyline"); p != std::string::npos;
       p = two.find("<polyline", p + 1))
    ++count;
  REQUIRE(count == 4);

  const std::string header_only = std::string(kRunCsvHeader) + "\n";
  REQUIRE_THROWS(plot_runs_svg({header_only}, {"x"}, opt));
  REQUIRE_THROWS_WITH(plot_runs_svg({"t,wrong\n1,2\n"}, {"x"}, opt),
                      Catch::Matchers::ContainsSubstring("missing column"));
}

TEST_CASE("export formats carry the documented headers") {
  ExperimentConfig cfg = parse_config_text(small_cfg_text());
  const RunOutput out = run_one(cfg, 5);
  const std::string coeff = coefficient_csv_text(out.train.table);
  REQUIRE(coeff.rfind("t,j,r,i,gamma,phi_bar,phi_under\n", 0) == 0);
  const std::string wcsv = weights_csv_text(out.train.final_weights);
  REQUIRE(wcsv.rfind("j,r,entries...\n", 0) == 0);
  const std::string dcsv = dataset_csv_text(out.dataset);
  REQUIRE(dcsv.rfind("i,y,patch1_0", 0) == 0);
}

TEST_CASE("quick verify suite is green") {
  const VerifyReport rep = run_verify(true);
  for (const auto& c : rep.checks) {
    INFO(c.module << ": " << c.name << " -- " << c.detail);
    if (c.hard) REQUIRE(c.pass);
  }
}
