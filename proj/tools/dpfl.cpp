// Command-line front end: single runs, sweeps, phase maps, the invariant
// suite and SVG plots. All state flows through flags and files.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpfl/harness.hpp"
#include "dpfl/svg.hpp"
#include "dpfl/verify.hpp"

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& out_dir) {
  dpfl::ExperimentConfig cfg = dpfl::load_config(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  std::vector<std::uint64_t> seeds = seed ? std::vector<std::uint64_t>{*seed} : cfg.seeds;
  for (std::uint64_t s : seeds) {
    const dpfl::RunOutput out = dpfl::run_and_write(cfg, s);
    const auto& last = out.train.series.back();
    std::cout << "seed " << s << ": T=" << last.t << " train_loss=" << dpfl::fmt9(last.train_loss)
              << " max_gamma=" << dpfl::fmt9(last.max_gamma)
              << " max_abs_phi=" << dpfl::fmt9(last.max_abs_phi)
              << " test_error=" << dpfl::fmt9(out.eval.test_error_01)
              << " regime=" << dpfl::to_string(out.regime_verdict.verdict)
              << " verdict=" << dpfl::to_string(out.verdict.cls) << "\n";
    std::cout << "  wrote " << cfg.out_dir << "/run_" << s << ".csv and manifest_" << s
              << ".json\n";
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_path,
              const std::string& out_dir, int jobs) {
  dpfl::ExperimentConfig cfg = dpfl::load_config(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  const dpfl::GridSpec grid = dpfl::load_grid(grid_path);
  const auto cells = dpfl::sweep(cfg, grid, jobs);
  const std::string path = cfg.out_dir + "/sweep_summary.csv";
  dpfl::write_file(path, dpfl::sweep_summary_csv(cells));
  int ok = 0;
  for (const auto& c : cells) ok += c.ok;
  std::cout << "sweep: " << ok << "/" << cells.size() << " cells ok -> " << path << "\n";
  return 0;
}

int cmd_phase(const std::string& grid_path, int n, int q, double c, const std::string& out_path) {
  const dpfl::GridSpec grid = dpfl::load_grid(grid_path);
  const std::string csv = dpfl::phase_csv(grid, n, q, c);
  dpfl::write_file(out_path, csv);
  std::cout << "phase map (" << grid.snr.size() << " x " << grid.epsilon.size() << ") -> "
            << out_path << "\n";
  return 0;
}

int cmd_verify(bool quick) {
  const dpfl::VerifyReport rep = dpfl::run_verify(quick);
  std::cout << dpfl::verify_report_text(rep);
  return rep.ok() ? 0 : 1;
}

int cmd_plot(const std::vector<std::string>& csv_paths, const std::string& out_path, bool logy,
             const std::string& title) {
  std::vector<std::string> texts, labels;
  for (const auto& p : csv_paths) {
    texts.push_back(dpfl::read_file(p));
    auto base = p;
    const auto slash = base.find_last_of('/');
    if (slash != std::string::npos) base = base.substr(slash + 1);
    const auto dot = base.find_last_of('.');
    if (dot != std::string::npos) base = base.substr(0, dot);
    labels.push_back(base);
  }
  dpfl::PlotOptions opt;
  opt.log_y = logy;
  opt.title = title;
  const std::string svg = dpfl::plot_runs_svg(texts, labels, opt);
  dpfl::write_file(out_path, svg);
  std::cout << "plot -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisy gradient descent feature-learning simulator"};
  app.require_subcommand(1);

  std::string config_path, grid_path, out_dir, out_path, title;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  bool quick = false, logy = false;
  std::vector<std::string> csv_paths;
  int phase_n = 100, phase_q = 3;
  double phase_c = 1.0;

  auto* run = app.add_subcommand("run", "one seeded training run per configured seed");
  run->add_option("--config", config_path, "config file (flat key=value or manifest JSON)")
      ->required();
  run->add_option("--seed", seed, "override: run only this seed");
  run->add_option("--out", out_dir, "output directory (overrides config out_dir)");

  auto* sweep = app.add_subcommand("sweep", "snr x epsilon x seed grid");
  sweep->add_option("--config", config_path, "base config file")->required();
  sweep->add_option("--grid", grid_path, "grid file (snr/epsilon lists, n_seeds, master_seed)")
      ->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--jobs", jobs, "worker threads (default: hardware)");

  auto* phase = app.add_subcommand("phase", "theory-only regime map over a grid");
  phase->add_option("--grid", grid_path, "grid file")->required();
  phase->add_option("--n", phase_n, "sample size for the verdicts");
  phase->add_option("--q", phase_q, "activation power");
  phase->add_option("--c", phase_c, "verdict threshold");
  phase->add_option("--out", out_path, "output CSV path")->default_val("phase.csv");

  auto* verify = app.add_subcommand("verify", "small-scale invariant suite; nonzero exit on failure");
  verify->add_flag("--quick", quick, "reduced seed counts");

  auto* plot = app.add_subcommand("plot", "render run CSVs as an SVG chart");
  plot->add_option("csv", csv_paths, "run CSV files")->required()->expected(-1);
  plot->add_option("--out", out_path, "output SVG path")->default_val("plot.svg");
  plot->add_flag("--logy", logy, "logarithmic y axis");
  plot->add_option("--title", title, "chart title");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, out_dir);
    if (sweep->parsed()) return cmd_sweep(config_path, grid_path, out_dir, jobs);
    if (phase->parsed()) return cmd_phase(grid_path, phase_n, phase_q, phase_c, out_path);
    if (verify->parsed()) return cmd_verify(quick);
    if (plot->parsed()) return cmd_plot(csv_paths, out_path, logy, title);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
