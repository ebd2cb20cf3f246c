#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "drace/config.hpp"
#include "drace/verify.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_track_info(const std::string& path) {
  const drace::TrackModel track = drace::load_track(path);
  std::printf("track: %s\n", path.c_str());
  std::printf("  total length: %.6f m\n", track.total_length());
  std::printf("  half width:   %.6f m\n", track.half_width());
  std::printf("  %-4s %-5s %10s %10s %12s %12s\n", "#", "kind", "tau0", "length", "curvature",
              "start");
  for (size_t i = 0; i < track.segments().size(); ++i) {
    const drace::Segment& s = track.segments()[i];
    std::printf("  %-4zu %-5s %10.4f %10.4f %12.6f   (%.3f, %.3f)\n", i,
                s.kind == drace::Segment::Kind::line ? "line" : "arc", s.tau0, s.length,
                s.curvature, s.start.x(), s.start.y());
  }
  return 0;
}

int cmd_race(const std::string& scenario_path, const std::string& out_dir) {
  const drace::RaceScenario scenario = drace::load_race_scenario(scenario_path);
  const drace::RaceOutcome outcome = drace::run_race(scenario.track, scenario.config);
  const char* winner = outcome.winner < 0 ? "timeout" : (outcome.winner == 0 ? "p0" : "p1");
  std::printf("race: winner=%s gap=%.4f m duration=%.2f s min_sep=%.4f m violations=%zu\n",
              winner, outcome.final_gap, outcome.duration, outcome.min_separation,
              outcome.violations.size());
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    drace::write_trace_csv(outcome, (fs::path(out_dir) / "trace.csv").string());
    std::printf("trace written to %s\n", (fs::path(out_dir) / "trace.csv").c_str());
  }
  return 0;
}

int cmd_campaign(const std::string& scenario_path, int n, std::uint64_t seed,
                 const std::string& out_dir, bool traces, bool timing) {
  drace::CampaignScenario scenario = drace::load_campaign_scenario(scenario_path);
  scenario.config.keep_traces = traces;
  const drace::CampaignReport report =
      drace::run_campaign(scenario.track, scenario.config, n, seed);

  std::printf("%-4s %-5s %-5s %10s %10s %9s %12s %12s\n", "case", "fast", "slow", "wins_fast",
              "wins_slow", "timeouts", "gap_mean", "gap_std");
  for (const drace::ScenarioReport& sr : report.scenarios) {
    std::printf("%-4s %-5s %-5s %10d %10d %9d %12.4f %12.4f\n", sr.spec.name.c_str(),
                drace::to_string(sr.spec.fast_kind).c_str(),
                drace::to_string(sr.spec.slow_kind).c_str(), sr.wins_fast, sr.wins_slow,
                sr.timeouts, sr.mean_gap_signed, sr.std_gap_signed);
  }
  std::printf("campaign wall time: %.1f s (%d races)\n", report.wall_seconds,
              n * static_cast<int>(report.scenarios.size()));

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    for (const drace::ScenarioReport& sr : report.scenarios)
      drace::write_scenario_gaps_csv(
          sr, (fs::path(out_dir) / ("scenario_" + sr.spec.name + "_gaps.csv")).string());
    drace::write_campaign_summary_json(report, n, seed,
                                       (fs::path(out_dir) / "summary.json").string());
    if (traces) {
      const fs::path tdir = fs::path(out_dir) / "traces";
      fs::create_directories(tdir);
      for (const drace::ScenarioReport& sr : report.scenarios)
        for (const drace::RaceRecord& r : sr.races) {
          drace::RaceOutcome shim;
          shim.trace = r.trace;
          drace::write_trace_csv(shim, (tdir / (sr.spec.name + "_" + std::to_string(r.index) +
                                                ".csv"))
                                           .string());
        }
    }
    if (timing) {
      std::ofstream t((fs::path(out_dir) / "timing.json").string());
      t << "{\"wall_seconds\": " << report.wall_seconds << "}\n";
    }
    std::printf("outputs written under %s\n", out_dir.c_str());
  }
  return 0;
}

int run_verify(const std::vector<drace::verify::Check>& checks) {
  return drace::verify::report(checks, std::cout) == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Game-theoretic drone racing planner, baselines, and race simulator"};
  app.require_subcommand(1);

  std::string track_path;
  auto* track_info = app.add_subcommand("track-info", "Print track geometry");
  track_info->add_option("track", track_path, "track JSON file")
      ->required()
      ->check(CLI::ExistingFile);

  std::string race_path, race_out;
  auto* race = app.add_subcommand("race", "Run a single race scenario");
  race->add_option("scenario", race_path, "race scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  race->add_option("--out", race_out, "output directory for the trace CSV");

  std::string camp_path, camp_out;
  int camp_n = 50;
  std::uint64_t camp_seed = 1;
  bool camp_traces = false, camp_timing = false;
  auto* campaign = app.add_subcommand("campaign", "Run the simulation campaign");
  campaign->add_option("scenario", camp_path, "campaign scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  campaign->add_option("--n", camp_n, "races per scenario")->check(CLI::PositiveNumber);
  campaign->add_option("--seed", camp_seed, "master seed");
  campaign->add_option("--out", camp_out, "output directory");
  campaign->add_flag("--traces", camp_traces, "also write per-race trace CSVs");
  campaign->add_flag("--timing", camp_timing, "also write timing.json (not reproducible)");

  std::uint64_t verify_seed = 20240901;
  auto* vsens = app.add_subcommand("verify-sensitivity",
                                   "Finite-difference checks of both sensitivity results");
  vsens->add_option("--seed", verify_seed);
  auto* vnash = app.add_subcommand("verify-nash", "IBR convergence and Nash residual check");
  vnash->add_option("--seed", verify_seed);
  auto* voracle = app.add_subcommand("verify-oracle", "Solver-vs-grid-oracle check");
  voracle->add_option("--seed", verify_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (track_info->parsed()) return cmd_track_info(track_path);
    if (race->parsed()) return cmd_race(race_path, race_out);
    if (campaign->parsed())
      return cmd_campaign(camp_path, camp_n, camp_seed, camp_out, camp_traces, camp_timing);
    if (vsens->parsed())
      return run_verify({drace::verify::check_sensitivity_formula(verify_seed),
                         drace::verify::check_lemma1(verify_seed)});
    if (vnash->parsed()) return run_verify({drace::verify::check_theorem1(verify_seed)});
    if (voracle->parsed()) return run_verify({drace::verify::check_solver_optimality(verify_seed)});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
