#pragma once

#include <string>

#include "drace/race_sim.hpp"

namespace drace {

struct RaceScenario {
  TrackModel track;
  RaceConfig config;
};

struct CampaignScenario {
  TrackModel track;
  CampaignConfig config;
};

/// Campaign parameters of the simulation study: 0.6 vs 0.5 m/s with the fast
/// player starting behind, 0.8 m separation, sampling rectangles on the main
/// straight, finish line at x = 2.32 m, and the six planner matchups.
CampaignConfig paper_campaign_defaults();

/// Two-player race scenario file; track path resolved relative to the file.
RaceScenario load_race_scenario(const std::string& path);

/// Campaign scenario file (fast/slow player blocks, sampling rectangles,
/// matchup list).
CampaignScenario load_campaign_scenario(const std::string& path);

/// Output writers. All number formatting is deterministic so identical runs
/// produce byte-identical files.
void write_trace_csv(const RaceOutcome& outcome, const std::string& path);
void write_scenario_gaps_csv(const ScenarioReport& report, const std::string& path);
void write_campaign_summary_json(const CampaignReport& report, int n_races, std::uint64_t seed,
                                 const std::string& path);

}  // namespace drace
