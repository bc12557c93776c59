#pragma once

// Agent-based semester simulator. Agents write into projects and trade their
// shares through the production engine (Market); nothing here bypasses the
// engine's rules.
//
// Behavioural model (fundamentalist with noise):
//   * each agent has a log-normal effort rate (bytes/day), a private signal
//     noise, a trading propensity and a project-creation rate;
//   * every project gets a hidden true value per share, log-normal around
//     the par price; an agent's estimate is that value times
//     exp(noise * N(0,1)), drawn once per (agent, project);
//   * contributions go preferentially to projects the agent believes are
//     undervalued (estimate > last price), weighted by estimate/price - 1;
//   * orders nudge the price toward the agent's estimate;
//   * at the end the instructor values every project at its true value.
//
// The defaults are tuned to reproduce the qualitative stylized facts, they
// are not calibrated to any classroom data.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wikimarket/market.hpp"
#include "wikimarket/scoring.hpp"

namespace wikimarket::sim {

struct SimConfig {
    int n_agents = 50;
    int n_days = 120;
    Money endowment = Money::er(10'000);

    // effort: bytes/day ~ LogNormal(effort_mu_ln, effort_sigma_ln)
    double effort_mu_ln = 6.3;
    double effort_sigma_ln = 2.0;
    std::int64_t min_contribution_bytes = 8;
    // pages stop growing past this size; further edits rewrite existing lines
    std::int64_t page_cap_bytes = 8'000;
    std::int64_t max_daily_bytes = 1'000'000;  // per agent
    // undervalued projects are picked with weight (estimate/price - 1)^focus
    double contribution_focus = 6.0;

    // true value per share ~ par * LogNormal(0, quality_sigma_ln)
    double quality_sigma_ln = 1.5;

    // private estimate noise (s.d. of the log error), drawn per agent
    double noise_min = 0.05;
    double noise_max = 1.5;
    // > 0 makes heavier contributors better informed:
    // noise *= (median effort / effort)^noise_effort_elasticity, then clamped
    // to [noise_min, noise_max]
    double noise_effort_elasticity = 2.0;

    // > 0 makes effort compound on success:
    // daily effort = effort_rate * (ex-ante wealth / endowment)^wealth_effort_elasticity
    double wealth_effort_elasticity = 0.4;

    double trade_propensity_min = 0.2;
    double trade_propensity_max = 0.9;
    double project_creation_rate = 0.01;  // expected new projects per agent-day

    double order_cash_fraction = 0.2;     // of free cash committed per bid
    double order_share_fraction = 0.3;    // of free holdings offered per ask
    double price_threshold = 0.02;        // relative mispricing before trading
    // with cash below this fraction of the endowment an agent offers shares
    // of one holding (picked by market value) at its own estimate (0 disables)
    double liquidity_target = 0.6;
    int order_max_age_days = 5;           // resting orders older than this are cancelled

    std::uint64_t seed = 1;

    /// Throws InvalidConfig on invalid parameters.
    void validate() const;

    static SimConfig from_json(const nlohmann::json& j);  // unknown keys rejected
    nlohmann::json to_json() const;
    static SimConfig load(const std::filesystem::path& path);
};

struct AgentProfile {
    ParticipantId participant_id;
    double effort_rate = 0;  // expected bytes/day
    double signal_noise = 0;
    double trade_propensity = 0;
    double project_creation_rate = 0;
};

struct AgentResult {
    AgentProfile profile;
    std::int64_t bytes = 0;
    Money ex_ante;
    Money ex_post;
};

struct ProjectResult {
    ProjectId id = 0;
    ParticipantId creator;
    int created_day = 0;
    Money true_value;
    Money final_price;
    std::int64_t trades = 0;
    std::int64_t bytes = 0;
    ShareQty shares_outstanding;
    std::vector<Money> daily_close;  // last price at the end of each day since creation
};

struct IssuanceObservation {
    ProjectId project = 0;
    std::int64_t bytes = 0;
    Money price;
    ShareQty issued;
};

struct LiquidityStats {
    std::int64_t orders = 0;
    std::int64_t trades = 0;
    std::int64_t cancels = 0;
    double trades_per_project_day = 0;
};

struct SimReport {
    SimConfig config;
    std::vector<AgentResult> agents;      // by participant id
    std::vector<ProjectResult> projects;  // by project id
    scoring::ContributionMatrix matrix;
    std::optional<scoring::FitResult> fit;  // ex-ante score vs bytes
    LiquidityStats liquidity;
    std::vector<IssuanceObservation> issuances;
    std::string journal_digest;  // sha256 over the journal lines
    std::string state_digest;    // Market::snapshot_digest at the end
    std::size_t journal_records = 0;

    double max_over_mean_contribution() const;
};

struct SimRun {
    SimReport report;
    Market market;
    std::vector<EventRecord> journal;
};

/// Runs one semester. `config.seed` selects the random stream.
SimRun run_semester_full(const SimConfig& config);
SimReport run_semester(const SimConfig& config);
SimReport run_semester(SimConfig config, std::uint64_t seed);

enum class PriceVsFounding { Above, AtPar, Below };
enum class PriceVsTruth { Over, Fair, Under };

struct ProjectClassification {
    ProjectId project = 0;
    PriceVsFounding vs_founding = PriceVsFounding::AtPar;
    PriceVsTruth vs_truth = PriceVsTruth::Fair;
};

struct CreativeDestruction {
    std::vector<ProjectClassification> projects;
    /// Spearman correlation of final price vs true value; empty when no
    /// trade ever happened or either side has no variance.
    std::optional<double> rank_correlation;
    /// Share of bottom-quality-quartile projects that ended below par;
    /// empty with fewer than 4 projects.
    std::optional<double> bottom_quartile_below_par;
};

/// `fair_band` is the relative distance from the true value still called fair.
CreativeDestruction creative_destruction_probe(const SimReport& report, double fair_band = 0.10);

/// Spearman rank correlation with average ranks for ties.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Writes matrix.csv, scaling_points.csv, price_series.csv, projects.csv and
/// summary.txt into `out_dir` (created if needed). Throws IoFailure.
std::vector<std::filesystem::path> emit_report(const SimReport& report, const std::filesystem::path& out_dir);

std::string summary_text(const SimReport& report);

}  // namespace wikimarket::sim
