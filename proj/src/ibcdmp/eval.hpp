#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ibcdmp/agent.hpp"
#include "ibcdmp/rollout.hpp"

namespace ibcdmp {

struct NamedPolicy {
    std::string name;  // "group/member" names are grouped in reports
    Policy policy;
};

struct Spread {
    double mean = 0.0;
    double var = 0.0;  // population, divide by M
    double std = 0.0;  // sqrt(var)
};

Spread spread(const std::vector<double>& xs);

struct PolicyScore {
    std::string name;
    std::vector<EvalRecord> runs;
    double mean_larpe = 0.0;
    double collision_rate = 0.0;
};

struct ScoreTable {
    std::vector<PolicyScore> policies;
    Spread larpe;      // over per-policy means
    Spread collision;  // over per-policy rates
};

/// The scene sequence shared by every policy under test, from the "test" stream of `seed`.
std::vector<EnvInstance> test_envs(std::size_t runs, const EnvSampler& sampler, std::uint64_t seed,
                                   EnvMode mode = EnvMode::Test);

ScoreTable test_policies(const std::vector<NamedPolicy>& policies, std::size_t runs, const EnvSampler& sampler,
                         const DmpConfig& dmp, const CostConfig& cost, std::uint64_t seed,
                         EnvMode mode = EnvMode::Test);

/// Trailing moving average; the first window-1 points average what is available.
std::vector<double> smooth_curve(const std::vector<double>& series, std::size_t window);

struct SeedCurve {
    std::vector<double> mean;
    std::vector<double> var;
    std::vector<double> std;
};

SeedCurve aggregate_seeds(const std::vector<std::vector<double>>& logs);

struct SequenceResult {
    std::vector<TrajectoryRow> rows;     // all segments, in order
    std::vector<EvalRecord> segments;
    std::vector<Vec3> segment_starts;
    std::vector<bool> reached;           // final_error <= eps_T
};

/// Chains one rollout per via point; each segment restarts from the previous end at rest.
SequenceResult task_sequence(const Policy& policy, const Vec3& home, const std::vector<Vec3>& via,
                             const Vec3& obst_top, double obst_radius, const DmpConfig& dmp, const CostConfig& cost);

/// One via point per line, "x,y,z"; '#' starts a comment.
std::vector<Vec3> read_via_points(std::istream& in, const std::string& source_name);

void write_scores_csv(std::ostream& out, const ScoreTable& table);
/// Rebuilds the table (and its aggregates) from raw rows.
ScoreTable read_scores_csv(std::istream& in, const std::string& source_name);

enum class ReportFormat { Markdown, Csv };
ReportFormat parse_report_format(const std::string& text);

/// Per-policy mean L-ARPE and collision rate with aggregates per group and overall,
/// and a pass column against `standard`.
void write_report(std::ostream& out, const ScoreTable& table, ReportFormat fmt, double standard);

}  // namespace ibcdmp
