#include "ibcdmp/eval.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "ibcdmp/error.hpp"

namespace ibcdmp {

Spread spread(const std::vector<double>& xs) {
    Spread s;
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    double sq = 0.0;
    for (double x : xs) sq += (x - s.mean) * (x - s.mean);
    s.var = sq / static_cast<double>(xs.size());
    s.std = std::sqrt(s.var);
    return s;
}

std::vector<EnvInstance> test_envs(std::size_t runs, const EnvSampler& sampler, std::uint64_t seed, EnvMode mode) {
    sampler.validate();
    Rng rng = derive_stream(seed, "test");
    std::vector<EnvInstance> envs;
    envs.reserve(runs);
    for (std::size_t i = 0; i < runs; ++i) envs.push_back(sample_env(mode, sampler, rng));
    return envs;
}

namespace {

void summarize(PolicyScore& p) {
    double sum = 0.0;
    std::size_t hits = 0;
    for (const auto& r : p.runs) {
        sum += r.larpe;
        hits += r.collided ? 1 : 0;
    }
    const auto n = static_cast<double>(p.runs.size());
    p.mean_larpe = p.runs.empty() ? 0.0 : sum / n;
    p.collision_rate = p.runs.empty() ? 0.0 : static_cast<double>(hits) / n;
}

void aggregate(ScoreTable& t) {
    std::vector<double> l, c;
    for (auto& p : t.policies) {
        summarize(p);
        l.push_back(p.mean_larpe);
        c.push_back(p.collision_rate);
    }
    t.larpe = spread(l);
    t.collision = spread(c);
}

}  // namespace

ScoreTable test_policies(const std::vector<NamedPolicy>& policies, std::size_t runs, const EnvSampler& sampler,
                         const DmpConfig& dmp, const CostConfig& cost, std::uint64_t seed, EnvMode mode) {
    const std::vector<EnvInstance> envs = test_envs(runs, sampler, seed, mode);
    ScoreTable t;
    for (const auto& np : policies) {
        PolicyScore p;
        p.name = np.name;
        for (const auto& env : envs) p.runs.push_back(rollout(np.policy, env, dmp, cost, 0.0, 0).record);
        t.policies.push_back(std::move(p));
    }
    aggregate(t);
    return t;
}

std::vector<double> smooth_curve(const std::vector<double>& series, std::size_t window) {
    require(window >= 1, ErrorKind::InvalidArgument, "smoothing window must be >= 1");
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        // Fresh sum per point, so a constant series stays exactly constant.
        const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
        double s = 0.0;
        for (std::size_t k = lo; k <= i; ++k) s += series[k];
        out[i] = s / static_cast<double>(i - lo + 1);
    }
    return out;
}

SeedCurve aggregate_seeds(const std::vector<std::vector<double>>& logs) {
    require(!logs.empty(), ErrorKind::InvalidArgument, "no logs to aggregate");
    const std::size_t n = logs.front().size();
    for (const auto& l : logs) require(l.size() == n, ErrorKind::InvalidArgument, "training logs differ in length");
    SeedCurve c;
    c.mean.resize(n);
    c.var.resize(n);
    c.std.resize(n);
    std::vector<double> col(logs.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < logs.size(); ++j) col[j] = logs[j][i];
        const Spread s = spread(col);
        c.mean[i] = s.mean;
        c.var[i] = s.var;
        c.std[i] = s.std;
    }
    return c;
}

SequenceResult task_sequence(const Policy& policy, const Vec3& home, const std::vector<Vec3>& via,
                             const Vec3& obst_top, double obst_radius, const DmpConfig& dmp, const CostConfig& cost) {
    require(!via.empty(), ErrorKind::InvalidArgument, "task sequence needs at least one via point");
    SequenceResult res;
    Vec3 start = home;
    for (const Vec3& target : via) {
        EnvInstance env;
        env.x_init = start;
        env.x_goal = target;
        env.obst_top = obst_top;
        env.obst_radius = obst_radius;
        env.validate();
        RolloutResult r = rollout(policy, env, dmp, cost, 0.0, 0);
        res.segment_starts.push_back(start);
        res.reached.push_back(r.record.final_error <= cost.eps_T);
        res.segments.push_back(r.record);
        res.rows.insert(res.rows.end(), r.rows.begin(), r.rows.end());
        start = r.final_state.x;
    }
    return res;
}

std::vector<Vec3> read_via_points(std::istream& in, const std::string& source_name) {
    std::vector<Vec3> pts;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::stringstream ss(line);
        double x, y, z;
        char c1, c2;
        ss >> x >> c1 >> y >> c2 >> z;
        require(ss && c1 == ',' && c2 == ',', ErrorKind::Parse,
                source_name + ":" + std::to_string(line_no) + ": expected x,y,z");
        pts.emplace_back(x, y, z);
    }
    require(!pts.empty(), ErrorKind::Parse, source_name + ": no via points");
    return pts;
}

void write_scores_csv(std::ostream& out, const ScoreTable& table) {
    const auto old_prec = out.precision(12);
    out << "policy,run,arpe,larpe,collided,final_error,steps\n";
    for (const auto& p : table.policies) {
        for (std::size_t i = 0; i < p.runs.size(); ++i) {
            const auto& r = p.runs[i];
            out << p.name << ',' << i << ',' << r.arpe << ',' << r.larpe << ',' << (r.collided ? 1 : 0) << ','
                << r.final_error << ',' << r.steps << '\n';
        }
    }
    out.precision(old_prec);
}

ScoreTable read_scores_csv(std::istream& in, const std::string& source_name) {
    ScoreTable t;
    std::map<std::string, std::size_t> index;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.rfind("policy,", 0) == 0) continue;
        const std::string where = source_name + ":" + std::to_string(line_no);
        const auto comma = line.find(',');
        require(comma != std::string::npos && comma > 0, ErrorKind::Parse, where + ": malformed score row");
        const std::string name = line.substr(0, comma);
        std::stringstream ss(line.substr(comma + 1));
        long run;
        int collided;
        EvalRecord r;
        char c[5];
        ss >> run >> c[0] >> r.arpe >> c[1] >> r.larpe >> c[2] >> collided >> c[3] >> r.final_error >> c[4] >> r.steps;
        require(ss && c[0] == ',' && c[1] == ',' && c[2] == ',' && c[3] == ',' && c[4] == ',' &&
                    (collided == 0 || collided == 1),
                ErrorKind::Parse, where + ": malformed score row");
        r.collided = collided == 1;
        auto [it, inserted] = index.emplace(name, t.policies.size());
        if (inserted) t.policies.push_back(PolicyScore{name, {}, 0.0, 0.0});
        t.policies[it->second].runs.push_back(r);
    }
    require(!t.policies.empty(), ErrorKind::Parse, source_name + ": no score rows");
    aggregate(t);
    return t;
}

ReportFormat parse_report_format(const std::string& text) {
    if (text == "md") return ReportFormat::Markdown;
    if (text == "csv") return ReportFormat::Csv;
    fail(ErrorKind::InvalidArgument, "report format must be md or csv, got '" + text + "'");
}

namespace {

std::string group_of(const std::string& name) {
    const auto slash = name.find('/');
    return slash == std::string::npos ? std::string("ungrouped") : name.substr(0, slash);
}

struct GroupRow {
    std::string group;
    Spread larpe;
    Spread collision;
    std::size_t policies = 0;
};

std::vector<GroupRow> group_rows(const ScoreTable& t) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> acc;
    std::vector<std::string> order;
    for (const auto& p : t.policies) {
        const std::string g = group_of(p.name);
        if (!acc.count(g)) order.push_back(g);
        acc[g].first.push_back(p.mean_larpe);
        acc[g].second.push_back(p.collision_rate);
    }
    std::vector<GroupRow> rows;
    for (const auto& g : order) {
        rows.push_back({g, spread(acc[g].first), spread(acc[g].second), acc[g].first.size()});
    }
    rows.push_back({"all", t.larpe, t.collision, t.policies.size()});
    return rows;
}

}  // namespace

void write_report(std::ostream& out, const ScoreTable& table, ReportFormat fmt, double standard) {
    const auto groups = group_rows(table);
    std::ostringstream s;
    s << std::setprecision(6);
    if (fmt == ReportFormat::Csv) {
        s << "kind,name,runs,mean_larpe,collision_rate,larpe_var,larpe_std,collision_var,collision_std,pass\n";
        for (const auto& p : table.policies) {
            s << "policy," << p.name << ',' << p.runs.size() << ',' << p.mean_larpe << ',' << p.collision_rate
              << ",,,,," << (p.mean_larpe >= standard ? 1 : 0) << '\n';
        }
        for (const auto& g : groups) {
            s << "group," << g.group << ',' << g.policies << ',' << g.larpe.mean << ',' << g.collision.mean << ','
              << g.larpe.var << ',' << g.larpe.std << ',' << g.collision.var << ',' << g.collision.std << ','
              << (g.larpe.mean >= standard ? 1 : 0) << '\n';
        }
        out << s.str();
        return;
    }
    s << "## Test scores\n\n";
    s << "Performance standard: L-ARPE >= " << standard << "\n\n";
    s << "| policy | runs | mean L-ARPE | collision rate | pass |\n|---|---:|---:|---:|:---:|\n";
    for (const auto& p : table.policies) {
        s << "| " << p.name << " | " << p.runs.size() << " | " << p.mean_larpe << " | " << 100.0 * p.collision_rate
          << "% | " << (p.mean_larpe >= standard ? "yes" : "no") << " |\n";
    }
    s << "\n## Aggregates over policies\n\n";
    s << "| group | policies | mean L-ARPE | L-ARPE var | L-ARPE std | mean collision rate | collision var | collision std |\n";
    s << "|---|---:|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& g : groups) {
        s << "| " << g.group << " | " << g.policies << " | " << g.larpe.mean << " | " << g.larpe.var << " | "
          << g.larpe.std << " | " << 100.0 * g.collision.mean << "% | " << g.collision.var << " | " << g.collision.std
          << " |\n";
    }
    out << s.str();
}

}  // namespace ibcdmp
