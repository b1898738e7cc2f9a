// tdap: evaluate risk scores on censored cohorts with the time-dependent
// average positive predictive value.
//
//   tdap estimate --input cohort.csv --t0 8 [--curves curves.csv] [--json out.json]
//   tdap compare  --input cohort.csv --t0 20 --t0 35 [--sweep 5:35:5]
//   tdap simulate --n 2000 --reps 200 --boot 200 [--csv report.csv]
//
// Exit status: 0 success, 1 I/O failure, 2 validation failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tdap/tdap.hpp"

namespace {

using nlohmann::json;

constexpr int exit_ok = 0;
constexpr int exit_io = 1;
constexpr int exit_validation = 2;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string input;
    tdap::ColumnMap columns;
    std::string score2_col = "score2";
    std::vector<double> horizons;
    std::string sweep;
    std::size_t boot = 1000;
    double level = 0.95;
    std::uint64_t seed = 20190301;
    unsigned threads = 0;
    std::string curves;
    std::string json_path;
    std::string csv_path;
    std::size_t n = 2000;
    std::size_t reps = 1000;
    std::size_t oracle = 2'000'000;
};

tdap::CohortSample load(const Options& opt) {
    std::ifstream in(opt.input);
    if (!in) throw IoError("cannot open " + opt.input);
    tdap::ColumnMap columns = opt.columns;
    columns.score2 = opt.score2_col;
    return tdap::ingest_csv(in, columns);
}

tdap::BootstrapSpec boot_spec(const Options& opt) {
    tdap::BootstrapSpec spec{opt.boot, opt.level, opt.seed};
    spec.validate();
    return spec;
}

/// Writes to `path`, or to stdout when path is "-".
template <class Writer>
void write_to(const std::string& path, Writer&& write) {
    if (path == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write(out);
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

std::string fmt6(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

/// A bootstrap summary, or the point estimate with the error that kept
/// the interval from being formed.
struct Interval {
    double point = 0.0;
    std::optional<tdap::AccuracySummary> summary;
    std::string error;
};

std::vector<Interval> run_bootstrap(const tdap::CohortSample& cohort,
                                    const std::vector<tdap::BootstrapTarget>& targets,
                                    const Options& opt) {
    const auto spec = boot_spec(opt);
    const auto draws = tdap::bootstrap_draws(cohort, targets, spec, opt.threads);
    std::vector<Interval> out;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        Interval iv;
        iv.point = draws.points[k];
        try {
            iv.summary = tdap::summarize_replicates(targets[k], draws.points[k], draws.column(k),
                                                    spec.level);
        } catch (const tdap::Error& e) {
            iv.error = e.what();
            std::cerr << "warning: no interval for " << tdap::estimand_name(targets[k].estimand)
                      << " at t0 = " << targets[k].t0 << ": " << e.what() << '\n';
        }
        out.push_back(std::move(iv));
    }
    return out;
}

json to_json(const Interval& iv) {
    json j;
    j["point"] = iv.point;
    if (iv.summary) {
        j["lo"] = iv.summary->lower;
        j["hi"] = iv.summary->upper;
        j["se"] = iv.summary->se;
    } else {
        j["lo"] = nullptr;
        j["hi"] = nullptr;
        j["se"] = nullptr;
        j["error"] = iv.error;
    }
    return j;
}

std::string cell(const Interval& iv) {
    if (!iv.summary) return fmt6(iv.point) + " (n/a)";
    return fmt6(iv.point) + " (" + fmt6(iv.summary->lower) + ", " + fmt6(iv.summary->upper) + ")";
}

json run_header(const tdap::CohortSample& cohort, const Options& opt, const char* mode) {
    json j;
    j["mode"] = mode;
    j["n"] = cohort.size();
    j["bootstrap"] = {{"replicates", opt.boot}, {"level", opt.level}, {"seed", opt.seed}};
    return j;
}

void require_horizons(const Options& opt) {
    if (opt.horizons.empty()) {
        throw tdap::Error(tdap::ErrorKind::InvalidArgument, "at least one --t0 is required");
    }
}

void write_curves(const std::string& path, const tdap::CohortSample& cohort, double t0) {
    const auto w = tdap::ipw_weights(cohort, t0);
    const auto pr = tdap::pr_curve(cohort, w);
    const auto roc = tdap::roc_curve(cohort, w);
    write_to(path, [&](std::ostream& out) {
        out << "threshold,tpf,ppv,fpf\n";
        for (std::size_t k = 0; k < pr.points.size(); ++k) {
            out << tdap::detail::format_double(pr.thresholds[k]) << ','
                << tdap::detail::format_double(pr.points[k].x) << ','
                << tdap::detail::format_double(pr.points[k].y) << ','
                << tdap::detail::format_double(roc.points[k].x) << '\n';
        }
    });
}

int cmd_estimate(const Options& opt) {
    require_horizons(opt);
    if (!opt.curves.empty() && opt.horizons.size() != 1) {
        throw tdap::Error(tdap::ErrorKind::InvalidArgument, "--curves needs exactly one --t0");
    }
    const auto cohort = load(opt);
    std::vector<tdap::BootstrapTarget> targets;
    std::vector<double> rates;
    for (double t0 : opt.horizons) {
        tdap::validate_horizon(cohort, t0);
        rates.push_back(tdap::event_rate(cohort, tdap::ipw_weights(cohort, t0)));
        targets.push_back({t0, tdap::Estimand::ap, tdap::Score::first});
        targets.push_back({t0, tdap::Estimand::auc, tdap::Score::first});
    }
    const auto intervals = run_bootstrap(cohort, targets, opt);

    json doc = run_header(cohort, opt, "estimate");
    doc["results"] = json::array();
    std::cout << std::left << std::setw(10) << "t0" << std::setw(12) << "event_rate"
              << std::setw(36) << "AP (95% CI)" << "AUC (95% CI)\n";
    for (std::size_t h = 0; h < opt.horizons.size(); ++h) {
        const auto& ap = intervals[2 * h];
        const auto& auc = intervals[2 * h + 1];
        json r;
        r["t0"] = opt.horizons[h];
        r["event_rate"] = rates[h];
        r["ap"] = to_json(ap);
        r["auc"] = to_json(auc);
        doc["results"].push_back(r);
        std::cout << std::setw(10) << fmt6(opt.horizons[h]) << std::setw(12) << fmt6(rates[h])
                  << std::setw(36) << cell(ap) << cell(auc) << '\n';
    }
    if (!opt.curves.empty()) write_curves(opt.curves, cohort, opt.horizons.front());
    if (!opt.json_path.empty()) {
        write_to(opt.json_path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
    }
    return exit_ok;
}

std::vector<double> parse_sweep(const std::string& spec) {
    std::vector<double> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
        const auto v = tdap::detail::parse_double(item);
        if (!v) throw tdap::Error(tdap::ErrorKind::InvalidArgument, "bad --sweep " + spec);
        parts.push_back(*v);
    }
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
        throw tdap::Error(tdap::ErrorKind::InvalidArgument, "--sweep expects START:STOP:STEP");
    }
    std::vector<double> grid;
    const double tol = 1e-9 * parts[2];
    for (std::size_t k = 0;; ++k) {
        const double t = parts[0] + static_cast<double>(k) * parts[2];
        if (t > parts[1] + tol) break;
        grid.push_back(t);
    }
    return grid;
}

std::vector<tdap::BootstrapTarget> paired_targets(const std::vector<double>& horizons) {
    using tdap::Estimand;
    using tdap::Score;
    std::vector<tdap::BootstrapTarget> targets;
    for (double t0 : horizons) {
        targets.push_back({t0, Estimand::ap, Score::first});
        targets.push_back({t0, Estimand::ap, Score::second});
        targets.push_back({t0, Estimand::rap, Score::first});
        targets.push_back({t0, Estimand::auc, Score::first});
        targets.push_back({t0, Estimand::auc, Score::second});
        targets.push_back({t0, Estimand::delta_auc, Score::first});
    }
    return targets;
}

int cmd_compare(const Options& opt) {
    const auto cohort = load(opt);
    if (!cohort.paired()) {
        throw tdap::Error(tdap::ErrorKind::NotPaired, "column " + opt.score2_col + " not found");
    }

    if (!opt.sweep.empty()) {
        const auto grid = parse_sweep(opt.sweep);
        for (double t0 : grid) tdap::validate_horizon(cohort, t0);
        const auto iv = run_bootstrap(cohort, paired_targets(grid), opt);
        auto num = [](const Interval& i, double tdap::AccuracySummary::*field) {
            return i.summary ? tdap::detail::format_double((*i.summary).*field) : std::string();
        };
        const std::string path = opt.csv_path.empty() ? "-" : opt.csv_path;
        write_to(path, [&](std::ostream& out) {
            out << "t0,ap1,ap2,rap,rap_lo,rap_hi,auc1,auc2,dauc,dauc_lo,dauc_hi\n";
            for (std::size_t h = 0; h < grid.size(); ++h) {
                const auto* r = &iv[6 * h];
                using tdap::detail::format_double;
                out << format_double(grid[h]) << ',' << format_double(r[0].point) << ','
                    << format_double(r[1].point) << ',' << format_double(r[2].point) << ','
                    << num(r[2], &tdap::AccuracySummary::lower) << ','
                    << num(r[2], &tdap::AccuracySummary::upper) << ','
                    << format_double(r[3].point) << ',' << format_double(r[4].point) << ','
                    << format_double(r[5].point) << ','
                    << num(r[5], &tdap::AccuracySummary::lower) << ','
                    << num(r[5], &tdap::AccuracySummary::upper) << '\n';
            }
        });
        return exit_ok;
    }

    require_horizons(opt);
    std::vector<double> rates;
    for (double t0 : opt.horizons) {
        tdap::validate_horizon(cohort, t0);
        rates.push_back(tdap::event_rate(cohort, tdap::ipw_weights(cohort, t0)));
    }
    const auto iv = run_bootstrap(cohort, paired_targets(opt.horizons), opt);

    json doc = run_header(cohort, opt, "compare");
    doc["results"] = json::array();
    std::cout << std::left << std::setw(10) << "t0" << std::setw(12) << "event_rate"
              << std::setw(12) << "score" << std::setw(36) << "AP (95% CI)"
              << "AUC (95% CI)\n";
    for (std::size_t h = 0; h < opt.horizons.size(); ++h) {
        const auto* r = &iv[6 * h];
        json j;
        j["t0"] = opt.horizons[h];
        j["event_rate"] = rates[h];
        j["ap"] = to_json(r[0]);
        j["ap2"] = to_json(r[1]);
        j["rap"] = to_json(r[2]);
        j["auc"] = to_json(r[3]);
        j["auc2"] = to_json(r[4]);
        j["dauc"] = to_json(r[5]);
        doc["results"].push_back(j);
        const std::string labels[] = {opt.columns.score1, opt.score2_col, "comparison"};
        const Interval* ap_cells[] = {&r[0], &r[1], &r[2]};
        const Interval* auc_cells[] = {&r[3], &r[4], &r[5]};
        for (int row = 0; row < 3; ++row) {
            std::cout << std::setw(10) << (row == 0 ? fmt6(opt.horizons[h]) : "")
                      << std::setw(12) << (row == 0 ? fmt6(rates[h]) : "") << std::setw(12)
                      << labels[row] << std::setw(36) << cell(*ap_cells[row])
                      << cell(*auc_cells[row]) << '\n';
        }
    }
    if (!opt.json_path.empty()) {
        write_to(opt.json_path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
    }
    return exit_ok;
}

int cmd_simulate(const Options& opt) {
    tdap::SimulationConfig config;
    config.n = opt.n;
    config.replications = opt.reps;
    config.bootstrap = boot_spec(opt);
    if (!opt.horizons.empty()) config.horizons = opt.horizons;
    config.seed = opt.seed;
    config.oracle_size = opt.oracle;
    config.threads = opt.threads;
    const auto report = tdap::run_study(config);
    tdap::write_report_table(std::cout, report);
    if (!opt.csv_path.empty()) {
        write_to(opt.csv_path, [&](std::ostream& out) { tdap::write_report_csv(out, report); });
    }
    if (!opt.json_path.empty()) {
        json doc;
        doc["mode"] = "simulate";
        doc["n"] = report.n;
        doc["replications"] = report.replications;
        doc["bootstrap"] = {{"replicates", opt.boot}, {"level", opt.level}, {"seed", opt.seed}};
        doc["model"] = report.model;
        doc["censoring_fraction"] = report.censoring_fraction;
        doc["regenerated"] = report.regenerated;
        doc["rows"] = json::array();
        for (const auto& row : report.rows) {
            doc["rows"].push_back({{"t0", row.t0},
                                   {"event_rate", row.event_rate},
                                   {"estimand", row.estimand},
                                   {"true", row.truth},
                                   {"bias", row.bias},
                                   {"ese", row.ese},
                                   {"ase_b", row.ase},
                                   {"ecovp_b", row.ecovp}});
        }
        write_to(opt.json_path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
    }
    return exit_ok;
}

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--boot", opt.boot, "Bootstrap replicates")->capture_default_str();
    cmd->add_option("--level", opt.level, "Confidence level")->capture_default_str();
    cmd->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
    cmd->add_option("--threads", opt.threads, "Worker threads (0 = all cores)")
        ->capture_default_str();
    cmd->add_option("--json", opt.json_path, "Write a JSON summary (- for stdout)");
}

void add_input(CLI::App* cmd, Options& opt) {
    cmd->add_option("--input", opt.input, "Cohort CSV")->required();
    cmd->add_option("--time-col", opt.columns.time, "Follow-up time column")->capture_default_str();
    cmd->add_option("--status-col", opt.columns.status, "Event indicator column")
        ->capture_default_str();
    cmd->add_option("--score-col", opt.columns.score1, "Risk score column")->capture_default_str();
    cmd->add_option("--score2-col", opt.score2_col, "Second risk score column")
        ->capture_default_str();
    cmd->add_option("--t0", opt.horizons, "Prediction horizon (repeatable)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-dependent average positive predictive value for censored cohorts"};
    app.require_subcommand(1);
    Options opt;

    auto* estimate = app.add_subcommand("estimate", "Event rate, AP and AUC with bootstrap CIs");
    add_input(estimate, opt);
    add_common(estimate, opt);
    estimate->add_option("--curves", opt.curves, "Write PR/ROC curve CSV for the single --t0");

    auto* compare = app.add_subcommand("compare", "Paired comparison of two scores (rAP, dAUC)");
    add_input(compare, opt);
    add_common(compare, opt);
    compare->add_option("--sweep", opt.sweep, "Horizon grid START:STOP:STEP, CSV output");
    compare->add_option("--csv", opt.csv_path, "Sweep CSV path (default stdout)");

    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo study of the estimators");
    add_common(simulate, opt);
    simulate->add_option("--n", opt.n, "Cohort size per replication")->capture_default_str();
    simulate->add_option("--reps", opt.reps, "Replications")->capture_default_str();
    simulate->add_option("--t0", opt.horizons, "Horizons (default 0.5, 8, 36)");
    simulate->add_option("--oracle", opt.oracle, "Oracle sample size for TRUE values")
        ->capture_default_str();
    simulate->add_option("--csv", opt.csv_path, "Write the report as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }

    try {
        if (*estimate) return cmd_estimate(opt);
        if (*compare) return cmd_compare(opt);
        return cmd_simulate(opt);
    } catch (const tdap::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    }
}
