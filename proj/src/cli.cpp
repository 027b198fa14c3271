#include "coxscreen/cli.hpp"

#include "coxscreen/bench.hpp"
#include "coxscreen/cox.hpp"
#include "coxscreen/scad.hpp"
#include "coxscreen/screening.hpp"
#include "coxscreen/serialize.hpp"
#include "coxscreen/simgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace coxscreen {

namespace {

using json = nlohmann::ordered_json;

constexpr int kCvFolds = 5;

std::string fmt(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// Writes to `path`, or to `out` when the path is empty.
void emit(const std::string& path, const std::string& content, std::ostream& out)
{
    if (path.empty()) {
        out << content;
    } else {
        write_file(path, content);
    }
}

/// path with its extension replaced by `suffix` ("data.csv" + ".truth.json" -> "data.truth.json").
std::string sibling_path(const std::string& path, const std::string& suffix)
{
    std::filesystem::path p(path);
    p.replace_extension();
    return p.string() + suffix;
}

IndexSet all_columns(const SurvivalDataset& data)
{
    IndexSet all(data.p());
    for (std::size_t j = 0; j < data.p(); ++j) all[j] = static_cast<int>(j);
    return all;
}

int workers_from_env()
{
    const char* env = std::getenv("COXSCREEN_WORKERS");
    if (env == nullptr || *env == '\0') return 0;
    const std::string text(env);
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value < 1) {
        throw InvalidInput("COXSCREEN_WORKERS must be a positive integer, got '" + text + "'");
    }
    return value;
}

// ---------------------------------------------------------------- fit

struct FitOptions {
    std::string input;
    std::string penalty = "none";
    double a = 3.7;
    int n_lambda = 50;
    double lambda_ratio = 0.01;
    std::uint64_t seed = 0;
    std::string out;
    std::string baseline;
};

json coefficient_entry(const SurvivalDataset& data, int index, double beta, double se)
{
    const double t = se > 0 && std::isfinite(se) ? beta / se : std::nan("");
    return json{{"index", index + 1},
                {"name", data.column_names()[static_cast<std::size_t>(index)]},
                {"beta", beta},
                {"se", finite_or_null(se)},
                {"t", finite_or_null(t)}};
}

int cmd_fit(const FitOptions& opt, std::ostream& out)
{
    const SurvivalDataset data = read_csv(opt.input);
    const IndexSet all = all_columns(data);
    const double log_n = std::log(static_cast<double>(data.n()));

    json report;
    report["penalty"] = opt.penalty;
    if (opt.penalty == "scad") report["a"] = opt.a;
    report["n"] = data.n();
    report["p"] = data.p();
    report["n_events"] = data.n_events();
    report["null_loglik"] = null_loglik(data);

    IndexSet active;
    Eigen::VectorXd active_beta;
    if (opt.penalty == "none") {
        const CoxFit fit = newton_fit(data, all);
        json coefficients = json::array();
        for (std::size_t k = 0; k < all.size(); ++k) {
            const auto e = static_cast<Eigen::Index>(k);
            coefficients.push_back(coefficient_entry(data, all[k], fit.beta(e), fit.std_errors(e)));
        }
        report["loglik"] = fit.loglik;
        report["bic"] = -2.0 * fit.loglik + static_cast<double>(all.size()) * log_n;
        report["converged"] = fit.converged;
        report["iterations"] = fit.iterations;
        report["coefficients"] = std::move(coefficients);
        active = all;
        active_beta = fit.beta;
    } else {
        const auto grid = make_lambda_grid(data, all, opt.n_lambda, opt.lambda_ratio);
        const LambdaPath path = opt.penalty == "scad" ? scad_path_fit(data, all, grid, opt.a)
                                                      : cv_lasso(data, all, grid, kCvFolds, opt.seed);
        const PenalizedFit& fit = path.selected();
        active = fit.active_set;
        active_beta = fit.full_beta(data.p())(active);

        // Standard errors from the observed information restricted to the active set.
        Eigen::VectorXd se = Eigen::VectorXd::Constant(active_beta.size(), std::nan(""));
        if (!active.empty()) {
            const Eigen::MatrixXd info = -partial_loglik_hessian(data, active_beta, active);
            const CoxDesign design(data, active);
            if (!design.is_singular(info)) se = info.inverse().diagonal().cwiseMax(0.0).cwiseSqrt();
        }
        json coefficients = json::array();
        for (std::size_t k = 0; k < active.size(); ++k) {
            const auto e = static_cast<Eigen::Index>(k);
            coefficients.push_back(coefficient_entry(data, active[k], active_beta(e), se(e)));
        }
        json active_list = json::array();
        for (int j : active) active_list.push_back(j + 1);
        report["lambda"] = fit.lambda;
        report["selection"] = opt.penalty == "scad" ? "bic" : "cv" + std::to_string(kCvFolds);
        report["loglik"] = fit.loglik;
        report["bic"] = fit.bic;
        report["converged"] = fit.converged;
        report["active_set"] = std::move(active_list);
        report["coefficients"] = std::move(coefficients);
    }

    emit(opt.out, report.dump(2) + "\n", out);

    std::string baseline_path = opt.baseline;
    if (baseline_path.empty() && !opt.out.empty()) baseline_path = sibling_path(opt.out, ".baseline.csv");
    if (!baseline_path.empty()) {
        const BaselineHazard h = breslow_baseline(data, active, active_beta);
        std::string csv = "time,jump,cumulative\n";
        for (std::size_t k = 0; k < h.event_times.size(); ++k) {
            csv += fmt(h.event_times[k]) + ',' + fmt(h.jumps[k]) + ',' + fmt(h.cumulative[k]) + '\n';
        }
        write_file(baseline_path, csv);
    }
    return exit_ok;
}

// ---------------------------------------------------------------- screen

struct ScreenOptions {
    std::string input;
    std::string method = "van_isis";
    int d = 0;
    std::uint64_t seed = 0;
    int max_isis_iter = 5;
    double a = 3.7;
    int n_lambda = 50;
    double lambda_ratio = 0.01;
    std::string out;
};

int cmd_screen(const ScreenOptions& opt, std::ostream& out)
{
    ScreeningConfig config;
    config.method = parse_method(opt.method);
    const SurvivalDataset data = read_csv(opt.input);
    config.d = opt.d > 0 ? opt.d : std::min<int>(default_screen_size(config.method, data.n()), static_cast<int>(data.p()));
    config.max_isis_iter = opt.max_isis_iter;
    config.penalty.a = opt.a;
    config.penalty.n_lambda = opt.n_lambda;
    config.penalty.lambda_ratio = opt.lambda_ratio;
    config.seed = opt.seed;
    const ScreeningTrace trace = run_screening(data, config);
    emit(opt.out, trace_to_json(trace, 1), out);
    return exit_ok;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    int case_id = 0;
    std::string from_case;
    std::uint64_t seed = 0;
    int rep = 0;
    int n = 0;
    int p = 0;
    bool fresh_beta = false;
    std::string out;
};

int cmd_simulate(const SimulateOptions& opt, std::ostream& out)
{
    CaseSpec spec;
    if (!opt.from_case.empty()) {
        spec = case_spec_from_json(read_file(opt.from_case));
    } else {
        if (opt.case_id == 0) throw InvalidInput("either --case or --from-case is required");
        const SimulationCase base = make_case(opt.case_id);
        spec = {opt.case_id, base.n, base.p, opt.seed};
    }
    if (opt.n > 0) spec.n = opt.n;
    if (opt.p > 0) spec.p = opt.p;

    SimulationCase sim = make_case(spec.case_id, spec.n, spec.p);
    const auto rep = static_cast<std::uint32_t>(opt.rep);
    if (opt.fresh_beta) {
        if (spec.case_id == 3 || spec.case_id == 4 || spec.case_id == 6) {
            throw InvalidInput("--fresh-beta applies to cases 1, 2 and 5 only");
        }
        sim.true_beta = random_beta(spec.n, spec.p, spec.seed, rep);
    }
    const GeneratedSample sample = gen_case(sim, spec.seed, rep);

    std::ofstream csv(opt.out, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + opt.out);
    write_csv(sample.dataset, csv);
    csv.close();
    if (!csv) throw std::runtime_error("write failed: " + opt.out);

    json truth = json::array();
    json beta = json::array();
    for (int j : sample.truth) {
        truth.push_back(j + 1);
        beta.push_back(sample.beta_star(j));
    }
    const double censored = 1.0 - static_cast<double>(sample.dataset.n_events()) / static_cast<double>(sample.dataset.n());
    json sidecar;
    sidecar["case"] = json::parse(case_spec_to_json(spec));
    sidecar["rep"] = opt.rep;
    sidecar["fresh_beta"] = opt.fresh_beta;
    sidecar["truth"] = std::move(truth);
    sidecar["beta_star"] = std::move(beta);
    sidecar["censoring_rate_observed"] = censored;
    const std::string sidecar_path = sibling_path(opt.out, ".truth.json");
    write_file(sidecar_path, sidecar.dump(2) + "\n");
    out << "wrote " << opt.out << " (" << sample.dataset.n() << " x " << sample.dataset.p()
        << ", censoring rate " << censored << ") and " << sidecar_path << '\n';
    return exit_ok;
}

// ---------------------------------------------------------------- bench

struct BenchOptions {
    std::string config_path;
    int workers = 0;
    int reps = 0;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;
};

int cmd_bench(const BenchOptions& opt, std::ostream& out)
{
    BenchmarkConfig config = bench_config_from_json(read_file(opt.config_path));
    if (opt.workers > 0) {
        config.workers = opt.workers;
    } else if (const int env = workers_from_env(); env > 0) {
        config.workers = env;
    }
    if (opt.reps > 0) config.reps = opt.reps;
    if (opt.seed) config.base_seed = *opt.seed;
    if (!opt.out.empty()) config.output_path = opt.out;
    if (config.output_path.empty()) config.output_path = "bench";
    config.validate();

    const std::string& prefix = config.output_path;
    for (const char* suffix : {".csv", ".json", ".reps.jsonl", ".timings.jsonl"}) {
        std::error_code ec;
        if (std::filesystem::equivalent(prefix + suffix, opt.config_path, ec)) {
            throw InvalidInput("output " + prefix + suffix + " would overwrite the configuration file");
        }
    }

    const MonteCarloOutput result = run_monte_carlo(config);
    if (opt.format.empty() || opt.format == "csv") emit_table(result.summary, TableFormat::csv, prefix + ".csv");
    if (opt.format.empty() || opt.format == "json") emit_table(result.summary, TableFormat::json, prefix + ".json");
    write_file(prefix + ".reps.jsonl", repetition_log(result.repetitions));
    write_file(prefix + ".timings.jsonl", timing_log(result.repetitions));
    out << render_text_table(result.summary);
    if (config.workers > 1) out << "(timings measured with " << config.workers << " workers; not comparable to serial runs)\n";
    return exit_ok;
}

// ---------------------------------------------------------------- oracle-t

struct OracleOptions {
    int case_id = 1;
    int reps = 100;
    int noise_extra = 0;
    std::uint64_t seed = 0;
    int n = 0;
    int p = 0;
    std::string format = "csv";
    std::string out;
};

int cmd_oracle_t(const OracleOptions& opt, std::ostream& out, std::ostream& err)
{
    const OracleTResult r = oracle_tstat_experiment(opt.case_id, opt.reps, opt.noise_extra, opt.seed,
                                                    opt.n > 0 ? std::optional<int>(opt.n) : std::nullopt,
                                                    opt.p > 0 ? std::optional<int>(opt.p) : std::nullopt);
    if (r.min_abs_t.empty()) throw FitError("every repetition produced a singular or non-converged fit");
    if (r.n_skipped > 0) err << "note: skipped " << r.n_skipped << " repetition(s) with singular or non-converged fits\n";

    const auto& s = r.summary;
    std::string summary;
    std::string per_rep;
    if (opt.format == "json") {
        json reps = json::array();
        for (std::size_t k = 0; k < r.min_abs_t.size(); ++k) {
            reps.push_back(json{{"rep", r.rep_ids[k]}, {"min_abs_t", r.min_abs_t[k]}});
        }
        json j;
        j["case"] = opt.case_id;
        j["noise_extra"] = opt.noise_extra;
        j["reps"] = opt.reps;
        j["n_skipped"] = r.n_skipped;
        j["summary"] = json{{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
        j["per_rep"] = std::move(reps);
        summary = j.dump(2) + "\n";
    } else {
        summary = "min,q1,median,q3,max\n" + fmt(s.min) + ',' + fmt(s.q1) + ',' + fmt(s.median) + ',' + fmt(s.q3) +
                  ',' + fmt(s.max) + '\n';
        per_rep = "rep,min_abs_t\n";
        for (std::size_t k = 0; k < r.min_abs_t.size(); ++k) {
            per_rep += std::to_string(r.rep_ids[k]) + ',' + fmt(r.min_abs_t[k]) + '\n';
        }
    }
    emit(opt.out, summary, out);
    if (!opt.out.empty() && !per_rep.empty()) write_file(sibling_path(opt.out, ".reps.csv"), per_rep);
    return exit_ok;
}

void add_penalty_flags(CLI::App* app, double& a, int& n_lambda, double& ratio)
{
    app->add_option("--a", a, "SCAD shape parameter a (> 2)")->capture_default_str();
    app->add_option("--n-lambda", n_lambda, "Number of lambda values on the tuning grid")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--lambda-ratio", ratio, "Smallest lambda as a fraction of lambda_max, in (0, 1)")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Sure independence screening and SCAD-penalized fitting for Cox models", "coxscreen"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Print help for every subcommand");

    FitOptions fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a Cox model (unpenalized, SCAD or lasso) and its Breslow baseline hazard");
    fit_cmd->add_option("dataset", fit.input, "Input CSV with time, status and covariate columns")->required();
    fit_cmd->add_option("--penalty", fit.penalty, "Penalty: none (Newton-Raphson), scad (BIC-tuned), lasso (5-fold CV)")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "scad", "lasso"}));
    add_penalty_flags(fit_cmd, fit.a, fit.n_lambda, fit.lambda_ratio);
    fit_cmd->add_option("--seed", fit.seed, "Seed for the cross-validation folds of the lasso")->capture_default_str();
    fit_cmd->add_option("--out", fit.out, "Report JSON path (default: standard output)");
    fit_cmd->add_option("--baseline", fit.baseline,
                        "Baseline hazard CSV path (time,jump,cumulative); defaults to <out>.baseline.csv when --out is given");

    ScreenOptions screen;
    auto* screen_cmd = app.add_subcommand("screen", "Run a screening method and write its trace as JSON (1-based indices)");
    screen_cmd->add_option("dataset", screen.input, "Input CSV with time, status and covariate columns")->required();
    screen_cmd->add_option("--method", screen.method, "van_sis, van_isis, var1_sis, var1_isis, var2_sis or var2_isis")
        ->capture_default_str();
    screen_cmd->add_option("--d", screen.d, "Screening size (default: from n; n/(4 log n), or n/log n for var1)")
        ->check(CLI::PositiveNumber);
    screen_cmd->add_option("--seed", screen.seed, "Seed of the random sample split (var1/var2 methods)")->capture_default_str();
    screen_cmd->add_option("--max-isis-iter", screen.max_isis_iter, "Maximum number of iterations for ISIS methods")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    add_penalty_flags(screen_cmd, screen.a, screen.n_lambda, screen.lambda_ratio);
    screen_cmd->add_option("--out", screen.out, "Trace JSON path (default: standard output)");

    SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a sample from simulation case 1-6 plus a truth sidecar");
    sim_cmd->add_option("--case", sim.case_id, "Simulation case id (1-6)");
    sim_cmd->add_option("--from-case", sim.from_case, "Case definition JSON {case_id, n, p, seed} (overrides --case and --seed)");
    sim_cmd->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    sim_cmd->add_option("--rep", sim.rep, "Repetition substream index")->capture_default_str()->check(CLI::NonNegativeNumber);
    sim_cmd->add_option("--n", sim.n, "Override the sample size")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--p", sim.p, "Override the number of covariates")->check(CLI::PositiveNumber);
    sim_cmd->add_flag("--fresh-beta", sim.fresh_beta, "Draw fresh random coefficients instead of the fixed ones (cases 1, 2, 5)");
    sim_cmd->add_option("--out", sim.out, "Output CSV path; the sidecar is written to <out>.truth.json")->required();

    BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "Monte Carlo benchmark from a JSON configuration");
    bench_cmd->add_option("config", bench.config_path, "Benchmark configuration JSON")->required();
    bench_cmd->add_option("--workers", bench.workers,
                          "Worker threads (default: COXSCREEN_WORKERS, then the config value)")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--reps", bench.reps, "Override the number of repetitions")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--seed", bench.seed, "Override the base seed");
    bench_cmd->add_option("--out", bench.out,
                          "Output prefix for <prefix>.csv/.json/.reps.jsonl/.timings.jsonl (default: config output_path, else 'bench')");
    bench_cmd->add_option("--format", bench.format, "Write only this summary format: csv or json (default: both)")
        ->check(CLI::IsMember({"csv", "json"}));

    OracleOptions oracle;
    auto* oracle_cmd = app.add_subcommand("oracle-t", "Minimum |t| of the true covariates in oracle fits over repetitions");
    oracle_cmd->add_option("--case", oracle.case_id, "Simulation case id (1-6)")->capture_default_str();
    oracle_cmd->add_option("--reps", oracle.reps, "Number of repetitions")->capture_default_str()->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--noise-extra", oracle.noise_extra, "Unimportant covariates added to each oracle model")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    oracle_cmd->add_option("--seed", oracle.seed, "Random seed")->capture_default_str();
    oracle_cmd->add_option("--n", oracle.n, "Override the sample size")->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--p", oracle.p, "Override the number of covariates")->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--format", oracle.format, "Output format: csv (five-number summary) or json (summary and per-rep values)")
        ->capture_default_str()
        ->check(CLI::IsMember({"csv", "json"}));
    oracle_cmd->add_option("--out", oracle.out, "Output path (default: standard output); csv also writes <out>.reps.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name());
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_invalid_input;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(fit, out);
        if (screen_cmd->parsed()) return cmd_screen(screen, out);
        if (sim_cmd->parsed()) return cmd_simulate(sim, out);
        if (bench_cmd->parsed()) return cmd_bench(bench, out);
        if (oracle_cmd->parsed()) return cmd_oracle_t(oracle, out, err);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return exit_invalid_input;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime_failure;
    }
    return exit_invalid_input;
}

} // namespace coxscreen
