#include "coxscreen/bench.hpp"

#include "coxscreen/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

namespace coxscreen {

using json = nlohmann::ordered_json;

void BenchmarkConfig::validate() const
{
    if (cases.empty()) throw InvalidInput("/cases: at least one case is required");
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (cases[i] < 1 || cases[i] > 6) {
            throw InvalidInput("/cases/" + std::to_string(i) + ": invalid case " + std::to_string(cases[i]));
        }
    }
    if (methods.empty()) throw InvalidInput("/methods: at least one method is required");
    for (std::size_t i = 0; i < methods.size(); ++i) {
        if (methods[i] == kLassoMethod) continue;
        try {
            parse_method(methods[i]);
        } catch (const InvalidInput&) {
            throw InvalidInput("/methods/" + std::to_string(i) + ": unknown method '" + methods[i] + "'");
        }
    }
    if (reps < 1) throw InvalidInput("/reps: must be at least 1");
    if (workers < 1) throw InvalidInput("/workers: must be at least 1");
    if (n && *n < 2) throw InvalidInput("/n: must be at least 2");
    if (p && *p < 6) throw InvalidInput("/p: must be at least 6");
    if (d && *d < 1) throw InvalidInput("/d: must be at least 1");
    if (max_isis_iter < 1) throw InvalidInput("/max_isis_iter: must be at least 1");
    if (!(penalty.a > 2)) throw InvalidInput("/a: must exceed 2");
    if (penalty.n_lambda < 1) throw InvalidInput("/n_lambda: must be at least 1");
    if (lasso_folds < 2) throw InvalidInput("/lasso_folds: must be at least 2");
}

namespace {

IndexSet support_of(const Eigen::VectorXd& beta)
{
    IndexSet s;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (beta(j) != 0) s.push_back(static_cast<int>(j));
    }
    return s;
}

RepetitionResult error_metrics(const Eigen::VectorXd& fit_beta, const Eigen::VectorXd& beta_star)
{
    if (fit_beta.size() != beta_star.size()) throw InvalidInput("coefficient vectors differ in length");
    RepetitionResult r;
    const Eigen::VectorXd diff = fit_beta - beta_star;
    r.l1_error = diff.lpNorm<1>();
    r.l2sq_error = diff.squaredNorm();
    return r;
}

std::string fmt(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace

RepetitionResult compute_metrics(const Eigen::VectorXd& fit_beta,
                                 const Eigen::VectorXd& beta_star,
                                 const ScreeningTrace& trace)
{
    RepetitionResult r = error_metrics(fit_beta, beta_star);
    const auto [p1, p2] = sure_screening_indicator(trace, support_of(beta_star));
    r.p1_event = p1;
    r.p2_event = p2;
    r.final_model = trace.final_model;
    r.model_size = trace.final_model.size();
    return r;
}

RepetitionResult compute_metrics(const Eigen::VectorXd& fit_beta,
                                 const Eigen::VectorXd& beta_star,
                                 const IndexSet& model)
{
    RepetitionResult r = error_metrics(fit_beta, beta_star);
    IndexSet m = model;
    std::sort(m.begin(), m.end());
    const IndexSet truth = support_of(beta_star);
    r.p2_event = std::includes(m.begin(), m.end(), truth.begin(), truth.end());
    r.final_model = m;
    r.model_size = m.size();
    return r;
}

double median(std::vector<double> values)
{
    if (values.empty()) throw InvalidInput("median of an empty list");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SummaryTable summarize(const std::vector<RepetitionResult>& results)
{
    std::vector<std::pair<int, std::string>> keys;
    std::map<std::pair<int, std::string>, std::vector<const RepetitionResult*>> groups;
    for (const auto& r : results) {
        const auto key = std::make_pair(r.case_id, r.method);
        if (!groups.count(key)) keys.push_back(key);
        groups[key].push_back(&r);
    }
    SummaryTable table;
    for (const auto& key : keys) {
        const auto& group = groups[key];
        SummaryRow row;
        row.case_id = key.first;
        row.method = key.second;
        row.n_reps = static_cast<int>(group.size());
        std::vector<double> l1, l2, size;
        double time = 0;
        int p1 = 0, p2 = 0;
        bool has_p1 = false;
        for (const auto* r : group) {
            time += r->wall_time_seconds;
            if (r->failed) {
                ++row.n_failed;
                continue;
            }
            l1.push_back(r->l1_error);
            l2.push_back(r->l2sq_error);
            size.push_back(static_cast<double>(r->model_size));
            if (r->p1_event) {
                has_p1 = true;
                p1 += *r->p1_event ? 1 : 0;
            }
            p2 += r->p2_event ? 1 : 0;
        }
        const auto ok = static_cast<double>(l1.size());
        if (!l1.empty()) {
            row.median_l1 = median(l1);
            row.median_l2sq = median(l2);
            row.mms = median(size);
            row.p2 = p2 / ok;
            if (has_p1) row.p1 = p1 / ok;
        } else {
            row.median_l1 = row.median_l2sq = row.mms = row.p2 = std::nan("");
        }
        row.mean_time_s = time / static_cast<double>(group.size());
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::uint64_t case_seed(std::uint64_t base_seed, int case_id)
{
    return splitmix64(base_seed ^ splitmix64(static_cast<std::uint64_t>(case_id)));
}

RepetitionResult run_method(const GeneratedSample& sample,
                            const std::string& method,
                            const BenchmarkConfig& config,
                            std::uint64_t seed,
                            int case_id,
                            int rep)
{
    const auto& data = sample.dataset;
    const auto start = std::chrono::steady_clock::now();
    RepetitionResult r;
    try {
        if (method == kLassoMethod) {
            IndexSet all(data.p());
            for (std::size_t j = 0; j < data.p(); ++j) all[j] = static_cast<int>(j);
            const auto grid = make_lambda_grid(data, all, config.penalty.n_lambda, config.penalty.lambda_ratio);
            const auto path = cv_lasso(data, all, grid, config.lasso_folds, splitmix64(seed ^ static_cast<std::uint64_t>(rep)));
            const auto& fit = path.selected();
            r = compute_metrics(fit.full_beta(data.p()), sample.beta_star, fit.active_set);
        } else {
            ScreeningConfig sc;
            sc.method = parse_method(method);
            sc.d = config.d ? *config.d : default_screen_size(sc.method, data.n());
            sc.d = std::min<int>(sc.d, static_cast<int>(data.p()));
            sc.max_isis_iter = config.max_isis_iter;
            sc.penalty = config.penalty;
            sc.seed = seed;
            sc.stream = static_cast<std::uint32_t>(rep);
            const auto trace = run_screening(data, sc);
            r = compute_metrics(trace.final_fit.full_beta(data.p()), sample.beta_star, trace);
        }
    } catch (const std::exception& e) {
        r = RepetitionResult{};
        r.failed = true;
        r.error = e.what();
    }
    r.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.method = method;
    r.case_id = case_id;
    r.rep_id = rep;
    return r;
}

MonteCarloOutput run_monte_carlo(const BenchmarkConfig& config)
{
    config.validate();
    const std::size_t n_methods = config.methods.size();
    const std::size_t n_tasks = config.cases.size() * static_cast<std::size_t>(config.reps);
    std::vector<RepetitionResult> results(n_tasks * n_methods);

    std::vector<SimulationCase> sims;
    for (int c : config.cases) {
        const auto base = make_case(c);
        sims.push_back(make_case(c, config.n.value_or(base.n), config.p.value_or(base.p)));
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t task = next++; task < n_tasks; task = next++) {
            const std::size_t ci = task / static_cast<std::size_t>(config.reps);
            const int rep = static_cast<int>(task % static_cast<std::size_t>(config.reps));
            const int case_id = config.cases[ci];
            const std::uint64_t seed = case_seed(config.base_seed, case_id);
            std::optional<GeneratedSample> sample;
            std::string error;
            try {
                sample = gen_case(sims[ci], seed, static_cast<std::uint32_t>(rep));
            } catch (const std::exception& e) {
                error = e.what();
            }
            for (std::size_t m = 0; m < n_methods; ++m) {
                auto& slot = results[task * n_methods + m];
                if (sample) {
                    slot = run_method(*sample, config.methods[m], config, seed, case_id, rep);
                } else {
                    slot.failed = true;
                    slot.error = error;
                    slot.method = config.methods[m];
                    slot.case_id = case_id;
                    slot.rep_id = rep;
                }
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(config.workers, static_cast<int>(n_tasks)));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }

    MonteCarloOutput out;
    out.repetitions = std::move(results);
    out.summary = summarize(out.repetitions);
    return out;
}

std::string repetition_log(const std::vector<RepetitionResult>& results)
{
    std::string out;
    for (const auto& r : results) {
        json j;
        j["case"] = r.case_id;
        j["method"] = r.method;
        j["rep"] = r.rep_id;
        j["failed"] = r.failed;
        if (r.failed) {
            j["error"] = r.error;
        } else {
            j["l1"] = r.l1_error;
            j["l2sq"] = r.l2sq_error;
            j["p1"] = r.p1_event ? json(*r.p1_event) : json(nullptr);
            j["p2"] = r.p2_event;
            j["model_size"] = r.model_size;
            json model = json::array();
            for (int idx : r.final_model) model.push_back(idx + 1);
            j["final_model"] = model;
        }
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::string timing_log(const std::vector<RepetitionResult>& results)
{
    std::string out;
    for (const auto& r : results) {
        json j;
        j["case"] = r.case_id;
        j["method"] = r.method;
        j["rep"] = r.rep_id;
        j["wall_time_seconds"] = r.wall_time_seconds;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::string render_table(const SummaryTable& summary, TableFormat format)
{
    if (format == TableFormat::csv) {
        std::string out = "case,method,median_l1,median_l2sq,P1,P2,MMS,mean_time_s\n";
        for (const auto& r : summary.rows) {
            out += std::to_string(r.case_id) + ',' + r.method + ',' + fmt(r.median_l1) + ',' +
                   fmt(r.median_l2sq) + ',' + (r.p1 ? fmt(*r.p1) : std::string("NA")) + ',' + fmt(r.p2) +
                   ',' + fmt(r.mms) + ',' + fmt(r.mean_time_s) + '\n';
        }
        return out;
    }
    json rows = json::array();
    for (const auto& r : summary.rows) {
        json j;
        j["case"] = r.case_id;
        j["method"] = r.method;
        j["median_l1"] = r.median_l1;
        j["median_l2sq"] = r.median_l2sq;
        j["P1"] = r.p1 ? json(*r.p1) : json(nullptr);
        j["P2"] = r.p2;
        j["MMS"] = r.mms;
        j["mean_time_s"] = r.mean_time_s;
        j["n_reps"] = r.n_reps;
        j["n_failed"] = r.n_failed;
        rows.push_back(std::move(j));
    }
    return json{{"rows", rows}}.dump(2) + "\n";
}

void emit_table(const SummaryTable& summary, TableFormat format, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << render_table(summary, format);
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

SummaryTable parse_summary_document(const json& doc)
{
    SummaryTable table;
    for (const auto& j : doc.at("rows")) {
        SummaryRow r;
        r.case_id = j.at("case").get<int>();
        r.method = j.at("method").get<std::string>();
        auto num = [&](const char* key) {
            const auto& v = j.at(key);
            return v.is_null() ? std::nan("") : v.get<double>();
        };
        r.median_l1 = num("median_l1");
        r.median_l2sq = num("median_l2sq");
        if (!j.at("P1").is_null()) r.p1 = j.at("P1").get<double>();
        r.p2 = num("P2");
        r.mms = num("MMS");
        r.mean_time_s = num("mean_time_s");
        r.n_reps = j.value("n_reps", 0);
        r.n_failed = j.value("n_failed", 0);
        table.rows.push_back(std::move(r));
    }
    return table;
}

} // namespace

SummaryTable parse_summary_json(const std::string& text)
{
    try {
        return parse_summary_document(json::parse(text));
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("summary: malformed JSON: ") + e.what());
    }
}

std::string render_text_table(const SummaryTable& summary)
{
    std::ostringstream os;
    os << std::left << std::setw(6) << "case" << std::setw(11) << "method" << std::right
       << std::setw(11) << "med_L1" << std::setw(12) << "med_L2sq" << std::setw(7) << "P1"
       << std::setw(7) << "P2" << std::setw(8) << "MMS" << std::setw(11) << "time_s"
       << std::setw(8) << "failed" << '\n';
    os << std::fixed;
    for (const auto& r : summary.rows) {
        os << std::left << std::setw(6) << r.case_id << std::setw(11) << r.method << std::right
           << std::setprecision(3) << std::setw(11) << r.median_l1 << std::setw(12) << r.median_l2sq;
        if (r.p1) {
            os << std::setprecision(2) << std::setw(7) << *r.p1;
        } else {
            os << std::setw(7) << "--";
        }
        os << std::setprecision(2) << std::setw(7) << r.p2 << std::setprecision(1) << std::setw(8) << r.mms
           << std::setprecision(3) << std::setw(11) << r.mean_time_s << std::setw(8)
           << (std::to_string(r.n_failed) + "/" + std::to_string(r.n_reps)) << '\n';
    }
    return os.str();
}

FiveNumberSummary five_number_summary(std::vector<double> values)
{
    if (values.empty()) throw InvalidInput("five-number summary of an empty list");
    std::sort(values.begin(), values.end());
    auto quantile = [&](double prob) {
        const double h = (static_cast<double>(values.size()) - 1.0) * prob;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    return {values.front(), quantile(0.25), quantile(0.5), quantile(0.75), values.back()};
}

OracleTResult oracle_tstat_experiment(int case_id,
                                      int reps,
                                      int noise_extra,
                                      std::uint64_t seed,
                                      std::optional<int> n,
                                      std::optional<int> p)
{
    if (reps < 1) throw InvalidInput("reps must be at least 1");
    if (noise_extra < 0) throw InvalidInput("noise_extra must be nonnegative");
    const auto base = make_case(case_id);
    const auto sim = make_case(case_id, n.value_or(base.n), p.value_or(base.p));
    const std::uint64_t cs = case_seed(seed, case_id);

    OracleTResult out;
    for (int rep = 0; rep < reps; ++rep) {
        const auto sample = gen_case(sim, cs, static_cast<std::uint32_t>(rep));
        IndexSet unimportant;
        for (int j = 0; j < sim.p; ++j) {
            if (sim.true_beta(j) == 0) unimportant.push_back(j);
        }
        if (noise_extra > static_cast<int>(unimportant.size())) throw InvalidInput("noise_extra exceeds unimportant covariates");
        auto rng = make_stream(cs, static_cast<std::uint32_t>(rep), StreamPurpose::noise_pick);
        const auto perm = random_permutation(rng, static_cast<int>(unimportant.size()));
        IndexSet subset = sample.truth;
        for (int k = 0; k < noise_extra; ++k) subset.push_back(unimportant[perm[k]]);
        try {
            const CoxFit fit = newton_fit(sample.dataset, subset);
            if (!fit.converged) {
                ++out.n_skipped;
                continue;
            }
            const Eigen::VectorXd t = t_statistics(fit);
            const auto s = static_cast<Eigen::Index>(sample.truth.size());
            out.min_abs_t.push_back(t.head(s).cwiseAbs().minCoeff());
            out.rep_ids.push_back(rep);
        } catch (const std::exception&) {
            ++out.n_skipped;
        }
    }
    if (!out.min_abs_t.empty()) out.summary = five_number_summary(out.min_abs_t);
    return out;
}

} // namespace coxscreen
