#include "coxscreen/serialize.hpp"

#include <json.hpp>

#include <limits>

namespace coxscreen {

using json = nlohmann::ordered_json;

namespace {

json parse_document(const std::string& text, const char* what)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string(what) + ": malformed JSON: " + e.what());
    }
}

void require_object(const json& doc, const char* what)
{
    if (!doc.is_object()) throw InvalidInput(std::string(what) + ": expected a JSON object at /");
}

long long get_integer(const json& value, const std::string& path, long long lo, long long hi)
{
    if (!value.is_number_integer()) throw InvalidInput(path + ": expected an integer");
    long long v = 0;
    if (value.is_number_unsigned()) {
        const auto u = value.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<long long>::max())) throw InvalidInput(path + ": value out of range");
        v = static_cast<long long>(u);
    } else {
        v = value.get<long long>();
    }
    if (v < lo || v > hi) throw InvalidInput(path + ": value out of range");
    return v;
}

std::uint64_t get_seed(const json& value, const std::string& path)
{
    if (value.is_number_unsigned()) return value.get<std::uint64_t>();
    if (value.is_number_integer() && value.get<long long>() >= 0) return static_cast<std::uint64_t>(value.get<long long>());
    throw InvalidInput(path + ": expected a nonnegative integer");
}

double get_number(const json& value, const std::string& path)
{
    if (!value.is_number()) throw InvalidInput(path + ": expected a number");
    return value.get<double>();
}

int get_int(const json& value, const std::string& path)
{
    return static_cast<int>(get_integer(value, path, std::numeric_limits<int>::min(), std::numeric_limits<int>::max()));
}

json index_list(const IndexSet& indices, int base)
{
    json out = json::array();
    for (int j : indices) out.push_back(j + base);
    return out;
}

json number_list(const std::vector<double>& values)
{
    json out = json::array();
    // JSON has no infinities; unusable utilities are written as null
    for (double v : values) out.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    return out;
}

} // namespace

std::string case_spec_to_json(const CaseSpec& spec)
{
    json j;
    j["case_id"] = spec.case_id;
    j["n"] = spec.n;
    j["p"] = spec.p;
    j["seed"] = spec.seed;
    return j.dump(2) + "\n";
}

CaseSpec case_spec_from_json(const std::string& text)
{
    const json doc = parse_document(text, "case");
    require_object(doc, "case");
    CaseSpec spec;
    for (const auto& [key, value] : doc.items()) {
        const std::string path = "/" + key;
        if (key == "case_id") {
            spec.case_id = static_cast<int>(get_integer(value, path, 1, 6));
        } else if (key == "n") {
            spec.n = static_cast<int>(get_integer(value, path, 2, std::numeric_limits<int>::max()));
        } else if (key == "p") {
            spec.p = static_cast<int>(get_integer(value, path, 1, std::numeric_limits<int>::max()));
        } else if (key == "seed") {
            spec.seed = get_seed(value, path);
        } else {
            throw InvalidInput(path + ": unknown key");
        }
    }
    for (const char* key : {"case_id", "n", "p", "seed"}) {
        if (!doc.contains(key)) throw InvalidInput(std::string("/") + key + ": missing");
    }
    return spec;
}

std::string trace_to_json(const ScreeningTrace& trace, int index_base)
{
    json j;
    j["method"] = std::string(method_name(trace.method));
    j["d"] = trace.d;
    j["index_base"] = index_base;
    j["restarted"] = trace.restarted;
    json iterations = json::array();
    for (const auto& it : trace.iterations) {
        json rec;
        rec["recruited"] = index_list(it.recruited, index_base);
        rec["utilities"] = number_list(it.utilities);
        rec["candidates"] = index_list(it.candidate_set, index_base);
        rec["model"] = index_list(it.model, index_base);
        if (trace.method != ScreeningMethod::van_sis && trace.method != ScreeningMethod::van_isis) {
            rec["intersection_size"] = it.intersection_size;
            rec["fallback"] = it.fallback;
        }
        iterations.push_back(std::move(rec));
    }
    j["iterations"] = std::move(iterations);
    j["sure_screen_candidates"] = index_list(trace.sure_screen_candidate, index_base);
    j["final_model"] = index_list(trace.final_model, index_base);

    const auto& fit = trace.final_fit;
    json coefficients = json::array();
    for (std::size_t k = 0; k < fit.covariate_indices.size(); ++k) {
        const double b = fit.beta(static_cast<Eigen::Index>(k));
        if (b == 0) continue;
        coefficients.push_back(json{{"index", fit.covariate_indices[k] + index_base}, {"beta", b}});
    }
    j["final_fit"] = json{{"lambda", fit.lambda},
                          {"loglik", fit.loglik},
                          {"bic", fit.bic},
                          {"converged", fit.converged},
                          {"coefficients", std::move(coefficients)}};
    return j.dump(2) + "\n";
}

BenchmarkConfig bench_config_from_json(const std::string& text)
{
    const json doc = parse_document(text, "config");
    require_object(doc, "config");
    BenchmarkConfig config;
    for (const auto& [key, value] : doc.items()) {
        const std::string path = "/" + key;
        if (key == "cases") {
            if (!value.is_array()) throw InvalidInput(path + ": expected an array of case ids");
            config.cases.clear();
            for (std::size_t i = 0; i < value.size(); ++i) {
                config.cases.push_back(static_cast<int>(get_integer(value[i], path + "/" + std::to_string(i), 1, 6)));
            }
        } else if (key == "methods") {
            if (!value.is_array()) throw InvalidInput(path + ": expected an array of method names");
            config.methods.clear();
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (!value[i].is_string()) throw InvalidInput(path + "/" + std::to_string(i) + ": expected a string");
                config.methods.push_back(value[i].get<std::string>());
            }
        } else if (key == "reps") {
            config.reps = get_int(value, path);
        } else if (key == "base_seed") {
            config.base_seed = get_seed(value, path);
        } else if (key == "workers") {
            config.workers = get_int(value, path);
        } else if (key == "output_path") {
            if (!value.is_string()) throw InvalidInput(path + ": expected a string");
            config.output_path = value.get<std::string>();
        } else if (key == "n") {
            config.n = get_int(value, path);
        } else if (key == "p") {
            config.p = get_int(value, path);
        } else if (key == "d") {
            config.d = get_int(value, path);
        } else if (key == "max_isis_iter") {
            config.max_isis_iter = get_int(value, path);
        } else if (key == "a") {
            config.penalty.a = get_number(value, path);
        } else if (key == "n_lambda") {
            config.penalty.n_lambda = get_int(value, path);
        } else if (key == "lambda_ratio") {
            config.penalty.lambda_ratio = get_number(value, path);
            if (!(config.penalty.lambda_ratio > 0 && config.penalty.lambda_ratio < 1)) {
                throw InvalidInput(path + ": must lie in (0, 1)");
            }
        } else if (key == "lasso_folds") {
            config.lasso_folds = get_int(value, path);
        } else {
            throw InvalidInput(path + ": unknown key");
        }
    }
    config.validate();
    return config;
}

} // namespace coxscreen
