#include "coxscreen/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace coxscreen {

SurvivalDataset::SurvivalDataset(Eigen::MatrixXd covariates,
                                 Eigen::VectorXd times,
                                 std::vector<int> status,
                                 std::vector<std::string> column_names)
    : x_(std::move(covariates))
    , time_(std::move(times))
    , status_(std::move(status))
    , names_(std::move(column_names))
{
    const auto n = x_.rows();
    if (time_.size() != n || static_cast<Eigen::Index>(status_.size()) != n) {
        throw InvalidInput("dimension mismatch: covariates have " + std::to_string(n) +
                           " rows, times " + std::to_string(time_.size()) +
                           ", status " + std::to_string(status_.size()));
    }
    if (n == 0) throw InvalidInput("empty dataset");
    if (!names_.empty() && static_cast<Eigen::Index>(names_.size()) != x_.cols()) {
        throw InvalidInput("dimension mismatch: column names do not match covariate count");
    }
    if (!x_.allFinite()) throw InvalidInput("non-finite covariate value");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(time_(i))) throw InvalidInput("non-finite time");
        if (time_(i) <= 0) throw InvalidInput("nonpositive time");
        if (status_[i] != 0 && status_[i] != 1) throw InvalidInput("status must be 0 or 1");
    }
    n_events_ = static_cast<std::size_t>(std::count(status_.begin(), status_.end(), 1));
    if (n_events_ == 0) throw InvalidInput("no events");

    if (names_.empty()) {
        names_.reserve(x_.cols());
        for (Eigen::Index j = 0; j < x_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
    }

    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](int a, int b) { return time_(a) > time_(b); });
    blocks_.clear();
    for (Eigen::Index k = 0; k < n; ++k) {
        if (k == 0 || time_(order_[k]) != time_(order_[k - 1])) blocks_.push_back(static_cast<int>(k));
    }
    blocks_.push_back(static_cast<int>(n));
}

SurvivalDataset SurvivalDataset::subset_rows(std::span<const int> rows) const
{
    Eigen::MatrixXd x(rows.size(), x_.cols());
    Eigen::VectorXd t(rows.size());
    std::vector<int> s(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int r = rows[i];
        if (r < 0 || r >= x_.rows()) throw InvalidInput("row index out of range");
        x.row(i) = x_.row(r);
        t(i) = time_(r);
        s[i] = status_[r];
    }
    return SurvivalDataset(std::move(x), std::move(t), std::move(s), names_);
}

void SurvivalDataset::check_subset(std::span<const int> subset) const
{
    std::vector<char> seen(p(), 0);
    for (int j : subset) {
        if (j < 0 || static_cast<std::size_t>(j) >= p()) {
            throw InvalidInput("covariate index out of range: " + std::to_string(j));
        }
        if (seen[j]) throw InvalidInput("duplicate covariate index: " + std::to_string(j));
        seen[j] = 1;
    }
}

SurvivalDataset build_dataset(Eigen::MatrixXd covariates,
                              Eigen::VectorXd times,
                              std::vector<int> status)
{
    return SurvivalDataset(std::move(covariates), std::move(times), std::move(status));
}

SurvivalDataset standardize(const SurvivalDataset& data)
{
    Eigen::MatrixXd x = data.covariates();
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        auto col = x.col(j);
        if (col.maxCoeff() == col.minCoeff()) {
            col.setZero();
            continue;
        }
        col.array() -= col.mean();
        const double sd = n > 1 ? std::sqrt(col.squaredNorm() / (n - 1)) : 0.0;
        if (sd > 0) col /= sd;
    }
    return SurvivalDataset(std::move(x), data.times(), data.status(), data.column_names());
}

double null_loglik(const SurvivalDataset& data)
{
    const auto& order = data.sort_order();
    const auto& blocks = data.tie_blocks();
    double ll = 0;
    for (std::size_t b = 0; b + 1 < blocks.size(); ++b) {
        int d = 0;
        for (int k = blocks[b]; k < blocks[b + 1]; ++k) d += data.status()[order[k]];
        if (d > 0) ll -= d * std::log(static_cast<double>(blocks[b + 1]));
    }
    return ll;
}

namespace {

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim spaces and a trailing carriage return
        const auto first = field.find_first_not_of(" \t\r");
        const auto last = field.find_last_not_of(" \t\r");
        out.push_back(first == std::string::npos ? "" : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line_no, const std::string& column)
{
    double v = 0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (!s.empty() && *begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (s.empty() || ec != std::errc() || ptr != end) {
        throw InvalidInput("line " + std::to_string(line_no) + ": cannot parse '" + s +
                           "' in column '" + column + "'");
    }
    return v;
}

std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace

SurvivalDataset parse_csv(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string::npos) break;
    }
    if (line_no == 0 || line.find_first_not_of(" \t\r") == std::string::npos) {
        throw InvalidInput("line 1: missing header row");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_line(line);
    int time_col = -1;
    int status_col = -1;
    std::vector<int> cov_cols;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "time") {
            if (time_col >= 0) throw InvalidInput("line " + std::to_string(line_no) + ": duplicate 'time' column");
            time_col = static_cast<int>(c);
        } else if (header[c] == "status") {
            if (status_col >= 0) throw InvalidInput("line " + std::to_string(line_no) + ": duplicate 'status' column");
            status_col = static_cast<int>(c);
        } else {
            cov_cols.push_back(static_cast<int>(c));
            names.push_back(header[c]);
        }
    }
    if (time_col < 0) throw InvalidInput("line " + std::to_string(line_no) + ": header lacks a 'time' column");
    if (status_col < 0) throw InvalidInput("line " + std::to_string(line_no) + ": header lacks a 'status' column");

    std::vector<double> values;
    std::vector<double> times;
    std::vector<int> status;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_line(line);
        if (fields.size() != header.size()) {
            throw InvalidInput("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields, found " +
                               std::to_string(fields.size()));
        }
        const double t = parse_number(fields[time_col], line_no, "time");
        if (!std::isfinite(t) || t <= 0) {
            throw InvalidInput("line " + std::to_string(line_no) + ": nonpositive time");
        }
        const double s = parse_number(fields[status_col], line_no, "status");
        if (s != 0.0 && s != 1.0) {
            throw InvalidInput("line " + std::to_string(line_no) + ": status must be 0 or 1");
        }
        times.push_back(t);
        status.push_back(static_cast<int>(s));
        for (std::size_t k = 0; k < cov_cols.size(); ++k) {
            const double v = parse_number(fields[cov_cols[k]], line_no, names[k]);
            if (!std::isfinite(v)) {
                throw InvalidInput("line " + std::to_string(line_no) + ": non-finite value in column '" +
                                   names[k] + "'");
            }
            values.push_back(v);
        }
    }
    const auto n = static_cast<Eigen::Index>(times.size());
    const auto p = static_cast<Eigen::Index>(cov_cols.size());
    if (n == 0) throw InvalidInput("no data rows");
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) x(i, j) = values[i * p + j];
    }
    return SurvivalDataset(std::move(x), Eigen::Map<Eigen::VectorXd>(times.data(), n),
                           std::move(status), std::move(names));
}

SurvivalDataset read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    return parse_csv(in);
}

void write_csv(const SurvivalDataset& data, std::ostream& out)
{
    out << "time,status";
    for (const auto& name : data.column_names()) out << ',' << name;
    out << '\n';
    const auto& x = data.covariates();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        out << format_double(data.times()(i)) << ',' << data.status()[i];
        for (Eigen::Index j = 0; j < x.cols(); ++j) out << ',' << format_double(x(i, j));
        out << '\n';
    }
}

void write_csv(const SurvivalDataset& data, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_csv(data, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace coxscreen
