#include "screenkit/io.hpp"

#include "screenkit/errors.hpp"
#include "screenkit/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace screenkit {

std::uint64_t default_seed(std::uint64_t fallback)
{
    if (const char* env = std::getenv("SCREENKIT_SEED")) {
        std::uint64_t v = 0;
        const char* end = env + std::char_traits<char>::length(env);
        auto [ptr, ec] = std::from_chars(env, end, v);
        if (ec == std::errc() && ptr == end)
            return v;
    }
    return fallback;
}

namespace io {

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (v == 0.0)
        return "0";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

std::string trim(std::string s)
{
    const auto ws = " \t\r\n\"";
    s.erase(0, s.find_first_not_of(ws));
    const auto last = s.find_last_not_of(ws);
    s.erase(last == std::string::npos ? 0 : last + 1);
    return s;
}

bool parse_number(const std::string& s, double& v)
{
    const std::string t = trim(s);
    if (t.empty())
        return false;
    char* end = nullptr;
    v = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

Coding infer_coding(const Eigen::MatrixXd& m)
{
    bool two = true;
    bool three = true;
    bool unit = true;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double v = m.data()[i];
        two = two && (v == 1.0 || v == -1.0);
        three = three && (v == 1.0 || v == -1.0 || v == 0.0);
        unit = unit && v >= 0.0 && v <= 1.0;
    }
    if (two)
        return Coding::TwoLevel;
    if (three)
        return Coding::ThreeLevel;
    if (unit)
        return Coding::Unit;
    return Coding::Symmetric;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw UsageError("cannot write " + path.string());
    return out;
}

} // namespace

void write_design_csv(const Design& design, std::ostream& out)
{
    for (int j = 0; j < design.d(); ++j)
        out << (j ? "," : "") << design.names()[static_cast<std::size_t>(j)];
    out << '\n';
    for (int i = 0; i < design.n(); ++i) {
        for (int j = 0; j < design.d(); ++j)
            out << (j ? "," : "") << format_double(design(i, j));
        out << '\n';
    }
}

void write_design_csv(const Design& design, const std::filesystem::path& path)
{
    auto out = open_out(path);
    write_design_csv(design, out);
}

Design read_design_csv(std::istream& in, std::optional<Coding> coding)
{
    std::string line;
    if (!std::getline(in, line))
        throw UsageError("design file is empty");
    std::vector<std::string> names;
    for (auto& c : split_csv_line(line))
        names.push_back(trim(c));
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        auto cells = split_csv_line(line);
        if (cells.size() != names.size())
            throw UsageError("design line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                             " fields, expected " + std::to_string(names.size()));
        std::vector<double> row;
        for (const auto& c : cells) {
            double v = 0;
            if (!parse_number(c, v))
                throw UsageError("design line " + std::to_string(lineno) + ": not a number: '" + c + "'");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw UsageError("design file has no runs");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < names.size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    const Coding c = coding ? *coding : infer_coding(m);
    return Design(std::move(m), c, std::move(names), {"csv", 0});
}

Design read_design_csv(const std::filesystem::path& path, std::optional<Coding> coding)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot open " + path.string());
    return read_design_csv(in, coding);
}

Eigen::VectorXd read_vector_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot open " + path.string());
    std::vector<double> values;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        auto cells = split_csv_line(line);
        double v = 0;
        if (!parse_number(cells.front(), v)) {
            if (first) {
                first = false;
                continue; // header
            }
            throw UsageError("non-numeric response value '" + cells.front() + "' in " + path.string());
        }
        first = false;
        values.push_back(v);
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_vector_csv(const Eigen::VectorXd& y, const std::string& header, const std::filesystem::path& path)
{
    auto out = open_out(path);
    out << header << '\n';
    for (Eigen::Index i = 0; i < y.size(); ++i)
        out << format_double(y(i)) << '\n';
}

void write_table_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
                     const std::filesystem::path& path)
{
    auto out = open_out(path);
    for (std::size_t j = 0; j < header.size(); ++j)
        out << (j ? "," : "") << header[j];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j)
            out << (j ? "," : "") << format_double(row[j]);
        out << '\n';
    }
}

json to_json(const Metrics& m)
{
    return {{"phi_s", m.sensitivity}, {"phi_I", m.type_one}, {"phi_fdr", m.false_discovery}};
}

json to_json(const ScreeningOutcome& outcome)
{
    json selected = json::array();
    json selected_names = json::array();
    for (int v : outcome.selected) {
        selected.push_back(v + 1);
        if (v < static_cast<int>(outcome.names.size()))
            selected_names.push_back(outcome.names[static_cast<std::size_t>(v)]);
    }
    json stats = json::object();
    for (Eigen::Index i = 0; i < outcome.statistics.size(); ++i) {
        const std::string key = i < static_cast<Eigen::Index>(outcome.names.size())
                                    ? outcome.names[static_cast<std::size_t>(i)]
                                    : "x" + std::to_string(i + 1);
        const double v = outcome.statistics(i);
        stats[key] = std::isfinite(v) ? json(v) : json(format_double(v));
    }
    json j = {{"method", outcome.method},
              {"selected", selected},
              {"selected_names", selected_names},
              {"statistics", stats},
              {"metrics", outcome.metrics ? to_json(*outcome.metrics) : json(nullptr)}};
    if (outcome.truth) {
        json t = json::array();
        for (int v : *outcome.truth)
            t.push_back(v + 1);
        j["truth"] = t;
    }
    return j;
}

json report(const ScreeningOutcome& outcome, const json& extra)
{
    json j = to_json(outcome);
    for (auto it = extra.begin(); it != extra.end(); ++it)
        j[it.key()] = it.value();
    return j;
}

json to_json(const MorrisPlan& plan)
{
    return {{"r", plan.r},
            {"delta", plan.delta},
            {"f", plan.f},
            {"d", plan.d()},
            {"rows", plan.design.n()},
            {"trajectory_starts", plan.trajectory_starts},
            {"seed", plan.design.provenance().seed}};
}

MorrisPlan morris_plan_from(const Design& design, const json& meta)
{
    try {
        MorrisPlan plan{design.coding() == Coding::Unit ? design : Design(design.runs(), Coding::Unit, design.names()),
                        meta.at("r").get<int>(), meta.at("delta").get<double>(), meta.at("f").get<int>(),
                        meta.at("trajectory_starts").get<std::vector<int>>()};
        if (meta.contains("d") && meta.at("d").get<int>() != design.d())
            throw DomainError("plan metadata has d = " + std::to_string(meta.at("d").get<int>()) +
                              " but the design has " + std::to_string(design.d()) + " columns");
        return plan;
    } catch (const json::exception& e) {
        throw UsageError(std::string("invalid plan metadata: ") + e.what());
    }
}

void write_json(const json& j, const std::filesystem::path& path)
{
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

} // namespace io
} // namespace screenkit
