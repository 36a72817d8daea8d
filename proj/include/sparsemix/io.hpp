#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sparsemix/core.hpp"

namespace sparsemix {

/// Shortest decimal form that round-trips a double.
inline std::string format_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Shortest-ish form for messages (12 significant digits).
inline std::string format_compact(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(s);
    while (std::getline(in, field, sep))
        out.push_back(trim(field));
    if (!s.empty() && s.back() == sep)
        out.emplace_back();
    return out;
}

inline double parse_double(const std::string& text)
{
    const std::string t = trim(text);
    if (t.empty())
        throw InvalidInput("empty numeric field");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE)
        throw InvalidInput("not a number: '" + t + "'");
    return v;
}

inline long long parse_integer(const std::string& text)
{
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
        throw InvalidInput("not an integer: '" + t + "'");
    return v;
}

inline std::vector<double> parse_double_list(const std::string& text, char sep = ',')
{
    std::vector<double> out;
    for (const auto& f : split(text, sep))
        if (!f.empty())
            out.push_back(parse_double(f));
    return out;
}

/// Plain numeric CSV: one row per line, comma separated, optional header line.
inline Matrix parse_matrix_csv(std::istream& in, bool skip_header = false)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_header && line_no == 1)
            continue;
        if (trim(line).empty())
            continue;
        std::vector<double> row;
        try {
            row = parse_double_list(line);
        } catch (const InvalidInput& e) {
            throw InvalidInput("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw InvalidInput("line " + std::to_string(line_no) + " has " +
                               std::to_string(row.size()) + " fields, expected " +
                               std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        return Matrix(0, 0);
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

inline Matrix read_matrix_csv(const std::string& path, bool skip_header = false)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    return parse_matrix_csv(in, skip_header);
}

inline void write_matrix_csv(std::ostream& out, const Matrix& m)
{
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j)
                out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

inline void write_matrix_csv(const std::string& path, const Matrix& m)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    write_matrix_csv(out, m);
    if (!out)
        throw IoError("failed writing '" + path + "'");
}

/// Covariance CSV: p rows of p columns.
inline Matrix read_covariance_csv(const std::string& path)
{
    Matrix sigma = read_matrix_csv(path);
    if (sigma.rows() == 0 || sigma.rows() != sigma.cols())
        throw InvalidInput("covariance file '" + path + "' is not a square matrix");
    return sigma;
}

//---------------------------------------------------------------------------//
/*!
 * Flat key/value configuration: `key = value` or `key: value` per line,
 * '#' starts a comment.
 */
class KeyValueConfig
{
  public:
    static KeyValueConfig parse(std::istream& in)
    {
        KeyValueConfig cfg;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            line = trim(line);
            if (line.empty())
                continue;
            auto pos = line.find('=');
            if (pos == std::string::npos)
                pos = line.find(':');
            if (pos == std::string::npos)
                throw InvalidInput("config line " + std::to_string(line_no) +
                                   ": expected key = value");
            cfg.values_[trim(line.substr(0, pos))] = trim(line.substr(pos + 1));
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open config '" + path + "'");
        return parse(in);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    const std::string& get(const std::string& key) const
    {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw InvalidInput("missing config key '" + key + "'");
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& fallback) const
    {
        return has(key) ? get(key) : fallback;
    }

    double get_double(const std::string& key) const { return parse_double(get(key)); }
    long long get_int(const std::string& key) const { return parse_integer(get(key)); }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace sparsemix
