#include "cpss/dataset.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "cpss/error.hpp"

namespace cpss {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    s = s.substr(first, last - first + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
            cur += c;
        } else if (c == ',' && !quoted) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    v = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && errno != ERANGE;
}

}  // namespace

Dataset Dataset::subset(std::span<const int> rows) const {
    Dataset d;
    d.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    d.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.X.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
        d.y(static_cast<Eigen::Index>(i)) = y(rows[i]);
    }
    d.names = names;
    d.response_name = response_name;
    return d;
}

std::vector<std::string> default_names(int p) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k) names.push_back(fmt::format("x{}", k + 1));
    return names;
}

Dataset read_csv(std::istream& in, const std::string& response) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("CSV input is empty");
    const auto header = split_row(line);
    int response_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == response) response_col = static_cast<int>(c);
    }
    if (response_col < 0) throw InputError(fmt::format("response column '{}' not found in CSV header", response));
    if (header.size() < 2) throw InputError("CSV needs at least one predictor column");

    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split_row(line);
        if (cells.size() != header.size()) {
            throw InputError(fmt::format("CSV line {}: expected {} fields, found {}", lineno, header.size(), cells.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!parse_double(cells[c], row[c])) {
                throw InputError(fmt::format("CSV line {}: column '{}' is not numeric (value '{}')", lineno, header[c],
                                             cells[c]));
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw InputError("CSV needs at least two data rows");

    Dataset d;
    d.response_name = response;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(header.size() - 1);
    d.X.resize(n, p);
    d.y.resize(n);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (static_cast<int>(c) != response_col) d.names.push_back(header[c]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index k = 0;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (static_cast<int>(c) == response_col) {
                d.y(i) = rows[i][c];
            } else {
                d.X(i, k++) = rows[i][c];
            }
        }
    }
    return d;
}

Dataset load_csv(const std::string& path, const std::string& response) {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot open '{}'", path));
    return read_csv(in, response);
}

void write_csv(std::ostream& out, const Dataset& data) {
    out << data.response_name;
    for (const auto& name : data.names) out << ',' << name;
    out << '\n';
    for (int i = 0; i < data.n(); ++i) {
        out << fmt::format("{:.17g}", data.y(i));
        for (int k = 0; k < data.p(); ++k) out << fmt::format(",{:.17g}", data.X(i, k));
        out << '\n';
    }
}

}  // namespace cpss
