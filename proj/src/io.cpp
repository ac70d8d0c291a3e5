#include "lilchain/io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "lilchain/errors.hpp"

namespace lilchain::io {

std::string num(double x) {
    if (x == 0.0) return "0";  // folds -0
    return fmt::format("{}", x);
}

std::string join(const std::vector<std::string>& fields, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += sep;
        out += fields[i];
    }
    return out;
}

std::vector<std::string> indexed(std::string_view prefix, long d) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(d));
    for (long i = 1; i <= d; ++i) out.push_back(fmt::format("{}_{}", prefix, i));
    return out;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << contents;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace

Table read_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read " + path.string());
    Table t;
    std::string line;
    if (!std::getline(f, line)) throw ConfigError(path.string() + ": empty file");
    t.header = split(line);
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size())
            throw ConfigError(fmt::format("{}:{}: expected {} fields, got {}", path.string(),
                                          lineno, t.header.size(), cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size()) throw std::invalid_argument(c);
            } catch (const std::exception&) {
                throw ConfigError(fmt::format("{}:{}: not a number: '{}'", path.string(), lineno, c));
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace lilchain::io
