#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lilchain::io {

/// Shortest round-trip representation; used for every CSV field so that
/// identical runs produce identical bytes.
std::string num(double x);

std::string join(const std::vector<std::string>& fields, std::string_view sep = ",");

/// Header fields prefix_1 .. prefix_d.
std::vector<std::string> indexed(std::string_view prefix, long d);

void write_file(const std::filesystem::path& path, std::string_view contents);

/// Rows of numbers from a CSV file with one header line.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
Table read_csv(const std::filesystem::path& path);

}  // namespace lilchain::io
