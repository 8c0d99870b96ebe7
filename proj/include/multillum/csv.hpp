#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace multillum::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Reads a header row plus numeric rows; skips blank lines and '#' comments.
// Errors carry the 1-based line number.
Table read(std::istream& is);

std::vector<std::string> split(const std::string& line);

// Shortest round-trip decimal representation.
std::string number(double v);

}  // namespace multillum::csv
