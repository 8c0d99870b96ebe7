#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace multillum::cli {

inline constexpr const char* tool_version = "0.1.0";

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

struct Provenance {
    std::string subcommand;
    std::string config_hash;
    std::uint64_t seed = 0;
};

// Writes artifacts into one directory, stamping each with the provenance line.
class OutputDir {
public:
    OutputDir(std::filesystem::path dir, Provenance p);

    const std::filesystem::path& path() const { return dir_; }
    const std::vector<std::string>& written() const { return written_; }

    // Opens a CSV whose first line is a `#` provenance comment; the caller writes the header and rows.
    std::ofstream csv_stream(const std::string& name);
    void csv(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<double>>& rows);
    // Adds a "provenance" member and writes sorted keys with 2-space indentation.
    void json(const std::string& name, nlohmann::json doc);
    // Single-polyline line chart; coordinates rounded to 6 significant digits.
    void svg(const std::string& name, std::span<const double> x, std::span<const double> y, const std::string& x_label,
             const std::string& y_label, const std::string& title);

private:
    std::ofstream open(const std::string& name);
    std::string stamp() const;

    std::filesystem::path dir_;
    Provenance prov_;
    std::vector<std::string> written_;
};

}  // namespace multillum::cli
