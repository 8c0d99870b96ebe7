#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace multillum::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Sectioned `key = value` document. Keys are addressed as "section.key";
// every value remembers where it came from for diagnostics.
class Config {
public:
    struct Entry {
        std::string value;
        std::string origin;  // "file.ini:12", "--set", "preset sim", ...
    };

    static Config parse(std::istream& is, const std::string& name);
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value, const std::string& origin);
    // Later entries win.
    void merge(const Config& other);
    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    void erase(const std::string& key) { entries_.erase(key); }

    std::string text(const std::string& key, const std::string& fallback) const;
    double number(const std::string& key, double fallback) const;
    long integer(const std::string& key, long fallback) const;
    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;

    // Sorted `[section]` / `key = value` text, the input of the config hash.
    std::string canonical() const;

private:
    [[noreturn]] void fail(const std::string& key, const std::string& what) const;
    std::map<std::string, Entry> entries_;
};

// Section keys for one of sim, confocal, smlm, beam.
Config preset(const std::string& name);

}  // namespace multillum::cli
