#include "config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace multillum::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    const char* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, out);
    return r.ec == std::errc() && r.ptr == end;
}

}  // namespace

Config Config::parse(std::istream& is, const std::string& name) {
    Config c;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string where = name + ":" + std::to_string(lineno);
        const auto hash = line.find_first_of("#;");
        const std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3) throw ConfigError(where + ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (section.empty()) throw ConfigError(where + ": key '" + key + "' outside any section");
        c.set(section + "." + key, trim(s.substr(eq + 1)), where);
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in, path.filename().string());
}

void Config::set(const std::string& key, const std::string& value, const std::string& origin) {
    if (key.find('.') == std::string::npos) throw ConfigError(origin + ": key '" + key + "' needs a section");
    entries_[key] = Entry{value, origin};
}

void Config::merge(const Config& other) {
    for (const auto& [k, e] : other.entries_) entries_[k] = e;
}

void Config::fail(const std::string& key, const std::string& what) const {
    const Entry& e = entries_.at(key);
    throw ConfigError(e.origin + ": " + key + " = '" + e.value + "': " + what);
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second.value;
}

double Config::number(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    double v = 0.0;
    if (!parse_double(it->second.value, v)) fail(key, "expected a number");
    return v;
}

long Config::integer(const std::string& key, long fallback) const {
    const double v = number(key, static_cast<double>(fallback));
    if (v != static_cast<double>(static_cast<long>(v))) fail(key, "expected an integer");
    return static_cast<long>(v);
}

std::uint64_t Config::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& s = it->second.value;
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) fail(key, "expected an unsigned integer");
    return v;
}

bool Config::flag(const std::string& key, bool fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& s = it->second.value;
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    fail(key, "expected true or false");
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v = 0.0;
        if (!parse_double(trim(item), v)) fail(key, "expected a comma-separated list of numbers");
        out.push_back(v);
    }
    if (out.empty()) fail(key, "empty list");
    return out;
}

std::string Config::canonical() const {
    std::string out, section;
    for (const auto& [k, e] : entries_) {
        const auto dot = k.find('.');
        const std::string s = k.substr(0, dot);
        if (s != section) {
            out += "[" + s + "]\n";
            section = s;
        }
        out += k.substr(dot + 1) + " = " + e.value + "\n";
    }
    return out;
}

Config preset(const std::string& name) {
    Config c;
    const std::string origin = "preset " + name;
    auto put = [&](const char* k, const char* v) { c.set(k, v, origin); };
    if (name == "sim") {
        put("psf.kind", "sinc");
        put("psf.omega", "3.141592653589793");
        put("illumination.kind", "plane_waves");
        put("illumination.frequency", "3.141592653589793");
    } else if (name == "confocal") {
        put("psf.kind", "sinc");
        put("psf.omega", "3.141592653589793");
        put("illumination.kind", "translated");
        put("illumination.profile", "sinc");
        put("illumination.profile_omega", "3.141592653589793");
    } else if (name == "smlm") {
        put("psf.kind", "sinc");
        put("psf.omega", "3.141592653589793");
        put("illumination.kind", "sharp_peak");
        put("illumination.width", "0.1");
    } else if (name == "beam") {
        put("psf.kind", "sinc");
        put("psf.omega", "3.141592653589793");
        put("illumination.kind", "composite");
        put("illumination.profile", "sinc");
        put("illumination.profile_omega", "3.141592653589793");
        put("illumination.weights_re", "1,0.5");
        put("illumination.weights_im", "0,0.5");
        put("illumination.offsets", "0,0.3");
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected sim, confocal, smlm or beam)");
    }
    return c;
}

}  // namespace multillum::cli
