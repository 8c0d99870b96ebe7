#include "report.hpp"

#include <algorithm>
#include <cstdio>

#include "config.hpp"
#include "multillum/csv.hpp"

namespace multillum::cli {

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

OutputDir::OutputDir(std::filesystem::path dir, Provenance p) : dir_(std::move(dir)), prov_(std::move(p)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

std::ofstream OutputDir::open(const std::string& name) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + (dir_ / name).string());
    written_.push_back(name);
    return os;
}

std::string OutputDir::stamp() const {
    return "tool=multillum " + std::string(tool_version) + " subcommand=" + prov_.subcommand +
           " config_hash=" + prov_.config_hash + " seed=" + std::to_string(prov_.seed);
}

std::ofstream OutputDir::csv_stream(const std::string& name) {
    std::ofstream os = open(name);
    os << "# " << stamp() << "\n";
    return os;
}

void OutputDir::csv(const std::string& name, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows) {
    std::ofstream os = csv_stream(name);
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv::number(r[i]);
        os << "\n";
    }
}

void OutputDir::json(const std::string& name, nlohmann::json doc) {
    doc["provenance"] = {{"tool", "multillum"},
                         {"tool_version", tool_version},
                         {"subcommand", prov_.subcommand},
                         {"config_hash", prov_.config_hash},
                         {"seed", prov_.seed}};
    std::ofstream os = open(name);
    os << doc.dump(2) << "\n";
}

namespace {

std::string g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void OutputDir::svg(const std::string& name, std::span<const double> x, std::span<const double> y,
                    const std::string& x_label, const std::string& y_label, const std::string& title) {
    constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
    const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
    const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
    const double x0 = x.empty() ? 0.0 : *xmin_it, x1 = x.empty() ? 1.0 : *xmax_it;
    const double y0 = y.empty() ? 0.0 : std::min(0.0, *ymin_it), y1 = y.empty() ? 1.0 : *ymax_it;
    const double sx = (W - L - R) / (x1 > x0 ? x1 - x0 : 1.0);
    const double sy = (H - T - B) / (y1 > y0 ? y1 - y0 : 1.0);

    std::ofstream os = open(name);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<!-- " << stamp() << " -->\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\">" << escape_xml(title) << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << L << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << g6(x0) << "</text>\n";
    os << "<text x=\"" << W - R << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << g6(x1) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << H - B << "\" text-anchor=\"end\">" << g6(y0) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\">" << g6(y1) << "</text>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape_xml(x_label)
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << (T + H - B) / 2 << ")\">" << escape_xml(y_label) << "</text>\n";
    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    const std::size_t n = std::min(x.size(), y.size());
    for (std::size_t i = 0; i < n; ++i)
        os << (i ? " " : "") << g6(L + (x[i] - x0) * sx) << "," << g6(H - B - (y[i] - y0) * sy);
    os << "\"/>\n</svg>\n";
}

}  // namespace multillum::cli
