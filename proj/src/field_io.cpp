#include "oneshot/field_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace oneshot {

namespace {

// Shortest representation that parses back to the same double.
std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

// std::stod rejects subnormals with out_of_range (ERANGE); from_chars parses
// every value format_double emits, including subnormals.
double parse_double(const std::string& tok) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw ConfigError("field CSV: bad numeric value: " + tok);
    return v;
}

}  // namespace

void write_field_csv(std::ostream& os, const Field& f) {
    if (f.is_spatial()) {
        const Grid1D& g = f.grid1d();
        os << "# grid: " << g.n << " spacing: " << format_double(g.h) << "\n";
    } else {
        const GridST& g = f.grid_st();
        os << "# grid: " << g.nx << "," << g.nt << " spacing: " << format_double(g.hx) << ","
           << format_double(g.ht) << "\n";
    }
    for (double v : f.values) os << format_double(v) << "\n";
}

void write_field_csv(const std::string& path, const Field& f) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open for writing: " + path);
    write_field_csv(os, f);
}

Field read_field_csv(std::istream& is) {
    std::string header;
    if (!std::getline(is, header) || header.rfind("# grid:", 0) != 0)
        throw ConfigError("field CSV: missing '# grid:' header");

    std::istringstream hs(header.substr(7));
    std::string grid_tok, spacing_label, spacing_tok;
    hs >> grid_tok >> spacing_label >> spacing_tok;
    if (spacing_label != "spacing:") throw ConfigError("field CSV: malformed header: " + header);

    AnyGrid grid = Grid1D{};
    auto comma = grid_tok.find(',');
    if (comma == std::string::npos) {
        Grid1D g;
        g.n = std::stoi(grid_tok);
        g.h = parse_double(spacing_tok);
        grid = g;
    } else {
        GridST g;
        g.nx = std::stoi(grid_tok.substr(0, comma));
        g.nt = std::stoi(grid_tok.substr(comma + 1));
        auto scomma = spacing_tok.find(',');
        if (scomma == std::string::npos) throw ConfigError("field CSV: expected two spacings");
        g.hx = parse_double(spacing_tok.substr(0, scomma));
        g.ht = parse_double(spacing_tok.substr(scomma + 1));
        grid = g;
    }

    std::vector<double> values;
    values.reserve(node_count(grid));
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        values.push_back(parse_double(line));
    }
    if (values.size() != node_count(grid))
        throw ConfigError("field CSV: expected " + std::to_string(node_count(grid)) +
                          " values, got " + std::to_string(values.size()));

    Field f;
    f.grid = grid;
    f.values = std::move(values);
    return f;
}

Field read_field_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open for reading: " + path);
    return read_field_csv(is);
}

}  // namespace oneshot
