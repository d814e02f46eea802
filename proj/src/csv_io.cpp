#include "extdef/csv_io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "extdef/errors.hpp"

namespace extdef {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
    const std::string t = trim(cell);
    const char* begin = t.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (t.empty() || end != begin + t.size() || !std::isfinite(v))
        throw config_error("csv: cannot parse numeric cell '" + cell + "' at row " +
                           std::to_string(row) + ", column '" + col + "'");
    return v;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("csv: cannot open '" + path + "'");
    return in;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

SiteSet load_sites(const std::string& path, Metric metric, Plane plane) {
    auto in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw config_error("csv: empty site file '" + path + "'");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "x" || header[2] != "y")
        throw config_error("csv: site file '" + path + "' must have header id,x,y");
    std::vector<Site> sites;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() < 3)
            throw config_error("csv: site file row " + std::to_string(row) + " has fewer than 3 columns");
        sites.push_back(
            {cells[0], parse_cell(cells[1], row, "x"), parse_cell(cells[2], row, "y")});
    }
    return SiteSet(std::move(sites), plane, metric);
}

void write_sites(const std::string& path, const SiteSet& sites) {
    std::ofstream out(path);
    if (!out) throw config_error("csv: cannot write '" + path + "'");
    out << "id,x,y\n";
    out.precision(17);
    for (const auto& s : sites.sites()) out << s.id << ',' << s.x << ',' << s.y << '\n';
}

std::pair<ObservationMatrix, SiteSet> load_observations(const std::string& obs_path,
                                                        const std::string& sites_path,
                                                        Metric metric) {
    SiteSet sites = load_sites(sites_path, metric);
    auto in = open_or_throw(obs_path);
    std::string line;
    if (!std::getline(in, line)) throw config_error("csv: empty observations file '" + obs_path + "'");
    const auto header = split_csv_line(line);
    if (header.size() != sites.size())
        throw config_error("csv: observations header has " + std::to_string(header.size()) +
                           " sites but site file has " + std::to_string(sites.size()));

    // Map header order onto site-file order.
    std::unordered_map<std::string, std::size_t> col_of;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (!col_of.emplace(header[j], j).second)
            throw config_error("csv: duplicate site id '" + header[j] + "' in observations header");
    }
    std::vector<std::size_t> source_col(sites.size());
    for (std::size_t j = 0; j < sites.size(); ++j) {
        const auto it = col_of.find(sites[j].id);
        if (it == col_of.end())
            throw config_error("csv: site '" + sites[j].id + "' missing from observations header");
        source_col[j] = it->second;
    }

    std::vector<std::vector<double>> rows;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw config_error("csv: observations row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
        std::vector<double> vals(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j)
            vals[j] = parse_cell(cells[j], row, header[j]);
        rows.push_back(std::move(vals));
    }

    ObservationMatrix obs;
    obs.scale = Scale::Raw;
    obs.site_ids = sites.ids();
    obs.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(sites.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < sites.size(); ++j)
            obs.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][source_col[j]];
    obs.validate();
    return {std::move(obs), std::move(sites)};
}

void write_observations(const std::string& path, const ObservationMatrix& obs) {
    std::ofstream out(path);
    if (!out) throw config_error("csv: cannot write '" + path + "'");
    out.precision(17);
    for (std::size_t j = 0; j < obs.site_ids.size(); ++j)
        out << obs.site_ids[j] << (j + 1 == obs.site_ids.size() ? '\n' : ',');
    for (Eigen::Index i = 0; i < obs.n(); ++i)
        for (Eigen::Index j = 0; j < obs.d(); ++j)
            out << obs.values(i, j) << (j + 1 == obs.d() ? '\n' : ',');
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw config_error("csv: cannot write '" + path + "'");
    for (std::size_t j = 0; j < header.size(); ++j)
        out << header[j] << (j + 1 == header.size() ? '\n' : ',');
    for (const auto& r : rows)
        for (std::size_t j = 0; j < r.size(); ++j) out << r[j] << (j + 1 == r.size() ? '\n' : ',');
}

}  // namespace extdef
