#pragma once

#include <string>
#include <utility>
#include <vector>

#include "extdef/observations.hpp"
#include "extdef/sites.hpp"

namespace extdef {

/// Sites CSV: header "id,x,y", one site per row.
SiteSet load_sites(const std::string& path, Metric metric = Metric::Euclidean,
                   Plane plane = Plane::G);
void write_sites(const std::string& path, const SiteSet& sites);

/// Observations CSV: first row site ids, then one row per time point.
/// Columns are reordered to match the site file order.
std::pair<ObservationMatrix, SiteSet> load_observations(const std::string& obs_path,
                                                        const std::string& sites_path,
                                                        Metric metric = Metric::Euclidean);
void write_observations(const std::string& path, const ObservationMatrix& obs);

/// Generic rectangular table with a header row; used for report files.
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace extdef
