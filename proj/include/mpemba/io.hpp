#pragma once

// CSV and JSON plumbing shared by the CLI and the tests.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mpemba/fitkit.hpp"

namespace mpemba::io {

// %.17g; non-finite values print as "nan", "inf", "-inf".
std::string format_double(double x);

// Data CSV with header t,p0,p1,p2[,weight]. Parse errors name the source,
// the 1-based line and the offending column.
fitkit::PopulationSeries parse_population_csv(std::string_view text, std::string_view source);
fitkit::PopulationSeries read_population_csv(const std::filesystem::path& path);
void write_population_csv(std::ostream& os, const fitkit::PopulationSeries& series);

inline constexpr std::string_view kTrajectoryHeader =
    "t,p0,p1,p2,energy,entropy,beta,beta_defined,heat_capacity,sigma_ff,free_energy,tau_d,"
    "hs_dist_final";

struct TrajectoryRow {
  double t = 0.0;
  double p[3] = {0.0, 0.0, 0.0};
  double energy = 0.0;
  double entropy = 0.0;
  double beta = 0.0;
  bool beta_defined = false;
  double heat_capacity = 0.0;
  double sigma_ff = 0.0;
  double free_energy = 0.0;
  double tau_d = 0.0;
  double hs_dist_final = 0.0;
};

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows);

std::string read_text(const std::filesystem::path& path);
// Writes atomically enough for a single writer: temp file then rename.
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace mpemba::io
