#include "mpemba/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mpemba::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, std::string_view what) {
  std::ostringstream os;
  os << source << ":" << line << ": " << what;
  throw Error(Errc::Parse, os.str());
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

fitkit::PopulationSeries parse_population_csv(std::string_view text, std::string_view source) {
  static constexpr std::string_view names[] = {"t", "p0", "p1", "p2", "weight"};
  fitkit::PopulationSeries series;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line);
    if (columns == 0) {
      if (fields.size() != 4 && fields.size() != 5)
        fail(source, line_no, "header must be t,p0,p1,p2[,weight]");
      for (std::size_t c = 0; c < fields.size(); ++c)
        if (fields[c] != names[c]) {
          std::ostringstream os;
          os << "column " << c + 1 << ": expected header '" << names[c] << "', found '"
             << fields[c] << "'";
          fail(source, line_no, os.str());
        }
      columns = fields.size();
      continue;
    }
    if (fields.size() != columns) {
      std::ostringstream os;
      os << "expected " << columns << " columns, found " << fields.size();
      fail(source, line_no, os.str());
    }
    double v[5] = {0, 0, 0, 0, 0};
    for (std::size_t c = 0; c < columns; ++c) {
      const std::string_view f = fields[c];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v[c]);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v[c])) {
        std::ostringstream os;
        os << "column '" << names[c] << "': cannot parse '" << f << "' as a finite number";
        fail(source, line_no, os.str());
      }
    }
    if (v[0] < 0.0) fail(source, line_no, "column 't': time must be >= 0");
    if (!series.times.empty() && !(v[0] > series.times.back()))
      fail(source, line_no, "column 't': times must be strictly increasing");
    if (std::abs(v[1] + v[2] + v[3] - 1.0) > 0.05) {
      std::ostringstream os;
      os << "columns p0..p2 sum to " << format_double(v[1] + v[2] + v[3])
         << ", more than 0.05 from 1";
      fail(source, line_no, os.str());
    }
    if (columns == 5 && !(v[4] > 0.0)) fail(source, line_no, "column 'weight': must be positive");
    series.times.push_back(v[0]);
    series.populations.push_back({v[1], v[2], v[3]});
    if (columns == 5) series.weights.push_back(v[4]);
  }
  if (columns == 0) fail(source, line_no, "missing header t,p0,p1,p2[,weight]");
  try {
    series.validate();
  } catch (const Error& e) {
    std::ostringstream os;
    os << source << ": " << e.what() << " (data rows are numbered from 0 after the header)";
    throw Error(Errc::Parse, os.str());
  }
  return series;
}

fitkit::PopulationSeries read_population_csv(const std::filesystem::path& path) {
  return parse_population_csv(read_text(path), path.string());
}

void write_population_csv(std::ostream& os, const fitkit::PopulationSeries& s) {
  os << (s.weights.empty() ? "t,p0,p1,p2\n" : "t,p0,p1,p2,weight\n");
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    os << format_double(s.times[k]);
    for (double p : s.populations[k]) os << ',' << format_double(p);
    if (!s.weights.empty()) os << ',' << format_double(s.weights[k]);
    os << '\n';
  }
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows) {
  os << kTrajectoryHeader << '\n';
  for (const TrajectoryRow& r : rows) {
    os << format_double(r.t) << ',' << format_double(r.p[0]) << ',' << format_double(r.p[1])
       << ',' << format_double(r.p[2]) << ',' << format_double(r.energy) << ','
       << format_double(r.entropy) << ',' << format_double(r.beta) << ','
       << (r.beta_defined ? 1 : 0) << ',' << format_double(r.heat_capacity) << ','
       << format_double(r.sigma_ff) << ',' << format_double(r.free_energy) << ','
       << format_double(r.tau_d) << ',' << format_double(r.hs_dist_final) << '\n';
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::InvalidArgument, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::SimulationFailure, "cannot write '" + tmp.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(Errc::SimulationFailure, "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mpemba::io
